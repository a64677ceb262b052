"""Learnable canonical blend-weight volume (K+1 channels, softmax-normalized).

Channel k < K is the skinning weight of joint k; channel K is background.
The grid is sampled trilinearly in canonical space and normalized with a
softmax, so sampled weights always form a K+1 simplex.
"""

import numpy as np

from . import autodiff as ad
from .skeleton import KinematicTree


class BlendWeightVolume:
    def __init__(self, logits: np.ndarray, bbox_min, bbox_max):
        if logits.ndim != 4:
            raise ValueError("logits must have shape (D0, D1, D2, K+1)")
        self.logits = logits
        self.bbox_min = np.asarray(bbox_min, dtype=float)
        self.bbox_max = np.asarray(bbox_max, dtype=float)
        if np.any(self.bbox_max <= self.bbox_min):
            raise ValueError("bounding box must have positive extent")

    @property
    def num_joints(self) -> int:
        return self.logits.shape[3] - 1

    def to_voxel(self, x: np.ndarray) -> np.ndarray:
        """Map canonical points to continuous voxel coordinates.

        Points outside the box land outside [0, D-1] and are clamped by
        the sampler, which matches clamping to the box boundary.
        """
        dims = np.array(self.logits.shape[:3], dtype=float) - 1.0
        span = self.bbox_max - self.bbox_min
        return (np.asarray(x, dtype=self.logits.dtype) - self.bbox_min) / span * dims

    def sample(self, x: np.ndarray, logits_var: ad.Var | None = None) -> ad.Var:
        """Simplex weights (N, K+1) at canonical points x (N, 3)."""
        if logits_var is None:
            logits_var = ad.const(self.logits)
        raw = ad.grid_sample3(logits_var, self.to_voxel(np.atleast_2d(x)))
        return ad.softmax_last(raw)

    def sample_values(self, x: np.ndarray) -> np.ndarray:
        return self.sample(x).data


def nearest_joint(weights) -> int:
    """argmax over the K joint channels (background excluded); ties go to
    the lowest index."""
    w = np.asarray(weights)
    return int(np.argmax(w[:-1]))


def _segment_distance(points: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    ab = b - a
    denom = float(ab @ ab)
    if denom < 1e-18:
        return np.linalg.norm(points - a, axis=1)
    t = np.clip((points - a) @ ab / denom, 0.0, 1.0)
    closest = a + t[:, None] * ab
    return np.linalg.norm(points - closest, axis=1)


def bump_initialized_logits(tree: KinematicTree, resolution: int,
                            bbox_min, bbox_max, amplitude: float = 4.0,
                            dtype=np.float64) -> np.ndarray:
    """Gaussian logit bumps around each rest-pose bone segment.

    Joint k's channel peaks along the segments from k to each of its
    children (sigma = half segment length); leaves get a point bump with
    sigma = half their own offset length.  The background channel is 0.
    """
    bbox_min = np.asarray(bbox_min, dtype=float)
    bbox_max = np.asarray(bbox_max, dtype=float)
    k = tree.num_joints
    d = resolution
    axes = [np.linspace(bbox_min[i], bbox_max[i], d) for i in range(3)]
    gx, gy, gz = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([gx.ravel(), gy.ravel(), gz.ravel()], axis=1)
    rest = tree.rest_joint_positions()
    logits = np.zeros((d * d * d, k + 1))
    for j in range(k):
        kids = tree.children(j)
        best = np.full(len(pts), np.inf)
        sigma = 1e-3
        if kids:
            for child in kids:
                seg_len = np.linalg.norm(rest[child] - rest[j])
                sigma = max(seg_len / 2.0, 1e-3)
                best = np.minimum(best, _segment_distance(pts, rest[j], rest[child]))
        else:
            sigma = max(np.linalg.norm(tree.rest_offsets[j]) / 2.0, 1e-3)
            best = np.linalg.norm(pts - rest[j], axis=1)
        logits[:, j] = amplitude * np.exp(-0.5 * (best / sigma) ** 2)
    return logits.reshape(d, d, d, k + 1).astype(dtype)
