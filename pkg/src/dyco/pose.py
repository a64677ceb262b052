"""Pose and pose-track containers plus the delta-pose vector.

A pose holds K joint-local axis-angle rotations and one global
translation; the root's global rotation is folded into joint 0.  The
delta pose between two frames is the 3K+3 vector of per-joint relative
rotations (in a configurable 3-vector representation) followed by the
translation difference.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import CorruptFile, EmptyTrack, OutOfRange, SkeletonMismatch
from .rotation import ROTATION_REPS, relative_rotation


@dataclass
class Pose:
    joint_rotations: np.ndarray  # (K, 3) axis-angle, joint-local
    global_translation: np.ndarray  # (3,)

    def __post_init__(self):
        self.joint_rotations = np.asarray(self.joint_rotations, dtype=float)
        self.global_translation = np.asarray(self.global_translation, dtype=float)
        if self.joint_rotations.ndim != 2 or self.joint_rotations.shape[1] != 3:
            raise ValueError("joint_rotations must have shape (K, 3)")
        if self.global_translation.shape != (3,):
            raise ValueError("global_translation must have shape (3,)")

    @property
    def num_joints(self) -> int:
        return self.joint_rotations.shape[0]

    def copy(self) -> "Pose":
        return Pose(self.joint_rotations.copy(), self.global_translation.copy())

    def allclose(self, other: "Pose", tol: float = 0.0) -> bool:
        if self.num_joints != other.num_joints:
            return False
        return (np.max(np.abs(self.joint_rotations - other.joint_rotations),
                       initial=0.0) <= tol
                and np.max(np.abs(self.global_translation - other.global_translation),
                           initial=0.0) <= tol)


def delta_pose(cur: Pose, prev: Pose, rep: str = "axis_angle") -> np.ndarray:
    """3K+3 vector: per-joint relative rotations, then translation change.

    The rotation part of entry j encodes R_cur_j . R_prev_j^-1 in the
    joint-local frame; identical poses give the exact zero vector.
    """
    if cur.num_joints != prev.num_joints:
        raise SkeletonMismatch(
            f"joint counts differ: {cur.num_joints} vs {prev.num_joints}")
    if rep not in ROTATION_REPS:
        raise ValueError(f"unknown rotation representation {rep!r}")
    k = cur.num_joints
    out = np.zeros(3 * k + 3)
    for j in range(k):
        out[3 * j:3 * j + 3] = relative_rotation(
            cur.joint_rotations[j], prev.joint_rotations[j], rep)
    out[3 * k:] = cur.global_translation - prev.global_translation
    return out


@dataclass
class PoseTrack:
    """Ordered per-frame poses; lookups before the start clamp to frame 0."""

    frame_indices: np.ndarray  # (N,) strictly increasing ints
    rotations: np.ndarray      # (N, K, 3)
    translations: np.ndarray   # (N, 3)
    frame_rate: float = 30.0

    def __post_init__(self):
        self.frame_indices = np.asarray(self.frame_indices, dtype=int)
        self.rotations = np.asarray(self.rotations, dtype=float)
        self.translations = np.asarray(self.translations, dtype=float)
        if len(self.frame_indices) == 0:
            raise EmptyTrack("pose track has no frames")
        if np.any(np.diff(self.frame_indices) <= 0):
            raise ValueError("frame indices must be strictly increasing")
        if self.rotations.shape[0] != len(self.frame_indices) \
                or self.translations.shape[0] != len(self.frame_indices):
            raise ValueError("per-frame arrays disagree on length")

    @classmethod
    def from_poses(cls, poses, frame_rate: float = 30.0,
                   frame_indices=None) -> "PoseTrack":
        poses = list(poses)
        if not poses:
            raise EmptyTrack("pose track has no frames")
        if frame_indices is None:
            frame_indices = np.arange(len(poses))
        rot = np.stack([p.joint_rotations for p in poses])
        tr = np.stack([p.global_translation for p in poses])
        return cls(frame_indices, rot, tr, frame_rate)

    def __len__(self) -> int:
        return len(self.frame_indices)

    @property
    def num_joints(self) -> int:
        return self.rotations.shape[1]

    def pose_at(self, i: int) -> Pose:
        """Pose at row i; negative rows clamp to row 0."""
        i = max(int(i), 0)
        if i >= len(self):
            raise OutOfRange(f"frame row {i} beyond track length {len(self)}")
        return Pose(self.rotations[i], self.translations[i])

    def copy(self) -> "PoseTrack":
        return PoseTrack(self.frame_indices.copy(), self.rotations.copy(),
                         self.translations.copy(), self.frame_rate)


POSE_TRACK_HEADER = "#dyco-poses v1"


def save_pose_track(track: PoseTrack, path) -> None:
    k = track.num_joints
    lines = [f"{POSE_TRACK_HEADER} K={k}"]
    for i in range(len(track)):
        vals = np.concatenate([track.rotations[i].ravel(), track.translations[i]])
        nums = " ".join(f"{v:.17g}" for v in vals)
        lines.append(f"{track.frame_indices[i]} {nums}")
    with open(path, "w") as f:
        f.write("\n".join(lines) + "\n")


def load_pose_track(path, frame_rate: float = 30.0) -> PoseTrack:
    with open(path) as f:
        raw = [ln.strip() for ln in f if ln.strip()]
    if not raw or not raw[0].startswith(POSE_TRACK_HEADER):
        raise CorruptFile(f"{path}: missing pose-track header")
    try:
        k = int(raw[0].split("K=")[1])
    except (IndexError, ValueError) as e:
        raise CorruptFile(f"{path}: malformed header {raw[0]!r}") from e
    idx, rots, trs = [], [], []
    for ln in raw[1:]:
        parts = ln.split()
        if len(parts) != 1 + 3 * k + 3:
            raise CorruptFile(f"{path}: expected {1 + 3 * k + 3} fields, got {len(parts)}")
        idx.append(int(parts[0]))
        vals = np.array([float(p) for p in parts[1:]])
        rots.append(vals[:3 * k].reshape(k, 3))
        trs.append(vals[3 * k:])
    if not idx:
        raise EmptyTrack(f"{path}: track has no frames")
    return PoseTrack(np.array(idx), np.stack(rots), np.stack(trs), frame_rate)
