"""Observation-to-canonical warp: inverse LBS plus a conditioned offset MLP."""

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .blend_weights import BlendWeightVolume
from .errors import DimensionMismatch
from .optim import ParamStore
from .rng import Stream
from .skeleton import BoneTransforms

DEGENERATE_WEIGHT_SUM = 1e-9
PE_FREQS = 6  # positional encoding bands; dim 3 + 6*PE_FREQS = 39


@dataclass
class InverseLbsResult:
    x_r: ad.Var          # (N, 3) rigidly warped points
    weights: ad.Var      # (N, K) normalized observation-space weights
    foreground: ad.Var   # (N,) clamped sum of unnormalized weights
    nearest: np.ndarray  # (N,) argmax joint per point (detached)
    candidates: np.ndarray  # (N, K, 3) per-joint inverse-transformed points


def inverse_lbs(x: np.ndarray, bones: BoneTransforms, vol: BlendWeightVolume,
                logits_var: ad.Var | None = None) -> InverseLbsResult:
    """Backward skinning of observation points x (N, 3).

    Per joint i the candidate canonical point is y_i = R_i x + t_i using
    the inverse bone transform; its unnormalized weight is the canonical
    volume's channel i sampled at y_i.  Rows whose weight sum falls below
    1e-9 get zero weights, foreground 0 and x_r = x.
    """
    x = np.atleast_2d(np.asarray(x, dtype=vol.logits.dtype))
    k = bones.num_joints
    if vol.num_joints != k:
        raise DimensionMismatch(f"volume K={vol.num_joints} vs bones K={k}")
    if logits_var is None:
        logits_var = ad.const(vol.logits)
    n = x.shape[0]
    candidates = np.einsum("kij,nj->nki", bones.inv_rot, x) + bones.inv_tr[None]
    candidates = candidates.astype(vol.logits.dtype)
    cols = []
    for i in range(k):
        simplex = vol.sample(candidates[:, i, :], logits_var)
        cols.append(ad.take_columns(simplex, [i]))
    raw = ad.concat(cols, axis=1)  # (N, K) unnormalized
    total = ad.vsum(raw, axis=1, keepdims=True)  # (N, 1)
    valid = total.data > DEGENERATE_WEIGHT_SUM
    safe_total = ad.where(valid, total, ad.const(np.ones_like(total.data)))
    weights = ad.where(valid, ad.div(raw, safe_total),
                       ad.const(np.zeros_like(raw.data)))
    warped = ad.vsum(ad.mul(ad.reshape(weights, (n, k, 1)), ad.const(candidates)),
                     axis=1)
    x_r = ad.add(warped, ad.const((~valid) * x))
    fg = ad.where(valid[:, 0], ad.minimum(ad.reshape(total, (n,)), 1.0),
                  ad.const(np.zeros(n, dtype=x.dtype)))
    nearest = np.argmax(raw.data, axis=1)
    return InverseLbsResult(x_r, weights, fg, nearest, candidates)


class NonRigidMLP:
    """Two hidden ReLU layers predicting a 3-vector offset.

    Input is positional encoding of the rigidly warped point concatenated
    with the pose condition and the 32-dim context vector.  The output
    layer is zero-initialized so the offset starts at exactly zero.
    """

    def __init__(self, pose_dim: int, ctx_dim: int, width: int, prefix: str = "nonrigid"):
        self.in_dim = 3 + 6 * PE_FREQS + pose_dim + ctx_dim
        self.pose_dim = pose_dim
        self.ctx_dim = ctx_dim
        self.width = width
        self.prefix = prefix

    def param_names(self):
        p = self.prefix
        return [f"{p}.w1", f"{p}.b1", f"{p}.w2", f"{p}.b2", f"{p}.w3", f"{p}.b3"]

    def register(self, store: ParamStore, stream: Stream, dtype=np.float64) -> None:
        def uniform(shape, sub):
            n = int(np.prod(shape))
            u = stream.uniform(np.arange(n) + sub * 1_000_003)
            bound = 1.0 / np.sqrt(shape[0])
            return ((u * 2.0 - 1.0) * bound).reshape(shape).astype(dtype)

        p, w = self.prefix, self.width
        store.add(f"{p}.w1", uniform((self.in_dim, w), 1))
        store.add(f"{p}.b1", np.zeros(w, dtype=dtype))
        store.add(f"{p}.w2", uniform((w, w), 2))
        store.add(f"{p}.b2", np.zeros(w, dtype=dtype))
        store.add(f"{p}.w3", np.zeros((w, 3), dtype=dtype))  # offset starts at 0
        store.add(f"{p}.b3", np.zeros(3, dtype=dtype))

    def offset(self, pvars: dict, x_r: ad.Var, pose_cond: ad.Var,
               ctx: ad.Var) -> ad.Var:
        if pose_cond.data.shape[1] != self.pose_dim \
                or ctx.data.shape[1] != self.ctx_dim:
            raise DimensionMismatch("condition widths do not match the MLP")
        p = self.prefix
        feat = ad.concat([ad.positional_encoding(x_r, PE_FREQS), pose_cond, ctx],
                         axis=1)
        h = ad.relu(ad.affine(feat, pvars[f"{p}.w1"], pvars[f"{p}.b1"]))
        h = ad.relu(ad.affine(h, pvars[f"{p}.w2"], pvars[f"{p}.b2"]))
        return ad.affine(h, pvars[f"{p}.w3"], pvars[f"{p}.b3"])


def warp_points(x_r: ad.Var, offset: ad.Var, ramp: float) -> ad.Var:
    """x_c = x_r + ramp * offset, ramp in [0, 1] annealing the non-rigid part."""
    if ramp == 0.0:
        return x_r
    if ramp == 1.0:
        return ad.add(x_r, offset)
    return ad.add(x_r, ad.mul(offset, float(ramp)))
