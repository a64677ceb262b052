"""Localized dynamic context encoder.

Masks a delta-pose sequence down to the joints on a query point's
kinematic chains, encodes each step with a shared affine+ReLU layer
(3K+3 -> 16), then flattens oldest-first and aggregates with a second
affine+ReLU layer to a 32-dim condition vector.
"""

import numpy as np

from . import autodiff as ad
from .errors import DimensionMismatch
from .optim import ParamStore
from .rng import Stream

SPATIAL_DIM = 16
OUTPUT_DIM = 32


class ContextEncoder:
    """One encoder instance; two independent instances condition the
    non-rigid offset and the canonical field respectively."""

    def __init__(self, num_joints: int, length: int, prefix: str):
        self.num_joints = num_joints
        self.length = length
        self.prefix = prefix
        self.in_dim = 3 * num_joints + 3

    def param_names(self):
        p = self.prefix
        return [f"{p}.w1", f"{p}.b1", f"{p}.w2", f"{p}.b2"]

    def register(self, store: ParamStore, stream: Stream, dtype=np.float64) -> None:
        def uniform(shape, sub):
            n = int(np.prod(shape))
            u = stream.uniform(np.arange(n) + sub * 1_000_003)
            fan_in = shape[0]
            bound = 1.0 / np.sqrt(fan_in)
            return ((u * 2.0 - 1.0) * bound).reshape(shape).astype(dtype)

        p = self.prefix
        store.add(f"{p}.w1", uniform((self.in_dim, SPATIAL_DIM), 1))
        store.add(f"{p}.b1", np.zeros(SPATIAL_DIM, dtype=dtype))
        store.add(f"{p}.w2", uniform((self.length * SPATIAL_DIM, OUTPUT_DIM), 2))
        store.add(f"{p}.b2", np.zeros(OUTPUT_DIM, dtype=dtype))

    def encode_batch(self, pvars: dict, entries: np.ndarray,
                     masks: np.ndarray) -> ad.Var:
        """Encode one sequence under B different masks at once -> (B, 32).

        entries: (length, 3K+3) delta sequence, oldest first.
        masks: (B, 3K+3) binary masks (one per candidate nearest joint).
        """
        entries = np.asarray(entries)
        masks = np.asarray(masks)
        if entries.shape != (self.length, self.in_dim):
            raise DimensionMismatch(
                f"sequence shape {entries.shape} != ({self.length}, {self.in_dim})")
        if masks.ndim != 2 or masks.shape[1] != self.in_dim:
            raise DimensionMismatch(f"mask width {masks.shape} != {self.in_dim}")
        p = self.prefix
        w1, b1 = pvars[f"{p}.w1"], pvars[f"{p}.b1"]
        w2, b2 = pvars[f"{p}.w2"], pvars[f"{p}.b2"]
        dtype = w1.data.dtype
        b = masks.shape[0]
        masked = (masks[:, None, :] * entries[None, :, :]).astype(dtype)
        x = ad.const(masked.reshape(b * self.length, self.in_dim))
        h = ad.relu(ad.affine(x, w1, b1))
        flat = ad.reshape(h, (b, self.length * SPATIAL_DIM))
        return ad.relu(ad.affine(flat, w2, b2))

    def encode(self, pvars: dict, entries: np.ndarray, mask: np.ndarray) -> ad.Var:
        """Single-mask convenience wrapper -> (32,)."""
        out = self.encode_batch(pvars, entries, np.atleast_2d(mask))
        return ad.reshape(out, (OUTPUT_DIM,))
