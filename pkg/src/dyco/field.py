"""Conditioned canonical radiance field: multi-scale triplane + MLP heads.

Each scale holds three feature planes (xy, xz, yz); per-scale features
are the elementwise product of the three bilinear plane samples, and
scales are concatenated (32 channels each).  Density and color heads
take the triplane feature concatenated with the pose condition and the
context vector; density is softplus-activated and gated by the skinning
foreground, color is sigmoid-bounded.
"""

import numpy as np

from . import autodiff as ad
from .errors import DimensionMismatch
from .optim import ParamStore
from .rng import Stream

FEATURE_DIM = 32
PLANE_AXES = (("xy", (0, 1)), ("xz", (0, 2)), ("yz", (1, 2)))


class TriplaneField:
    def __init__(self, resolutions, bbox_min, bbox_max, pose_dim: int,
                 ctx_dim: int, head_width: int, prefix: str = "field"):
        self.resolutions = tuple(int(r) for r in resolutions)
        if not self.resolutions:
            raise ValueError("need at least one triplane scale")
        self.bbox_min = np.asarray(bbox_min, dtype=float)
        self.bbox_max = np.asarray(bbox_max, dtype=float)
        self.pose_dim = pose_dim
        self.ctx_dim = ctx_dim
        self.head_width = head_width
        self.prefix = prefix
        self.feature_dim = FEATURE_DIM * len(self.resolutions)
        self.head_in = self.feature_dim + pose_dim + ctx_dim

    def plane_names(self):
        return [f"{self.prefix}.plane{r}_{ax}" for r in self.resolutions
                for ax, _ in PLANE_AXES]

    def head_names(self):
        p = self.prefix
        return [f"{p}.den_w1", f"{p}.den_b1", f"{p}.den_w2", f"{p}.den_b2",
                f"{p}.col_w1", f"{p}.col_b1", f"{p}.col_w2", f"{p}.col_b2",
                f"{p}.col_w3", f"{p}.col_b3"]

    def register(self, store: ParamStore, stream: Stream, dtype=np.float64,
                 plane_init: float = 0.1) -> None:
        # Multiplicative plane fusion needs non-zero init everywhere.
        sub = 0
        for r in self.resolutions:
            for ax, _ in PLANE_AXES:
                sub += 1
                n = r * r * FEATURE_DIM
                u = stream.uniform(np.arange(n) + sub * 10_000_019)
                vals = ((u * 2.0 - 1.0) * plane_init).reshape(r, r, FEATURE_DIM)
                store.add(f"{self.prefix}.plane{r}_{ax}", vals.astype(dtype),
                          group="triplane")

        def uniform(shape, salt):
            n = int(np.prod(shape))
            u = stream.uniform(np.arange(n) + salt * 1_000_003 + 777)
            bound = 1.0 / np.sqrt(shape[0])
            return ((u * 2.0 - 1.0) * bound).reshape(shape).astype(dtype)

        p, h = self.prefix, self.head_width
        store.add(f"{p}.den_w1", uniform((self.head_in, h), 1))
        store.add(f"{p}.den_b1", np.zeros(h, dtype=dtype))
        store.add(f"{p}.den_w2", uniform((h, 1), 2))
        store.add(f"{p}.den_b2", np.zeros(1, dtype=dtype))
        store.add(f"{p}.col_w1", uniform((self.head_in, h), 3))
        store.add(f"{p}.col_b1", np.zeros(h, dtype=dtype))
        store.add(f"{p}.col_w2", uniform((h, h), 4))
        store.add(f"{p}.col_b2", np.zeros(h, dtype=dtype))
        store.add(f"{p}.col_w3", uniform((h, 3), 5))
        store.add(f"{p}.col_b3", np.zeros(3, dtype=dtype))

    def sample(self, pvars: dict, x_c: ad.Var) -> ad.Var:
        """Triplane feature (N, 32 * num_scales) at canonical points."""
        span = self.bbox_max - self.bbox_min
        feats = []
        for r in self.resolutions:
            scale = (r - 1.0) / span
            uv_all = ad.add(ad.mul(x_c, ad.const(scale, dtype=x_c.data.dtype)),
                            ad.const(-self.bbox_min * scale, dtype=x_c.data.dtype))
            prod = None
            for ax, dims in PLANE_AXES:
                plane = pvars[f"{self.prefix}.plane{r}_{ax}"]
                uv = ad.take_columns(uv_all, list(dims))
                s = ad.plane_sample2(plane, uv)
                prod = s if prod is None else ad.mul(prod, s)
            feats.append(prod)
        return feats[0] if len(feats) == 1 else ad.concat(feats, axis=1)

    def evaluate(self, pvars: dict, x_c: ad.Var, pose_cond: ad.Var,
                 ctx: ad.Var, foreground: ad.Var):
        """(sigma (N,), rgb (N, 3)) with density gated by the foreground."""
        if pose_cond.data.shape[1] != self.pose_dim \
                or ctx.data.shape[1] != self.ctx_dim:
            raise DimensionMismatch("condition widths do not match the heads")
        p = self.prefix
        feat = ad.concat([self.sample(pvars, x_c), pose_cond, ctx], axis=1)
        hd = ad.relu(ad.affine(feat, pvars[f"{p}.den_w1"], pvars[f"{p}.den_b1"]))
        raw_sigma = ad.reshape(
            ad.affine(hd, pvars[f"{p}.den_w2"], pvars[f"{p}.den_b2"]),
            (feat.data.shape[0],))
        sigma = ad.mul(ad.softplus(raw_sigma), foreground)
        hc = ad.relu(ad.affine(feat, pvars[f"{p}.col_w1"], pvars[f"{p}.col_b1"]))
        hc = ad.relu(ad.affine(hc, pvars[f"{p}.col_w2"], pvars[f"{p}.col_b2"]))
        rgb = ad.sigmoid(ad.affine(hc, pvars[f"{p}.col_w3"], pvars[f"{p}.col_b3"]))
        return sigma, rgb
