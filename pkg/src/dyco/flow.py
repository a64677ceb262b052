"""Deterministic coarse-to-fine block-matching optical flow.

Dense integer search over a pyramid with SSD block costs, candidates
ordered so ties keep the smallest residual, then 1-D parabolic sub-pixel
refinement.  Used by the motion metric as a drop-in flow estimator
(anything mapping two frames to a FlowField will do).
"""

from dataclasses import dataclass

import numpy as np

from .errors import TooSmall


@dataclass
class FlowField:
    u: np.ndarray      # horizontal displacement, prev -> cur, pixels
    v: np.ndarray      # vertical displacement
    valid: np.ndarray  # bool per pixel

    @property
    def shape(self):
        return self.u.shape


def to_gray(img: np.ndarray) -> np.ndarray:
    img = np.asarray(img, dtype=np.float64)
    return img.mean(axis=2) if img.ndim == 3 else img


def _downsample(img: np.ndarray) -> np.ndarray:
    h, w = img.shape
    h2, w2 = h // 2, w // 2
    return img[:h2 * 2, :w2 * 2].reshape(h2, 2, w2, 2).mean(axis=(1, 3))


def _shift(img: np.ndarray, dy: int, dx: int) -> np.ndarray:
    """img sampled at (y + dy, x + dx) with edge clamping."""
    h, w = img.shape
    ys = np.clip(np.arange(h) + dy, 0, h - 1)
    xs = np.clip(np.arange(w) + dx, 0, w - 1)
    return img[np.ix_(ys, xs)]


def _box_sum(img: np.ndarray, block: int) -> np.ndarray:
    """Sum over the block x block window centered (upper-left biased) on
    each pixel, with edge-replicated padding."""
    r0 = (block - 1) // 2
    r1 = block - 1 - r0
    padded = np.pad(img, ((r0, r1), (r0, r1)), mode="edge")
    ii = np.zeros((padded.shape[0] + 1, padded.shape[1] + 1))
    ii[1:, 1:] = np.cumsum(np.cumsum(padded, axis=0), axis=1)
    h, w = img.shape
    return (ii[block:block + h, block:block + w] - ii[:h, block:block + w]
            - ii[block:block + h, :w] + ii[:h, :w])


def _warp_int(img: np.ndarray, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    h, w = img.shape
    yy, xx = np.meshgrid(np.arange(h), np.arange(w), indexing="ij")
    ys = np.clip(yy + np.rint(v).astype(int), 0, h - 1)
    xs = np.clip(xx + np.rint(u).astype(int), 0, w - 1)
    return img[ys, xs]


def _match_level(prev: np.ndarray, cur: np.ndarray, u0, v0, block: int,
                 radius: int):
    # Search residual displacement around the upsampled initial flow.
    warped = _warp_int(cur, u0, v0)
    cands = [(dy, dx) for dy in range(-radius, radius + 1)
             for dx in range(-radius, radius + 1)]
    cands.sort(key=lambda d: (d[0] * d[0] + d[1] * d[1], d[0], d[1]))
    costs = np.empty((len(cands),) + prev.shape)
    for ci, (dy, dx) in enumerate(cands):
        diff = prev - _shift(warped, dy, dx)
        costs[ci] = _box_sum(diff * diff, block)
    best = np.argmin(costs, axis=0)
    idx_of = {d: i for i, d in enumerate(cands)}
    dy_best = np.array([c[0] for c in cands])[best].astype(float)
    dx_best = np.array([c[1] for c in cands])[best].astype(float)

    def refine(axis):
        # Parabolic vertex from the two axis neighbors where both exist.
        delta = np.zeros(prev.shape)
        c0 = np.take_along_axis(costs, best[None], axis=0)[0]
        minus = np.full(prev.shape, np.nan)
        plus = np.full(prev.shape, np.nan)
        for ci, (dy, dx) in enumerate(cands):
            sel = best == ci
            if not np.any(sel):
                continue
            nb_m = (dy - 1, dx) if axis == 0 else (dy, dx - 1)
            nb_p = (dy + 1, dx) if axis == 0 else (dy, dx + 1)
            if nb_m in idx_of:
                minus[sel] = costs[idx_of[nb_m]][sel]
            if nb_p in idx_of:
                plus[sel] = costs[idx_of[nb_p]][sel]
        ok = np.isfinite(minus) & np.isfinite(plus)
        denom = minus - 2.0 * c0 + plus
        good = ok & (denom > 1e-12)
        delta[good] = 0.5 * (minus[good] - plus[good]) / denom[good]
        return np.clip(delta, -0.5, 0.5)

    v = v0 + dy_best + refine(0)
    u = u0 + dx_best + refine(1)
    return u, v


def optical_flow(prev: np.ndarray, cur: np.ndarray, levels: int = 3,
                 block: int = 8, radius: int = 4) -> FlowField:
    """Flow on prev's pixel grid such that cur(x + u, y + v) ~= prev(x, y)."""
    g_prev, g_cur = to_gray(prev), to_gray(cur)
    if g_prev.shape != g_cur.shape:
        raise TooSmall("frames must share dimensions")
    h, w = g_prev.shape
    if min(h, w) < 16:
        raise TooSmall(f"need at least 16x16 pixels, got {h}x{w}")
    max_levels = int(np.floor(np.log2(min(h, w) / block))) + 1
    levels = max(1, min(levels, max_levels))
    pyr_prev, pyr_cur = [g_prev], [g_cur]
    for _ in range(levels - 1):
        pyr_prev.append(_downsample(pyr_prev[-1]))
        pyr_cur.append(_downsample(pyr_cur[-1]))
    u = np.zeros(pyr_prev[-1].shape)
    v = np.zeros(pyr_prev[-1].shape)
    for lvl in range(levels - 1, -1, -1):
        if lvl < levels - 1:
            u = 2.0 * np.repeat(np.repeat(u, 2, axis=0), 2, axis=1)
            v = 2.0 * np.repeat(np.repeat(v, 2, axis=0), 2, axis=1)
            th, tw = pyr_prev[lvl].shape
            u = u[:th, :tw]
            v = v[:th, :tw]
            if u.shape != (th, tw):  # odd sizes: pad by edge replication
                u = np.pad(u, ((0, th - u.shape[0]), (0, tw - u.shape[1])),
                           mode="edge")
                v = np.pad(v, ((0, th - v.shape[0]), (0, tw - v.shape[1])),
                           mode="edge")
        u, v = _match_level(pyr_prev[lvl], pyr_cur[lvl], u, v, block, radius)
    return FlowField(u, v, np.isfinite(u) & np.isfinite(v))
