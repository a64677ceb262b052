"""Stratified depth sampling and discrete volume compositing."""

import numpy as np

from . import autodiff as ad
from .errors import UnsortedSamples
from .rng import Stream


def stratified_depths(t_near, t_far, num_samples: int, stream: Stream,
                      keys) -> np.ndarray:
    """One jittered sample per uniform bin of [t_near, t_far] per ray.

    keys are integer ray identities; the jitter is a pure function of
    (stream, key, bin), so resampling the same pixel reproduces bitwise.
    """
    t_near = np.atleast_1d(np.asarray(t_near, dtype=float))
    t_far = np.atleast_1d(np.asarray(t_far, dtype=float))
    keys = np.atleast_1d(np.asarray(keys, dtype=np.int64))
    n = len(keys)
    counters = keys[:, None] * np.int64(num_samples) + np.arange(num_samples)
    u = stream.uniform(counters)
    frac = (np.arange(num_samples) + u) / num_samples
    return t_near[:, None] + frac * (t_far - t_near)[:, None]


def composite(ts: np.ndarray, sigma, rgb, t_far):
    """Discrete volume rendering over per-ray ordered samples.

    ts (N, S) strictly increasing depths; sigma (N, S) and rgb (N, S, 3)
    may be Vars; t_far (N,) closes the last interval.  Returns (color
    (N, 3), opacity (N,)) as Vars.  alpha_i = 1 - exp(-sigma_i * delta_i)
    with delta_i the gap to the next sample, and transmittance
    T_i = exp(-sum_{j<i} sigma_j delta_j).
    """
    ts = np.atleast_2d(np.asarray(ts, dtype=float))
    t_far = np.atleast_1d(np.asarray(t_far, dtype=float))
    if np.any(np.diff(ts, axis=1) <= 0.0):
        raise UnsortedSamples("sample depths must be strictly increasing")
    sigma = sigma if isinstance(sigma, ad.Var) else ad.const(sigma)
    rgb = rgb if isinstance(rgb, ad.Var) else ad.const(rgb)
    n, s = ts.shape
    deltas = np.empty_like(ts)
    deltas[:, :-1] = np.diff(ts, axis=1)
    deltas[:, -1] = t_far - ts[:, -1]
    deltas = np.maximum(deltas, 0.0).astype(sigma.data.dtype)
    depth = ad.mul(sigma, ad.const(deltas))          # sigma_i * delta_i
    trans = ad.exp(ad.neg(ad.cumsum_exclusive(depth, axis=1)))
    alpha = ad.sub(1.0, ad.exp(ad.neg(depth)))
    w = ad.mul(trans, alpha)                          # (N, S)
    color = ad.vsum(ad.mul(ad.reshape(w, (n, s, 1)), rgb), axis=1)
    opacity = ad.vsum(w, axis=1)
    return color, opacity


def composite_values(ts, sigma, rgb, t_far):
    """Pure-value convenience wrapper around composite()."""
    color, opacity = composite(ts, np.asarray(sigma), np.asarray(rgb),
                               t_far)
    return color.data, opacity.data
