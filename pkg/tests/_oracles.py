"""Independent reference computations used as test oracles.

Everything here is deliberately written the slow, obvious way (series
expansions, explicit loops, brute-force marching) and never calls the
code paths it is used to check.
"""

import numpy as np


def skew(v):
    x, y, z = v
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def series_expm_axis_angle(aa, terms: int = 25) -> np.ndarray:
    """Matrix exponential of the skew matrix via a truncated Taylor series."""
    K = skew(np.asarray(aa, dtype=float))
    out = np.eye(3)
    term = np.eye(3)
    for n in range(1, terms):
        term = term @ K / n
        out = out + term
    return out


def fd_gradient(f, x: np.ndarray, h: float = 1e-6) -> np.ndarray:
    """Central finite differences of scalar f at array x, elementwise."""
    x = np.asarray(x, dtype=float)
    g = np.zeros_like(x)
    flat = x.reshape(-1)
    gflat = g.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        step = h * max(1.0, abs(orig))
        flat[i] = orig + step
        fp = f(x)
        flat[i] = orig - step
        fm = f(x)
        flat[i] = orig
        gflat[i] = (fp - fm) / (2.0 * step)
    return g


def grad_close(analytic, numeric, rtol: float = 1e-4, atol: float = 1e-8):
    """True where |a - n| <= atol + rtol * max(|a|, |n|)."""
    a = np.asarray(analytic, dtype=float)
    n = np.asarray(numeric, dtype=float)
    return np.abs(a - n) <= atol + rtol * np.maximum(np.abs(a), np.abs(n))


def max_rel_err(analytic, numeric, floor: float = 1e-4) -> float:
    a = np.asarray(analytic, dtype=float).ravel()
    n = np.asarray(numeric, dtype=float).ravel()
    denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)
    return float(np.max(np.abs(a - n) / denom)) if a.size else 0.0


def trilinear_ref(grid: np.ndarray, p) -> np.ndarray:
    """Explicit 8-corner trilinear interpolation at one voxel-space point."""
    d0, d1, d2 = grid.shape[:3]
    p = np.clip(np.asarray(p, dtype=float), 0.0, [d0 - 1, d1 - 1, d2 - 1])
    base = np.minimum(np.floor(p).astype(int), [d0 - 2, d1 - 2, d2 - 2])
    f = p - base
    out = np.zeros(grid.shape[3])
    for dx in (0, 1):
        for dy in (0, 1):
            for dz in (0, 1):
                w = ((f[0] if dx else 1 - f[0])
                     * (f[1] if dy else 1 - f[1])
                     * (f[2] if dz else 1 - f[2]))
                out = out + w * grid[base[0] + dx, base[1] + dy, base[2] + dz]
    return out


def bilinear_ref(plane: np.ndarray, uv) -> np.ndarray:
    """Explicit 4-corner bilinear interpolation at one pixel-space point."""
    r0, r1 = plane.shape[:2]
    uv = np.clip(np.asarray(uv, dtype=float), 0.0, [r0 - 1, r1 - 1])
    base = np.minimum(np.floor(uv).astype(int), [r0 - 2, r1 - 2])
    f = uv - base
    return ((1 - f[0]) * (1 - f[1]) * plane[base[0], base[1]]
            + (1 - f[0]) * f[1] * plane[base[0], base[1] + 1]
            + f[0] * (1 - f[1]) * plane[base[0] + 1, base[1]]
            + f[0] * f[1] * plane[base[0] + 1, base[1] + 1])


def integrate_rendering(t_n, t_f, sigma_of, color_of, steps: int = 1_000_000):
    """Brute-force quadrature of the continuous volume rendering integral."""
    ts = np.linspace(t_n, t_f, steps + 1)
    mids = 0.5 * (ts[:-1] + ts[1:])
    dt = np.diff(ts)
    sig = np.array([sigma_of(t) for t in mids])
    col = np.array([color_of(t) for t in mids])
    tau = np.concatenate([[0.0], np.cumsum(sig * dt)])[:-1]
    trans = np.exp(-tau)
    alpha = 1.0 - np.exp(-sig * dt)
    return (trans * alpha)[:, None] * col


def root_to_leaf_chains(parents):
    """All root-to-leaf joint paths of a parent table."""
    parents = list(parents)
    k = len(parents)
    children = {j: [] for j in range(k)}
    root = None
    for j, p in enumerate(parents):
        if p < 0:
            root = j
        else:
            children[p].append(j)
    leaves = [j for j in range(k) if not children[j]]
    chains = []
    for leaf in leaves:
        path, cur = [], leaf
        while cur is not None:
            path.append(cur)
            cur = parents[cur] if parents[cur] >= 0 else None
        chains.append(set(path))
    return chains
