"""Minimal reverse-mode differentiation over numpy arrays.

A Var wraps an ndarray and remembers how it was produced; backward()
topologically sorts the tape and accumulates gradients into every
reachable Var with requires_grad.  Ops are deliberately coarse (fused
affine layers, positional encoding, grid/plane interpolation) so a
training step builds a graph of tens of nodes, not thousands.

All math is dtype-preserving: float32 graphs stay float32, gradcheck
runs the same code in float64.
"""

import numpy as np


class Var:
    __slots__ = ("data", "grad", "parents", "backward_fn", "requires_grad")

    def __init__(self, data, parents=(), backward_fn=None, requires_grad=None):
        self.data = data
        self.grad = None
        self.parents = parents
        self.backward_fn = backward_fn
        if requires_grad is None:
            requires_grad = any(p.requires_grad for p in parents)
        self.requires_grad = requires_grad

    @property
    def shape(self):
        return self.data.shape

    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return sub(self, other)

    def __mul__(self, other):
        return mul(self, other)

    def __neg__(self):
        return neg(self)


def const(x, dtype=None) -> Var:
    x = np.asarray(x, dtype=dtype)
    return Var(x, requires_grad=False)


def param(x) -> Var:
    """Leaf variable that collects a gradient."""
    return Var(np.asarray(x), requires_grad=True)


def as_var(x, like=None) -> Var:
    if isinstance(x, Var):
        return x
    dtype = like.data.dtype if like is not None else None
    return const(x, dtype=dtype)


def backward(root: Var, seed=None) -> None:
    """Accumulate d(root)/d(leaf) into .grad of every reachable Var."""
    if not root.requires_grad:
        return
    order, visited, stack = [], set(), [(root, False)]
    while stack:
        node, done = stack.pop()
        if done:
            order.append(node)
            continue
        if id(node) in visited or not node.requires_grad:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for p in node.parents:
            stack.append((p, False))
    if seed is None:
        seed = np.ones_like(root.data)
    root.grad = np.asarray(seed, dtype=root.data.dtype)
    for node in reversed(order):
        if node.backward_fn is not None and node.grad is not None:
            node.backward_fn(node.grad)


def _accum(v: Var, g: np.ndarray) -> None:
    if not v.requires_grad:
        return
    v.grad = g if v.grad is None else v.grad + g


def _unbroadcast(g: np.ndarray, shape) -> np.ndarray:
    if g.shape == shape:
        return g
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g.reshape(shape)


# ---------------------------------------------------------------- arithmetic

def _binary(a, b):
    if isinstance(a, Var) and not isinstance(b, Var):
        b = const(b, dtype=a.data.dtype)
    elif isinstance(b, Var) and not isinstance(a, Var):
        a = const(a, dtype=b.data.dtype)
    return a, b


def add(a, b) -> Var:
    a, b = _binary(a, b)
    out = Var(a.data + b.data, (a, b))

    def bw(g):
        _accum(a, _unbroadcast(g, a.data.shape))
        _accum(b, _unbroadcast(g, b.data.shape))
    out.backward_fn = bw
    return out


def sub(a, b) -> Var:
    a, b = _binary(a, b)
    out = Var(a.data - b.data, (a, b))

    def bw(g):
        _accum(a, _unbroadcast(g, a.data.shape))
        _accum(b, _unbroadcast(-g, b.data.shape))
    out.backward_fn = bw
    return out


def mul(a, b) -> Var:
    a, b = _binary(a, b)
    out = Var(a.data * b.data, (a, b))

    def bw(g):
        if a.requires_grad:
            _accum(a, _unbroadcast(g * b.data, a.data.shape))
        if b.requires_grad:
            _accum(b, _unbroadcast(g * a.data, b.data.shape))
    out.backward_fn = bw
    return out


def div(a, b) -> Var:
    a, b = _binary(a, b)
    out = Var(a.data / b.data, (a, b))

    def bw(g):
        if a.requires_grad:
            _accum(a, _unbroadcast(g / b.data, a.data.shape))
        if b.requires_grad:
            _accum(b, _unbroadcast(-g * out.data / b.data, b.data.shape))
    out.backward_fn = bw
    return out


def neg(a) -> Var:
    out = Var(-a.data, (a,))
    out.backward_fn = lambda g: _accum(a, -g)
    return out


def matmul(a: Var, b: Var) -> Var:
    out = Var(a.data @ b.data, (a, b))

    def bw(g):
        if a.requires_grad:
            _accum(a, g @ b.data.T)
        if b.requires_grad:
            _accum(b, a.data.T @ g)
    out.backward_fn = bw
    return out


def affine(x: Var, w: Var, b: Var) -> Var:
    """x @ w + b for x (N, I), w (I, O), b (O,)."""
    out = Var(x.data @ w.data + b.data, (x, w, b))

    def bw(g):
        if x.requires_grad:
            _accum(x, g @ w.data.T)
        if w.requires_grad:
            _accum(w, x.data.T @ g)
        if b.requires_grad:
            _accum(b, g.sum(axis=0))
    out.backward_fn = bw
    return out


# -------------------------------------------------------------- activations

def relu(a: Var) -> Var:
    out = Var(np.maximum(a.data, 0.0), (a,))
    out.backward_fn = lambda g: _accum(a, g * (a.data > 0.0))
    return out


def exp(a: Var) -> Var:
    out = Var(np.exp(a.data), (a,))
    out.backward_fn = lambda g: _accum(a, g * out.data)
    return out


def sin(a: Var) -> Var:
    out = Var(np.sin(a.data), (a,))
    out.backward_fn = lambda g: _accum(a, g * np.cos(a.data))
    return out


def cos(a: Var) -> Var:
    out = Var(np.cos(a.data), (a,))
    out.backward_fn = lambda g: _accum(a, -g * np.sin(a.data))
    return out


def sigmoid(a: Var) -> Var:
    s = np.where(a.data >= 0, 1.0 / (1.0 + np.exp(-np.abs(a.data))),
                 np.exp(-np.abs(a.data)) / (1.0 + np.exp(-np.abs(a.data))))
    s = s.astype(a.data.dtype, copy=False)
    out = Var(s, (a,))
    out.backward_fn = lambda g: _accum(a, g * s * (1.0 - s))
    return out


def softplus(a: Var) -> Var:
    # log(1 + e^x) in the overflow-safe form max(x, 0) + log1p(e^-|x|)
    d = np.maximum(a.data, 0.0) + np.log1p(np.exp(-np.abs(a.data)))
    out = Var(d.astype(a.data.dtype, copy=False), (a,))

    def bw(g):
        s = np.where(a.data >= 0, 1.0 / (1.0 + np.exp(-np.abs(a.data))),
                     np.exp(-np.abs(a.data)) / (1.0 + np.exp(-np.abs(a.data))))
        _accum(a, g * s.astype(a.data.dtype, copy=False))
    out.backward_fn = bw
    return out


# ------------------------------------------------------------ shape plumbing

def vsum(a: Var, axis=None, keepdims=False) -> Var:
    out = Var(a.data.sum(axis=axis, keepdims=keepdims), (a,))

    def bw(g):
        if axis is None:
            _accum(a, np.broadcast_to(g, a.data.shape).copy())
            return
        if not keepdims:
            g = np.expand_dims(g, axis)
        _accum(a, np.broadcast_to(g, a.data.shape).copy())
    out.backward_fn = bw
    return out


def reshape(a: Var, shape) -> Var:
    out = Var(a.data.reshape(shape), (a,))
    out.backward_fn = lambda g: _accum(a, g.reshape(a.data.shape))
    return out


def concat(parts, axis=-1) -> Var:
    parts = list(parts)
    out = Var(np.concatenate([p.data for p in parts], axis=axis), tuple(parts))
    sizes = [p.data.shape[axis] for p in parts]
    splits = np.cumsum(sizes)[:-1]

    def bw(g):
        for p, piece in zip(parts, np.split(g, splits, axis=axis)):
            _accum(p, piece)
    out.backward_fn = bw
    return out


def gather_rows(a: Var, idx) -> Var:
    """out[i] = a[idx[i]]; scatter-adds on the way back."""
    idx = np.asarray(idx, dtype=np.intp)
    out = Var(a.data[idx], (a,))

    def bw(g):
        acc = np.zeros_like(a.data)
        np.add.at(acc, idx, g)
        _accum(a, acc)
    out.backward_fn = bw
    return out


def take_columns(a: Var, cols) -> Var:
    """out = a[:, cols] for a 2-D Var; backward scatters into those columns."""
    cols = np.asarray(cols, dtype=np.intp)
    out = Var(a.data[:, cols], (a,))

    def bw(g):
        acc = np.zeros_like(a.data)
        np.add.at(acc, (slice(None), cols), g)
        _accum(a, acc)
    out.backward_fn = bw
    return out


def scatter_rows(base: np.ndarray, rows, values: Var) -> Var:
    """Copy of the constant base with values written at the given rows."""
    rows = np.asarray(rows, dtype=np.intp)
    data = np.array(base)
    data[rows] = values.data
    out = Var(data, (values,))
    out.backward_fn = lambda g: _accum(values, g[rows])
    return out


def where(mask, a, b) -> Var:
    """Select per element by a constant boolean mask (no gradient through it)."""
    a, b = _binary(a, b)
    mask = np.asarray(mask, dtype=bool)
    out = Var(np.where(mask, a.data, b.data), (a, b))

    def bw(g):
        if a.requires_grad:
            _accum(a, _unbroadcast(np.where(mask, g, 0.0).astype(g.dtype), a.data.shape))
        if b.requires_grad:
            _accum(b, _unbroadcast(np.where(mask, 0.0, g).astype(g.dtype), b.data.shape))
    out.backward_fn = bw
    return out


def minimum(a: Var, cap: float) -> Var:
    out = Var(np.minimum(a.data, cap), (a,))
    out.backward_fn = lambda g: _accum(a, g * (a.data <= cap))
    return out


def maximum(a: Var, floor: float) -> Var:
    out = Var(np.maximum(a.data, floor), (a,))
    out.backward_fn = lambda g: _accum(a, g * (a.data >= floor))
    return out


def cumsum_exclusive(a: Var, axis: int = -1) -> Var:
    c = np.cumsum(a.data, axis=axis)
    d = np.zeros_like(a.data)
    src = [slice(None)] * a.data.ndim
    dst = [slice(None)] * a.data.ndim
    src[axis] = slice(None, -1)
    dst[axis] = slice(1, None)
    d[tuple(dst)] = c[tuple(src)]
    out = Var(d, (a,))

    def bw(g):
        # d y_i / d x_j = 1 for j < i  =>  grad_j = sum_{i > j} g_i
        rc = np.flip(np.cumsum(np.flip(g, axis=axis), axis=axis), axis=axis)
        _accum(a, rc - g)
    out.backward_fn = bw
    return out


def softmax_last(a: Var) -> Var:
    """Softmax over the last axis (shift by a detached max for stability)."""
    shift = const(np.max(a.data, axis=-1, keepdims=True))
    e = exp(sub(a, shift))
    return div(e, vsum(e, axis=-1, keepdims=True))


def positional_encoding(x: Var, num_freqs: int) -> Var:
    """[x, sin(2^l x), cos(2^l x) for l < num_freqs]; dim 3 -> 3 + 6*num_freqs."""
    n, d = x.data.shape
    freqs = (2.0 ** np.arange(num_freqs)).astype(x.data.dtype)
    ang = x.data[:, :, None] * freqs  # (N, d, L)
    s, c = np.sin(ang), np.cos(ang)
    flat = np.concatenate(
        [x.data, s.reshape(n, d * num_freqs), c.reshape(n, d * num_freqs)], axis=1)
    out = Var(flat, (x,))

    def bw(g):
        gx = g[:, :d].copy()
        gs = g[:, d:d + d * num_freqs].reshape(n, d, num_freqs)
        gc = g[:, d + d * num_freqs:].reshape(n, d, num_freqs)
        gx += ((gs * c - gc * s) * freqs).sum(axis=2)
        _accum(x, gx)
    out.backward_fn = bw
    return out


# ------------------------------------------------------------- interpolation

def _scatter_add_rows(flat: np.ndarray, lin: np.ndarray, vals: np.ndarray) -> None:
    # flat (M, C) += rows vals (N, C) at indices lin; bincount per channel
    # is much faster than np.add.at for this shape.
    m = flat.shape[0]
    for ch in range(flat.shape[1]):
        flat[:, ch] += np.bincount(lin, weights=vals[:, ch], minlength=m
                                   ).astype(flat.dtype, copy=False)


def grid_sample3(grid: Var, pts: np.ndarray) -> Var:
    """Trilinear sample of grid (D0, D1, D2, C) at constant voxel-space
    points (N, 3); coordinates clamp to the grid boundary."""
    d0, d1, d2, c = grid.data.shape
    p = np.empty_like(pts)
    np.clip(pts[:, 0], 0.0, d0 - 1.0, out=p[:, 0])
    np.clip(pts[:, 1], 0.0, d1 - 1.0, out=p[:, 1])
    np.clip(pts[:, 2], 0.0, d2 - 1.0, out=p[:, 2])
    i0 = np.minimum(np.floor(p).astype(np.intp), [d0 - 2, d1 - 2, d2 - 2])
    i0 = np.maximum(i0, 0)
    f = (p - i0).astype(grid.data.dtype)
    flat = grid.data.reshape(-1, c)
    lins, ws = [], []
    for dx in (0, 1):
        wx = f[:, 0] if dx else 1.0 - f[:, 0]
        for dy in (0, 1):
            wy = f[:, 1] if dy else 1.0 - f[:, 1]
            for dz in (0, 1):
                wz = f[:, 2] if dz else 1.0 - f[:, 2]
                lin = ((i0[:, 0] + dx) * d1 + (i0[:, 1] + dy)) * d2 + (i0[:, 2] + dz)
                lins.append(lin)
                ws.append(wx * wy * wz)
    acc = np.zeros((pts.shape[0], c), dtype=grid.data.dtype)
    for lin, w in zip(lins, ws):
        acc += flat[lin] * w[:, None]
    out = Var(acc, (grid,))

    def bw(g):
        gg = np.zeros_like(grid.data).reshape(-1, c)
        lin_all = np.concatenate(lins)
        vals = np.concatenate([g * w[:, None] for w in ws], axis=0)
        _scatter_add_rows(gg, lin_all, vals)
        _accum(grid, gg.reshape(grid.data.shape))
    out.backward_fn = bw
    return out


def plane_sample2(plane: Var, uv) -> Var:
    """Bilinear sample of plane (R0, R1, C) at pixel-space uv (N, 2).

    uv may be a Var; clamped coordinates stop the position gradient at
    the border.
    """
    uv_var = uv if isinstance(uv, Var) else None
    uvd = uv.data if isinstance(uv, Var) else np.asarray(uv)
    r0, r1, c = plane.data.shape
    u = np.clip(uvd[:, 0], 0.0, r0 - 1.0)
    v = np.clip(uvd[:, 1], 0.0, r1 - 1.0)
    inside_u = (uvd[:, 0] > 0.0) & (uvd[:, 0] < r0 - 1.0)
    inside_v = (uvd[:, 1] > 0.0) & (uvd[:, 1] < r1 - 1.0)
    i0 = np.minimum(np.floor(u).astype(np.intp), r0 - 2)
    j0 = np.minimum(np.floor(v).astype(np.intp), r1 - 2)
    fu = (u - i0).astype(plane.data.dtype)
    fv = (v - j0).astype(plane.data.dtype)
    flat = plane.data.reshape(-1, c)
    l00 = i0 * r1 + j0
    p00, p01 = flat[l00], flat[l00 + 1]
    p10, p11 = flat[l00 + r1], flat[l00 + r1 + 1]
    w00 = ((1 - fu) * (1 - fv))[:, None]
    w01 = ((1 - fu) * fv)[:, None]
    w10 = (fu * (1 - fv))[:, None]
    w11 = (fu * fv)[:, None]
    val = p00 * w00 + p01 * w01 + p10 * w10 + p11 * w11
    parents = (plane, uv_var) if uv_var is not None else (plane,)
    out = Var(val, parents)

    def bw(g):
        if plane.requires_grad:
            gp = np.zeros_like(flat)
            lin_all = np.concatenate([l00, l00 + 1, l00 + r1, l00 + r1 + 1])
            vals = np.concatenate([g * w00, g * w01, g * w10, g * w11], axis=0)
            _scatter_add_rows(gp, lin_all, vals)
            _accum(plane, gp.reshape(plane.data.shape))
        if uv_var is not None and uv_var.requires_grad:
            du = ((p10 - p00) * (1 - fv)[:, None] + (p11 - p01) * fv[:, None])
            dv = ((p01 - p00) * (1 - fu)[:, None] + (p11 - p10) * fu[:, None])
            gu = (g * du).sum(axis=1) * inside_u
            gv = (g * dv).sum(axis=1) * inside_v
            _accum(uv_var, np.stack([gu, gv], axis=1).astype(uvd.dtype))
    out.backward_fn = bw
    return out
