"""Loss, training loop and checkpoint persistence."""

import io
import logging
import struct
from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .camera import generate_rays
from .config import Config, parse_config, serialize_config
from .errors import (CorruptFile, DatasetEmpty, LengthMismatch, NonFiniteLoss,
                     VersionMismatch)
from .model import DycoModel
from .optim import AdamState, ParamStore, adam_step
from .rng import Stream

log = logging.getLogger("dyco.train")

CHECKPOINT_MAGIC = b"DYCO"
CHECKPOINT_VERSION = 1


def mse_loss(pred, gt) -> float:
    """Mean over rays of the squared L2 color error."""
    pred = np.atleast_2d(np.asarray(pred))
    gt = np.atleast_2d(np.asarray(gt))
    if pred.shape != gt.shape:
        raise LengthMismatch(f"batch shapes differ: {pred.shape} vs {gt.shape}")
    d = pred - gt
    return float(np.sum(d * d) / pred.shape[0])


def mse_loss_var(pred: ad.Var, gt: np.ndarray) -> ad.Var:
    if pred.data.shape != gt.shape:
        raise LengthMismatch(f"batch shapes differ: {pred.data.shape} vs {gt.shape}")
    d = ad.sub(pred, ad.const(gt, dtype=pred.data.dtype))
    return ad.mul(ad.vsum(ad.mul(d, d)), 1.0 / pred.data.shape[0])


def gradients(loss: ad.Var, pvars: dict, params: ParamStore) -> dict:
    """Backpropagate and return one gradient array per parameter; parameters
    off the active path get zeros."""
    ad.backward(loss)
    out = {}
    for name, arr in params.items():
        g = pvars[name].grad
        out[name] = np.zeros_like(arr) if g is None else g
    return out


# -------------------------------------------------------------- checkpoints

@dataclass
class Checkpoint:
    config: Config
    iteration: int
    arrays: dict      # name -> ndarray
    groups: dict      # name -> lr group
    adam_m: dict
    adam_v: dict
    adam_t: int


def checkpoint_from_model(model: DycoModel, state: AdamState,
                          iteration: int) -> Checkpoint:
    return Checkpoint(
        config=model.config,
        iteration=iteration,
        arrays={n: a.copy() for n, a in model.params.items()},
        groups={n: model.params.group(n) for n in model.params.names()},
        adam_m={n: v.copy() for n, v in state.m.items()},
        adam_v={n: v.copy() for n, v in state.v.items()},
        adam_t=state.t,
    )


def _write_array(f, arr: np.ndarray) -> None:
    dt = arr.dtype.newbyteorder("<").str.encode()
    f.write(struct.pack("<H", len(dt)))
    f.write(dt)
    f.write(struct.pack("<B", arr.ndim))
    for d in arr.shape:
        f.write(struct.pack("<Q", d))
    raw = np.ascontiguousarray(arr.astype(arr.dtype.newbyteorder("<"))).tobytes()
    f.write(struct.pack("<Q", len(raw)))
    f.write(raw)


def _read_exact(f, n: int) -> bytes:
    buf = f.read(n)
    if len(buf) != n:
        raise CorruptFile("checkpoint truncated")
    return buf


def _read_array(f) -> np.ndarray:
    (dtlen,) = struct.unpack("<H", _read_exact(f, 2))
    dt = np.dtype(_read_exact(f, dtlen).decode())
    (ndim,) = struct.unpack("<B", _read_exact(f, 1))
    shape = tuple(struct.unpack("<Q", _read_exact(f, 8))[0] for _ in range(ndim))
    (nbytes,) = struct.unpack("<Q", _read_exact(f, 8))
    arr = np.frombuffer(_read_exact(f, nbytes), dtype=dt).reshape(shape)
    return arr.copy()


def save_checkpoint(ckpt: Checkpoint, path) -> None:
    buf = io.BytesIO()
    buf.write(CHECKPOINT_MAGIC)
    buf.write(struct.pack("<I", CHECKPOINT_VERSION))
    cfg = serialize_config(ckpt.config).encode()
    buf.write(struct.pack("<Q", len(cfg)))
    buf.write(cfg)
    buf.write(struct.pack("<Q", ckpt.iteration))
    buf.write(struct.pack("<Q", ckpt.adam_t))
    buf.write(struct.pack("<I", len(ckpt.arrays)))
    for name, arr in ckpt.arrays.items():
        nb = name.encode()
        buf.write(struct.pack("<H", len(nb)))
        buf.write(nb)
        buf.write(struct.pack("<B", 1 if ckpt.groups[name] == "triplane" else 0))
        _write_array(buf, arr)
        _write_array(buf, ckpt.adam_m[name])
        _write_array(buf, ckpt.adam_v[name])
    with open(path, "wb") as f:
        f.write(buf.getvalue())


def load_checkpoint(path) -> Checkpoint:
    with open(path, "rb") as f:
        if _read_exact(f, 4) != CHECKPOINT_MAGIC:
            raise CorruptFile(f"{path}: bad magic")
        (version,) = struct.unpack("<I", _read_exact(f, 4))
        if version != CHECKPOINT_VERSION:
            raise VersionMismatch(f"{path}: version {version} unsupported")
        (cfglen,) = struct.unpack("<Q", _read_exact(f, 8))
        config = parse_config(_read_exact(f, cfglen).decode())
        (iteration,) = struct.unpack("<Q", _read_exact(f, 8))
        (adam_t,) = struct.unpack("<Q", _read_exact(f, 8))
        (count,) = struct.unpack("<I", _read_exact(f, 4))
        arrays, groups, adam_m, adam_v = {}, {}, {}, {}
        for _ in range(count):
            (nlen,) = struct.unpack("<H", _read_exact(f, 2))
            name = _read_exact(f, nlen).decode()
            (grp,) = struct.unpack("<B", _read_exact(f, 1))
            groups[name] = "triplane" if grp else "other"
            arrays[name] = _read_array(f)
            adam_m[name] = _read_array(f)
            adam_v[name] = _read_array(f)
        if f.read(1):
            raise CorruptFile(f"{path}: trailing bytes")
    return Checkpoint(config, iteration, arrays, groups, adam_m, adam_v, adam_t)


def model_from_checkpoint(ckpt: Checkpoint, tree) -> DycoModel:
    model = DycoModel(ckpt.config, tree, dtype=ckpt.config.dtype)
    for name, arr in ckpt.arrays.items():
        model.params.set_values(name, arr)
    return model


def adam_from_checkpoint(ckpt: Checkpoint, params: ParamStore) -> AdamState:
    state = AdamState.for_params(params)
    state.t = ckpt.adam_t
    for name in params.names():
        state.m[name][...] = ckpt.adam_m[name]
        state.v[name][...] = ckpt.adam_v[name]
    return state


# ------------------------------------------------------------ training loop

def nonrigid_ramp(iteration: int, config: Config) -> float:
    ramp_iters = max(1, int(round(config.ramp_fraction * config.iterations)))
    return min(1.0, iteration / ramp_iters)


def _select_pixels(entry, it: int, config: Config) -> np.ndarray:
    """Half the batch from mask-on pixels, half uniform over the image."""
    h, w = entry.mask.shape
    fg = entry.fg_pixels
    n = config.rays_per_batch
    n_fg = n // 2 if len(fg) else 0
    stream = Stream(config.seed, "batch", it)
    rows = []
    if n_fg:
        pick = stream.integers(np.arange(n_fg), len(fg))
        rows.append(fg[pick])
    pick = stream.integers(np.arange(n - n_fg) + 1_000_000_007, h * w)
    rows.append(pick)
    lin = np.concatenate(rows)
    return np.stack([lin % w, lin // w], axis=1)  # (u, v)


def _probe_set(dataset, config: Config):
    """Fixed held-out foreground pixels used for the PSNR log."""
    entries = dataset.entries
    stride = max(1, len(entries) // 8)
    chosen = entries[::stride][:8]
    per = max(1, config.probe_pixels // max(1, len(chosen)))
    stream = Stream(config.seed, "probe")
    probes = []
    for j, e in enumerate(chosen):
        fg = e.fg_pixels
        if len(fg) == 0:
            continue
        pick = stream.integers(np.arange(per) + j * 1_000_003, len(fg))
        lin = fg[pick]
        w = e.mask.shape[1]
        px = np.stack([lin % w, lin // w], axis=1)
        probes.append((e, px, e.image[px[:, 1], px[:, 0]]))
    return probes


def probe_psnr(model: DycoModel, dataset, probes, config: Config,
               ramp: float) -> float:
    se, count = 0.0, 0
    for e, px, gt in probes:
        cond = dataset.conditioning(model, e.frame)
        pred = model.render_pixels(cond, e.camera, px, config.seed, e.cam_id,
                                   ramp)
        se += float(np.sum((pred.astype(np.float64) - gt) ** 2))
        count += gt.size
    if count == 0:
        return float("inf")
    mse = se / count
    return float("inf") if mse == 0.0 else 10.0 * np.log10(1.0 / mse)


def train(config: Config, dataset, out_path=None, start: Checkpoint = None,
          on_log=None) -> Checkpoint:
    """Round-robin ray-batch training with Adam; returns the final checkpoint.

    Fully deterministic for a given (config, dataset): batches, strata and
    initialization all derive from config.seed and the iteration counter,
    so resuming from a checkpoint reproduces an unbroken run bitwise.
    """
    if len(dataset.entries) == 0:
        raise DatasetEmpty("dataset provides no frames")
    if start is not None:
        model = model_from_checkpoint(start, dataset.tree)
        state = adam_from_checkpoint(start, model.params)
        first_it = start.iteration
    else:
        model = DycoModel(config, dataset.tree, dtype=config.dtype)
        state = AdamState.for_params(model.params)
        first_it = 0
    probes = _probe_set(dataset, config)
    entries = dataset.entries
    for it in range(first_it, config.iterations):
        entry = entries[it % len(entries)]
        cond = dataset.conditioning(model, entry.frame)
        ramp = nonrigid_ramp(it, config)
        pixels = _select_pixels(entry, it, config)
        gt = entry.image[pixels[:, 1], pixels[:, 0]].astype(model.dtype)
        origins, dirs = generate_rays(entry.camera, pixels)
        keys = pixels[:, 1].astype(np.int64) * entry.camera.width + pixels[:, 0]
        stream = Stream(config.seed, "strata", entry.frame, entry.cam_id)
        pvars = model.param_vars(trainable=True)
        color, _ = model.render_rays(pvars, cond, origins, dirs, keys, stream,
                                     ramp)
        loss = mse_loss_var(color, gt)
        loss_val = float(loss.data)
        if not np.isfinite(loss_val):
            raise NonFiniteLoss(
                f"iteration {it}: loss={loss_val} (frame {entry.frame}, "
                f"cam {entry.cam_id})")
        grads = gradients(loss, pvars, model.params)
        adam_step(model.params, grads, state, config.lr_triplane,
                  config.lr_other)
        if it % config.log_every == 0 or it == config.iterations - 1:
            psnr = probe_psnr(model, dataset, probes, config, ramp)
            log.info("iter=%d loss=%.6g psnr=%.4f", it, loss_val, psnr)
            if on_log is not None:
                on_log(it, loss_val, psnr)
    ckpt = checkpoint_from_model(model, state, config.iterations)
    if out_path is not None:
        save_checkpoint(ckpt, out_path)
    return ckpt
