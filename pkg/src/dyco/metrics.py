"""Per-frame image metrics and the flow-based dynamic motion error."""

import numpy as np

from .errors import DimensionMismatch, EmptyMask, LengthMismatch
from .flow import FlowField, optical_flow, to_gray


def psnr(a: np.ndarray, b: np.ndarray) -> float:
    """10 log10(1 / MSE) for [0, 1] images; identical images give inf."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionMismatch(f"image shapes differ: {a.shape} vs {b.shape}")
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return float("inf")
    return 10.0 * np.log10(1.0 / mse)


def _gaussian_kernel(size: int = 11, sigma: float = 1.5) -> np.ndarray:
    x = np.arange(size) - (size - 1) / 2.0
    k = np.exp(-0.5 * (x / sigma) ** 2)
    return k / k.sum()


def _filter_symmetric(img: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """Separable correlation with symmetric-reflection borders."""
    r = (len(kernel) - 1) // 2
    padded = np.pad(img, r, mode="symmetric")
    out = np.zeros_like(img)
    h, w = img.shape
    tmp = np.zeros((h, padded.shape[1]))
    for i, kv in enumerate(kernel):
        tmp += kv * padded[i:i + h, :]
    for i, kv in enumerate(kernel):
        out += kv * tmp[:, i:i + w]
    return out


def ssim(a: np.ndarray, b: np.ndarray, k1: float = 0.01, k2: float = 0.03,
         dynamic_range: float = 1.0) -> float:
    """Mean local SSIM: grayscale conversion by channel mean, 11x11
    Gaussian window (sigma 1.5), symmetric-reflection borders."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionMismatch(f"image shapes differ: {a.shape} vs {b.shape}")
    x, y = to_gray(a), to_gray(b)
    kern = _gaussian_kernel()
    mu_x = _filter_symmetric(x, kern)
    mu_y = _filter_symmetric(y, kern)
    var_x = _filter_symmetric(x * x, kern) - mu_x * mu_x
    var_y = _filter_symmetric(y * y, kern) - mu_y * mu_y
    cov = _filter_symmetric(x * y, kern) - mu_x * mu_y
    c1 = (k1 * dynamic_range) ** 2
    c2 = (k2 * dynamic_range) ** 2
    num = (2.0 * mu_x * mu_y + c1) * (2.0 * cov + c2)
    den = (mu_x ** 2 + mu_y ** 2 + c1) * (var_x + var_y + c2)
    return float(np.mean(num / den))


def epe(f1: FlowField, f2: FlowField, mask=None) -> float:
    """Mean endpoint error between two flow fields over masked pixels."""
    if f1.shape != f2.shape:
        raise DimensionMismatch(f"flow shapes differ: {f1.shape} vs {f2.shape}")
    if mask is None:
        mask = np.ones(f1.shape, dtype=bool)
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != f1.shape:
        raise DimensionMismatch("mask shape differs from flow shape")
    if not np.any(mask):
        raise EmptyMask("mask selects no pixels")
    du = f1.u - f2.u
    dv = f1.v - f2.v
    return float(np.mean(np.sqrt(du * du + dv * dv)[mask]))


def dme(pred_seq, gt_seq, masks, flow_fn=optical_flow) -> float:
    """Average endpoint error between predicted-sequence flow and
    ground-truth-sequence flow across consecutive frame pairs.

    Each pair (i-1, i) is masked by the union of the two frames'
    foreground masks (flow is meaningless on empty background).  Any
    estimator with the optical_flow signature can be plugged in.
    """
    pred_seq, gt_seq, masks = list(pred_seq), list(gt_seq), list(masks)
    if len(pred_seq) != len(gt_seq) or len(pred_seq) != len(masks):
        raise LengthMismatch("pred, gt and mask sequences must be equally long")
    if len(pred_seq) < 2:
        raise LengthMismatch("need at least 2 frames for a motion metric")
    errors = []
    for i in range(1, len(gt_seq)):
        f_gt = flow_fn(gt_seq[i - 1], gt_seq[i])
        f_pred = flow_fn(pred_seq[i - 1], pred_seq[i])
        union = np.asarray(masks[i - 1], dtype=bool) | np.asarray(masks[i],
                                                                  dtype=bool)
        if not np.any(union):
            continue
        errors.append(epe(f_gt, f_pred, union))
    if not errors:
        raise EmptyMask("all frame pairs had empty masks")
    return float(np.mean(errors))
