"""Input validation helpers shared by the estimator and CLI surfaces."""

import numpy as np

from .errors import DimensionMismatch


def as_float_array(x, name: str, shape=None, ndim=None) -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64)
    if shape is not None and arr.shape != tuple(shape):
        raise DimensionMismatch(f"{name}: expected shape {tuple(shape)}, "
                                f"got {arr.shape}")
    if ndim is not None and arr.ndim != ndim:
        raise DimensionMismatch(f"{name}: expected {ndim} dims, got {arr.ndim}")
    return arr


def check_finite(x, name: str) -> np.ndarray:
    arr = np.asarray(x)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def check_image(img, name: str = "image") -> np.ndarray:
    arr = as_float_array(img, name, ndim=3)
    if arr.shape[2] != 3:
        raise DimensionMismatch(f"{name}: expected 3 channels, got {arr.shape[2]}")
    check_finite(arr, name)
    if arr.min() < -1e-9 or arr.max() > 1.0 + 1e-9:
        raise ValueError(f"{name}: pixel values must lie in [0, 1]")
    return arr


def check_mask(mask, name: str = "mask") -> np.ndarray:
    arr = np.asarray(mask)
    if arr.ndim != 2:
        raise DimensionMismatch(f"{name}: expected 2 dims, got {arr.ndim}")
    return arr.astype(bool)


def check_frame_camera_pairs(x, name: str = "X") -> np.ndarray:
    arr = np.asarray(x)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise DimensionMismatch(
            f"{name}: expected (n, 2) array of (frame, camera) pairs, "
            f"got shape {arr.shape}")
    if not np.issubdtype(arr.dtype, np.integer):
        if np.any(arr != np.rint(arr)):
            raise ValueError(f"{name}: frame/camera ids must be integers")
        arr = arr.astype(int)
    return arr
