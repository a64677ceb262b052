"""Pinhole cameras, ray generation and ray/box intersection.

Convention: world-to-camera extrinsics x_cam = R x + t; camera x points
right, y down, z forward; pixel (0, 0) is top-left and rays pass through
pixel centers (u + 0.5, v + 0.5).
"""

from dataclasses import dataclass

import numpy as np

from .errors import CorruptFile, OutOfBounds
from .rotation import is_rotation_matrix


@dataclass
class Camera:
    fx: float
    fy: float
    cx: float
    cy: float
    rot: np.ndarray  # (3, 3) world-to-camera
    tr: np.ndarray   # (3,)
    width: int
    height: int

    def __post_init__(self):
        self.rot = np.asarray(self.rot, dtype=float)
        self.tr = np.asarray(self.tr, dtype=float)
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError("focal lengths must be positive")
        if not is_rotation_matrix(self.rot, tol=1e-6):
            raise ValueError("extrinsic rotation is not orthonormal")

    @property
    def origin(self) -> np.ndarray:
        return -self.rot.T @ self.tr


def look_at(eye, target, up=(0.0, 0.0, 1.0)) -> tuple:
    """World-to-camera (R, t) looking from eye toward target, y-down frame."""
    eye = np.asarray(eye, dtype=float)
    fwd = np.asarray(target, dtype=float) - eye
    fwd = fwd / np.linalg.norm(fwd)
    right = np.cross(fwd, np.asarray(up, dtype=float))
    nr = np.linalg.norm(right)
    if nr < 1e-12:
        raise ValueError("view direction parallel to up vector")
    right /= nr
    down = np.cross(fwd, right)
    rot = np.stack([right, down, fwd])
    return rot, -rot @ eye


def generate_rays(cam: Camera, pixels) -> tuple:
    """Ray origins (N, 3) and unit directions (N, 3) for integer pixels (u, v)."""
    px = np.atleast_2d(np.asarray(pixels))
    if np.any(px[:, 0] < 0) or np.any(px[:, 0] >= cam.width) \
            or np.any(px[:, 1] < 0) or np.any(px[:, 1] >= cam.height):
        raise OutOfBounds("pixel outside image bounds")
    d_cam = np.stack([
        (px[:, 0] + 0.5 - cam.cx) / cam.fx,
        (px[:, 1] + 0.5 - cam.cy) / cam.fy,
        np.ones(len(px)),
    ], axis=1)
    d_world = d_cam @ cam.rot  # rows times R == R^T applied per vector
    d_world /= np.linalg.norm(d_world, axis=1, keepdims=True)
    origins = np.broadcast_to(cam.origin, d_world.shape).copy()
    return origins, d_world


def ray_aabb(origins, dirs, bbox_min, bbox_max):
    """Slab intersection; returns (t_near, t_far, hit) with t_near >= 0."""
    o = np.atleast_2d(origins)
    d = np.atleast_2d(dirs)
    bmin = np.asarray(bbox_min, dtype=float)
    bmax = np.asarray(bbox_max, dtype=float)
    if np.any(bmax < bmin):
        raise ValueError("invalid box: min greater than max")
    tmin = np.full(o.shape[0], -np.inf)
    tmax = np.full(o.shape[0], np.inf)
    for ax in range(3):
        da = d[:, ax]
        oa = o[:, ax]
        parallel = np.abs(da) < 1e-300
        with np.errstate(divide="ignore", invalid="ignore"):
            t1 = (bmin[ax] - oa) / da
            t2 = (bmax[ax] - oa) / da
        lo = np.minimum(t1, t2)
        hi = np.maximum(t1, t2)
        inside = (oa >= bmin[ax]) & (oa <= bmax[ax])
        lo = np.where(parallel, np.where(inside, -np.inf, np.inf), lo)
        hi = np.where(parallel, np.where(inside, np.inf, -np.inf), hi)
        tmin = np.maximum(tmin, lo)
        tmax = np.minimum(tmax, hi)
    t_near = np.maximum(tmin, 0.0)
    hit = (tmax > t_near) & (tmax > 0.0)
    return t_near, tmax, hit


CAMERAS_HEADER = "#dyco-cams v1"


def save_cameras(cams, path) -> None:
    lines = [CAMERAS_HEADER]
    for c in cams:
        vals = [c.fx, c.fy, c.cx, c.cy, *c.rot.ravel(), *c.tr]
        nums = " ".join(f"{v:.17g}" for v in vals)
        lines.append(f"{nums} {c.width} {c.height}")
    with open(path, "w") as f:
        f.write("\n".join(lines) + "\n")


def load_cameras(path) -> list:
    with open(path) as f:
        raw = [ln.strip() for ln in f if ln.strip()]
    if not raw or raw[0] != CAMERAS_HEADER:
        raise CorruptFile(f"{path}: missing cameras header")
    cams = []
    for ln in raw[1:]:
        parts = ln.split()
        if len(parts) != 18:
            raise CorruptFile(f"{path}: expected 18 fields per camera")
        vals = [float(v) for v in parts[:16]]
        rot = np.array(vals[4:13]).reshape(3, 3)
        cams.append(Camera(vals[0], vals[1], vals[2], vals[3], rot,
                           np.array(vals[13:16]), int(parts[16]), int(parts[17])))
    return cams
