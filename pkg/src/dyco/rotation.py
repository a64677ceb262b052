"""Rotation algebra: axis-angle vectors, rotation matrices, quaternions.

Conventions: an axis-angle vector encodes the rotation axis by direction
and the angle (radians) by magnitude; the zero vector is the identity.
Quaternions are (w, x, y, z) with w the scalar part.
"""

import warnings

import numpy as np

from .errors import NonRotation

# 3-vector encodings of a relative rotation (see relative_rotation).
ROTATION_REPS = ("axis_angle", "rodrigues", "quaternion")


class NearPiRotation(RuntimeWarning):
    """Axis extraction is ill-conditioned for angles at the pi boundary."""


def _hat(v: np.ndarray) -> np.ndarray:
    x, y, z = v
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def canonicalize_axis_angle(aa) -> np.ndarray:
    """Wrap the encoded angle into [0, pi], flipping the axis as needed."""
    aa = np.asarray(aa, dtype=float)
    angle = np.linalg.norm(aa)
    if angle < 1e-300:
        return np.zeros(3)
    wrapped = np.mod(angle, 2.0 * np.pi)
    if wrapped > np.pi:
        wrapped = 2.0 * np.pi - wrapped
        return aa * (-wrapped / angle)
    return aa * (wrapped / angle)


def axis_angle_to_matrix(aa) -> np.ndarray:
    """Rodrigues formula; total function, zero vector gives the identity."""
    aa = np.asarray(aa, dtype=float)
    angle = np.linalg.norm(aa)
    if angle < 1e-12:
        # Second-order series keeps the result orthonormal to ~angle^3.
        K = _hat(aa)
        return np.eye(3) + K + 0.5 * (K @ K)
    K = _hat(aa / angle)
    return np.eye(3) + np.sin(angle) * K + (1.0 - np.cos(angle)) * (K @ K)


def is_rotation_matrix(R, tol: float = 1e-6) -> bool:
    R = np.asarray(R, dtype=float)
    if R.shape != (3, 3):
        return False
    if not np.all(np.isfinite(R)):
        return False
    err = np.max(np.abs(R.T @ R - np.eye(3)))
    return err < tol and np.linalg.det(R) > 0.0


def matrix_to_quat(R) -> np.ndarray:
    """Largest-pivot quaternion extraction (stable for all angles)."""
    R = np.asarray(R, dtype=float)
    tr = R[0, 0] + R[1, 1] + R[2, 2]
    candidates = np.array([tr, R[0, 0], R[1, 1], R[2, 2]])
    case = int(np.argmax(candidates))
    if case == 0:
        s = np.sqrt(tr + 1.0) * 2.0
        q = np.array([0.25 * s,
                      (R[2, 1] - R[1, 2]) / s,
                      (R[0, 2] - R[2, 0]) / s,
                      (R[1, 0] - R[0, 1]) / s])
    elif case == 1:
        s = np.sqrt(1.0 + R[0, 0] - R[1, 1] - R[2, 2]) * 2.0
        q = np.array([(R[2, 1] - R[1, 2]) / s,
                      0.25 * s,
                      (R[0, 1] + R[1, 0]) / s,
                      (R[0, 2] + R[2, 0]) / s])
    elif case == 2:
        s = np.sqrt(1.0 + R[1, 1] - R[0, 0] - R[2, 2]) * 2.0
        q = np.array([(R[0, 2] - R[2, 0]) / s,
                      (R[0, 1] + R[1, 0]) / s,
                      0.25 * s,
                      (R[1, 2] + R[2, 1]) / s])
    else:
        s = np.sqrt(1.0 + R[2, 2] - R[0, 0] - R[1, 1]) * 2.0
        q = np.array([(R[1, 0] - R[0, 1]) / s,
                      (R[0, 2] + R[2, 0]) / s,
                      (R[1, 2] + R[2, 1]) / s,
                      0.25 * s])
    q /= np.linalg.norm(q)
    if q[0] < 0.0:
        q = -q
    return q


def matrix_to_axis_angle(R) -> np.ndarray:
    """Inverse of axis_angle_to_matrix; returned angle lies in [0, pi].

    Raises NonRotation when R is not orthonormal with det +1 (tol 1e-6).
    Near the pi boundary the axis sign is inherently ambiguous; a
    NearPiRotation warning is emitted but a valid vector is returned.
    """
    if not is_rotation_matrix(R, tol=1e-6):
        raise NonRotation("matrix is not a rotation (orthonormality/det check failed)")
    q = matrix_to_quat(R)
    return quat_to_axis_angle(q)


def axis_angle_to_quat(aa) -> np.ndarray:
    aa = np.asarray(aa, dtype=float)
    angle = np.linalg.norm(aa)
    if angle < 1e-12:
        # sin(x/2)/x ~= 1/2 - x^2/48
        return np.array([1.0 - angle * angle / 8.0,
                         *(aa * (0.5 - angle * angle / 48.0))])
    axis = aa / angle
    half = 0.5 * angle
    return np.array([np.cos(half), *(np.sin(half) * axis)])


def quat_to_axis_angle(q) -> np.ndarray:
    w, x, y, z = q
    if w < 0.0:
        w, x, y, z = -w, -x, -y, -z
    vnorm = np.sqrt(x * x + y * y + z * z)
    angle = 2.0 * np.arctan2(vnorm, w)
    if vnorm < 1e-300:
        return np.zeros(3)
    if angle > np.pi - 1e-3:
        warnings.warn("rotation angle within 1e-3 of pi; axis sign ambiguous",
                      NearPiRotation, stacklevel=2)
    return np.array([x, y, z]) * (angle / vnorm)


def quat_mul(a, b) -> np.ndarray:
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return np.array([
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    ])


def quat_conj(q) -> np.ndarray:
    w, x, y, z = q
    return np.array([w, -x, -y, -z])


def relative_rotation(cur, prev, rep: str = "axis_angle") -> np.ndarray:
    """3-vector encoding of R_cur . R_prev^-1 in the requested representation.

    Representations: "axis_angle" (theta * axis), "rodrigues"
    (tan(theta/2) * axis, the Gibbs vector) and "quaternion" (imaginary
    part of the relative unit quaternion with non-negative real part).
    Identical inputs give the exact zero vector in every representation.
    """
    if rep not in ROTATION_REPS:
        raise ValueError(f"unknown rotation representation {rep!r}")
    q = quat_mul(axis_angle_to_quat(cur), quat_conj(axis_angle_to_quat(prev)))
    if q[0] < 0.0:
        q = -q
    if rep == "quaternion":
        return q[1:].copy()
    if rep == "rodrigues":
        w = max(q[0], 1e-12)  # guard the tan blow-up at pi
        return q[1:] / w
    return quat_to_axis_angle(q)
