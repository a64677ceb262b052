import numpy as np
import pytest
import scipy.linalg

from dyco.errors import NonRotation
from dyco.rotation import (axis_angle_to_matrix, canonicalize_axis_angle,
                           matrix_to_axis_angle, relative_rotation)

from _oracles import series_expm_axis_angle


def test_zero_rotation_is_identity():
    assert np.allclose(axis_angle_to_matrix([0, 0, 0]), np.eye(3), atol=0)


def test_quarter_turn_about_z():
    R = axis_angle_to_matrix([0, 0, np.pi / 2])
    expected = np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
    assert np.max(np.abs(R - expected)) < 1e-12


def test_matches_series_exponential_oracle():
    aa = np.array([0.3, -0.2, 0.1])
    R = axis_angle_to_matrix(aa)
    assert np.max(np.abs(R - series_expm_axis_angle(aa))) < 1e-12


def test_output_is_orthonormal_with_unit_det():
    rng = np.random.default_rng(7)
    for _ in range(200):
        aa = rng.normal(size=3) * rng.uniform(0, np.pi)
        R = axis_angle_to_matrix(aa)
        assert np.max(np.abs(R.T @ R - np.eye(3))) < 1e-12
        assert abs(np.linalg.det(R) - 1.0) < 1e-12


def test_matrix_to_axis_angle_identity_and_quarter_turn():
    assert np.allclose(matrix_to_axis_angle(np.eye(3)), np.zeros(3))
    aa = matrix_to_axis_angle(axis_angle_to_matrix([0, 0, np.pi / 2]))
    assert np.max(np.abs(aa - [0, 0, np.pi / 2])) < 1e-12


def test_round_trip_1000_seeded_samples():
    rng = np.random.default_rng(42)
    worst = 0.0
    for _ in range(1000):
        axis = rng.normal(size=3)
        axis /= np.linalg.norm(axis)
        angle = rng.uniform(1e-6, np.pi - 0.1)
        aa = axis * angle
        rec = matrix_to_axis_angle(axis_angle_to_matrix(aa))
        worst = max(worst, np.max(np.abs(rec - aa)))
    assert worst < 1e-9


def test_round_trip_reproduces_matrix_below_pi():
    rng = np.random.default_rng(3)
    for _ in range(200):
        axis = rng.normal(size=3)
        axis /= np.linalg.norm(axis)
        aa = axis * rng.uniform(0, np.pi - 1e-3)
        R = axis_angle_to_matrix(aa)
        R2 = axis_angle_to_matrix(matrix_to_axis_angle(R))
        assert np.max(np.abs(R - R2)) < 1e-9


def test_non_rotation_rejected():
    with pytest.raises(NonRotation):
        matrix_to_axis_angle(np.eye(3) * 1.5)
    with pytest.raises(NonRotation):
        matrix_to_axis_angle(np.diag([1.0, 1.0, -1.0]))  # det -1


def test_returned_angle_in_zero_pi():
    rng = np.random.default_rng(11)
    for _ in range(100):
        R = axis_angle_to_matrix(rng.normal(size=3) * 2.0)
        assert np.linalg.norm(matrix_to_axis_angle(R)) <= np.pi + 1e-12


def test_canonicalize_wraps_into_zero_pi():
    aa = canonicalize_axis_angle([0, 0, 3 * np.pi / 2])
    assert np.allclose(aa, [0, 0, -np.pi / 2], atol=1e-12)
    assert np.allclose(canonicalize_axis_angle([0.0, 0.0, 0.0]), 0.0)


def test_relative_rotation_identical_inputs_exact_zero():
    for rep in ("axis_angle", "rodrigues", "quaternion"):
        out = relative_rotation([0, 0, 0.4], [0, 0, 0.4], rep)
        assert np.all(out == 0.0)


def test_relative_rotation_coaxial():
    out = relative_rotation([0, 0, 0.5], [0, 0, 0.4], "axis_angle")
    assert np.max(np.abs(out - [0, 0, 0.1])) < 1e-12


def test_relative_rotation_matrix_oracle():
    rng = np.random.default_rng(5)
    for _ in range(100):
        cur = rng.normal(size=3) * 0.6
        prev = rng.normal(size=3) * 0.6
        rel = relative_rotation(cur, prev, "axis_angle")
        R_oracle = (series_expm_axis_angle(cur)
                    @ series_expm_axis_angle(prev).T)
        # independent log: scipy matrix logarithm -> vee
        L = scipy.linalg.logm(R_oracle)
        expected = np.array([L[2, 1], L[0, 2], L[1, 0]]).real
        assert np.max(np.abs(rel - expected)) < 1e-8


def test_relative_rotation_representations_agree_on_angle():
    rng = np.random.default_rng(9)
    cur, prev = rng.normal(size=3) * 0.5, rng.normal(size=3) * 0.5
    aa = relative_rotation(cur, prev, "axis_angle")
    rod = relative_rotation(cur, prev, "rodrigues")
    quat = relative_rotation(cur, prev, "quaternion")
    theta = np.linalg.norm(aa)
    assert abs(np.linalg.norm(rod) - np.tan(theta / 2)) < 1e-12
    assert abs(np.linalg.norm(quat) - np.sin(theta / 2)) < 1e-12
    axis = aa / theta
    assert np.max(np.abs(rod / np.linalg.norm(rod) - axis)) < 1e-9
    assert np.max(np.abs(quat / np.linalg.norm(quat) - axis)) < 1e-9


def test_relative_rotation_unknown_rep():
    with pytest.raises(ValueError):
        relative_rotation([0, 0, 0], [0, 0, 0], "euler")
