import numpy as np
import pytest
import scipy.linalg

from dyco.errors import CorruptFile, SkeletonMismatch
from dyco.pose import Pose, PoseTrack, delta_pose, load_pose_track, \
    save_pose_track

from _oracles import series_expm_axis_angle


def random_pose(rng, k=4, scale=0.6):
    return Pose(rng.normal(size=(k, 3)) * scale, rng.normal(size=3))


def test_delta_pose_identical_is_exact_zero():
    rng = np.random.default_rng(0)
    for _ in range(20):
        p = random_pose(rng)
        d = delta_pose(p, p)
        assert d.shape == (3 * 4 + 3,)
        assert np.all(d == 0.0)


def test_delta_pose_single_joint_and_translation():
    k = 4
    base = Pose(np.zeros((k, 3)), np.zeros(3))
    moved = base.copy()
    moved.joint_rotations[2] = [0, 0, 0.2]
    moved.global_translation[:] = [1, 0, 0]
    d = delta_pose(moved, base)
    expected = np.zeros(15)
    expected[6:9] = [0, 0, 0.2]
    expected[12:] = [1, 0, 0]
    assert np.max(np.abs(d - expected)) < 1e-12


def test_delta_pose_matrix_oracle_per_joint():
    rng = np.random.default_rng(1)
    k = 24
    cur, prev = random_pose(rng, k), random_pose(rng, k)
    d = delta_pose(cur, prev)
    for j in range(k):
        R = (series_expm_axis_angle(cur.joint_rotations[j])
             @ series_expm_axis_angle(prev.joint_rotations[j]).T)
        L = scipy.linalg.logm(R)
        expected = np.array([L[2, 1], L[0, 2], L[1, 0]]).real
        assert np.max(np.abs(d[3 * j:3 * j + 3] - expected)) < 1e-8
    assert np.allclose(d[3 * k:], cur.global_translation - prev.global_translation)


def test_delta_pose_composition_via_matrix_oracle():
    # delta over a doubled step equals the matrix composition of two
    # single-step deltas (compared through matrices, not componentwise).
    rng = np.random.default_rng(2)
    p0, p1, p2 = (random_pose(rng, 3, 0.4) for _ in range(3))
    d02 = delta_pose(p2, p0)
    d12 = delta_pose(p2, p1)
    d01 = delta_pose(p1, p0)
    for j in range(3):
        R_double = series_expm_axis_angle(d02[3 * j:3 * j + 3])
        R_composed = (series_expm_axis_angle(d12[3 * j:3 * j + 3])
                      @ series_expm_axis_angle(d01[3 * j:3 * j + 3]))
        assert np.max(np.abs(R_double - R_composed)) < 1e-9


def test_delta_pose_joint_count_mismatch():
    rng = np.random.default_rng(3)
    with pytest.raises(SkeletonMismatch):
        delta_pose(random_pose(rng, 4), random_pose(rng, 5))


def test_track_clamps_before_start():
    rng = np.random.default_rng(4)
    track = PoseTrack.from_poses([random_pose(rng) for _ in range(5)])
    assert track.pose_at(-3).allclose(track.pose_at(0))


def test_track_requires_increasing_indices():
    rng = np.random.default_rng(5)
    poses = [random_pose(rng) for _ in range(3)]
    with pytest.raises(ValueError):
        PoseTrack.from_poses(poses, frame_indices=[0, 2, 2])


def test_pose_track_file_round_trip(tmp_path):
    rng = np.random.default_rng(6)
    track = PoseTrack.from_poses([random_pose(rng) for _ in range(7)])
    path = tmp_path / "poses.txt"
    save_pose_track(track, path)
    loaded = load_pose_track(path)
    assert np.array_equal(loaded.rotations, track.rotations)
    assert np.array_equal(loaded.translations, track.translations)
    assert np.array_equal(loaded.frame_indices, track.frame_indices)
    # byte-stable: saving the loaded track reproduces the file exactly
    path2 = tmp_path / "poses2.txt"
    save_pose_track(loaded, path2)
    assert path.read_bytes() == path2.read_bytes()


def test_pose_track_file_rejects_garbage(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("not a header\n0 1 2 3\n")
    with pytest.raises(CorruptFile):
        load_pose_track(path)
    path.write_text("#dyco-poses v1 K=2\n0 1.0 2.0\n")
    with pytest.raises(CorruptFile):
        load_pose_track(path)
