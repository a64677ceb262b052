"""Synthetic articulated scene with a history-dependent pendulum appendage.

The body is a K=4 capsule chain (root, spine, shoulder, arm) whose pose
is fully observable.  A damped pendulum hangs from the arm tip; its
deflection integrates the anchor's tangential acceleration over time, so
its appearance depends on motion history while never appearing in the
pose track.  A spin followed by an abrupt stop therefore yields frames
with identical pose rows but different images.
"""

import os
from dataclasses import dataclass, field

import numpy as np

from .camera import Camera, look_at, save_cameras
from .dataset import (CAMERAS_NAME, MANIFEST_NAME, POSES_NAME, SKELETON_NAME,
                      write_manifest)
from .errors import IoError
from .images import write_pgm, write_ppm
from .pose import Pose, PoseTrack, save_pose_track
from .sequence import abrupt_stop
from .skeleton import KinematicTree, forward_kinematics, save_skeleton

LIGHT_DIR = np.array([0.4, -0.3, 0.85]) / np.linalg.norm([0.4, -0.3, 0.85])


@dataclass
class Pendulum:
    anchor_joint: int = 3
    anchor_offset: tuple = (0.45, 0.0, 0.0)  # arm tip in the joint's frame
    length: float = 0.3
    damping: float = 4.0
    gravity: float = 9.8
    bob_radius: float = 0.16
    bob_color: tuple = (1.0, 0.45, 0.1)
    rod_radius: float = 0.03
    rod_color: tuple = (0.6, 0.6, 0.6)


@dataclass
class SynthScene:
    tree: KinematicTree
    radii: np.ndarray       # capsule radius per joint
    colors: np.ndarray      # flat RGB per joint
    leaf_tip: np.ndarray    # tip offset of the leaf bone (local frame)
    pendulum: Pendulum = field(default_factory=Pendulum)

    def __post_init__(self):
        if np.any(np.asarray(self.radii) <= 0):
            raise ValueError("capsule radii must be positive")
        if self.pendulum.damping < 0:
            raise ValueError("damping must be non-negative")


def default_scene() -> SynthScene:
    tree = KinematicTree(
        parents=[-1, 0, 1, 2],
        rest_offsets=[[0.0, 0.0, 0.5], [0.0, 0.0, 0.35],
                      [0.0, 0.0, 0.35], [0.3, 0.0, 0.0]],
    )
    radii = np.array([0.13, 0.11, 0.08, 0.06])
    colors = np.array([[0.2, 0.35, 0.9], [0.2, 0.8, 0.35],
                       [0.9, 0.8, 0.2], [0.3, 0.8, 0.8]])
    return SynthScene(tree, radii, colors, np.array([0.45, 0.0, 0.0]))


def spin_stop_track(num_frames: int = 60, fps: float = 30.0,
                    spin_rate: float = 1.6, stop_frame: int = 30,
                    num_joints: int = 4) -> PoseTrack:
    """Constant root spin about z, frozen from stop_frame on."""
    rots = np.zeros((num_frames, num_joints, 3))
    rots[:, 0, 2] = spin_rate * np.arange(num_frames) / fps
    track = PoseTrack(np.arange(num_frames), rots,
                      np.zeros((num_frames, 3)), fps)
    return abrupt_stop(track, stop_frame)


# ------------------------------------------------------------------ physics

def anchor_positions(track: PoseTrack, scene: SynthScene) -> np.ndarray:
    pend = scene.pendulum
    rest = scene.tree.rest_joint_positions()
    tip_rest = rest[pend.anchor_joint] + scene.leaf_tip
    out = np.zeros((len(track), 3))
    for i in range(len(track)):
        bones = forward_kinematics(scene.tree, track.pose_at(i))
        j = pend.anchor_joint
        out[i] = bones.fwd_rot[j] @ tip_rest + bones.fwd_tr[j]
    return out


def _tangents(track: PoseTrack, scene: SynthScene,
              anchors: np.ndarray) -> np.ndarray:
    """Horizontal tangent of the anchor's circle around the root axis."""
    tangents = np.zeros_like(anchors)
    for i in range(len(track)):
        root_xy = track.pose_at(i).global_translation[:2]
        radial = anchors[i, :2] - root_xy
        r = np.linalg.norm(radial)
        if r < 1e-9:
            tangents[i] = (1.0, 0.0, 0.0)
        else:
            tangents[i] = (-radial[1] / r, radial[0] / r, 0.0)
    return tangents


def simulate_pendulum(track: PoseTrack, scene: SynthScene, dt: float,
                      theta0: float = 0.0, omega0: float = 0.0) -> np.ndarray:
    """Per-frame pendulum angles from semi-implicit Euler integration.

    theta'' = -(g/l) sin theta - damping * theta' - a_anchor / l, where
    a_anchor is the tangential anchor acceleration obtained by central
    finite differences of the forward-kinematics trajectory (clamped at
    the track ends).  theta[i] is the state at frame i before applying
    frame i's acceleration.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    pend = scene.pendulum
    anchors = anchor_positions(track, scene)
    tangents = _tangents(track, scene, anchors)
    n = len(track)
    accel = np.zeros(n)
    for i in range(n):
        prev_p = anchors[max(i - 1, 0)]
        next_p = anchors[min(i + 1, n - 1)]
        a_vec = (next_p - 2.0 * anchors[i] + prev_p) / (dt * dt)
        accel[i] = a_vec @ tangents[i]
    thetas = np.zeros(n)
    theta, omega = float(theta0), float(omega0)
    for i in range(n):
        thetas[i] = theta
        domega = (-(pend.gravity / pend.length) * np.sin(theta)
                  - pend.damping * omega - accel[i] / pend.length)
        omega += dt * domega
        theta += dt * omega
    return thetas


def pendulum_points(scene: SynthScene, pose: Pose, theta: float):
    """(anchor, bob-center) world positions for one frame."""
    pend = scene.pendulum
    bones = forward_kinematics(scene.tree, pose)
    j = pend.anchor_joint
    rest = scene.tree.rest_joint_positions()
    anchor = bones.fwd_rot[j] @ (rest[j] + scene.leaf_tip) + bones.fwd_tr[j]
    root_xy = pose.global_translation[:2]
    radial = anchor[:2] - root_xy
    r = np.linalg.norm(radial)
    tangent = np.array([1.0, 0.0, 0.0]) if r < 1e-9 else \
        np.array([-radial[1] / r, radial[0] / r, 0.0])
    offset = pend.length * (np.sin(theta) * tangent
                            - np.cos(theta) * np.array([0.0, 0.0, 1.0]))
    return anchor, anchor + offset


# --------------------------------------------------------------- raytracing

def _ray_spheres(origins, dirs, center, radius):
    oc = origins - center
    b = np.einsum("nd,nd->n", oc, dirs)
    c = np.einsum("nd,nd->n", oc, oc) - radius * radius
    disc = b * b - c
    t = np.full(len(dirs), np.inf)
    ok = disc >= 0.0
    sq = np.sqrt(np.maximum(disc, 0.0))
    t0 = -b - sq
    t1 = -b + sq
    tt = np.where(t0 > 1e-6, t0, np.where(t1 > 1e-6, t1, np.inf))
    t[ok] = tt[ok]
    return t


def _ray_capsule(origins, dirs, a, b, radius):
    """Nearest positive hit with a capsule (cylinder body + sphere caps)."""
    axis = b - a
    ab2 = float(axis @ axis)
    t_best = np.minimum(_ray_spheres(origins, dirs, a, radius),
                        _ray_spheres(origins, dirs, b, radius))
    if ab2 < 1e-18:
        return t_best
    u = axis / np.sqrt(ab2)
    m = origins - a
    d_perp = dirs - np.outer(dirs @ u, u)
    m_perp = m - np.outer(m @ u, u)
    qa = np.einsum("nd,nd->n", d_perp, d_perp)
    qb = np.einsum("nd,nd->n", d_perp, m_perp)
    qc = np.einsum("nd,nd->n", m_perp, m_perp) - radius * radius
    disc = qb * qb - qa * qc
    ok = (disc >= 0.0) & (qa > 1e-18)
    sq = np.sqrt(np.maximum(disc, 0.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        t0 = (-qb - sq) / qa
    # Cylinder hit must project inside the segment.
    proj = (m + t0[:, None] * dirs) @ u
    cyl_ok = ok & (t0 > 1e-6) & (proj >= 0.0) & (proj <= np.sqrt(ab2))
    t_cyl = np.where(cyl_ok, t0, np.inf)
    return np.minimum(t_best, t_cyl)


def _shade(colors, normals):
    lam = 0.5 + 0.5 * np.maximum(normals @ LIGHT_DIR, 0.0)
    return colors * lam[:, None]


def raytrace_frame(scene: SynthScene, pose: Pose, theta: float,
                   cam: Camera, bob_only: bool = False):
    """Flat-shaded nearest-hit render -> (image (H,W,3), mask (H,W) bool)."""
    h, w = cam.height, cam.width
    uu, vv = np.meshgrid(np.arange(w), np.arange(h))
    d_cam = np.stack([(uu.ravel() + 0.5 - cam.cx) / cam.fx,
                      (vv.ravel() + 0.5 - cam.cy) / cam.fy,
                      np.ones(h * w)], axis=1)
    dirs = d_cam @ cam.rot
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    origins = np.broadcast_to(cam.origin, dirs.shape)

    bones = forward_kinematics(scene.tree, pose)
    joints = bones.joint_positions(scene.tree)
    prims = []  # (kind, data..., color)
    if not bob_only:
        for j in range(scene.tree.num_joints):
            kids = scene.tree.children(j)
            ends = [joints[c] for c in kids]
            if not ends:
                tip = bones.fwd_rot[j] @ (scene.tree.rest_joint_positions()[j]
                                          + scene.leaf_tip) + bones.fwd_tr[j]
                ends = [tip]
            for e in ends:
                prims.append(("capsule", joints[j], e, scene.radii[j],
                              scene.colors[j]))
    pend = scene.pendulum
    anchor, bob = pendulum_points(scene, pose, theta)
    if not bob_only:
        prims.append(("capsule", anchor, bob, pend.rod_radius,
                      np.asarray(pend.rod_color)))
    prims.append(("sphere", bob, None, pend.bob_radius,
                  np.asarray(pend.bob_color)))

    best_t = np.full(h * w, np.inf)
    best_id = np.full(h * w, -1)
    for pid, (kind, p0, p1, radius, _color) in enumerate(prims):
        if kind == "sphere":
            t = _ray_spheres(origins, dirs, p0, radius)
        else:
            t = _ray_capsule(origins, dirs, p0, p1, radius)
        closer = t < best_t
        best_t[closer] = t[closer]
        best_id[closer] = pid
    mask = best_id >= 0
    image = np.zeros((h * w, 3))
    if np.any(mask):
        pts = origins[mask] + best_t[mask, None] * dirs[mask]
        normals = np.zeros_like(pts)
        colors = np.zeros_like(pts)
        ids = best_id[mask]
        for pid, (kind, p0, p1, radius, color) in enumerate(prims):
            sel = ids == pid
            if not np.any(sel):
                continue
            if kind == "sphere":
                normals[sel] = (pts[sel] - p0) / radius
            else:
                axis = p1 - p0
                ab2 = float(axis @ axis)
                if ab2 < 1e-18:
                    normals[sel] = (pts[sel] - p0) / radius
                else:
                    tproj = np.clip((pts[sel] - p0) @ axis / ab2, 0.0, 1.0)
                    closest = p0 + tproj[:, None] * axis
                    nv = pts[sel] - closest
                    normals[sel] = nv / np.linalg.norm(nv, axis=1, keepdims=True)
            colors[sel] = color
        image[mask] = _shade(colors, normals)
    return image.reshape(h, w, 3), mask.reshape(h, w)


# ------------------------------------------------------------------ dataset

def ring_cameras(count: int = 6, image_size: int = 64, distance: float = 2.6,
                 height: float = 0.9, target=(0.0, 0.0, 0.85)) -> list:
    cams = []
    f = 85.0 * image_size / 64.0
    for i in range(count):
        ang = 2.0 * np.pi * i / count
        eye = np.array([distance * np.cos(ang), distance * np.sin(ang), height])
        rot, tr = look_at(eye, target)
        cams.append(Camera(f, f, image_size / 2.0, image_size / 2.0, rot, tr,
                           image_size, image_size))
    return cams


def generate_dataset(out_dir, scene: SynthScene = None, track: PoseTrack = None,
                     cameras: list = None, train_cameras: int = 4,
                     image_size: int = 64, threads: int = 1) -> dict:
    """Write images, masks, cameras, poses, skeleton and manifests.

    The pose track never includes the pendulum state; regeneration with
    identical inputs is bitwise identical.  Returns the per-frame
    pendulum angles for diagnostics (not written into the dataset).
    """
    scene = scene or default_scene()
    track = track if track is not None else spin_stop_track()
    cameras = cameras or ring_cameras(image_size=image_size)
    try:
        os.makedirs(out_dir, exist_ok=True)
        os.makedirs(os.path.join(out_dir, "images"), exist_ok=True)
        os.makedirs(os.path.join(out_dir, "masks"), exist_ok=True)
    except OSError as e:
        raise IoError(f"cannot create dataset directory {out_dir}: {e}") from e
    thetas = simulate_pendulum(track, scene, dt=1.0 / track.frame_rate)
    jobs = [(i, c) for i in range(len(track)) for c in range(len(cameras))]

    def render(job):
        i, c = job
        return raytrace_frame(scene, track.pose_at(i), thetas[i], cameras[c])

    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(render, jobs))
    else:
        results = [render(j) for j in jobs]

    train_recs, holdout_recs = [], []
    for (i, c), (image, mask) in zip(jobs, results):
        img_rel = f"images/f{i:04d}_c{c}.ppm"
        mask_rel = f"masks/f{i:04d}_c{c}.pgm"
        write_ppm(os.path.join(out_dir, img_rel), image)
        write_pgm(os.path.join(out_dir, mask_rel), mask)
        rec = (int(track.frame_indices[i]), c, img_rel, mask_rel)
        (train_recs if c < train_cameras else holdout_recs).append(rec)
    write_manifest(os.path.join(out_dir, MANIFEST_NAME), train_recs)
    write_manifest(os.path.join(out_dir, "manifest_holdout.txt"), holdout_recs)
    save_cameras(cameras, os.path.join(out_dir, CAMERAS_NAME))
    save_pose_track(track, os.path.join(out_dir, POSES_NAME))
    save_skeleton(scene.tree, os.path.join(out_dir, SKELETON_NAME))
    return {"pendulum_angles": thetas}
