"""The full avatar model: parameters, per-frame conditioning, point/ray eval.

A frame's conditioning is its bone transforms (from forward kinematics),
its delta-pose sequence and its current joint angles.  Every query point
picks its nearest joint from the blend-weight volume, which selects a
kinematic-chain mask; the masked sequence feeds two independent context
encoders (one conditioning the non-rigid offset, one the canonical
field) and the masked current angles form the pose condition.
"""

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .blend_weights import BlendWeightVolume, bump_initialized_logits
from .camera import Camera, generate_rays, ray_aabb
from .config import Config
from .context import OUTPUT_DIM, ContextEncoder
from .deform import NonRigidMLP, inverse_lbs, warp_points
from .field import TriplaneField
from .optim import ParamStore
from .pose import PoseTrack
from .render import composite, stratified_depths
from .rng import Stream
from .sequence import SequenceParams, build_delta_sequence, scale_sequence
from .skeleton import KinematicTree, forward_kinematics, joint_chain_mask


@dataclass
class FrameConditioning:
    frame: int
    bones: object
    entries: np.ndarray    # (L, 3K+3) delta sequence, oldest first
    pose_table: np.ndarray  # (K, 3K) chain-masked current joint angles
    aabb_min: np.ndarray
    aabb_max: np.ndarray


class DycoModel:
    def __init__(self, config: Config, tree: KinematicTree, dtype=np.float32):
        self.config = config
        self.tree = tree
        self.dtype = np.dtype(dtype)
        self.k = tree.num_joints
        self.seq = SequenceParams(config.seq_length, config.seq_step,
                                  config.delta_step)
        rest = tree.rest_joint_positions()
        m = config.canonical_margin
        self.bbox_min = rest.min(axis=0) - m
        self.bbox_max = rest.max(axis=0) + m
        self.masks = np.stack([joint_chain_mask(tree, k) for k in range(self.k)])
        self.params = ParamStore()
        stream = Stream(config.seed, "init")
        self.enc_nr = ContextEncoder(self.k, self.seq.length, "enc_nr")
        self.enc_field = ContextEncoder(self.k, self.seq.length, "enc_field")
        self.enc_nr.register(self.params, Stream(config.seed, "init", 1), dtype)
        self.enc_field.register(self.params, Stream(config.seed, "init", 2), dtype)
        pose_dim = 3 * self.k
        self.nonrigid = NonRigidMLP(pose_dim, OUTPUT_DIM, config.nonrigid_width)
        self.nonrigid.register(self.params, Stream(config.seed, "init", 3), dtype)
        self.field = TriplaneField(config.triplane_resolutions, self.bbox_min,
                                   self.bbox_max, pose_dim, OUTPUT_DIM,
                                   config.head_width)
        self.field.register(self.params, Stream(config.seed, "init", 4), dtype)
        logits = bump_initialized_logits(tree, config.volume_size,
                                         self.bbox_min, self.bbox_max,
                                         dtype=dtype)
        self.params.add("blend_logits", logits)
        self.volume = BlendWeightVolume(self.params["blend_logits"],
                                        self.bbox_min, self.bbox_max)

    # ------------------------------------------------------------- plumbing

    def param_vars(self, trainable: bool = True) -> dict:
        make = ad.param if trainable else ad.const
        return {name: make(arr) for name, arr in self.params.items()}

    def frame_conditioning(self, track: PoseTrack, frame: int,
                           alpha: float = 1.0) -> FrameConditioning:
        pose = track.pose_at(frame)
        bones = forward_kinematics(self.tree, pose)
        seq = build_delta_sequence(track, frame, self.seq,
                                   self.config.rotation_rep)
        if not self.config.delta_condition:
            seq = scale_sequence(seq, 0.0)
        elif alpha != 1.0:
            seq = scale_sequence(seq, alpha)
        angles = pose.joint_rotations.reshape(-1)
        pose_table = self.masks[:, :3 * self.k] * angles[None, :]
        joints = bones.joint_positions(self.tree)
        m = self.config.aabb_margin
        return FrameConditioning(frame, bones, seq.entries, pose_table,
                                 joints.min(axis=0) - m, joints.max(axis=0) + m)

    # ------------------------------------------------------------ evaluation

    def eval_points(self, pvars: dict, cond: FrameConditioning,
                    pts: np.ndarray, ramp: float = 1.0):
        """Density and color at observation-space points (N, 3)."""
        lbs = inverse_lbs(pts.astype(self.dtype), cond.bones, self.volume,
                          pvars["blend_logits"])
        entries = cond.entries
        ctx_nr = self.enc_nr.encode_batch(pvars, entries, self.masks)
        ctx_f = self.enc_field.encode_batch(pvars, entries, self.masks)
        ctx_nr_pts = ad.gather_rows(ctx_nr, lbs.nearest)
        ctx_f_pts = ad.gather_rows(ctx_f, lbs.nearest)
        pose_pts = ad.const(cond.pose_table[lbs.nearest].astype(self.dtype))
        offset = self.nonrigid.offset(pvars, lbs.x_r, pose_pts, ctx_nr_pts)
        x_c = warp_points(lbs.x_r, offset, ramp)
        sigma, rgb = self.field.evaluate(pvars, x_c, pose_pts, ctx_f_pts,
                                         lbs.foreground)
        return sigma, rgb, lbs

    def render_rays(self, pvars: dict, cond: FrameConditioning,
                    origins: np.ndarray, dirs: np.ndarray, keys: np.ndarray,
                    stream: Stream, ramp: float = 1.0):
        """Composite colors for rays; missed rays come back as background.

        Returns (color Var (N, 3), hit mask).  Rays that miss the scene
        bounds contribute constant black so gradients only flow through
        hits.
        """
        n = origins.shape[0]
        t_near, t_far, hit = ray_aabb(origins, dirs, cond.aabb_min, cond.aabb_max)
        background = np.zeros((n, 3), dtype=self.dtype)
        if not np.any(hit):
            return ad.const(background), hit
        ts = stratified_depths(t_near[hit], t_far[hit],
                               self.config.n_samples, stream, keys[hit])
        pts = origins[hit][:, None, :] + ts[:, :, None] * dirs[hit][:, None, :]
        nh, s = ts.shape
        sigma, rgb, _ = self.eval_points(pvars, cond, pts.reshape(-1, 3), ramp)
        color, _ = composite(ts, ad.reshape(sigma, (nh, s)),
                             ad.reshape(rgb, (nh, s, 3)), t_far[hit])
        # Scatter hit colors into the full batch; misses stay background.
        full = ad.scatter_rows(background, np.flatnonzero(hit), color)
        return full, hit

    def render_pixels(self, cond: FrameConditioning, cam: Camera,
                      pixels: np.ndarray, seed: int, cam_id: int = 0,
                      ramp: float = 1.0) -> np.ndarray:
        """No-gradient render of specific pixels; bitwise deterministic."""
        pvars = self.param_vars(trainable=False)
        origins, dirs = generate_rays(cam, pixels)
        keys = pixels[:, 1].astype(np.int64) * cam.width + pixels[:, 0]
        stream = Stream(seed, "strata", cond.frame, cam_id)
        color, _ = self.render_rays(pvars, cond, origins, dirs, keys, stream,
                                    ramp)
        return color.data

    def render_image(self, cond: FrameConditioning, cam: Camera, seed: int,
                     cam_id: int = 0, ramp: float = 1.0,
                     threads: int = 1) -> np.ndarray:
        """Full-frame no-gradient render, chunked by pixel rows.

        Chunk results are written by index, so output is identical for
        any thread count.
        """
        uu, vv = np.meshgrid(np.arange(cam.width), np.arange(cam.height))
        pixels = np.stack([uu.ravel(), vv.ravel()], axis=1)
        chunks = np.array_split(np.arange(pixels.shape[0]),
                                max(1, (pixels.shape[0] + 4095) // 4096))
        out = np.zeros((pixels.shape[0], 3), dtype=self.dtype)

        def work(rows):
            return self.render_pixels(cond, cam, pixels[rows], seed, cam_id,
                                      ramp)

        if threads > 1 and len(chunks) > 1:
            from concurrent.futures import ThreadPoolExecutor
            with ThreadPoolExecutor(max_workers=threads) as pool:
                for rows, res in zip(chunks, pool.map(work, chunks)):
                    out[rows] = res
        else:
            for rows in chunks:
                out[rows] = work(rows)
        return out.reshape(cam.height, cam.width, 3).astype(np.float64)
