"""Inertia-aware articulated neural radiance field.

A canonical triplane field is warped by inverse linear blend skinning
plus a conditioned non-rigid offset; both the offset MLP and the field
heads are conditioned on a kinematically masked delta-pose sequence so
one pose with different motion histories renders different appearance.
"""

__version__ = "0.1.0"

from .config import Config, load_config, parse_config, serialize_config
from .estimator import DycoEstimator
from .model import DycoModel
from .pose import Pose, PoseTrack, delta_pose
from .sequence import (DeltaPoseSequence, SequenceParams, abrupt_stop,
                       build_delta_sequence, build_pose_sequence,
                       resample_track, scale_sequence)
from .skeleton import KinematicTree, forward_kinematics, joint_chain_mask, \
    kinematic_chains
from .train import Checkpoint, load_checkpoint, save_checkpoint, train

__all__ = [
    "Config", "load_config", "parse_config", "serialize_config",
    "DycoEstimator", "DycoModel", "Pose", "PoseTrack", "delta_pose",
    "DeltaPoseSequence", "SequenceParams", "abrupt_stop",
    "build_delta_sequence", "build_pose_sequence", "resample_track",
    "scale_sequence", "KinematicTree", "forward_kinematics",
    "joint_chain_mask", "kinematic_chains", "Checkpoint", "load_checkpoint",
    "save_checkpoint", "train", "__version__",
]
