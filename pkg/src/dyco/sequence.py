"""Delta-pose and pose sequence conditions, plus track resequencing edits.

The delta sequence at frame i holds length deltas, oldest first, where
entry j compares the pose at i - (length-1-j)*step against the pose a
further delta_step frames back.  History indices before the start of the
track clamp to frame 0, so a freshly started track behaves like a static
history.
"""

from dataclasses import dataclass

import numpy as np

from .errors import OutOfRange
from .pose import PoseTrack, delta_pose


@dataclass
class SequenceParams:
    length: int = 6      # number of entries (L_d)
    step: int = 25       # frames between consecutive entries (s)
    delta_step: int = 25  # frame gap inside each delta (s_d)

    def __post_init__(self):
        if self.length < 1 or self.step < 1 or self.delta_step < 1:
            raise ValueError("sequence parameters must be >= 1")

    @property
    def window(self) -> int:
        """Frames of history covered: (length-1)*step + delta_step."""
        return (self.length - 1) * self.step + self.delta_step


@dataclass
class DeltaPoseSequence:
    entries: np.ndarray  # (length, 3K+3), oldest first
    params: SequenceParams

    def __post_init__(self):
        self.entries = np.asarray(self.entries, dtype=float)
        if self.entries.ndim != 2 or self.entries.shape[0] != self.params.length:
            raise ValueError("entries must have shape (length, 3K+3)")


@dataclass
class PoseSequence:
    poses: list  # length L, oldest first; newest is the query-frame pose
    step: int


def build_delta_sequence(track: PoseTrack, i: int, params: SequenceParams,
                         rep: str = "axis_angle") -> DeltaPoseSequence:
    entries = np.zeros((params.length, 3 * track.num_joints + 3))
    for j in range(params.length):
        at = i - (params.length - 1 - j) * params.step
        cur = track.pose_at(max(at, 0))
        prev = track.pose_at(max(at - params.delta_step, 0))
        entries[j] = delta_pose(cur, prev, rep)
    return DeltaPoseSequence(entries, params)


def build_pose_sequence(track: PoseTrack, i: int, length: int,
                        step: int) -> PoseSequence:
    if length < 1 or step < 1:
        raise ValueError("length and step must be >= 1")
    poses = [track.pose_at(max(i - (length - 1 - j) * step, 0))
             for j in range(length)]
    return PoseSequence(poses, step)


def scale_sequence(seq: DeltaPoseSequence, alpha: float) -> DeltaPoseSequence:
    """Scale every entry componentwise; alpha=0 yields exact +0.0 entries."""
    if not np.isfinite(alpha):
        raise ValueError("alpha must be finite")
    if alpha == 0.0:
        # Avoid -0.0 so the result is bitwise identical to a static history.
        return DeltaPoseSequence(np.zeros_like(seq.entries), seq.params)
    if alpha == 1.0:
        return DeltaPoseSequence(seq.entries.copy(), seq.params)
    return DeltaPoseSequence(seq.entries * alpha, seq.params)


def abrupt_stop(track: PoseTrack, t_stop: int) -> PoseTrack:
    """Freeze the track after row t_stop; frame indices are preserved."""
    if not (0 <= t_stop < len(track)):
        raise OutOfRange(f"stop frame {t_stop} outside track of {len(track)} frames")
    out = track.copy()
    out.rotations[t_stop + 1:] = out.rotations[t_stop]
    out.translations[t_stop + 1:] = out.translations[t_stop]
    return out


def resample_track(track: PoseTrack, alpha: float) -> PoseTrack:
    """Nearest-frame velocity scaling: row j of the result is row
    round(alpha * j) of the input (clamped to the track).

    alpha > 1 speeds the motion up by skipping frames, alpha < 1 slows it
    down by repeating frames, alpha = 0 freezes frame 0.  No poses are
    interpolated.  The output keeps the input's length and frame indices.
    """
    if not np.isfinite(alpha) or alpha < 0.0:
        raise ValueError("alpha must be finite and non-negative")
    if alpha == 1.0:
        return track.copy()
    n = len(track)
    src = np.minimum(np.floor(alpha * np.arange(n) + 0.5).astype(int), n - 1)
    return PoseTrack(track.frame_indices.copy(), track.rotations[src].copy(),
                     track.translations[src].copy(), track.frame_rate)
