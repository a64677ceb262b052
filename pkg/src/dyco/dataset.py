"""On-disk multi-view dataset: manifest, images, masks, cameras, poses."""

import os
from dataclasses import dataclass, field

import numpy as np

from .camera import Camera, load_cameras
from .errors import CorruptFile, DatasetEmpty
from .images import read_pgm, read_ppm
from .pose import PoseTrack, load_pose_track
from .skeleton import KinematicTree, load_skeleton

MANIFEST_NAME = "manifest.txt"
CAMERAS_NAME = "cameras.txt"
POSES_NAME = "poses.txt"
SKELETON_NAME = "skeleton.txt"


@dataclass
class ImageEntry:
    frame: int
    cam_id: int
    camera: Camera
    image: np.ndarray      # (H, W, 3) float in [0, 1]
    mask: np.ndarray       # (H, W) bool
    fg_pixels: np.ndarray  # flat indices where mask is on


@dataclass
class TrainDataset:
    entries: list
    track: PoseTrack
    tree: KinematicTree
    cameras: list
    _cond_cache: dict = field(default_factory=dict)

    def conditioning(self, model, frame: int):
        key = (id(model), frame)
        cond = self._cond_cache.get(key)
        if cond is None:
            cond = model.frame_conditioning(self.track, frame)
            self._cond_cache[key] = cond
        return cond

    @property
    def frames(self):
        return sorted({e.frame for e in self.entries})


def write_manifest(path, records) -> None:
    """records: iterable of (frame, cam_id, image_relpath, mask_relpath)."""
    with open(path, "w") as f:
        for frame, cam, img, mask in records:
            f.write(f"frame {frame} camera {cam} image {img} mask {mask}\n")


def read_manifest(path):
    records = []
    with open(path) as f:
        for ln in f:
            ln = ln.strip()
            if not ln:
                continue
            parts = ln.split()
            if len(parts) != 8 or parts[0] != "frame" or parts[2] != "camera" \
                    or parts[4] != "image" or parts[6] != "mask":
                raise CorruptFile(f"{path}: malformed manifest line {ln!r}")
            records.append((int(parts[1]), int(parts[3]), parts[5], parts[7]))
    return records


def load_dataset(root) -> TrainDataset:
    root = str(root)
    cams = load_cameras(os.path.join(root, CAMERAS_NAME))
    track = load_pose_track(os.path.join(root, POSES_NAME))
    tree = load_skeleton(os.path.join(root, SKELETON_NAME))
    records = read_manifest(os.path.join(root, MANIFEST_NAME))
    if not records:
        raise DatasetEmpty(f"{root}: manifest lists no frames")
    entries = []
    for frame, cam_id, img_rel, mask_rel in records:
        image = read_ppm(os.path.join(root, img_rel))
        mask = read_pgm(os.path.join(root, mask_rel)) > 0.5
        entries.append(ImageEntry(frame, cam_id, cams[cam_id], image, mask,
                                  np.flatnonzero(mask.ravel())))
    return TrainDataset(entries, track, tree, cams)
