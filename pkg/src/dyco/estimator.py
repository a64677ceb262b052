"""scikit-learn style facade over the training and rendering pipeline."""

import numpy as np
from sklearn.base import BaseEstimator

from .config import Config
from .dataset import TrainDataset, load_dataset
from .errors import NotFitted, OutOfRange
from .train import checkpoint_from_model  # noqa: F401  (re-export convenience)
from .train import train
from .validation import check_frame_camera_pairs


class DycoEstimator(BaseEstimator):
    """Fits the avatar model on a dataset directory (or TrainDataset) and
    predicts rendered frames.

    Follows the scikit-learn estimator contract: hyperparameters are
    plain constructor attributes (get_params/set_params/clone work), fit
    returns self, and fitted state lives in trailing-underscore
    attributes.
    """

    def __init__(self, iterations=2000, rays_per_batch=1024, n_samples=64,
                 lr_triplane=5e-4, lr_other=5e-5, seed=0, ramp_fraction=0.1,
                 seq_length=6, seq_step=25, delta_step=25,
                 rotation_rep="axis_angle", volume_size=32,
                 triplane_resolutions=(16, 32, 64, 128), nonrigid_width=128,
                 head_width=256, aabb_margin=0.3, canonical_margin=0.5,
                 delta_condition=True, precision="float32", log_every=100,
                 probe_pixels=512):
        self.iterations = iterations
        self.rays_per_batch = rays_per_batch
        self.n_samples = n_samples
        self.lr_triplane = lr_triplane
        self.lr_other = lr_other
        self.seed = seed
        self.ramp_fraction = ramp_fraction
        self.seq_length = seq_length
        self.seq_step = seq_step
        self.delta_step = delta_step
        self.rotation_rep = rotation_rep
        self.volume_size = volume_size
        self.triplane_resolutions = triplane_resolutions
        self.nonrigid_width = nonrigid_width
        self.head_width = head_width
        self.aabb_margin = aabb_margin
        self.canonical_margin = canonical_margin
        self.delta_condition = delta_condition
        self.precision = precision
        self.log_every = log_every
        self.probe_pixels = probe_pixels

    def _config(self) -> Config:
        return Config(**{k: (tuple(v) if k == "triplane_resolutions" else v)
                         for k, v in self.get_params().items()})

    def fit(self, X, y=None):
        """X: dataset directory path or a loaded TrainDataset."""
        dataset = X if isinstance(X, TrainDataset) else load_dataset(X)
        config = self._config()
        ckpt = train(config, dataset)
        from .train import model_from_checkpoint
        self.dataset_ = dataset
        self.checkpoint_ = ckpt
        self.model_ = model_from_checkpoint(ckpt, dataset.tree)
        return self

    def _require_fitted(self):
        if not hasattr(self, "model_"):
            raise NotFitted("call fit() before predict()/score()")

    def predict(self, X, alpha: float = 1.0) -> np.ndarray:
        """Render (frame, camera) pairs -> (n, H, W, 3) images in [0, 1]."""
        self._require_fitted()
        pairs = check_frame_camera_pairs(X)
        out = []
        for frame, cam_id in pairs:
            if not (0 <= cam_id < len(self.dataset_.cameras)):
                raise OutOfRange(f"camera id {cam_id} not in dataset")
            cond = self.model_.frame_conditioning(self.dataset_.track,
                                                  int(frame), alpha=alpha)
            cam = self.dataset_.cameras[int(cam_id)]
            out.append(self.model_.render_image(cond, cam, self.seed,
                                                int(cam_id)))
        return np.stack(out)

    def score(self, X, y=None) -> float:
        """Mean PSNR (dB) of rendered frames against the dataset images."""
        from .metrics import psnr
        self._require_fitted()
        pairs = check_frame_camera_pairs(X)
        preds = self.predict(pairs)
        vals = []
        for (frame, cam_id), pred in zip(pairs, preds):
            matches = [e for e in self.dataset_.entries
                       if e.frame == frame and e.cam_id == cam_id]
            if not matches:
                raise OutOfRange(f"frame {frame} cam {cam_id} not in dataset")
            vals.append(psnr(pred, matches[0].image))
        return float(np.mean(vals))
