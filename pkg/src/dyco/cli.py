"""Command-line interface: gen-data, train, render, eval, resequence."""

import argparse
import logging
import os
import sys

import numpy as np

from .camera import load_cameras
from .config import Config, load_config
from .dataset import POSES_NAME, load_dataset, write_manifest
from .errors import DycoError, LengthMismatch
from .images import read_image, read_pgm, write_ppm
from .metrics import dme, psnr, ssim
from .pose import load_pose_track, save_pose_track
from .sequence import abrupt_stop, resample_track
from .skeleton import load_skeleton
from .synth import generate_dataset, ring_cameras, spin_stop_track
from .train import load_checkpoint, model_from_checkpoint, train


def _setup_logging():
    level = {"quiet": logging.ERROR, "info": logging.INFO,
             "debug": logging.DEBUG}.get(os.environ.get("DYCO_LOG", "info"),
                                         logging.INFO)
    logging.basicConfig(level=level, stream=sys.stdout,
                        format="%(message)s")


def _add_common(p):
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1)


def _cmd_gen_data(args) -> int:
    track = spin_stop_track(num_frames=args.frames, fps=args.fps,
                            spin_rate=args.spin_rate,
                            stop_frame=args.stop_frame
                            if args.stop_frame is not None else args.frames // 2)
    cams = ring_cameras(count=args.cameras, image_size=args.size)
    generate_dataset(args.out, track=track, cameras=cams,
                     train_cameras=args.train_cameras, image_size=args.size,
                     threads=args.threads)
    logging.info("wrote dataset with %d frames x %d cameras to %s",
                 args.frames, args.cameras, args.out)
    return 0


def _cmd_train(args) -> int:
    cfg = load_config(args.config) if args.config else Config()
    if args.seed is not None:
        cfg.seed = args.seed
    dataset = load_dataset(args.data)
    train(cfg, dataset, out_path=args.out)
    logging.info("checkpoint written to %s", args.out)
    return 0


def _parse_range(text, n):
    if text is None:
        return range(n)
    if ":" in text:
        a, _, b = text.partition(":")
        return range(int(a) if a else 0, int(b) if b else n)
    return [int(text)]


def _cmd_render(args) -> int:
    ckpt = load_checkpoint(args.ckpt)
    if args.seed is not None:
        ckpt.config.seed = args.seed
    tree = load_skeleton(os.path.join(args.data, "skeleton.txt"))
    cams = load_cameras(os.path.join(args.data, "cameras.txt"))
    poses_path = args.poses or os.path.join(args.data, POSES_NAME)
    track = load_pose_track(poses_path)
    if not (0.0 <= args.alpha <= args.alpha_limit):
        raise DycoError(f"alpha {args.alpha} outside [0, {args.alpha_limit}]")
    model = model_from_checkpoint(ckpt, tree)
    os.makedirs(args.out, exist_ok=True)
    frames = _parse_range(args.frames, len(track))
    cam_ids = ([int(c) for c in args.cameras.split(",")] if args.cameras
               else list(range(len(cams))))
    records = []
    for frame in frames:
        cond = model.frame_conditioning(track, frame, alpha=args.alpha)
        for cid in cam_ids:
            img = model.render_image(cond, cams[cid], ckpt.config.seed, cid,
                                     ramp=1.0, threads=args.threads)
            rel = f"f{frame:04d}_c{cid}.ppm"
            write_ppm(os.path.join(args.out, rel), img)
            records.append((frame, cid, rel, rel))
    write_manifest(os.path.join(args.out, "manifest.txt"), records)
    logging.info("rendered %d images to %s", len(records), args.out)
    return 0


def _list_images(directory):
    exts = (".ppm", ".png")
    names = sorted(n for n in os.listdir(directory) if n.endswith(exts))
    return [os.path.join(directory, n) for n in names]


def _cmd_eval(args) -> int:
    pred_paths = _list_images(args.pred)
    gt_paths = _list_images(args.gt)
    mask_paths = sorted(os.path.join(args.masks, n)
                        for n in os.listdir(args.masks) if n.endswith(".pgm"))
    if len(pred_paths) != len(gt_paths) or len(pred_paths) != len(mask_paths):
        raise LengthMismatch(
            f"directory sizes differ: pred={len(pred_paths)} "
            f"gt={len(gt_paths)} masks={len(mask_paths)}")
    preds = [read_image(p) for p in pred_paths]
    gts = [read_image(p) for p in gt_paths]
    masks = [read_pgm(p) > 0.5 for p in mask_paths]
    rows = []
    for i, (a, b) in enumerate(zip(preds, gts)):
        rows.append((i, psnr(a, b), ssim(a, b)))
    motion = dme(preds, gts, masks) if len(preds) >= 2 else float("nan")
    mean_psnr = float(np.mean([r[1] for r in rows]))
    mean_ssim = float(np.mean([r[2] for r in rows]))
    print(f"psnr={mean_psnr:.6g} ssim={mean_ssim:.6g} dme={motion:.6g}")
    if args.out:
        with open(args.out, "w") as f:
            f.write("frame,psnr,ssim\n")
            for i, p, s in rows:
                f.write(f"{i},{p:.6g},{s:.6g}\n")
    return 0


def _cmd_resequence(args) -> int:
    track = load_pose_track(getattr(args, "in"))
    if args.alpha is not None and args.alpha != 1.0:
        track = resample_track(track, args.alpha)
    if args.stop_frame is not None:
        track = abrupt_stop(track, args.stop_frame)
    save_pose_track(track, args.out)
    logging.info("wrote resequenced track to %s", args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dyco",
        description="Inertia-aware articulated neural radiance field")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="generate the synthetic dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--frames", type=int, default=60)
    p.add_argument("--size", type=int, default=64)
    p.add_argument("--cameras", type=int, default=6)
    p.add_argument("--train-cameras", type=int, default=4)
    p.add_argument("--fps", type=float, default=30.0)
    p.add_argument("--spin-rate", type=float, default=1.6)
    p.add_argument("--stop-frame", type=int, default=None)
    _add_common(p)
    p.set_defaults(fn=_cmd_gen_data)

    p = sub.add_parser("train", help="train a model on a dataset directory")
    p.add_argument("--config", default=None)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    _add_common(p)
    p.set_defaults(fn=_cmd_train)

    p = sub.add_parser("render", help="render frames from a checkpoint")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--poses", default=None,
                   help="alternate pose track (e.g. resequenced)")
    p.add_argument("--frames", default=None, help="frame or start:end range")
    p.add_argument("--cameras", default=None, help="comma-separated camera ids")
    p.add_argument("--alpha", type=float, default=1.0,
                   help="delta-sequence velocity scale")
    p.add_argument("--alpha-limit", type=float, default=2.0)
    _add_common(p)
    p.set_defaults(fn=_cmd_render)

    p = sub.add_parser("eval", help="compare rendered and ground-truth frames")
    p.add_argument("--pred", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--masks", required=True)
    p.add_argument("--out", default=None, help="per-frame CSV path")
    _add_common(p)
    p.set_defaults(fn=_cmd_eval)

    p = sub.add_parser("resequence", help="edit a pose track file")
    p.add_argument("--in", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--alpha", type=float, default=None,
                   help="nearest-frame velocity rescale")
    p.add_argument("--stop-frame", type=int, default=None,
                   help="freeze all frames after this one")
    _add_common(p)
    p.set_defaults(fn=_cmd_resequence)
    return parser


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if e.code is not None else 0
    try:
        return args.fn(args)
    except (DycoError, OSError) as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
