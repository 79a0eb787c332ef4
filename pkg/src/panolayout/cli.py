"""Command-line entry points: dataset generation, training, evaluation,
rendering, and geometry/loss inspection.

Exit codes: 0 success, 2 validation error, 3 numeric failure, 4 IO error.
Everything affecting reproducibility lives in the JSON run config; flags
carry only paths, seeds, and output choices.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import geometry, losses, metrics, postproc, render
from .config import load_run_config
from .errors import NumericError, ValidationError
from .layout import GenSpec, LayoutPrediction, generate_synthetic, read_layout, write_layout
from .model import make_cues
from .train import load_model_from_checkpoint, room_cue_seed, train_model

SPLIT_NAMES = ("train", "val", "test")


def _split_counts(count):
    n_train = int(count * 0.8)
    n_val = int(count * 0.1)
    return n_train, n_val, count - n_train - n_val


def cmd_gen(args):
    shapes = tuple(s.strip() for s in args.shapes.split(",") if s.strip())
    spec = GenSpec(shapes=shapes)
    if args.count < 1:
        raise ValidationError("--count must be >= 1")

    # build everything in memory first: no partial trees on failure
    layouts = [generate_synthetic([args.seed, i], spec) for i in range(args.count)]
    n_train, n_val, n_test = _split_counts(args.count)
    split_of = ["train"] * n_train + ["val"] * n_val + ["test"] * n_test

    manifest = {
        "seed": args.seed,
        "count": args.count,
        "cue_noise": args.noise,
        "shapes": list(shapes),
        "splits": {name: [] for name in SPLIT_NAMES},
    }
    entries = []
    for i, (layout, split) in enumerate(zip(layouts, split_of)):
        rel = os.path.join(split, f"room_{i:05d}.json")
        manifest["splits"][split].append({"path": rel, "index": i})
        entries.append((rel, layout))

    for name in SPLIT_NAMES:
        os.makedirs(os.path.join(args.out, name), exist_ok=True)
    for rel, layout in entries:
        write_layout(layout, os.path.join(args.out, rel))
    with open(os.path.join(args.out, "manifest.json"), "w", encoding="utf-8") as f:
        json.dump(manifest, f, indent=1, sort_keys=True)
        f.write("\n")
    print(f"wrote {args.count} rooms to {args.out} "
          f"(train/val/test = {n_train}/{n_val}/{n_test})")
    return 0


def _load_manifest(dataset_dir):
    path = os.path.join(dataset_dir, "manifest.json")
    if not os.path.exists(path):
        raise ValidationError(f"no manifest.json in {dataset_dir}")
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)


def _load_split(dataset_dir, manifest, split):
    if split not in manifest["splits"]:
        raise ValidationError(f"unknown split {split!r}")
    entries = manifest["splits"][split]
    if not entries:
        raise ValidationError(f"split {split!r} is empty")
    layouts = [read_layout(os.path.join(dataset_dir, e["path"])) for e in entries]
    return layouts, [e["index"] for e in entries]


def cmd_train(args):
    run = load_run_config(args.config)
    if not run.dataset_dir or not run.out_dir:
        raise ValidationError("config must set dataset_dir and out_dir for training")
    manifest = _load_manifest(run.dataset_dir)
    layouts, _ = _load_split(run.dataset_dir, manifest, "train")
    val_layouts = None
    if run.model.eval_every > 0 and manifest["splits"]["val"]:
        val_layouts, _ = _load_split(run.dataset_dir, manifest, "val")
    _, paths = train_model(
        layouts, run.model, run.out_dir, val_layouts=val_layouts, resume_from=args.resume
    )
    print(f"checkpoint: {paths['checkpoint']}")
    print(f"log: {paths['log']}")
    return 0


def _eval_one(task):
    pred, layout = task
    return metrics.evaluate_prediction(pred, layout)


def cmd_eval(args):
    run = load_run_config(args.config) if args.config else None
    dataset_dir = args.dataset or (run.dataset_dir if run else "")
    if not dataset_dir:
        raise ValidationError("provide --dataset or a config with dataset_dir")
    manifest = _load_manifest(dataset_dir)
    layouts, indices = _load_split(dataset_dir, manifest, args.split)

    n_tokens = None
    preds = []
    if args.oracle:
        n_tokens = args.oracle_tokens
        for layout in layouts:
            depths = geometry.sample_floor_boundary(layout, n_tokens)
            preds.append(LayoutPrediction(depths, layout.room_height, layout.camera_height))
    else:
        if not args.checkpoint:
            raise ValidationError("provide --checkpoint (or --oracle)")
        model, _ = load_model_from_checkpoint(args.checkpoint)
        n_tokens = model.cfg.seq.tokens
        sigma = manifest.get("cue_noise", 0.0)
        for layout, idx in zip(layouts, indices):
            cues = make_cues(layout, n_tokens, sigma, seed=room_cue_seed(manifest["seed"], idx))
            preds.append(model.predict(cues, camera_height=layout.camera_height))

    tasks = list(zip(preds, layouts))
    if args.jobs > 1:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            reports = list(pool.map(_eval_one, tasks))
    else:
        reports = [_eval_one(t) for t in tasks]

    os.makedirs(args.out, exist_ok=True)
    columns = ["iou2d", "iou3d", "rmse", "delta1", "ce", "pe"]
    csv_path = os.path.join(args.out, f"metrics_{args.split}.csv")
    with open(csv_path, "w", encoding="utf-8") as f:
        f.write("sample," + ",".join(columns) + "\n")
        for idx, rep in zip(indices, reports):
            row = rep.to_json_dict()
            f.write(f"{idx}," + ",".join(f"{row[c]:.10g}" for c in columns) + "\n")

    values = {c: np.array([rep.to_json_dict()[c] for rep in reports]) for c in columns}
    summary = {
        "split": args.split,
        "count": len(reports),
        "mean": {c: float(values[c].mean()) for c in columns},
        "median": {c: float(np.median(values[c])) for c in columns},
    }
    summary_path = os.path.join(args.out, f"summary_{args.split}.json")
    with open(summary_path, "w", encoding="utf-8") as f:
        json.dump(summary, f, indent=1, sort_keys=True)
        f.write("\n")
    print(f"metrics: {csv_path}")
    print(f"summary: {summary_path}")
    for c in columns:
        print(f"mean {c}: {summary['mean'][c]:.6f}")
    return 0


def cmd_render(args):
    layout = read_layout(args.layout)
    if args.checkpoint:
        model, header = load_model_from_checkpoint(args.checkpoint)
        cues = make_cues(layout, model.cfg.seq.tokens, 0.0)
        source = model.predict(cues, camera_height=layout.camera_height)
    else:
        source = layout
    svg = render.render_boundaries(
        source, width=args.width, height=args.height, show_gradients=args.show_gradients
    )
    with open(args.out, "w", encoding="utf-8") as f:
        f.write(svg)
    print(f"wrote {args.out}")
    return 0


def cmd_inspect(args):
    layout = read_layout(args.layout)
    n = args.tokens
    targets = losses.layout_targets(layout, n)
    depths = targets["depths"] + args.perturb_depth
    if np.any(depths <= 0):
        raise ValidationError("perturbation drove depths nonpositive")
    pred = LayoutPrediction(depths, layout.room_height + args.perturb_height,
                            layout.camera_height)

    import panolayout.autodiff as ad

    total, report = losses.total_loss(
        ad.Tensor(pred.depths), ad.Tensor(np.float64(pred.height)), targets
    )
    normals = geometry.compute_normals(pred.depths)
    grads = geometry.normal_angle_gradients(normals)
    theta = geometry.longitudes(n)

    print(f"layout: {args.layout}  tokens: {n}  "
          f"perturb depth {args.perturb_depth:+.3f} m, height {args.perturb_height:+.3f} m")
    print("   i    theta     d_gt   d_pred       nx       nz   g_gt   g_pred")
    for i in range(n):
        print(
            f"i={i + 1:04d} {theta[i]:+8.4f} {targets['depths'][i]:8.4f} {depths[i]:8.4f} "
            f"{normals[i, 0]:+8.4f} {normals[i, 1]:+8.4f} {targets['grad'][i]:6.3f} {grads[i]:8.3f}"
        )
    for key, value in report.to_json_dict().items():
        print(f"{key} = {value:.6f}")
    return 0


def build_parser():
    ap = argparse.ArgumentParser(
        prog="panolayout",
        description="Desk-scale panoramic room layout estimation pipeline",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a synthetic room dataset")
    g.add_argument("--out", required=True)
    g.add_argument("--count", type=int, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--shapes", default="cuboid,l")
    g.add_argument("--noise", type=float, default=0.05,
                   help="cue noise recorded in the manifest for train/eval")
    g.set_defaults(func=cmd_gen)

    t = sub.add_parser("train", help="train from a JSON run config")
    t.add_argument("--config", required=True)
    t.add_argument("--resume", default=None, help="checkpoint to continue from")
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("eval", help="evaluate a checkpoint (or the oracle) on a split")
    e.add_argument("--checkpoint", default=None)
    e.add_argument("--config", default=None)
    e.add_argument("--dataset", default=None)
    e.add_argument("--split", default="test", choices=SPLIT_NAMES)
    e.add_argument("--out", required=True)
    e.add_argument("--oracle", action="store_true",
                   help="evaluate ground truth against itself (sanity mode)")
    e.add_argument("--oracle-tokens", type=int, default=256)
    e.add_argument("--jobs", type=int, default=1)
    e.set_defaults(func=cmd_eval)

    r = sub.add_parser("render", help="render boundaries + floor plan to SVG")
    r.add_argument("--layout", required=True)
    r.add_argument("--checkpoint", default=None)
    r.add_argument("--out", required=True)
    r.add_argument("--width", type=int, default=1024)
    r.add_argument("--height", type=int, default=512)
    r.add_argument("--show-gradients", action="store_true")
    r.set_defaults(func=cmd_render)

    i = sub.add_parser("inspect", help="print depths/normals/gradients/losses for a layout")
    i.add_argument("--layout", required=True)
    i.add_argument("--tokens", type=int, default=64)
    i.add_argument("--perturb-depth", type=float, default=0.0)
    i.add_argument("--perturb-height", type=float, default=0.0)
    i.set_defaults(func=cmd_inspect)

    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as e:
        print(f"validation error: {e}", file=sys.stderr)
        return 2
    except NumericError as e:
        print(f"numeric failure: {e}", file=sys.stderr)
        return 3
    except OSError as e:
        print(f"io error: {e}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
