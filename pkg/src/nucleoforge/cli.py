"""``nucleoforge`` command line.

Exit codes: 0 success, 2 bad configuration or input format, 3 I/O failure,
4 mask placement exhausted, 5 precondition violated (e.g. empty contour set).
"""

import argparse
import json
import os
import sys

import numpy as np

from . import io
from .config import PipelineConfig, load_config, parse_json
from .errors import ConfigError, EmptyContourSet, NotAContourPixel, PlacementExhausted
from .loss import LossParams, contrast_report, optimize_patch, regularizer_breakdown
from .quality import quality_report
from .raster import extract_contours, to_grayscale
from .segmentation import seg_report, watershed_split
from .synth import batch_gen
from .topo import distance_map, encode_skeleton_map, encode_unit_map, skeleton_map, topo_skeleton

EXIT_OK, EXIT_FORMAT, EXIT_IO, EXIT_PLACEMENT, EXIT_PRECONDITION = 0, 2, 3, 4, 5


def _emit(report, out):
    text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    if out:
        io.atomic_write(out, text.encode())
    else:
        sys.stdout.write(text)


def _config(args):
    cfg = load_config(args.config) if getattr(args, "config", None) else PipelineConfig()
    if getattr(args, "seed", None) is not None:
        cfg = cfg.with_seed(args.seed)
    return cfg


def _gray(path):
    img = io.read_image(path)
    return to_grayscale(img) if img.ndim == 3 else img


def _loss_inputs(args):
    g = _gray(args.image)
    labels = io.read_label_png(args.labels)
    if labels.shape != g.shape:
        raise ConfigError(f"image {g.shape} and label map {labels.shape} differ in size")
    return g, extract_contours(labels), LossParams(args.lam, args.beta)


def cmd_gen_masks(args):
    cfg = _config(args)
    out_dir = args.out or cfg.output_dir
    batch_gen(cfg.synth, args.count, out_dir, skeleton_maps=args.skeleton_maps, workers=args.workers)
    print(os.path.join(out_dir, "manifest.json"))
    return EXIT_OK


def cmd_topo_map(args):
    labels = io.read_label_png(args.labels)
    prefix = args.out
    dist = distance_map(labels)
    smap = skeleton_map(labels)
    io.write_pfm(prefix + "_distance.pfm", dist)
    io.write_u8_png(prefix + "_distance.png", encode_unit_map(dist))
    io.write_u8_png(prefix + "_skeleton.png", topo_skeleton(labels).astype(np.uint8) * 255)
    io.write_pfm(prefix + "_skeleton_map.pfm", smap)
    io.write_u8_png(prefix + "_skeleton_map.png", encode_skeleton_map(smap))
    return EXIT_OK


def cmd_loss(args):
    g, c, params = _loss_inputs(args)
    report = regularizer_breakdown(g, c, params, args.d_real, args.d_fake).to_dict(lam=params.lam)
    _emit(report, args.out)
    return EXIT_OK


def cmd_optimize(args):
    g, c, params = _loss_inputs(args)
    result, trace = optimize_patch(g, c, params, args.step, args.iters)
    os.makedirs(args.out_dir, exist_ok=True)
    io.write_u8_png(os.path.join(args.out_dir, "before.png"), encode_unit_map(g))
    io.write_u8_png(os.path.join(args.out_dir, "after.png"), encode_unit_map(result))
    io.write_pfm(os.path.join(args.out_dir, "after.pfm"), result)
    report = {
        "lambda": params.lam,
        "beta": params.beta,
        "iterations": len(trace) - 1,
        "initial": trace[0].to_dict(lam=params.lam),
        "final": trace[-1].to_dict(lam=params.lam),
        "contrast_before": contrast_report(g, c),
        "contrast_after": contrast_report(result, c),
    }
    _emit(report, os.path.join(args.out_dir, "report.json"))
    _emit(report, None)
    return EXIT_OK


def _read_pairs(path):
    with open(path, encoding="utf-8") as fh:
        data = parse_json(fh.read(), str(path))
    if not isinstance(data, list):
        raise ConfigError(f"{path}: expected a JSON list of [reference, candidate] pairs")
    base = os.path.dirname(os.path.abspath(path))
    pairs = []
    for i, item in enumerate(data):
        if isinstance(item, dict):
            item = [item.get("reference"), item.get("candidate")]
        if not (isinstance(item, list) and len(item) == 2 and all(isinstance(p, str) for p in item)):
            raise ConfigError(f"{path}: entry {i} is not a [reference, candidate] pair")
        pairs.append(tuple(os.path.join(base, p) for p in item))
    return pairs


def cmd_quality(args):
    constants = _config(args).quality
    rows = []
    for ref, cand in _read_pairs(args.pairs):
        report = quality_report(io.read_image(ref), io.read_image(cand), constants)
        rows.append({"reference": ref, "candidate": cand, **report.to_dict()})
    mean = {
        key.upper(): float(np.mean([r[key] for r in rows])) if rows else None
        for key in ("ssim", "fsim", "gmsd")
    }
    _emit({"pairs": rows, "mean": mean}, args.out)
    return EXIT_OK


def cmd_seg_eval(args):
    names = sorted(n for n in os.listdir(args.gt_dir) if n.lower().endswith(".png"))
    rows = []
    for name in names:
        gt = io.read_label_png(os.path.join(args.gt_dir, name))
        pred = io.read_label_png(os.path.join(args.pred_dir, name))
        rows.append({"file": name, **seg_report(pred, gt).to_dict()})
    mean = {k: float(np.mean([r[k] for r in rows])) if rows else None for k in ("DQ", "SQ", "PQ", "AJI")}
    _emit({"images": rows, "mean": mean}, args.out)
    return EXIT_OK


def cmd_watershed(args):
    h = args.h if args.h is not None else _config(args).watershed_h
    mask = io.read_mask_png(args.mask)
    labels = watershed_split(mask, h)
    io.write_label_png(args.out, labels)
    _emit({"labels": int(labels.max()), "h": h}, None)
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="nucleoforge",
        description="Synthetic nuclei masks, skeleton maps, contour losses and evaluation metrics.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-masks", help="sample nucleus label maps")
    p.add_argument("config", help="pipeline config JSON")
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--out", help="output directory (default: config output_dir)")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--skeleton-maps", action="store_true", help="also write encoded skeleton maps")
    p.add_argument("--workers", type=int, help="worker processes (capped by NUCLEOFORGE_THREADS)")
    p.set_defaults(func=cmd_gen_masks)

    p = sub.add_parser("topo-map", help="distance map, skeleton and skeleton map of a label PNG")
    p.add_argument("labels")
    p.add_argument("--out", required=True, help="output path prefix")
    p.set_defaults(func=cmd_topo_map)

    for name, func, doc in (
        ("loss", cmd_loss, "evaluate the contour regularizers"),
        ("optimize", cmd_optimize, "descend the contour regularizers in pixel space"),
    ):
        p = sub.add_parser(name, help=doc)
        p.add_argument("image")
        p.add_argument("labels", help="label PNG whose contours are regularized")
        p.add_argument("--lambda", dest="lam", type=float, required=True)
        p.add_argument("--beta", type=float, required=True)
        p.set_defaults(func=func)
        if name == "loss":
            p.add_argument("--d-real", type=float, help="discriminator score on the real pair")
            p.add_argument("--d-fake", type=float, help="discriminator score on the generated pair")
            p.add_argument("--out", help="write the JSON report here instead of stdout")
        else:
            p.add_argument("--step", type=float, default=1.0)
            p.add_argument("--iters", type=int, default=500)
            p.add_argument("--out-dir", required=True)

    p = sub.add_parser("quality", help="SSIM, FSIM and GMSD over image pairs")
    p.add_argument("pairs", help="JSON list of [reference, candidate] paths")
    p.add_argument("--config")
    p.add_argument("--out")
    p.set_defaults(func=cmd_quality)

    p = sub.add_parser("seg-eval", help="DQ, SQ, PQ and AJI of predicted label maps")
    p.add_argument("pred_dir")
    p.add_argument("gt_dir")
    p.add_argument("--out")
    p.set_defaults(func=cmd_seg_eval)

    p = sub.add_parser("watershed", help="split touching nuclei in a binary mask")
    p.add_argument("mask")
    p.add_argument("--out", required=True, help="output label PNG")
    p.add_argument("--h", type=float, help="h-maxima depth in pixels (default: config or 1)")
    p.add_argument("--config")
    p.set_defaults(func=cmd_watershed)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except PlacementExhausted as exc:
        code, msg = EXIT_PLACEMENT, exc
    except (EmptyContourSet, NotAContourPixel) as exc:
        code, msg = EXIT_PRECONDITION, exc
    except (ConfigError, io.FormatError, ValueError) as exc:
        code, msg = EXIT_FORMAT, exc
    except OSError as exc:
        code, msg = EXIT_IO, exc
    print(f"nucleoforge: error: {msg}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
