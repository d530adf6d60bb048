"""Command-line surface for batch processing and reproducible experiments.

Exit codes: 0 success, 1 runtime/data error, 2 usage or config error.
All file outputs are written atomically; metric outputs are JSON lines on
stdout. Every subcommand is deterministic given the same config and seed
(`--deterministic` additionally pins single-threaded execution; this
implementation is always single-threaded, so the flag is accepted and
recorded but changes nothing).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import annotations as ann
from . import evaluation, io, solver
from .config import ConfigError, RunConfig, load_config
from .image import Decomposition, LinearImage, LOG_EPS
from .tonemap import ToneMapParams, tonemap_with_stats


def _emit(obj) -> None:
    print(json.dumps(obj, sort_keys=True))


def _load_image(path) -> LinearImage:
    path = Path(path)
    if path.suffix.lower() == ".pfm":
        return io.read_pfm(path)
    return io.read_png(path)


def _log_field(img: LinearImage) -> np.ndarray:
    return np.log(np.maximum(img.data, LOG_EPS))


def _config_from_args(args) -> RunConfig:
    overrides = {}
    for key in vars(RunConfig()):
        flag = getattr(args, f"opt_{key}", None)
        if flag is not None:
            overrides[key] = flag
    return load_config(getattr(args, "config", None), overrides)


def _add_config_flags(p: argparse.ArgumentParser, keys) -> None:
    p.add_argument("--config", help="TOML config file")
    for key in keys:
        kind = int if key in ("seed", "max_iters", "slic_k", "pyramid_levels",
                              "sinkhorn_iters") else float
        p.add_argument(f"--{key.replace('_', '-')}", dest=f"opt_{key}",
                       type=kind, default=None)


# ---------------------------------------------------------------------------
# subcommands

def _cmd_tonemap(args) -> int:
    hdr = _load_image(args.input)
    params = ToneMapParams(
        gamma=args.gamma, percentile=args.percentile, anchor=args.anchor)
    ldr, stats = tonemap_with_stats(hdr, params)
    io.write_png(ldr, args.output, bits=16)
    _emit({"r_p": stats.percentile_value, "alpha": stats.alpha,
           "saturated_fraction": stats.saturated_fraction})
    return 0


def _cmd_make_gt(args) -> int:
    image = _load_image(args.image)
    refl = _load_image(args.reflectance)
    light = io.read_mask_png(args.light_mask) if args.light_mask else None
    triple = io.make_ground_truth(image, refl, light)
    out = Path(args.output) if args.output else Path(
        args.image).with_suffix(".shading.png")
    io.write_png(triple.shading, out, bits=16, write_mask=True)
    _emit({"shading": str(out),
           "mask": str(io.mask_sidecar_path(out)),
           "valid_fraction": float(triple.mask.mean())})
    return 0


def _cmd_decompose(args) -> int:
    cfg = _config_from_args(args)
    image = _load_image(args.image)
    judgments = ann.load_judgments(args.annotations) if args.annotations else None
    saw = ann.load_saw(args.saw) if args.saw else None
    dec, report = solver.decompose(image, cfg.solve_config(judgments, saw))

    stem = Path(args.image)
    out_r = Path(args.out_r) if args.out_r else stem.with_suffix(".R.png")
    out_s = Path(args.out_s) if args.out_s else stem.with_suffix(".S.png")
    out_rep = Path(args.report) if args.report else stem.with_suffix(
        ".report.json")
    io.write_png(dec.reflectance(), out_r, bits=16)
    io.write_png(dec.shading(), out_s, bits=16)
    payload = {
        "iterations": report.iterations,
        "objective": report.objective,
        "trajectory": report.trajectory,
        "breakdown": report.breakdown,
        "seed": cfg.seed,
        "deterministic": bool(args.deterministic),
    }
    io.atomic_write_bytes(out_rep, json.dumps(payload, sort_keys=True,
                                              indent=1).encode())
    _emit({"reflectance": str(out_r), "shading": str(out_s),
           "report": str(out_rep), "objective": report.objective,
           "iterations": report.iterations})
    return 0


def _cmd_score(args) -> int:
    cfg = _config_from_args(args)
    image = _load_image(args.image)
    refl = _load_image(args.reflectance)
    shad = _load_image(args.shading)
    dec = Decomposition(_log_field(refl), _log_field(shad),
                        image.mask & refl.mask & shad.mask)
    gt_r = _load_image(args.gt_r) if args.gt_r else None
    gt_s = _load_image(args.gt_s) if args.gt_s else None
    judgments = ann.load_judgments(args.annotations) if args.annotations else None
    saw = ann.load_saw(args.saw) if args.saw else None
    terms, total, aux = solver.score(
        image, dec, cfg.loss_weights(), gt_r=gt_r, gt_s=gt_s,
        judgments=judgments, saw=saw, sigma_p=cfg.sigma_p,
        sinkhorn_iters=cfg.sinkhorn_iters,
        dilation_radius=cfg.dilation_radius, oracle=args.oracle)
    _emit({"image": str(args.image), "total": total, "terms": terms,
           **{k: v for k, v in aux.items()}})
    return 0


def _cmd_eval_whdr(args) -> int:
    cfg = _config_from_args(args)
    refl = _load_image(args.reflectance)
    judgments = ann.load_judgments(args.judgments)
    value = evaluation.whdr(_log_field(refl), judgments, cfg.delta)
    _emit({"image": judgments.image or str(args.reflectance), "whdr": value})
    return 0


def _cmd_eval_saw(args) -> int:
    cfg = _config_from_args(args)
    shading = _load_image(args.shading)
    image = _load_image(args.image)
    saw = ann.load_saw(args.saw)
    fn = evaluation.saw_pr_reference if args.oracle else evaluation.saw_pr
    curve = fn(_log_field(shading), image, saw, challenge=args.challenge,
               radius=cfg.dilation_radius)
    _emit({"image": str(args.image), "ap": curve.ap,
           "challenge": bool(args.challenge), "oracle": bool(args.oracle)})
    if args.csv:
        lines = ["threshold,precision,recall"]
        for t, p, r in zip(curve.thresholds, curve.precision, curve.recall):
            lines.append(f"{t!r},{p!r},{r!r}")
        io.atomic_write_bytes(args.csv, ("\n".join(lines) + "\n").encode())
    return 0


def _cmd_eval_mit(args) -> int:
    m = evaluation.mit_metrics(
        _load_image(args.pred_r), _load_image(args.pred_s),
        _load_image(args.gt_r), _load_image(args.gt_s))
    _emit({"mse_r": m.mse_r, "mse_s": m.mse_s, "lmse_r": m.lmse_r,
           "lmse_s": m.lmse_s, "dssim_r": m.dssim_r, "dssim_s": m.dssim_s})
    return 0


def _cmd_augment(args) -> int:
    judgments = ann.load_judgments(args.input)
    out = ann.augment_judgments(judgments)
    text = ann.dump_judgments(out)
    if args.output:
        io.atomic_write_bytes(args.output, text.encode())
        _emit({"input_pairs": len(judgments), "output_pairs": len(out),
               "output": str(args.output)})
    else:
        print(text)
    return 0


def _cmd_superpixels(args) -> int:
    cfg = _config_from_args(args)
    image = _load_image(args.image)
    labels = ann.slic_superpixels(image, cfg.slic_k, cfg.slic_compactness)
    io.write_label_png(labels.labels, args.output)
    _emit({"segments": labels.count, "labels": str(args.output)})
    return 0


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="intrinsics",
        description="Intrinsic image decomposition toolkit")
    parser.add_argument("--deterministic", action="store_true", default=True,
                        help="single-threaded, bit-reproducible run (default)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("tonemap", help="HDR PFM -> LDR 16-bit PNG")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--gamma", type=float, default=1.0 / 2.2)
    p.add_argument("--percentile", type=float, default=0.90)
    p.add_argument("--anchor", type=float, default=0.8)
    p.set_defaults(func=_cmd_tonemap)

    p = sub.add_parser("make-gt", help="derive shading S = I / R with masks")
    p.add_argument("image")
    p.add_argument("reflectance")
    p.add_argument("--light-mask", dest="light_mask")
    p.add_argument("--output")
    p.set_defaults(func=_cmd_make_gt)

    p = sub.add_parser("decompose", help="variational decomposition")
    p.add_argument("image")
    p.add_argument("--annotations", help="ordinal judgments JSON")
    p.add_argument("--saw", help="shading annotations JSON")
    p.add_argument("--out-r", dest="out_r")
    p.add_argument("--out-s", dest="out_s")
    p.add_argument("--report")
    _add_config_flags(p, ("lambda_ord", "lambda_rec", "lambda_rs",
                          "lambda_ss", "lambda_sns", "margin", "sigma_p",
                          "max_iters", "initial_step", "tolerance", "seed",
                          "pyramid_levels", "sinkhorn_iters"))
    p.set_defaults(func=_cmd_decompose)

    p = sub.add_parser("score", help="loss breakdown for a decomposition")
    p.add_argument("image")
    p.add_argument("reflectance")
    p.add_argument("shading")
    p.add_argument("--gt-r", dest="gt_r")
    p.add_argument("--gt-s", dest="gt_s")
    p.add_argument("--annotations")
    p.add_argument("--saw")
    p.add_argument("--oracle", action="store_true",
                   help="use the dense brute-force shading smoothness")
    _add_config_flags(p, ("lambda_ord", "lambda_rec", "lambda_rs",
                          "lambda_ss", "lambda_sns", "margin", "sigma_p",
                          "pyramid_levels", "sinkhorn_iters"))
    p.set_defaults(func=_cmd_score)

    p = sub.add_parser("eval-whdr", help="WHDR of a reflectance image")
    p.add_argument("reflectance")
    p.add_argument("judgments")
    _add_config_flags(p, ("delta",))
    p.set_defaults(func=_cmd_eval_whdr)

    p = sub.add_parser("eval-saw", help="SAW PR / AP of a shading image")
    p.add_argument("shading")
    p.add_argument("image")
    p.add_argument("saw")
    p.add_argument("--challenge", action="store_true")
    p.add_argument("--oracle", action="store_true")
    p.add_argument("--csv", help="write PR points as CSV")
    _add_config_flags(p, ("dilation_radius",))
    p.set_defaults(func=_cmd_eval_saw)

    p = sub.add_parser("eval-mit", help="MIT MSE / LMSE / DSSIM metrics")
    p.add_argument("--pred-r", dest="pred_r", required=True)
    p.add_argument("--pred-s", dest="pred_s", required=True)
    p.add_argument("--gt-r", dest="gt_r", required=True)
    p.add_argument("--gt-s", dest="gt_s", required=True)
    p.set_defaults(func=_cmd_eval_mit)

    p = sub.add_parser("augment-judgments",
                       help="close judgments under symmetry/transitivity")
    p.add_argument("input")
    p.add_argument("output", nargs="?")
    p.set_defaults(func=_cmd_augment)

    p = sub.add_parser("superpixels", help="SLIC-style segmentation")
    p.add_argument("image")
    p.add_argument("output", help="16-bit label PNG")
    _add_config_flags(p, ("slic_k", "slic_compactness"))
    p.set_defaults(func=_cmd_superpixels)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
