"""camkit command line: cam, metrics, split, audit, oversample, loss-check.

Exit codes: 0 success, 1 validation/domain error (including usage errors),
2 I/O error. Every output file is written atomically. Log verbosity comes
from the CAMKIT_LOG environment variable (error|warn|info|debug).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import __version__, focal, gradcam, metrics, render, splitter, tensorio
from ._util import atomic_write_text

log = logging.getLogger("camkit")

_LOG_LEVELS = {
    "error": logging.ERROR,
    "warn": logging.WARNING,
    "info": logging.INFO,
    "debug": logging.DEBUG,
}


class _Parser(argparse.ArgumentParser):
    # spec'd contract: bad flags/subcommands print usage and exit 1, not 2
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _parse_size(text: str) -> tuple[int, int]:
    try:
        h, w = text.lower().split("x")
        h, w = int(h), int(w)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected HxW, got {text!r}")
    if h < 1 or w < 1:
        raise argparse.ArgumentTypeError(f"target size must be >= 1x1, got {text!r}")
    return h, w


def _parse_ratios(text: str) -> tuple[float, float, float]:
    parts = text.split(",")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"expected three comma-separated ratios, got {text!r}")
    try:
        return tuple(float(p) for p in parts)
    except ValueError:
        raise argparse.ArgumentTypeError(f"ratios must be numbers, got {text!r}")


def _render_one(manifest: Path, out_png: Path, target, alpha: float, image_path):
    bundle = tensorio.load_bundle(manifest)
    cam = gradcam.cam_for_bundle(bundle)

    raw_path = out_png.with_suffix(".camt")
    tensorio.write_tensor(tensorio.Tensor(cam.values), raw_path)

    base = render.load_image(image_path) if image_path else None
    if target is not None:
        th, tw = target
    elif base is not None:
        th, tw = base.shape[0], base.shape[1]
    else:
        th, tw = bundle.image_size

    up = gradcam.upsample_bilinear(gradcam.normalize_cam(cam), th, tw)
    if base is not None:
        img = render.overlay(base, up, alpha)
    else:
        img = render.colorize(up)
    render.save_png(img, out_png)
    log.info("wrote %s and %s", out_png, raw_path)


def _cmd_cam(args) -> int:
    bundle_path = Path(args.bundle)
    out_path = Path(args.out)
    if bundle_path.is_dir():
        manifests = sorted(bundle_path.glob("*.json"))
        if not manifests:
            raise tensorio.BundleError(f"{bundle_path}: no *.json bundle manifests found")
        out_path.mkdir(parents=True, exist_ok=True)
        for manifest in manifests:
            _render_one(manifest, out_path / (manifest.stem + ".png"),
                        args.target_size, args.alpha, args.image)
    else:
        _render_one(bundle_path, out_path, args.target_size, args.alpha, args.image)
    return 0


def _cmd_metrics(args) -> int:
    records = metrics.read_predictions(args.predictions)
    report = metrics.evaluate(records, threshold=args.threshold)
    atomic_write_text(args.report, metrics.report_to_json(report))
    sys.stdout.write(metrics.format_report_tables(report, model_name=args.model_name))
    if args.figures:
        from .figures import save_metric_figures

        for path in save_metric_figures(records, report, args.figures):
            log.info("wrote %s", path)
    log.info("wrote %s", args.report)
    return 0


def _cmd_split(args) -> int:
    records = splitter.read_manifest(args.manifest)
    assignment = splitter.patient_split(
        records, ratios=args.ratios, seed=args.seed, stratified=args.stratified
    )
    splitter.write_split_manifest(records, assignment, args.out)

    # Table-1-shaped distribution summary
    tally = {s: {0: 0, 1: 0} for s in splitter.SUBSETS}
    for r, subset in splitter.assign_records(records, assignment):
        tally[subset][r.label] += 1
    head = f"{'Subset':<12}{'NORMAL':>10}{'PNEUMONIA':>12}"
    print(head)
    print("-" * len(head))
    for s in splitter.SUBSETS:
        print(f"{s:<12}{tally[s][0]:>10}{tally[s][1]:>12}")
    log.info("wrote %s (seed %d)", args.out, args.seed)
    return 0


def _cmd_audit(args) -> int:
    pairs = splitter.read_split_manifest(args.manifest)
    violations = splitter.audit_leakage((r.patient_id, subset) for r, subset in pairs)
    doc = {
        "manifest": str(args.manifest),
        "violations": [
            {"patient_id": v.patient_id, "subsets": list(v.subsets)} for v in violations
        ],
        "leak_free": not violations,
    }
    text = json.dumps(doc, indent=2) + "\n"
    if args.report:
        atomic_write_text(args.report, text)
    sys.stdout.write(text)
    return 1 if violations else 0


def _cmd_oversample(args) -> int:
    with open(args.manifest, encoding="utf-8") as fh:
        header = fh.readline()
    if "subset" in [c.strip() for c in header.split(",")]:
        pairs = splitter.read_split_manifest(args.manifest)
        records = [r for r, subset in pairs if subset == "train"]
        if not records:
            raise splitter.SplitError(f"{args.manifest}: no train rows to oversample")
    else:
        records = splitter.read_manifest(args.manifest)
    plan = splitter.oversample_plan(records, seed=args.seed)
    splitter.write_oversampled_manifest(records, plan, args.out)
    counts = {0: 0, 1: 0}
    for i in plan:
        counts[records[i].label] += 1
    print(f"plan length {len(plan)}: {counts[0]} NORMAL, {counts[1]} PNEUMONIA")
    log.info("wrote %s (seed %d)", args.out, args.seed)
    return 0


def _cmd_loss_check(args) -> int:
    import math

    if args.grid:
        zs = [z / 2.0 for z in range(-20, 21)]  # -10 .. 10 step 0.5
        gammas = [0.0, 1.0, 2.0, 5.0]
        alphas = [0.25, 0.5, 0.75]
    else:
        zs = [-3.0, -1.0, 0.0, 0.3, 1.0, 3.0, 40.0]
        gammas = [0.0, 2.0]
        alphas = [0.25, 0.5]

    head = (f"{'y':>2}{'z':>8}{'gamma':>7}{'alpha':>7}{'loss(p)':>14}{'loss(z)':>14}"
            f"{'grad':>14}{'fd grad':>14}{'rel err':>10}")
    print(head)
    print("-" * len(head))
    worst_rel = 0.0
    worst_form_diff = 0.0
    for y in (0, 1):
        for g in gammas:
            for a in alphas:
                for z in zs:
                    params = focal.FocalParams(alpha=a, gamma=g)
                    loss_z = focal.focal_loss_logit(y, z, params)
                    p = focal.sigmoid(z)
                    loss_p = focal.focal_loss(y, p, params) if 0.0 < p < 1.0 else float("nan")
                    if not math.isnan(loss_p):
                        worst_form_diff = max(worst_form_diff, abs(loss_p - loss_z))
                    grad = focal.focal_grad_logit(y, z, params)
                    fd = focal.finite_difference_grad(y, z, params)
                    scale = max(abs(grad), abs(fd), 1e-12)
                    rel = abs(grad - fd) / scale
                    if abs(fd) > 1e-8:  # fd is meaningless in deep saturation
                        worst_rel = max(worst_rel, rel)
                    print(f"{y:>2}{z:>8.2f}{g:>7.2f}{a:>7.2f}{loss_p:>14.6e}{loss_z:>14.6e}"
                          f"{grad:>14.6e}{fd:>14.6e}{rel:>10.2e}")
    print()
    print(f"max |loss(p) - loss(z)|          : {worst_form_diff:.3e}")
    print(f"max relative grad-vs-fd mismatch : {worst_rel:.3e}")
    ok = worst_form_diff < 1e-10 and worst_rel < 1e-6
    print("loss-check: " + ("PASS" if ok else "FAIL"))
    return 0 if ok else 1


def build_parser() -> _Parser:
    parser = _Parser(prog="camkit", description=__doc__)
    parser.add_argument("--version", action="version", version=f"camkit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("cam", help="render a Grad-CAM heatmap/overlay from a bundle manifest")
    p.add_argument("--bundle", required=True, help="bundle manifest JSON, or a directory of them")
    p.add_argument("--out", required=True, help="output PNG (or directory when --bundle is one)")
    p.add_argument("--target-size", type=_parse_size, default=None, metavar="HxW")
    p.add_argument("--alpha", type=float, default=render.DEFAULT_ALPHA)
    p.add_argument("--image", default=None, help="base image to overlay on")
    p.set_defaults(func=_cmd_cam)

    p = sub.add_parser("metrics", help="evaluate a predictions CSV")
    p.add_argument("--predictions", required=True)
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--report", required=True, help="output JSON report path")
    p.add_argument("--figures", default=None, help="directory for ROC/PR curve PNGs")
    p.add_argument("--model-name", default="model")
    p.set_defaults(func=_cmd_metrics)

    p = sub.add_parser("split", help="patient-level 70/15/15 split of a dataset manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--ratios", type=_parse_ratios, default=splitter.DEFAULT_RATIOS)
    p.add_argument("--out", required=True)
    p.add_argument("--stratified", action="store_true")
    p.set_defaults(func=_cmd_split)

    p = sub.add_parser("audit", help="report patients whose images span subsets")
    p.add_argument("--manifest", required=True, help="split manifest with a subset column")
    p.add_argument("--report", default=None, help="optional JSON output path")
    p.set_defaults(func=_cmd_audit)

    p = sub.add_parser("oversample", help="emit a class-balanced oversampled train manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_oversample)

    p = sub.add_parser("loss-check", help="focal loss value/gradient verification table")
    p.add_argument("--grid", action="store_true", help="run the full (z, gamma, alpha, y) grid")
    p.set_defaults(func=_cmd_loss_check)

    return parser


def main(argv=None) -> int:
    level = _LOG_LEVELS.get(os.environ.get("CAMKIT_LOG", "warn").lower(), logging.WARNING)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")

    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits for usage errors and --version
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (
        tensorio.TensorFormatError,
        tensorio.BundleError,
        gradcam.GradCamError,
        focal.FocalDomainError,
        metrics.MetricError,
        splitter.SplitError,
        render.RenderError,
        ValueError,
    ) as exc:
        print(f"camkit: error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"camkit: i/o error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
