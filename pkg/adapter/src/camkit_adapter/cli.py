"""camkit-export command line.

Exit codes mirror the analysis tool: 0 success, 1 validation error, 2 I/O
error. `predictions` also exits 1 when any manifest row had to be skipped,
after writing the rows that worked.
"""

import argparse
import importlib
import importlib.util
import sys

import torch

from .capture import AdapterError
from .export import export_bundle
from .predictions import export_predictions
from .preprocess import PreprocessConfig


def load_model(spec: str) -> torch.nn.Module:
    """Accepted forms: ``file.py:factory``, ``package.module:factory``, or a
    path to a torch.save()d module. A factory is called with no arguments; a
    module attribute that already is an nn.Module is used as-is."""
    if ":" in spec:
        source, attr = spec.rsplit(":", 1)
        if source.endswith(".py"):
            modspec = importlib.util.spec_from_file_location("_export_model_src", source)
            if modspec is None or modspec.loader is None:
                raise AdapterError(f"cannot load python file {source!r}")
            module = importlib.util.module_from_spec(modspec)
            modspec.loader.exec_module(module)
        else:
            module = importlib.import_module(source)
        target = getattr(module, attr, None)
        if target is None:
            raise AdapterError(f"{attr!r} not found in {source!r}")
        if isinstance(target, torch.nn.Module):
            model = target
        elif callable(target):
            model = target()
        else:
            raise AdapterError(f"{attr!r} in {source!r} is not a module or factory")
    else:
        model = torch.load(spec, map_location="cpu", weights_only=False)
    if not isinstance(model, torch.nn.Module):
        raise AdapterError(f"model spec {spec!r} did not produce a torch module")
    return model


def _parse_triple(text):
    parts = [float(p) for p in text.split(",")]
    if len(parts) != 3:
        raise ValueError("expected three comma-separated numbers")
    return tuple(parts)


def _parse_size(text):
    h, _, w = text.partition("x")
    return int(h), int(w)


def _parse_grid(text):
    h, w = _parse_size(text)
    if h < 1 or w < 1:
        raise ValueError("patch grid extents must be positive")
    return h, w


def _config(args) -> PreprocessConfig:
    kwargs = {}
    if args.size:
        kwargs["size"] = _parse_size(args.size)
    if args.mean:
        kwargs["mean"] = _parse_triple(args.mean)
    if args.std:
        kwargs["std"] = _parse_triple(args.std)
    return PreprocessConfig(**kwargs)


def _cmd_bundle(args) -> int:
    model = load_model(args.model)
    manifest = export_bundle(
        model, args.image, kind=args.kind, out_dir=args.out_dir,
        class_index=args.class_index, layer=args.layer,
        model_name=args.model_name,
        patch_grid=_parse_grid(args.patch_grid) if args.patch_grid else None,
        config=_config(args))
    print(manifest)
    return 0


def _cmd_predictions(args) -> int:
    model = load_model(args.model)
    written, skipped = export_predictions(
        model, args.manifest, args.out, config=_config(args))
    print(f"wrote {written} predictions to {args.out}"
          + (f" ({skipped} skipped)" if skipped else ""))
    return 1 if skipped else 0


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"camkit-export: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def build_parser():
    parser = _Parser(prog="camkit-export",
                     description="Export CAMT bundles and prediction CSVs from a torch model.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--model", required=True,
                       help="file.py:factory, package.module:factory, or saved-module path")
        p.add_argument("--size", help="preprocess size HxW (default 224x224)")
        p.add_argument("--mean", help="channel means a,b,c (default ImageNet)")
        p.add_argument("--std", help="channel stds a,b,c (default ImageNet)")

    b = sub.add_parser("bundle", help="export activations/gradients for one image")
    add_common(b)
    b.add_argument("--image", required=True)
    b.add_argument("--kind", required=True, choices=["conv", "vit_tokens"])
    b.add_argument("--out-dir", required=True)
    b.add_argument("--layer", help="dotted module path; defaults to the conventional layer")
    b.add_argument("--class-index", type=int, default=None,
                   help="class score to explain (default: argmax)")
    b.add_argument("--model-name")
    b.add_argument("--patch-grid", help="HxW token grid (default: inferred square)")
    b.set_defaults(func=_cmd_bundle)

    p = sub.add_parser("predictions", help="score a dataset manifest into a CSV")
    add_common(p)
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_predictions)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (AdapterError, ValueError) as exc:
        print(f"camkit-export: error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"camkit-export: i/o error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
