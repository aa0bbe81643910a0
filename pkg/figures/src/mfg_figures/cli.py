"""Command line: one subcommand per figure kind, reading the documented CSVs."""

from __future__ import annotations

import argparse
import sys

from .render import DEFAULT_ALPHAS, KINDS, FigureSpec, SchemaError, render

MARGINAL_KINDS = ("meanfield-heatlines", "adaptive-heatlines")


def _build_parser():
    parser = argparse.ArgumentParser(prog="mfg-figures",
                                     description="Render figures from experiment CSV logs")
    sub = parser.add_subparsers(dest="kind", required=True)
    for kind in KINDS:
        cmd = sub.add_parser(kind)
        cmd.add_argument("--in", dest="input_path", required=True, help="input CSV")
        cmd.add_argument("--out", dest="output_path", required=True, help="output image")
        cmd.add_argument("--title", default="")
        cmd.add_argument("--dpi", type=int, default=120)
        if kind in MARGINAL_KINDS:
            cmd.add_argument("--alphas", type=float, nargs="+", default=list(DEFAULT_ALPHAS),
                             help="graphon indices to plot (nearest grid points used)")
        if kind == "exploitability-curve":
            cmd.add_argument("--log-y", action="store_true")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    spec = FigureSpec(
        kind=args.kind,
        input_path=args.input_path,
        output_path=args.output_path,
        alphas=tuple(getattr(args, "alphas", DEFAULT_ALPHAS)),
        log_y=getattr(args, "log_y", False),
        title=args.title,
        dpi=args.dpi,
    )
    try:
        render(spec)
    except SchemaError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {spec.output_path}")
    return 0


def entry() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    entry()
