"""Command line driver.

    isoafc solve <case-file> [--out DIR] [--resolution N] [--force-alpha {0,1}]
                             [--no-limiter] [--quadrature q] [--tol t]
    isoafc cases
"""

from __future__ import annotations

import argparse
import logging
import sys

from .config import ConfigError, bundled_cases, parse_config, resolve_case
from .driver import EXIT_CONFIG, EXIT_NOT_CONVERGED, EXIT_OK, CaseError, run_case, with_overrides
from .export import format_report


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="isoafc", description="Flux-corrected isogeometric convection-diffusion solver")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="solve a case file (path or bundled case name)")
    s.add_argument("case")
    s.add_argument("--out", default=None, help="output directory (default: ./<case>-out)")
    s.add_argument("--resolution", type=int, default=None, help="samples per direction in solution.vtk")
    s.add_argument("--force-alpha", type=int, choices=(0, 1), default=None,
                   help="bypass the limiter with a constant correction factor")
    s.add_argument("--no-limiter", action="store_true", help="solve the linear low-order scheme")
    s.add_argument("--quadrature", type=int, default=None, help="Gauss points per direction and span")
    s.add_argument("--tol", type=float, default=None, help="defect-correction tolerance")
    s.add_argument("--max-iter", type=int, default=None)
    s.add_argument("--diffusion", type=float, default=None, help="override the diffusion coefficient")
    s.add_argument("--no-figures", action="store_true", help="skip PNG figures")

    sub.add_parser("cases", help="list bundled case files")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "cases":
        for name, path in bundled_cases().items():
            print(f"{name}\t{path}")
        return EXIT_OK

    try:
        path = resolve_case(args.case)
        cfg = parse_config(path)
    except (FileNotFoundError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    formats = None
    if args.no_figures:
        formats = [f for f in cfg.output.formats if f != "png"]
    cfg = with_overrides(
        cfg,
        tolerance=args.tol,
        max_iterations=args.max_iter,
        quadrature=args.quadrature,
        limiter=False if args.no_limiter else None,
        force_alpha=args.force_alpha,
        diffusion=args.diffusion,
        resolution=args.resolution,
        formats=formats,
    )
    out = args.out or f"{cfg.name}-out"
    try:
        result = run_case(cfg, out)
    except CaseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code

    print(format_report(result.diagnostics), end="")
    for kind, p in result.files.items():
        print(f"wrote {kind}: {p}")
    if not result.report.converged:
        print("warning: defect correction did not converge", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
