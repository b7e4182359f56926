import argparse
from pathlib import Path
from typing import List, Optional

import numpy as np
from pydantic import ValidationError

from routers import EXIT_INPUT, EXIT_OK
from services.diagram_loader import load_system
from services.lqg_dpi import performance_sweep
from services.report import render, sweep_frame, write_output
from utils.errors import CoDesignError
from utils.logger import get_logger
from utils.settings import settings

logger = get_logger(__name__)


def parse_grid(text: Optional[str], log: bool = True) -> Optional[List[float]]:
    """`lo:hi:n` (log-spaced unless `log` is False) or a comma-separated list."""
    if text is None:
        return None
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f"grid {text!r} must look like lo:hi:n")
        lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
        if n < 0:
            raise ValueError(f"grid {text!r} has a negative point count")
        if log:
            if lo <= 0 or hi <= 0:
                raise ValueError(f"log grid {text!r} needs positive bounds")
            return [float(x) for x in np.geomspace(lo, hi, n)]
        return [float(x) for x in np.linspace(lo, hi, n)]
    if not text:
        return []
    return [float(x) for x in text.split(",")]


def register(subparsers) -> None:
    parser = subparsers.add_parser(
        "lqg-sweep",
        help="Tabulate LQG performance over alpha and noise",
        description="Emit (alpha, v, w, P_track, P_effort) rows for a system file.",
    )
    parser.add_argument("system", help="system file (JSON)")
    parser.add_argument("--alpha", default=None, help="alpha grid, lo:hi:n (log) or a list")
    parser.add_argument("--v", default="1", help="observation-noise scales, lo:hi:n (log) or a list")
    parser.add_argument("--w", default="1", help="process-noise scales, lo:hi:n (log) or a list")
    parser.add_argument("--out", default=None, help="output file; standard output when omitted")
    parser.add_argument("--format", choices=["csv", "json"], default="csv")
    parser.set_defaults(handler=cmd_lqg_sweep)


def cmd_lqg_sweep(args: argparse.Namespace) -> int:
    """
    Sweep one LQG system.

    Rows come in (alpha, v, w) grid order. Scalar systems also get the
    closed-form tracking error and control effort.
    """
    try:
        system = load_system(args.system)
        alphas = parse_grid(args.alpha)
        if alphas is None:
            alphas = [float(a) for a in np.geomspace(settings.ALPHA_MIN, settings.ALPHA_MAX, settings.ALPHA_POINTS)]
        vs, ws = parse_grid(args.v), parse_grid(args.w)
        if any(a <= 0 for a in alphas) or any(v <= 0 for v in vs) or any(w < 0 for w in ws):
            raise ValueError("alpha and v must be positive, w nonnegative")
        rows = performance_sweep(system, alphas, vs, ws)
        scalar = len(system.A) == 1 and len(system.B[0]) == 1 and len(system.C) == 1
        out = None if args.out is None else Path(args.out)
        write_output(render(sweep_frame(rows, closed_form=scalar), args.format), out)
    except (CoDesignError, ValidationError, ValueError) as e:
        logger.error("%s", e)
        return EXIT_INPUT
    logger.info("Swept %d points of %s", len(rows), system.name)
    return EXIT_OK
