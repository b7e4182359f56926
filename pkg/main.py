import argparse
import sys
from typing import List, Optional

from routers import lqg_router
from routers import solve_router
from routers import validate_router
from utils.settings import settings


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="codesign",
        description="Monotone co-design with LQG control blocks: solve queries, sweep LQG designs, validate inputs.",
    )
    parser.add_argument("--max-iter", type=int, default=None, help="Kleene iteration budget")
    parser.add_argument("--tol", type=float, default=None, help="Riccati residual tolerance")
    parser.add_argument("--workers", type=int, default=None, help="threads for independent evaluations")
    subparsers = parser.add_subparsers(dest="command", required=True)

    solve_router.register(subparsers)
    lqg_router.register(subparsers)
    validate_router.register(subparsers)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """
    Entry point of the `codesign` command.
    """
    args = build_parser().parse_args(argv)
    if args.max_iter is not None:
        settings.MAX_ITER = args.max_iter
    if args.tol is not None:
        settings.TOL_RICCATI = args.tol
    if args.workers is not None:
        settings.WORKERS = args.workers
    return args.handler(args)


if __name__ == "__main__":
    sys.exit(main())
