import argparse
from pathlib import Path

from pydantic import ValidationError

from routers import EXIT_INFEASIBLE, EXIT_INPUT, EXIT_OK
from services.diagram import solve_dual
from services.diagram_loader import load_diagram_file, load_query
from services.drone import mission_bounds, query
from services.report import dual_rows, front_frame, front_rows, render, write_output
from utils.errors import CoDesignError
from utils.logger import get_logger

logger = get_logger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser(
        "solve",
        help="Answer a co-design query",
        description="Solve every sweep point of a query file and write antichain rows with witnesses.",
    )
    parser.add_argument("query", help="query file (JSON)")
    parser.add_argument("--out", default=None, help="output directory; standard output when omitted")
    parser.add_argument("--format", choices=["csv", "json"], default=None, help="overrides the query's format")
    parser.set_defaults(handler=cmd_solve)


def cmd_solve(args: argparse.Namespace) -> int:
    """
    Run one query file.

    **Query kinds:**
    - **fix_fun_min_res**: minimal exposed resources for each functionality point
    - **fix_res_max_fun**: maximal candidate functionalities within each resource budget

    **Exit status:** 0 on success, 2 when no sweep point is feasible, 1 on input errors.
    """
    try:
        spec = load_query(args.query)
        diagram_spec, diagram = load_diagram_file(Path(args.query).parent / spec.diagram)
        fmt = args.format or spec.format

        fun_names = list(diagram.exposed_fun)
        res_names = list(diagram.exposed_res)
        rows = []
        feasible = False
        if spec.kind == "fix_fun_min_res":
            bounds = dict(spec.bounds)
            if diagram_spec.mission is not None:
                bounds.update(mission_bounds(diagram_spec.mission))
            for result in query(diagram, spec.sweep, bounds):
                feasible |= not result.answer.is_empty
                rows += front_rows(fun_names, res_names, result.fun, result.answer)
        else:
            for budget in spec.sweep:
                answer = solve_dual(diagram, budget, spec.candidates)
                feasible |= not answer.is_empty
                rows += dual_rows(fun_names, res_names, budget, answer)

        text = render(front_frame(rows, fun_names, res_names, list(diagram.order)), fmt)
        out = None if args.out is None else Path(args.out) / f"{Path(args.query).stem}.{fmt}"
        write_output(text, out)
    except (CoDesignError, ValidationError, ValueError) as e:
        logger.error("%s", e)
        return EXIT_INPUT

    if not feasible:
        logger.warning("No sweep point of %s is feasible", args.query)
        return EXIT_INFEASIBLE
    return EXIT_OK
