import argparse
import sys
from pathlib import Path
from typing import List

from pydantic import ValidationError

from routers import EXIT_INPUT, EXIT_OK
from schemas.results import ValidationReport
from services.catalog_service import load_catalog
from services.diagram_loader import file_kind, load_diagram, load_query, load_system
from utils.errors import CoDesignError
from utils.logger import get_logger

logger = get_logger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser(
        "validate",
        help="Schema-check catalogs, diagrams, queries and system files",
        description="Load every file and build every diagram without solving.",
    )
    parser.add_argument("paths", nargs="+", help="files to check")
    parser.set_defaults(handler=cmd_validate)


def validate_path(path: str) -> ValidationReport:
    kind = "unknown"
    try:
        kind = file_kind(path)
        if kind == "catalog":
            catalog = load_catalog(path)
            message = f"{len(catalog.entries)} {catalog.kind} entries"
        elif kind == "query":
            spec = load_query(path)
            diagram = load_diagram(Path(path).parent / spec.diagram)
            for point in spec.sweep:
                if spec.kind == "fix_fun_min_res":
                    diagram.fun_poset.check(tuple(point))
                else:
                    diagram.res_poset.check(tuple(point))
            for point in spec.candidates:
                diagram.fun_poset.check(tuple(point))
            message = f"{len(spec.sweep)} sweep points against {diagram.name}"
        elif kind == "system":
            system = load_system(path)
            message = f"{len(system.A)}-state system {system.name}"
        else:
            diagram = load_diagram(path)
            message = f"{len(diagram.nodes)} nodes, {diagram.loop_count} loops"
    except (CoDesignError, ValidationError, ValueError) as e:
        return ValidationReport(path=path, kind=kind, ok=False, message=str(e))
    return ValidationReport(path=path, kind=kind, ok=True, message=message)


def cmd_validate(args: argparse.Namespace) -> int:
    """
    Validate files.

    **Exit status:** 0 when every file is well-formed, 1 otherwise. Failures
    are reported on standard error with the file, line and field they concern.
    """
    reports: List[ValidationReport] = [validate_path(p) for p in args.paths]
    for report in reports:
        if report.ok:
            sys.stdout.write(f"ok {report.kind} {report.path}: {report.message}\n")
        else:
            logger.error("%s %s: %s", report.kind, report.path, report.message)
    return EXIT_OK if all(r.ok for r in reports) else EXIT_INPUT
