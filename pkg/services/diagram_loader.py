"""
Building diagrams and queries from their JSON files.

Catalog paths inside a diagram file are resolved relative to that file.
"""

import json
from pathlib import Path
from typing import Dict, Tuple, Union

from pydantic import BaseModel, ValidationError

from schemas.diagram import DiagramFile, GridSpec, NodeSpec, QueryFile
from schemas.lqg import LQG_KINDS, SystemFile
from services.blocks import (
    actuation_block,
    algorithm_block,
    battery_block,
    computing_block,
    energy_block,
    feature_extraction_block,
    mission_block,
    sensor_block,
)
from services.catalog_service import load_catalog
from services.diagram import CoDesignDiagram, Edge
from services.dpi import CatalogDpi, Dpi, GriddedDpi, PortGrid, SumDpi, ports
from services.drone import build_drone_diagram, drone_lqg_spec
from services.lqg_dpi import make_lqg_dpi
from services.posets import RealsPoset
from utils.errors import CatalogError, DiagramError, QueryError
from utils.logger import get_logger

logger = get_logger(__name__)

# node kind -> catalog kind it reads
CATALOG_KINDS = {
    "battery": "battery",
    "actuation": "actuator",
    "computer": "computer",
    "sensor": "sensor",
    "detection_algorithm": "algorithm",
    "control_algorithm": "algorithm",
    "feature_extraction": "feature",
}


def port_grid(spec: GridSpec) -> PortGrid:
    if spec.values is not None:
        return PortGrid(tuple(spec.values))
    if spec.scale == "log":
        return PortGrid.log(spec.lo, spec.hi, spec.points)
    return PortGrid.linear(spec.lo, spec.hi, spec.points)


def read_model(path: Path, model: type, error: type) -> BaseModel:
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise error(f"{path}: cannot read file: {e.strerror}")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise error(f"{path}:{e.lineno}:{e.colno}: invalid JSON: {e.msg}")
    try:
        return model.model_validate(data)
    except ValidationError as e:
        first = e.errors()[0]
        where = ".".join(str(p) for p in first["loc"])
        raise error(f"{path}: {where}: {first['msg']}")


def _catalog_entries(node: str, spec: NodeSpec, base: Path):
    if spec.catalog is None:
        raise DiagramError(f"node {node} of kind {spec.kind} needs a catalog path", ports=[node])
    catalog = load_catalog(base / spec.catalog)
    expected = CATALOG_KINDS[spec.kind]
    if catalog.kind != expected:
        raise CatalogError(f"node {node} needs a {expected} catalog, got {catalog.kind}", str(base / spec.catalog))
    return catalog.entries


def build_node(node: str, spec: NodeSpec, base: Path) -> Dpi:
    """Instantiate one node of an explicit diagram."""
    kind = spec.kind
    if kind == "sum":
        if not spec.addends:
            raise DiagramError(f"sum node {node} needs addends", ports=[node])
        dpi: Dpi = SumDpi(node, spec.addends, spec.total, spec.scale, spec.unit, spec.total_unit)
    elif kind == "table":
        if spec.fun is None or spec.res is None or not spec.rows:
            raise DiagramError(f"table node {node} needs fun, res and rows", ports=[node])
        fun = ports([p.name for p in spec.fun], [RealsPoset(p.unit) for p in spec.fun])
        res = ports([p.name for p in spec.res], [RealsPoset(p.unit) for p in spec.res])
        dpi = CatalogDpi(node, fun, res, [(r.name, tuple(r.prov), tuple(r.req)) for r in spec.rows])
    elif kind in LQG_KINDS:
        if spec.lqg is None:
            raise DiagramError(f"LQG node {node} needs an 'lqg' block spec", ports=[node])
        dpi = make_lqg_dpi(spec.lqg.model_copy(update={"variant": LQG_KINDS[kind]}), node)
    elif kind == "mission":
        if spec.mission is None:
            raise DiagramError(f"mission node {node} needs a 'mission' spec", ports=[node])
        dpi = mission_block(spec.mission, node)
    elif kind == "energy":
        dpi = energy_block(node)
    elif kind in CATALOG_KINDS:
        entries = _catalog_entries(node, spec, base)
        if kind == "battery":
            dpi = battery_block(entries, name=node)
        elif kind == "actuation":
            dpi = actuation_block(entries, name=node)
        elif kind == "computer":
            dpi = computing_block(entries, name=node)
        elif kind == "sensor":
            dpi = sensor_block(entries, name=node)
        elif kind == "feature_extraction":
            dpi = feature_extraction_block(entries, name=node)
        else:
            dpi = algorithm_block(entries, spec.role or kind.split("_")[0], name=node)
    else:
        raise DiagramError(f"node {node} has unknown kind {kind!r}", ports=[node])

    if spec.grids:
        dpi = GriddedDpi(dpi, {port: port_grid(g) for port, g in spec.grids.items()})
    return dpi


def diagram_from_file(spec: DiagramFile, base: Path) -> CoDesignDiagram:
    if spec.template == "drone":
        catalogs = {kind: load_catalog(base / path) for kind, path in spec.catalogs.items()}
        for kind, catalog in catalogs.items():
            if catalog.kind != kind:
                raise CatalogError(f"listed as {kind} but declares kind {catalog.kind}", str(base / spec.catalogs[kind]))
        if spec.mission is None:
            raise DiagramError("the drone template needs a mission", ports=["mission"])
        grids = {ref: port_grid(g) for ref, g in spec.grids.items()}
        lqg_spec = None
        if spec.lqg is not None:
            lqg_spec = drone_lqg_spec(spec.mission, **spec.lqg.model_dump(exclude_none=True))
        return build_drone_diagram(catalogs, spec.mission, lqg_spec, grids)

    nodes: Dict[str, Dpi] = {name: build_node(name, node, base) for name, node in spec.nodes.items()}
    edges = [Edge.parse(e.edge, e.loop) for e in spec.edge_specs()]
    return CoDesignDiagram(nodes, edges, spec.exposed_fun, spec.exposed_res, name=spec.name)


def load_diagram_file(source: Union[str, Path]) -> Tuple[DiagramFile, CoDesignDiagram]:
    """Read, validate and build a diagram file; returns the parsed file as well."""
    path = Path(source)
    spec = read_model(path, DiagramFile, DiagramError)
    diagram = diagram_from_file(spec, path.parent)
    logger.info("Loaded %r from %s", diagram, path)
    return spec, diagram


def load_diagram(source: Union[str, Path]) -> CoDesignDiagram:
    return load_diagram_file(source)[1]


def load_query(source: Union[str, Path]) -> QueryFile:
    return read_model(Path(source), QueryFile, QueryError)


def load_system(source: Union[str, Path]) -> SystemFile:
    return read_model(Path(source), SystemFile, QueryError)


def file_kind(source: Union[str, Path]) -> str:
    """Guess what a file holds: catalog, diagram, query or system."""
    path = Path(source)
    if path.suffix.lower() == ".csv":
        return "catalog"
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise QueryError(f"{path}:{e.lineno}:{e.colno}: invalid JSON: {e.msg}")
    except (OSError, ValueError) as e:
        raise QueryError(f"{path}: not a readable JSON document ({e})")
    if not isinstance(data, dict):
        raise QueryError(f"{path}: expected a JSON object")
    if "diagram" in data and "sweep" in data:
        return "query"
    if "A" in data and "B" in data:
        return "system"
    return "diagram"
