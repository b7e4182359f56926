"""
The drone co-design problem.

Mission planning asks for endurance, a number of missions and tolerance to a
process-noise level. A digital LQG controller turns the noise tolerance into
tracking error, control effort, observation/control frequencies and an
observation precision; perception, algorithms, computer, actuation, energy and
battery blocks supply the rest. Three feedback loops close the design:

* the energy block must supply the total power drawn by the platform,
* the computer must supply the total computation of the algorithms,
* actuation must lift the total weight, itself included.
"""

from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from schemas.catalog import Catalog, MissionSpec
from schemas.lqg import LqgBlockSpec, PlantSpec
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
from services.diagram import CoDesignDiagram, Edge, solve_loop
from services.dpi import Dpi, GriddedDpi, PortGrid, SumDpi
from services.lqg_dpi import make_lqg_dpi
from services.posets import Antichain, pareto_min
from utils.errors import DiagramError, QueryError
from utils.logger import get_logger
from utils.settings import settings

logger = get_logger(__name__)

EXPOSED_FUN = ("mission.mission_time", "mission.num_missions", "mission.system_noise")
EXPOSED_RES = ("cost_sum.total", "energy.total_power", "lqg.tracking_error")

LOOP_EDGES = (
    "energy.power -> power_sum.total",
    "computer.computation -> computation_sum.total",
    "actuation.lift -> mass_sum.weight",
)

EDGES = (
    "lqg.w -> mission.noise",
    "energy.endurance -> mission.endurance",
    "battery.cycles -> mission.cycles",
    "actuation.control_effort -> lqg.control_effort",
    "control_algorithm.frequency -> lqg.control_frequency",
    "feature_extraction.frequency -> lqg.obs_frequency",
    "feature_extraction.precision -> lqg.precision",
    "sensor.frame_rate -> feature_extraction.frame_rate",
    "sensor.resolution -> feature_extraction.resolution",
    "detection_algorithm.frequency -> feature_extraction.detection_frequency",
    "detection_algorithm.accuracy -> feature_extraction.detection_accuracy",
    "computation_sum.detection -> detection_algorithm.computation",
    "computation_sum.control -> control_algorithm.computation",
    "power_sum.sensor -> sensor.power",
    "power_sum.computer -> computer.power",
    "power_sum.actuation -> actuation.power",
    "battery.energy -> energy.energy",
    "mass_sum.battery -> battery.mass",
    "mass_sum.actuation -> actuation.mass",
    "mass_sum.sensor -> sensor.mass",
    "mass_sum.computer -> computer.mass",
    "cost_sum.battery -> battery.cost",
    "cost_sum.actuation -> actuation.cost",
    "cost_sum.sensor -> sensor.cost",
    "cost_sum.computer -> computer.cost",
)

SPEED_EDGE = "actuation.speed -> mission.speed"


def drone_plant(mission: MissionSpec) -> PlantSpec:
    """Heading dynamics dθ = ω dt, dω = (τ/I) dt + dw observed through θ.

    W is the unit-intensity noise shape: diag(0, 1/I) in the scaled form,
    diag(0, 1) otherwise. Q₀ weighs θ or ω.
    """
    inertia = mission.inertia
    w_shape = 1.0 / inertia if mission.noise_form == "scaled" else 1.0
    q = [[mission.q0, 0.0], [0.0, 0.0]] if mission.weight_state == "theta" else [[0.0, 0.0], [0.0, mission.q0]]
    return PlantSpec(
        A=[[0.0, 1.0], [0.0, 0.0]],
        B=[[0.0], [1.0 / inertia]],
        C=[[1.0, 0.0]],
        W=[[0.0, 0.0], [0.0, w_shape]],
        V=[[1.0]],
        Q0=q,
        R0=[[mission.r0]],
    )


def drone_lqg_spec(mission: MissionSpec, **grids) -> LqgBlockSpec:
    """Digital LQG block for the drone, observation noise expressed as precision."""
    return LqgBlockSpec(variant="digital", plant=drone_plant(mission), noise_as_precision=True, **grids)


def _catalog(catalogs: Mapping[str, Catalog], kind: str) -> Catalog:
    if kind not in catalogs:
        raise DiagramError(f"drone diagram needs a {kind} catalog", ports=[kind])
    return catalogs[kind]


def drone_nodes(catalogs: Mapping[str, Catalog], mission: MissionSpec,
                lqg_spec: Optional[LqgBlockSpec] = None) -> Dict[str, Dpi]:
    """The fourteen blocks of the drone diagram, in tie-break order."""
    lqg_spec = lqg_spec or drone_lqg_spec(mission)
    if lqg_spec.variant != "digital" or not lqg_spec.noise_as_precision:
        raise DiagramError("the drone controller must be a digital LQG block with noise_as_precision",
                           ports=["lqg"])
    algorithms = _catalog(catalogs, "algorithm").entries
    return {
        "mission": mission_block(mission),
        "lqg": make_lqg_dpi(lqg_spec, "lqg"),
        "feature_extraction": feature_extraction_block(_catalog(catalogs, "feature").entries),
        "sensor": sensor_block(_catalog(catalogs, "sensor").entries),
        "detection_algorithm": algorithm_block(algorithms, "detection"),
        "control_algorithm": algorithm_block(algorithms, "control"),
        "computation_sum": SumDpi("computation_sum", ["control", "detection"], unit="ops/s"),
        "computer": computing_block(_catalog(catalogs, "computer").entries),
        "actuation": actuation_block(_catalog(catalogs, "actuator").entries,
                                     with_speed=mission.required_speed is not None),
        "power_sum": SumDpi("power_sum", ["actuation", "sensor", "computer"], unit="W"),
        "energy": energy_block(),
        "battery": battery_block(_catalog(catalogs, "battery").entries),
        "mass_sum": SumDpi("mass_sum", ["battery", "actuation", "sensor", "computer"],
                           total="weight", scale=settings.GRAVITY, unit="kg", total_unit="N"),
        "cost_sum": SumDpi("cost_sum", ["battery", "actuation", "sensor", "computer"], unit="CHF"),
    }


def drone_edges(with_speed: bool = False) -> List[Edge]:
    edges = [Edge.parse(e) for e in EDGES] + [Edge.parse(e, loop=True) for e in LOOP_EDGES]
    if with_speed:
        edges.append(Edge.parse(SPEED_EDGE))
    return edges


def apply_grids(nodes: Dict[str, Dpi], grids: Mapping[str, PortGrid]) -> Dict[str, Dpi]:
    """Wrap nodes so the listed `node.port` resources are snapped up to their grids."""
    by_node: Dict[str, Dict[str, PortGrid]] = {}
    for ref, grid in grids.items():
        node, _, port = ref.partition(".")
        if node not in nodes or not port:
            raise DiagramError(f"grid for unknown port {ref}", ports=[ref])
        by_node.setdefault(node, {})[port] = grid
    out = dict(nodes)
    for node, node_grids in by_node.items():
        out[node] = GriddedDpi(nodes[node], node_grids)
    return out


def build_drone_diagram(catalogs: Mapping[str, Catalog], mission: MissionSpec,
                        lqg_spec: Optional[LqgBlockSpec] = None,
                        grids: Optional[Mapping[str, PortGrid]] = None) -> CoDesignDiagram:
    """Wire the drone blocks into a diagram with three declared feedback loops."""
    nodes = apply_grids(drone_nodes(catalogs, mission, lqg_spec), grids or {})
    diagram = CoDesignDiagram(
        nodes,
        drone_edges(mission.required_speed is not None),
        EXPOSED_FUN,
        EXPOSED_RES,
        name="drone",
    )
    logger.info("Built drone diagram: %d nodes, %d loops, %s",
                len(diagram.nodes), diagram.loop_count,
                ", ".join(f"{n}={len(d.implementations())}" for n, d in diagram.nodes.items()))
    return diagram


@dataclass
class QueryResult:
    """Minimal exposed resources for one functionality point."""

    fun: Tuple
    answer: Antichain


def mission_point(mission: MissionSpec) -> Tuple[float, float, float]:
    return (mission.mission_time, float(mission.num_missions), mission.system_noise)


def mission_bounds(mission: MissionSpec) -> Dict[str, float]:
    """Exposed-resource upper bounds implied by the mission."""
    if mission.tracking_error_bound is None:
        return {}
    return {"lqg.tracking_error": mission.tracking_error_bound}


def query(diagram: CoDesignDiagram, sweep: Sequence[Sequence[float]],
          bounds: Optional[Mapping[str, float]] = None,
          max_iter: Optional[int] = None) -> List[QueryResult]:
    """Solve the diagram at every functionality point of `sweep`.

    `bounds` caps exposed resources by name; designs exceeding a cap are
    dropped from each answer. Infeasible points give empty antichains.
    """
    caps = []
    for ref, cap in (bounds or {}).items():
        if ref not in diagram.exposed_res:
            raise QueryError(f"bound on {ref}, which is not an exposed resource of {diagram.name}")
        caps.append((diagram.exposed_res.index(ref), cap))

    results = []
    for point in sweep:
        try:
            f = diagram.fun_poset.check(tuple(point))
        except ValueError as e:
            raise QueryError(f"sweep point {list(point)}: {e}")
        answer = solve_loop(diagram, f, max_iter)
        if caps:
            kept = [(p, w) for p, w in answer.items() if all(p[i] <= cap for i, cap in caps)]
            answer = pareto_min(diagram.res_poset, [p for p, _ in kept], [w for _, w in kept])
        if answer.is_empty:
            logger.info("No design provides %s", f)
        results.append(QueryResult(f, answer))
    return results
