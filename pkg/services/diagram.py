"""
Co-design diagrams and the Kleene fixed-point solver.

An edge `provider.fun_port -> consumer.res_port` states that what the consumer
requires on `res_port` must be provided by the provider on `fun_port`. Edges
that close a cycle are loop edges; their values are carried as the loop state
of the Kleene iteration, everything else is resolved by one pass over the
acyclic remainder (consumers before providers).
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import product as cartesian
from typing import Any, Dict, Hashable, Iterable, List, Mapping, Optional, Sequence, Tuple

from services.dpi import Dpi
from services.posets import Antichain, ProductPoset, antichain_leq, pareto_max, pareto_min
from utils.errors import BruteForceLimitError, ConvergenceError, DiagramError, DpiError
from utils.logger import get_logger
from utils.settings import settings

logger = get_logger(__name__)

Witness = Tuple[Tuple[str, Hashable], ...]


@dataclass(frozen=True)
class Edge:
    provider: str
    fun_port: str
    consumer: str
    res_port: str
    loop: bool = False

    @classmethod
    def parse(cls, text: str, loop: bool = False) -> "Edge":
        """Parse `node.port -> node.port`."""
        try:
            left, right = (side.strip() for side in text.split("->"))
            provider, fun_port = left.split(".", 1)
            consumer, res_port = right.split(".", 1)
        except ValueError:
            raise DiagramError(f"cannot parse edge {text!r}; expected 'node.port -> node.port'")
        return cls(provider.strip(), fun_port.strip(), consumer.strip(), res_port.strip(), loop)

    @property
    def source(self) -> str:
        return f"{self.provider}.{self.fun_port}"

    @property
    def target(self) -> str:
        return f"{self.consumer}.{self.res_port}"

    def __str__(self) -> str:
        return f"{self.source} -> {self.target}"


def _split(ref: str) -> Tuple[str, str]:
    if "." not in ref:
        raise DiagramError(f"port reference {ref!r} must look like 'node.port'", ports=[ref])
    node, port = ref.split(".", 1)
    return node, port


@dataclass
class KleeneResult:
    """Outcome of one `kleene_solve` call."""

    answer: Antichain
    iterates: List[Antichain]
    iterations: int
    chain_bound: Optional[int]

    @property
    def is_ascending(self) -> bool:
        return all(antichain_leq(a, b) for a, b in zip(self.iterates, self.iterates[1:]))


class CoDesignDiagram:
    """Named DPIs wired by co-design constraints.

    Args:
        nodes: DPIs by node name; insertion order is the tie-break order.
        edges: Co-design constraints. Edges flagged `loop` are the declared
            feedback edges; when none is flagged, back edges are detected.
        exposed_fun: `node.port` functionality ports left open, in query order.
        exposed_res: `node.port` resource ports left open, in answer order.
    """

    def __init__(self, nodes: Mapping[str, Dpi], edges: Sequence[Edge],
                 exposed_fun: Sequence[str], exposed_res: Sequence[str], name: str = "diagram"):
        self.name = name
        self.nodes: Dict[str, Dpi] = dict(nodes)
        self.exposed_fun = tuple(exposed_fun)
        self.exposed_res = tuple(exposed_res)
        self._validate_ports(edges)
        if not any(e.loop for e in edges):
            edges = self._detect_loops(edges)
        self.edges = tuple(e for e in edges if not e.loop)
        self.loop_edges = tuple(e for e in edges if e.loop)
        self.order = self._topological_order()
        self._plan()

    @property
    def loop_count(self) -> int:
        return len(self.loop_edges)

    def __repr__(self) -> str:
        return f"CoDesignDiagram({self.name!r}, nodes={len(self.nodes)}, loops={self.loop_count})"

    # ----- validation -----

    def _validate_ports(self, edges: Sequence[Edge]) -> None:
        fun_uses: Dict[str, List[str]] = {}
        res_uses: Dict[str, List[str]] = {}
        for ref in self.exposed_fun:
            node, port = self._lookup(ref)
            if port not in self.nodes[node].fun_names:
                raise DiagramError(f"exposed functionality {ref} is not a functionality port", ports=[ref])
            fun_uses.setdefault(ref, []).append("exposed")
        for ref in self.exposed_res:
            node, port = self._lookup(ref)
            if port not in self.nodes[node].res_names:
                raise DiagramError(f"exposed resource {ref} is not a resource port", ports=[ref])
            res_uses.setdefault(ref, []).append("exposed")
        for e in edges:
            for ref in (e.source, e.target):
                self._lookup(ref)
            if e.fun_port not in self.nodes[e.provider].fun_names:
                raise DiagramError(f"{e.source} is not a functionality port (edge {e})", ports=[e.source])
            if e.res_port not in self.nodes[e.consumer].res_names:
                raise DiagramError(f"{e.target} is not a resource port (edge {e})", ports=[e.target])
            provided = self.nodes[e.provider].fun_port(e.fun_port)
            required = self.nodes[e.consumer].res_port(e.res_port)
            if provided != required:
                raise DiagramError(
                    f"edge {e} connects different posets: {provided!r} vs {required!r}",
                    ports=[e.source, e.target],
                )
            fun_uses.setdefault(e.source, []).append(str(e))
            res_uses.setdefault(e.target, []).append(str(e))

        dangling: List[str] = []
        for name, dpi in self.nodes.items():
            for names, uses in ((dpi.fun_names, fun_uses), (dpi.res_names, res_uses)):
                for port in names:
                    ref = f"{name}.{port}"
                    used = uses.get(ref, [])
                    if not used:
                        dangling.append(ref)
                    if len(used) > 1:
                        raise DiagramError(f"port {ref} is used {len(used)} times: {', '.join(used)}", ports=[ref])
        if dangling:
            raise DiagramError(
                f"dangling port{'s' if len(dangling) > 1 else ''} {', '.join(dangling)}: "
                "neither exposed nor connected",
                ports=dangling,
            )

    def _lookup(self, ref: str) -> Tuple[str, str]:
        node, port = _split(ref)
        if node not in self.nodes:
            raise DiagramError(f"unknown node {node!r} in {ref}", ports=[ref])
        dpi = self.nodes[node]
        if port not in dpi.fun_names and port not in dpi.res_names:
            raise DiagramError(f"node {node} has no port {port!r}", ports=[ref])
        return node, port

    def _dependencies(self, edges: Iterable[Edge]) -> Dict[str, List[Edge]]:
        # consumer must be evaluated before provider
        graph: Dict[str, List[Edge]] = {name: [] for name in self.nodes}
        for e in edges:
            graph[e.consumer].append(e)
        return graph

    def _detect_loops(self, edges: Sequence[Edge]) -> List[Edge]:
        graph = self._dependencies(edges)
        state: Dict[str, int] = {}
        back: set = set()

        def visit(node: str) -> None:
            state[node] = 1
            for e in graph[node]:
                mark = state.get(e.provider, 0)
                if mark == 1:
                    back.add(e)
                elif mark == 0:
                    visit(e.provider)
            state[node] = 2

        for node in self.nodes:
            if state.get(node, 0) == 0:
                visit(node)
        if back:
            logger.debug("Detected loop edges: %s", ", ".join(str(e) for e in edges if e in back))
        return [Edge(e.provider, e.fun_port, e.consumer, e.res_port, loop=e in back) for e in edges]

    def _topological_order(self) -> Tuple[str, ...]:
        indegree = {name: 0 for name in self.nodes}
        for e in self.edges:
            indegree[e.provider] += 1
        graph = self._dependencies(self.edges)
        order: List[str] = []
        ready = [n for n in self.nodes if indegree[n] == 0]
        while ready:
            node = ready.pop(0)
            order.append(node)
            for e in graph[node]:
                indegree[e.provider] -= 1
                if indegree[e.provider] == 0:
                    ready.append(e.provider)
            ready.sort(key=list(self.nodes).index)
        if len(order) != len(self.nodes):
            stuck = [n for n in self.nodes if n not in order]
            raise DiagramError(
                f"diagram still has a cycle after removing loop edges through {', '.join(stuck)}",
                ports=stuck,
            )
        return tuple(order)

    # ----- evaluation plan -----

    def _plan(self) -> None:
        n_edges = len(self.edges)
        n_res = len(self.exposed_res)
        res_index = {ref: i for i, ref in enumerate(self.exposed_res)}
        fun_index = {ref: i for i, ref in enumerate(self.exposed_fun)}
        loop_by_source = {e.source: i for i, e in enumerate(self.loop_edges)}
        loop_by_target = {e.target: i for i, e in enumerate(self.loop_edges)}
        edge_by_source = {e.source: i for i, e in enumerate(self.edges)}
        edge_by_target = {e.target: i for i, e in enumerate(self.edges)}

        self.fun_poset = ProductPoset(
            tuple(self._port_poset(ref, "fun") for ref in self.exposed_fun), self.exposed_fun
        )
        self.res_poset = ProductPoset(
            tuple(self._port_poset(ref, "res") for ref in self.exposed_res), self.exposed_res
        )
        self.loop_poset = ProductPoset(
            tuple(self._port_poset(e.target, "res") for e in self.loop_edges),
            tuple(str(e) for e in self.loop_edges),
        )
        self.state_poset = ProductPoset(
            self.res_poset.components + self.loop_poset.components,
            self.res_poset.names + self.loop_poset.names,
        )

        # slots: non-loop edge values, then exposed resources, then loop requirements
        slot_posets = [self._port_poset(e.target, "res") for e in self.edges]
        slot_posets += list(self.res_poset.components) + list(self.loop_poset.components)
        self._n_slots = len(slot_posets)
        self._r_slots = list(range(n_edges, n_edges + n_res))
        self._y_slots = list(range(n_edges + n_res, self._n_slots))

        self._inputs: Dict[str, List[Tuple[str, int]]] = {}
        self._outputs: Dict[str, List[int]] = {}
        for name in self.order:
            dpi = self.nodes[name]
            sources = []
            for port in dpi.fun_names:
                ref = f"{name}.{port}"
                if ref in fun_index:
                    sources.append(("f", fun_index[ref]))
                elif ref in loop_by_source:
                    sources.append(("x", loop_by_source[ref]))
                else:
                    sources.append(("s", edge_by_source[ref]))
            sinks = []
            for port in dpi.res_names:
                ref = f"{name}.{port}"
                if ref in res_index:
                    sinks.append(n_edges + res_index[ref])
                elif ref in loop_by_target:
                    sinks.append(n_edges + n_res + loop_by_target[ref])
                else:
                    sinks.append(edge_by_target[ref])
            self._inputs[name] = sources
            self._outputs[name] = sinks

        # after each stage, the slots that still influence later choices
        self._stage_slots: List[List[int]] = []
        self._stage_posets: List[ProductPoset] = []
        done: set = set()
        filled: set = set()
        for name in self.order:
            done.add(name)
            filled.update(self._outputs[name])
            open_slots = [
                s for s in sorted(filled)
                if s >= n_edges or self.edges[s].provider not in done
            ]
            self._stage_slots.append(open_slots)
            self._stage_posets.append(ProductPoset(tuple(slot_posets[s] for s in open_slots)))

    def _port_poset(self, ref: str, side: str):
        node, port = _split(ref)
        dpi = self.nodes[node]
        return dpi.fun_port(port) if side == "fun" else dpi.res_port(port)

    def _port_universe(self, ref: str) -> Optional[Tuple]:
        node, port = _split(ref)
        return self.nodes[node].resource_universe(port)

    def chain_bound(self) -> Optional[int]:
        """Longest-chain bound on the number of Kleene iterations, when all state ports are finite."""
        refs = list(self.exposed_res) + [e.target for e in self.loop_edges]
        size = 1
        for ref in refs:
            universe = self._port_universe(ref)
            if universe is None:
                return None
            size *= len(universe) + 1
        return size + 1

    # ----- one pass over the acyclic remainder -----

    def frontier(self, f: Tuple, x: Tuple,
                 fixed: Optional[Mapping[str, Hashable]] = None) -> List[Tuple[Tuple, Tuple, Witness]]:
        """All minimal (exposed resources, loop requirements) given functionality f and loop values x.

        With `fixed`, each node uses only the named implementation.
        """
        states: List[Tuple[Tuple, Witness]] = [((None,) * self._n_slots, ())]
        for stage, name in enumerate(self.order):
            dpi = self.nodes[name]
            impls = [fixed[name]] if fixed is not None else dpi.implementations()
            sources = self._inputs[name]
            sinks = self._outputs[name]
            grown: List[Tuple[Tuple, Witness]] = []
            for slots, witness in states:
                fvec = tuple(
                    f[i] if kind == "f" else x[i] if kind == "x" else slots[i]
                    for kind, i in sources
                )
                for impl in impls:
                    need = dpi.feasible_requirement(impl, fvec)
                    if need is None:
                        continue
                    values = list(slots)
                    for sink, v in zip(sinks, need):
                        values[sink] = v
                    grown.append((tuple(values), witness + ((name, impl),)))
            if not grown:
                return []
            if len(grown) > 1:
                grown = self._prune(stage, grown)
            states = grown
        return [
            (tuple(s[i] for i in self._r_slots), tuple(s[i] for i in self._y_slots), w)
            for s, w in states
        ]

    def _prune(self, stage: int, states: List[Tuple[Tuple, Witness]]) -> List[Tuple[Tuple, Witness]]:
        open_slots = self._stage_slots[stage]
        by_witness = {w: s for s, w in states}
        front = pareto_min(
            self._stage_posets[stage],
            [tuple(s[i] for i in open_slots) for s, _ in states],
            [w for _, w in states],
        )
        return [(by_witness[w], w) for w in front.witnesses]

    def h_state(self, f: Tuple, x: Tuple) -> Antichain:
        """Minimal (exposed resources, loop requirements) as an antichain over the state poset."""
        rows = self.frontier(f, x)
        return pareto_min(self.state_poset, [r + y for r, y, _ in rows], [w for _, _, w in rows])


def kleene_solve(diagram: CoDesignDiagram, f: Any, max_iter: Optional[int] = None,
                 workers: Optional[int] = None) -> KleeneResult:
    """Least fixed point of the diagram's antichain map, iterated from the bottom state.

    Args:
        diagram: A validated co-design diagram.
        f: Exposed functionality point.
        max_iter: Iteration budget; defaults to `settings.MAX_ITER`.
        workers: Threads used to evaluate the frontier for distinct loop values.

    Returns:
        The minimal exposed-resource antichain (with witnesses) and the full iterate chain.

    Raises:
        ConvergenceError: no fixed point within `max_iter` iterations.
    """
    max_iter = settings.MAX_ITER if max_iter is None else max_iter
    workers = settings.WORKERS if workers is None else workers
    f = diagram.fun_poset.check(f)
    space = diagram.state_poset
    n_res = diagram.res_poset.arity
    try:
        start = space.bottom()
    except DpiError as e:
        raise DiagramError(f"loop and resource posets need a bottom element: {e}")

    current = Antichain(space, (start,), "minimal", ((),))
    iterates = [current]
    cache: Dict[Tuple, Antichain] = {}
    pool = ThreadPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        for k in range(1, max_iter + 1):
            loops = list(dict.fromkeys(s[n_res:] for s in current.points))
            missing = [x for x in loops if x not in cache]
            if pool is not None and len(missing) > 1:
                for x, front in zip(missing, pool.map(lambda x: diagram.h_state(f, x), missing)):
                    cache[x] = front
            else:
                for x in missing:
                    cache[x] = diagram.h_state(f, x)

            points, witnesses = [], []
            for s in current.points:
                for h, w in cache[s[n_res:]].items():
                    points.append(space.join(s, h))
                    witnesses.append(w)
            following = pareto_min(space, points, witnesses)
            iterates.append(following)
            logger.debug("Kleene iterate %d: %d points", k, len(following))
            if following == current:
                answer = pareto_min(
                    diagram.res_poset,
                    [s[:n_res] for s in following.points],
                    list(following.witnesses),
                )
                logger.info("Kleene iteration converged after %d iterations with %d minimal designs",
                            k, len(answer))
                return KleeneResult(answer, iterates, k, diagram.chain_bound())
            current = following
    finally:
        if pool is not None:
            pool.shutdown()
    raise ConvergenceError(
        f"no fixed point after {max_iter} iterations; grids may be too fine or a chain is infinite",
        last_iterates=iterates[-2:],
    )


def solve_loop(diagram: CoDesignDiagram, f: Any, max_iter: Optional[int] = None,
               workers: Optional[int] = None) -> Antichain:
    """Minimal exposed resources that provide `f`; empty when infeasible."""
    return kleene_solve(diagram, f, max_iter, workers).answer


def evaluate_assignment(diagram: CoDesignDiagram, f: Any, assignment: Mapping[str, Hashable],
                        max_iter: Optional[int] = None) -> Optional[Tuple[Tuple, Tuple]]:
    """Exposed resources and least loop values for one implementation per node.

    Returns None when the assignment cannot provide `f`.
    """
    max_iter = settings.MAX_ITER if max_iter is None else max_iter
    f = diagram.fun_poset.check(f)
    loops = diagram.loop_poset
    x = loops.bottom()
    for _ in range(max_iter):
        rows = diagram.frontier(f, x, fixed=assignment)
        if not rows:
            return None
        r, y, _ = rows[0]
        if loops.leq(y, x):
            return r, x
        x = loops.join(x, y)
    raise ConvergenceError(
        f"loop values of assignment {dict(assignment)} did not settle after {max_iter} iterations"
    )


def verify_assignment(diagram: CoDesignDiagram, f: Any, assignment: Mapping[str, Hashable],
                      x: Tuple) -> Optional[Tuple]:
    """Re-evaluate every node independently and check each co-design constraint.

    Returns the exposed resources when every constraint holds, else None.
    """
    f = diagram.fun_poset.check(f)
    provided: Dict[str, Any] = {}
    required: Dict[str, Any] = {}
    for ref, v in zip(diagram.exposed_fun, f):
        provided[ref] = v
    for e, v in zip(diagram.loop_edges, x):
        provided[e.source] = v
    for name in diagram.order:
        dpi = diagram.nodes[name]
        for e in diagram.edges:
            if e.provider == name:
                provided[e.source] = required[e.target]
        fvec = tuple(provided[f"{name}.{p}"] for p in dpi.fun_names)
        need = dpi.feasible_requirement(assignment[name], fvec)
        if need is None:
            return None
        for port, v in zip(dpi.res_names, need):
            required[f"{name}.{port}"] = v
    for e in diagram.edges + diagram.loop_edges:
        poset = diagram.nodes[e.consumer].res_port(e.res_port)
        if not poset.leq(required[e.target], provided[e.source]):
            return None
    return tuple(required[ref] for ref in diagram.exposed_res)


def brute_force_solve(diagram: CoDesignDiagram, f: Any, limit: Optional[int] = None,
                      max_iter: Optional[int] = None) -> Antichain:
    """Enumerate every implementation assignment and keep the minimal exposed resources."""
    limit = settings.MAX_BRUTE_FORCE if limit is None else limit
    names = list(diagram.nodes)
    choices = [list(diagram.nodes[n].implementations()) for n in names]
    total = math.prod(len(c) for c in choices)
    if total > limit:
        raise BruteForceLimitError(f"{total} implementation assignments exceed the limit of {limit}")
    f = diagram.fun_poset.check(f)
    points, witnesses = [], []
    for combo in cartesian(*choices):
        assignment = dict(zip(names, combo))
        outcome = evaluate_assignment(diagram, f, assignment, max_iter)
        if outcome is None:
            continue
        r, x = outcome
        checked = verify_assignment(diagram, f, assignment, x)
        if checked is None:
            continue
        points.append(checked)
        witnesses.append(tuple((n, assignment[n]) for n in diagram.order))
    logger.debug("Brute force checked %d assignments, %d feasible", total, len(points))
    return pareto_min(diagram.res_poset, points, witnesses)


def solve_dual(diagram: CoDesignDiagram, r: Any, candidates: Iterable[Any],
               max_iter: Optional[int] = None) -> Antichain:
    """Maximal candidate functionalities whose minimal resources fit within `r`."""
    r = diagram.res_poset.check(r)
    points, witnesses = [], []
    for f in candidates:
        answer = solve_loop(diagram, f, max_iter)
        for point, witness in answer.items():
            if diagram.res_poset.leq(point, r):
                points.append(diagram.fun_poset.check(f))
                witnesses.append(witness)
                break
    return pareto_max(diagram.fun_poset, points, witnesses)
