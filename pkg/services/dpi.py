"""
Design problems with implementations (DPIs).

A DPI relates a functionality poset to a resource poset through a finite set of
implementations. Each implementation answers "what do you need in order to
provide f?" through `requirement`; `None` means the implementation cannot
provide f at all. Every other query (evaluate, h, h') is derived from that.
"""

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Any, Callable, Dict, Hashable, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from services.posets import (
    Antichain,
    Poset,
    ProductPoset,
    RealsPoset,
    pareto_max,
    pareto_min,
)
from utils.errors import DimensionMismatchError, DpiError, PosetMismatchError
from utils.logger import get_logger

logger = get_logger(__name__)

Point = Tuple[Any, ...]
Requirement = Callable[[Hashable, Point], Optional[Point]]


def ports(names: Sequence[str], posets: Sequence[Poset]) -> ProductPoset:
    """Build the named product poset for a list of ports."""
    return ProductPoset(tuple(posets), tuple(names))


class Dpi(ABC):
    """A monotone feasibility relation between named functionality and resource ports."""

    def __init__(self, name: str, fun: ProductPoset, res: ProductPoset):
        if fun.names is None or res.names is None:
            raise DpiError(f"DPI {name}: every port needs a name")
        self.name = name
        self.fun = fun
        self.res = res

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.name!r}, fun={list(self.fun.names)}, res={list(self.res.names)})"

    @property
    def fun_names(self) -> Tuple[str, ...]:
        return self.fun.names

    @property
    def res_names(self) -> Tuple[str, ...]:
        return self.res.names

    def fun_port(self, port: str) -> Poset:
        return self.fun.components[self._index(self.fun, port)]

    def res_port(self, port: str) -> Poset:
        return self.res.components[self._index(self.res, port)]

    def _index(self, space: ProductPoset, port: str) -> int:
        try:
            return space.names.index(port)
        except ValueError:
            raise DpiError(f"{self.name} has no port {port!r}")

    @abstractmethod
    def implementations(self) -> Sequence[Hashable]:
        """Implementation labels, in a fixed order."""

    @abstractmethod
    def requirement(self, impl: Hashable, f: Point) -> Optional[Point]:
        """Least resource `impl` needs to provide `f`, or None if it cannot."""

    def resource_universe(self, port: str) -> Optional[Tuple]:
        """Finite set of values the resource port can take, when known."""
        return None

    def feasible_requirement(self, impl: Hashable, f: Point) -> Optional[Point]:
        """`requirement` with +inf components treated as infeasible."""
        r = self.requirement(impl, f)
        if r is None:
            return None
        r = self.res.check(r)
        if self.res.is_top(r):
            return None
        return r

    def evaluate(self, f: Any, r: Any) -> List[Hashable]:
        """Implementations that provide `f` using at most `r`."""
        f, r = self.fun.check(f), self.res.check(r)
        out = []
        for impl in self.implementations():
            need = self.feasible_requirement(impl, f)
            if need is not None and self.res.leq(need, r):
                out.append(impl)
        return out

    def h_with_witnesses(self, f: Any) -> Antichain:
        f = self.fun.check(f)
        reqs, labels = [], []
        for impl in self.implementations():
            need = self.feasible_requirement(impl, f)
            if need is not None:
                reqs.append(need)
                labels.append(impl)
        return pareto_min(self.res, reqs, labels)

    def h(self, f: Any) -> Antichain:
        """Minimal antichain of resources sufficient to provide `f`."""
        return self.h_with_witnesses(f)

    def h_prime(self, r: Any, candidates: Optional[Iterable[Any]] = None) -> Antichain:
        """Maximal antichain of functionalities achievable with `r`.

        Args:
            r: The available resources.
            candidates: Functionality points to test. Required unless the DPI
                knows its provided functionalities (catalogs do).

        Returns:
            An antichain with maximal orientation, witnessed by implementations.
        """
        if candidates is None:
            raise DpiError(f"{self.name}: h_prime needs a candidate functionality grid")
        r = self.res.check(r)
        points, labels = [], []
        for f in candidates:
            f = self.fun.check(f)
            feasible = self.evaluate(f, r)
            if feasible:
                points.append(f)
                labels.append(feasible[0])
        return pareto_max(self.fun, points, labels)


class CatalogDpi(Dpi):
    """A finite table of implementations with fixed prov/req points.

    Subclasses may pass no rows and override `load_rows`; the table is then
    built on first use.
    """

    def __init__(self, name: str, fun: ProductPoset, res: ProductPoset,
                 rows: Optional[Iterable[Tuple[Hashable, Any, Any]]] = None):
        super().__init__(name, fun, res)
        self._rows = rows
        self._table: Optional[Tuple[Dict[Hashable, Point], Dict[Hashable, Point]]] = None
        if rows is not None:
            self.table()

    def load_rows(self) -> Iterable[Tuple[Hashable, Any, Any]]:
        return self._rows or ()

    def table(self) -> Tuple[Dict[Hashable, Point], Dict[Hashable, Point]]:
        if self._table is None:
            provs: Dict[Hashable, Point] = {}
            reqs: Dict[Hashable, Point] = {}
            for label, prov, req in self.load_rows():
                if label in provs:
                    raise DpiError(f"{self.name}: duplicate implementation {label!r}")
                try:
                    provs[label] = self.fun.check(prov)
                    reqs[label] = self.res.check(req)
                except DimensionMismatchError as e:
                    raise DimensionMismatchError(f"{self.name}/{label}: {e}", component=e.component)
            self._table = (provs, reqs)
        return self._table

    def implementations(self) -> Sequence[Hashable]:
        return list(self.table()[0])

    def prov(self, impl: Hashable) -> Point:
        return self.table()[0][impl]

    def req(self, impl: Hashable) -> Point:
        return self.table()[1][impl]

    def requirement(self, impl: Hashable, f: Point) -> Optional[Point]:
        provs, reqs = self.table()
        if self.fun.leq(f, provs[impl]):
            return reqs[impl]
        return None

    def resource_universe(self, port: str) -> Optional[Tuple]:
        i = self._index(self.res, port)
        values = {r[i] for r in self.table()[1].values()}
        return tuple(sorted(values, key=self.res.components[i].sort_key))

    def h_prime(self, r: Any, candidates: Optional[Iterable[Any]] = None) -> Antichain:
        if candidates is not None:
            return super().h_prime(r, candidates)
        r = self.res.check(r)
        provs, reqs = self.table()
        labels = [k for k in provs if not self.res.is_top(reqs[k]) and self.res.leq(reqs[k], r)]
        return pareto_max(self.fun, [provs[k] for k in labels], labels)


class MapDpi(Dpi):
    """Implementations whose requirement is computed from the requested functionality.

    `fn(impl, f)` must be monotone in f for each implementation.
    """

    def __init__(self, name: str, fun: ProductPoset, res: ProductPoset,
                 impls: Sequence[Hashable], fn: Requirement,
                 universes: Optional[Mapping[str, Tuple]] = None):
        super().__init__(name, fun, res)
        if not impls:
            raise DpiError(f"{name}: no implementations")
        self._impls = list(impls)
        self._fn = fn
        self._universes = dict(universes or {})

    def implementations(self) -> Sequence[Hashable]:
        return self._impls

    def requirement(self, impl: Hashable, f: Point) -> Optional[Point]:
        return self._fn(impl, f)

    def resource_universe(self, port: str) -> Optional[Tuple]:
        return self._universes.get(port)


class SumDpi(Dpi):
    """Summing junction: provides each addend, requires `scale` times their sum."""

    def __init__(self, name: str, addends: Sequence[str], total: str = "total",
                 scale: float = 1.0, unit: str = "", total_unit: Optional[str] = None):
        if not addends:
            raise DpiError(f"{name}: a summing junction needs at least one addend")
        reals = RealsPoset(unit)
        out = RealsPoset(unit if total_unit is None else total_unit)
        super().__init__(name, ports(addends, [reals] * len(addends)), ports([total], [out]))
        self.scale = float(scale)

    def implementations(self) -> Sequence[Hashable]:
        return ["sum"]

    def requirement(self, impl: Hashable, f: Point) -> Optional[Point]:
        return (self.scale * math.fsum(f),)


@dataclass(frozen=True)
class PortGrid:
    """Ascending finite grid that resource values are rounded up to."""

    values: Tuple[float, ...]

    def __post_init__(self):
        values = tuple(float(v) for v in self.values)
        if not values:
            raise DpiError("a port grid needs at least one value")
        if any(b <= a for a, b in zip(values, values[1:])):
            raise DpiError(f"port grid must be strictly ascending: {values}")
        object.__setattr__(self, "values", values)

    @classmethod
    def linear(cls, lo: float, hi: float, n: int) -> "PortGrid":
        return cls(tuple(np.linspace(lo, hi, n)))

    @classmethod
    def log(cls, lo: float, hi: float, n: int) -> "PortGrid":
        if lo <= 0:
            raise DpiError("log grids need a positive lower bound")
        return cls(tuple(np.geomspace(lo, hi, n)))

    def snap_up(self, x: float) -> float:
        i = int(np.searchsorted(self.values, x, side="left"))
        return self.values[i] if i < len(self.values) else math.inf


class GriddedDpi(Dpi):
    """Wraps a DPI and rounds its requirements up to per-port grids."""

    def __init__(self, inner: Dpi, grids: Mapping[str, PortGrid]):
        super().__init__(inner.name, inner.fun, inner.res)
        for port in grids:
            self._index(self.res, port)
        self.inner = inner
        self.grids = dict(grids)
        self._slots = [(i, self.grids.get(n)) for i, n in enumerate(self.res.names)]

    def implementations(self) -> Sequence[Hashable]:
        return self.inner.implementations()

    def requirement(self, impl: Hashable, f: Point) -> Optional[Point]:
        r = self.inner.requirement(impl, f)
        if r is None:
            return None
        return tuple(grid.snap_up(r[i]) if grid is not None else r[i] for i, grid in self._slots)

    def resource_universe(self, port: str) -> Optional[Tuple]:
        if port in self.grids:
            return self.grids[port].values
        return self.inner.resource_universe(port)


def identity_dpi(poset: Poset, elements: Iterable[Any], name: str = "identity", port: str = "x") -> CatalogDpi:
    """One implementation per element, each providing and requiring that element."""
    space = ports([port], [poset])
    return CatalogDpi(name, space, space, [(repr(e), (e,), (e,)) for e in elements])


def unit_dpi(name: str = "unit") -> CatalogDpi:
    """No functionality, no resources, one implementation."""
    empty = ProductPoset((), ())
    return CatalogDpi(name, empty, empty, [("unit", (), ())])


class SeriesDpi(Dpi):
    """`upstream` provides what `downstream` requires."""

    def __init__(self, upstream: Dpi, downstream: Dpi, name: Optional[str] = None):
        super().__init__(name or f"{upstream.name}*{downstream.name}", downstream.fun, upstream.res)
        self.upstream = upstream
        self.downstream = downstream
        self._impls = [(i, j) for i in upstream.implementations() for j in downstream.implementations()]

    def implementations(self) -> Sequence[Hashable]:
        return self._impls

    def requirement(self, impl: Hashable, f: Point) -> Optional[Point]:
        i, j = impl
        interface = self.downstream.feasible_requirement(j, f)
        if interface is None:
            return None
        return self.upstream.feasible_requirement(i, interface)

    def resource_universe(self, port: str) -> Optional[Tuple]:
        return self.upstream.resource_universe(port)


def _check_interface(upstream: Dpi, downstream: Dpi) -> None:
    if upstream.fun.components != downstream.res.components:
        raise PosetMismatchError(
            f"series interface mismatch: {downstream.name} requires {downstream.res.components}, "
            f"{upstream.name} provides {upstream.fun.components}"
        )


def series(upstream: Dpi, downstream: Dpi, name: Optional[str] = None) -> Dpi:
    """Compose two DPIs so that `upstream` provides what `downstream` requires.

    The composite provides `downstream`'s functionality and requires
    `upstream`'s resources; its implementations are the pairs (i, j). Two
    catalogs compose to a catalog of the compatible pairs.
    """
    _check_interface(upstream, downstream)
    if isinstance(upstream, CatalogDpi) and isinstance(downstream, CatalogDpi):
        rows = []
        for i in upstream.implementations():
            for j in downstream.implementations():
                if upstream.fun.leq(downstream.req(j), upstream.prov(i)):
                    rows.append(((i, j), downstream.prov(j), upstream.req(i)))
        return CatalogDpi(name or f"{upstream.name}*{downstream.name}", downstream.fun, upstream.res, rows)
    return SeriesDpi(upstream, downstream, name)


def _prefixed(a: Dpi, b: Dpi, space_a: ProductPoset, space_b: ProductPoset) -> ProductPoset:
    names_a, names_b = list(space_a.names), list(space_b.names)
    if set(names_a) & set(names_b):
        names_a = [f"{a.name}.{n}" for n in names_a]
        names_b = [f"{b.name}.{n}" for n in names_b]
    return ports(names_a + names_b, space_a.components + space_b.components)


class ParallelDpi(Dpi):
    """Side-by-side composition; ports are paired, never summed."""

    def __init__(self, a: Dpi, b: Dpi, name: Optional[str] = None):
        super().__init__(name or f"{a.name}|{b.name}", _prefixed(a, b, a.fun, b.fun), _prefixed(a, b, a.res, b.res))
        self.a = a
        self.b = b
        self._split_fun = a.fun.arity
        self._split_res = a.res.arity
        self._impls = [(i, j) for i in a.implementations() for j in b.implementations()]

    def implementations(self) -> Sequence[Hashable]:
        return self._impls

    def requirement(self, impl: Hashable, f: Point) -> Optional[Point]:
        i, j = impl
        ra = self.a.feasible_requirement(i, tuple(f[:self._split_fun]))
        if ra is None:
            return None
        rb = self.b.feasible_requirement(j, tuple(f[self._split_fun:]))
        if rb is None:
            return None
        return ra + rb

    def resource_universe(self, port: str) -> Optional[Tuple]:
        i = self._index(self.res, port)
        if i < self._split_res:
            return self.a.resource_universe(self.a.res_names[i])
        return self.b.resource_universe(self.b.res_names[i - self._split_res])


def parallel(a: Dpi, b: Dpi, name: Optional[str] = None) -> Dpi:
    """Product composition: implementations are pairs, ports are concatenated."""
    if isinstance(a, CatalogDpi) and isinstance(b, CatalogDpi):
        fun = _prefixed(a, b, a.fun, b.fun)
        res = _prefixed(a, b, a.res, b.res)
        rows = [
            ((i, j), a.prov(i) + b.prov(j), a.req(i) + b.req(j))
            for i in a.implementations()
            for j in b.implementations()
        ]
        return CatalogDpi(name or f"{a.name}|{b.name}", fun, res, rows)
    return ParallelDpi(a, b, name)
