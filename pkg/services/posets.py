"""
Posets and antichains.

Every carrier used by the co-design solver is a `Poset`: extended nonnegative
reals, finite labeled sets, products, opposites and Hermitian matrices under the
Loewner order. Antichains are the answer type of every query; they are stored in
a canonical order so that two antichains with the same points compare equal.
"""

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from itertools import product as cartesian
from typing import Any, Hashable, Iterable, List, Literal, Optional, Sequence, Tuple

import numpy as np

from utils.errors import DimensionMismatchError, DpiError, PosetMismatchError
from utils.settings import settings

Orientation = Literal["minimal", "maximal"]


class Poset(ABC):
    """A set with a decidable partial order."""

    @abstractmethod
    def check(self, x: Any) -> Any:
        """Validate `x` and return its canonical representation."""

    @abstractmethod
    def leq(self, a: Any, b: Any) -> bool:
        """True iff a ≼ b."""

    @abstractmethod
    def sort_key(self, x: Any) -> Tuple:
        """A key whose lexicographic order is a linear extension of ≼."""

    def equal(self, a: Any, b: Any) -> bool:
        return self.leq(a, b) and self.leq(b, a)

    def bottom(self) -> Any:
        raise DpiError(f"{self!r} has no bottom element")

    def top(self) -> Any:
        raise DpiError(f"{self!r} has no top element")

    def join(self, a: Any, b: Any) -> Any:
        raise DpiError(f"{self!r} has no joins")

    def meet(self, a: Any, b: Any) -> Any:
        raise DpiError(f"{self!r} has no meets")

    def is_top(self, x: Any) -> bool:
        return False

    def universe(self) -> Optional[Tuple]:
        """All elements, when the carrier is finite."""
        return None


@dataclass(frozen=True)
class RealsPoset(Poset):
    """Extended nonnegative reals [0, +∞]; +∞ is the "infeasible" top element."""

    unit: str = ""

    def check(self, x: Any) -> float:
        try:
            value = float(x)
        except (TypeError, ValueError):
            raise DimensionMismatchError(f"{x!r} is not a real number")
        if math.isnan(value) or value < 0.0:
            raise DimensionMismatchError(f"{x!r} is outside [0, +inf]")
        return value

    def leq(self, a: float, b: float) -> bool:
        return a <= b

    def sort_key(self, x: float) -> Tuple:
        return (x,)

    def bottom(self) -> float:
        return 0.0

    def top(self) -> float:
        return math.inf

    def join(self, a: float, b: float) -> float:
        return max(a, b)

    def meet(self, a: float, b: float) -> float:
        return min(a, b)

    def is_top(self, x: float) -> bool:
        return math.isinf(x)


@dataclass(frozen=True)
class FinitePoset(Poset):
    """A finite labeled set; `relations` lists generating pairs (a, b) with a ≼ b."""

    elements: Tuple[str, ...]
    relations: Tuple[Tuple[str, str], ...] = ()
    _closure: frozenset = field(default=frozenset(), init=False, repr=False, compare=False)
    _rank: Tuple = field(default=(), init=False, repr=False, compare=False)

    def __post_init__(self):
        names = tuple(self.elements)
        object.__setattr__(self, "relations", tuple((a, b) for a, b in self.relations))
        if len(set(names)) != len(names):
            raise DpiError(f"duplicate labels in finite poset {names}")
        index = {name: i for i, name in enumerate(names)}
        for a, b in self.relations:
            if a not in index or b not in index:
                raise DimensionMismatchError(f"relation ({a}, {b}) names an unknown element")
        n = len(names)
        reach = np.eye(n, dtype=bool)
        for a, b in self.relations:
            reach[index[a], index[b]] = True
        # Warshall closure
        for k in range(n):
            reach |= np.outer(reach[:, k], reach[k, :])
        for i in range(n):
            for j in range(i + 1, n):
                if reach[i, j] and reach[j, i]:
                    raise DpiError(f"relation is not antisymmetric on {names[i]}, {names[j]}")
        closure = frozenset(
            (names[i], names[j]) for i in range(n) for j in range(n) if reach[i, j]
        )
        # rank = number of strict predecessors gives a linear extension
        rank = tuple(int(reach[:, j].sum()) - 1 for j in range(n))
        object.__setattr__(self, "elements", names)
        object.__setattr__(self, "_closure", closure)
        object.__setattr__(self, "_rank", rank)

    def check(self, x: Any) -> str:
        if x not in self.elements:
            raise DimensionMismatchError(f"{x!r} is not an element of {self.elements}")
        return x

    def leq(self, a: str, b: str) -> bool:
        return (a, b) in self._closure

    def sort_key(self, x: str) -> Tuple:
        i = self.elements.index(x)
        return (self._rank[i], i)

    def _extreme(self, candidates: List[str], upper: bool) -> str:
        for c in candidates:
            if all(self.leq(d, c) if upper else self.leq(c, d) for d in candidates):
                return c
        raise DpiError(f"no {'least upper' if upper else 'greatest lower'} bound in {self!r}")

    def bottom(self) -> str:
        return self._extreme(list(self.elements), upper=False)

    def top(self) -> str:
        return self._extreme(list(self.elements), upper=True)

    def join(self, a: str, b: str) -> str:
        uppers = [c for c in self.elements if self.leq(a, c) and self.leq(b, c)]
        if not uppers:
            raise DpiError(f"{a} and {b} have no upper bound")
        return self._extreme(uppers, upper=False)

    def meet(self, a: str, b: str) -> str:
        lowers = [c for c in self.elements if self.leq(c, a) and self.leq(c, b)]
        if not lowers:
            raise DpiError(f"{a} and {b} have no lower bound")
        return self._extreme(lowers, upper=True)

    def universe(self) -> Tuple[str, ...]:
        return self.elements


@dataclass(frozen=True)
class OppositePoset(Poset):
    """Same elements as `base`, reversed order."""

    base: Poset

    def check(self, x: Any) -> Any:
        return self.base.check(x)

    def leq(self, a: Any, b: Any) -> bool:
        return self.base.leq(b, a)

    def sort_key(self, x: Any) -> Tuple:
        return tuple(_negate(k) for k in self.base.sort_key(x))

    def bottom(self) -> Any:
        return self.base.top()

    def top(self) -> Any:
        return self.base.bottom()

    def join(self, a: Any, b: Any) -> Any:
        return self.base.meet(a, b)

    def meet(self, a: Any, b: Any) -> Any:
        return self.base.join(a, b)

    def is_top(self, x: Any) -> bool:
        return False

    def universe(self) -> Optional[Tuple]:
        return self.base.universe()


def _negate(k: Any) -> Any:
    if isinstance(k, tuple):
        return tuple(_negate(v) for v in k)
    return -k


@dataclass(frozen=True)
class ProductPoset(Poset):
    """Cartesian product ordered componentwise; elements are tuples."""

    components: Tuple[Poset, ...]
    names: Optional[Tuple[str, ...]] = None

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))
        if self.names is not None:
            names = tuple(self.names)
            if len(names) != len(self.components):
                raise DimensionMismatchError("product poset needs one name per component")
            object.__setattr__(self, "names", names)

    @property
    def arity(self) -> int:
        return len(self.components)

    def label(self, i: int) -> str:
        return self.names[i] if self.names else str(i)

    def check(self, x: Any) -> Tuple:
        if self.arity == 1 and not isinstance(x, (tuple, list)):
            x = (x,)
        if isinstance(x, np.ndarray):
            x = tuple(x.tolist())
        if not isinstance(x, (tuple, list)):
            raise DimensionMismatchError(f"{x!r} is not a tuple of {self.arity} components")
        if len(x) != self.arity:
            raise DimensionMismatchError(
                f"expected {self.arity} components, got {len(x)}", component=self.arity
            )
        out = []
        for i, (poset, value) in enumerate(zip(self.components, x)):
            try:
                out.append(poset.check(value))
            except DimensionMismatchError as e:
                raise DimensionMismatchError(f"component {self.label(i)}: {e}", component=self.label(i))
        return tuple(out)

    def leq(self, a: Tuple, b: Tuple) -> bool:
        if len(a) != self.arity or len(b) != self.arity:
            raise DimensionMismatchError(
                f"expected {self.arity} components, got {len(a)} and {len(b)}", component=self.arity
            )
        return all(p.leq(x, y) for p, x, y in zip(self.components, a, b))

    def sort_key(self, x: Tuple) -> Tuple:
        return tuple(p.sort_key(v) for p, v in zip(self.components, x))

    def bottom(self) -> Tuple:
        return tuple(p.bottom() for p in self.components)

    def top(self) -> Tuple:
        return tuple(p.top() for p in self.components)

    def join(self, a: Tuple, b: Tuple) -> Tuple:
        return tuple(p.join(x, y) for p, x, y in zip(self.components, a, b))

    def meet(self, a: Tuple, b: Tuple) -> Tuple:
        return tuple(p.meet(x, y) for p, x, y in zip(self.components, a, b))

    def is_top(self, x: Tuple) -> bool:
        return any(p.is_top(v) for p, v in zip(self.components, x))

    def universe(self) -> Optional[Tuple]:
        parts = [p.universe() for p in self.components]
        if any(u is None for u in parts):
            return None
        return tuple(cartesian(*parts))

    def is_real_vector(self) -> bool:
        return all(isinstance(p, RealsPoset) for p in self.components)


def loewner_tolerance(*matrices: np.ndarray, scale: Optional[float] = None) -> float:
    """ε_psd = scale · (1 + max |entry|) over the matrices being compared."""
    scale = settings.EPS_PSD_SCALE if scale is None else scale
    largest = max((float(np.max(np.abs(m))) for m in matrices if np.size(m)), default=0.0)
    return scale * (1.0 + largest)


@dataclass(frozen=True)
class HermitianPoint:
    """An n×n Hermitian matrix together with its comparison tolerance."""

    entries: np.ndarray
    eps: Optional[float] = None

    def __post_init__(self):
        m = np.atleast_2d(np.asarray(self.entries))
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionMismatchError(f"Hermitian point must be square, got shape {m.shape}")
        eps = loewner_tolerance(m) if self.eps is None else float(self.eps)
        if np.max(np.abs(m - m.conj().T), initial=0.0) > eps:
            raise DimensionMismatchError("matrix is not Hermitian within tolerance")
        m = (m + m.conj().T) / 2
        m.setflags(write=False)
        object.__setattr__(self, "entries", m)
        object.__setattr__(self, "eps", eps)

    @property
    def order(self) -> int:
        return self.entries.shape[0]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, HermitianPoint):
            return NotImplemented
        return self.entries.shape == other.entries.shape and np.array_equal(self.entries, other.entries)

    def __hash__(self) -> int:
        return hash((self.entries.shape, self.entries.tobytes()))


@dataclass(frozen=True)
class HermitianPoset(Poset):
    """Hermitian matrices of order n under the Loewner order (ellipsoid inclusion)."""

    n: int
    eps_scale: Optional[float] = None

    def check(self, x: Any) -> HermitianPoint:
        point = x if isinstance(x, HermitianPoint) else HermitianPoint(np.asarray(x))
        if point.order != self.n:
            raise DimensionMismatchError(
                f"expected a {self.n}x{self.n} matrix, got order {point.order}", component="order"
            )
        return point

    def leq(self, a: Any, b: Any) -> bool:
        a, b = self.check(a), self.check(b)
        eps = loewner_tolerance(a.entries, b.entries, scale=self.eps_scale)
        return bool(np.linalg.eigvalsh(b.entries - a.entries)[0] >= -eps)

    def sort_key(self, x: Any) -> Tuple:
        m = self.check(x).entries
        flat = m.ravel()
        return (float(np.trace(m).real),) + tuple(float(v) for v in flat.real) + tuple(float(v) for v in flat.imag)


def leq(poset: Poset, a: Any, b: Any) -> bool:
    """a ≼ b in `poset`, after validating both elements."""
    return poset.leq(poset.check(a), poset.check(b))


@dataclass(frozen=True)
class Antichain:
    """Mutually incomparable points, in canonical order.

    With `minimal` orientation the antichain generates an upper set (a set of
    feasible resources); with `maximal` orientation it generates a lower set
    (a set of achievable functionalities). `witnesses` carry one implementation
    label per point and do not take part in equality.
    """

    poset: Poset
    points: Tuple[Any, ...]
    orientation: Orientation = "minimal"
    witnesses: Optional[Tuple[Hashable, ...]] = field(default=None, compare=False)

    def __len__(self) -> int:
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    @property
    def is_empty(self) -> bool:
        return not self.points

    def items(self) -> List[Tuple[Any, Hashable]]:
        witnesses = self.witnesses or (None,) * len(self.points)
        return list(zip(self.points, witnesses))

    def contains(self, x: Any) -> bool:
        """Membership in the generated upper set (minimal) or lower set (maximal)."""
        x = self.poset.check(x)
        if self.orientation == "minimal":
            return any(self.poset.leq(p, x) for p in self.points)
        return any(self.poset.leq(x, p) for p in self.points)


def _witness_key(w: Any) -> Tuple:
    return (repr(w),) if w is not None else ()


def pareto_min(
    poset: Poset,
    points: Iterable[Any],
    witnesses: Optional[Sequence[Hashable]] = None,
    orientation: Orientation = "minimal",
) -> Antichain:
    """Drop every point dominated by another; equal points collapse to the first witness.

    Points are scanned along a linear extension of the order, so a point can only
    be dominated by one scanned before it and only the kept front needs checking.
    """
    pts = [poset.check(p) for p in points]
    ws = list(witnesses) if witnesses is not None else [None] * len(pts)
    if len(ws) != len(pts):
        raise DimensionMismatchError("one witness per point is required")
    if orientation == "minimal":
        order = sorted(range(len(pts)), key=lambda i: (poset.sort_key(pts[i]), _witness_key(ws[i])))
    else:
        order = sorted(range(len(pts)), key=lambda i: (_negate(poset.sort_key(pts[i])), _witness_key(ws[i])))

    kept: List[int] = []
    if isinstance(poset, ProductPoset) and poset.is_real_vector() and pts:
        matrix = np.array(pts, dtype=float).reshape(len(pts), poset.arity)
        front = np.empty_like(matrix)
        count = 0
        for i in order:
            row = matrix[i]
            if count:
                block = front[:count]
                dominated = (block <= row) if orientation == "minimal" else (block >= row)
                if np.any(np.all(dominated, axis=1)):
                    continue
            front[count] = row
            count += 1
            kept.append(i)
    else:
        for i in order:
            if orientation == "minimal":
                dominated = any(poset.leq(pts[j], pts[i]) for j in kept)
            else:
                dominated = any(poset.leq(pts[i], pts[j]) for j in kept)
            if not dominated:
                kept.append(i)

    kept.sort(key=lambda i: (poset.sort_key(pts[i]), _witness_key(ws[i])))
    has_witness = witnesses is not None
    return Antichain(
        poset=poset,
        points=tuple(pts[i] for i in kept),
        orientation=orientation,
        witnesses=tuple(ws[i] for i in kept) if has_witness else None,
    )


def pareto_max(poset: Poset, points: Iterable[Any],
               witnesses: Optional[Sequence[Hashable]] = None) -> Antichain:
    return pareto_min(poset, points, witnesses, orientation="maximal")


def _same_space(a: Antichain, b: Antichain) -> None:
    if a.poset != b.poset:
        raise PosetMismatchError(f"antichains live on different posets: {a.poset!r} vs {b.poset!r}")
    if a.orientation != b.orientation:
        raise PosetMismatchError(f"orientation mismatch: {a.orientation} vs {b.orientation}")


def antichain_merge(a: Antichain, b: Antichain) -> Antichain:
    """Pareto front of the union of two antichains."""
    _same_space(a, b)
    items = a.items() + b.items()
    has_witness = a.witnesses is not None or b.witnesses is not None
    return pareto_min(
        a.poset,
        [p for p, _ in items],
        [w for _, w in items] if has_witness else None,
        orientation=a.orientation,
    )


def antichain_leq(a: Antichain, b: Antichain) -> bool:
    """Order on antichains.

    Minimal orientation: ↑b ⊆ ↑a, i.e. every point of b dominates a point of a.
    Maximal orientation: ↓a ⊆ ↓b, i.e. every point of a is below a point of b.
    The empty antichain is the top of the minimal order and the bottom of the maximal one.
    """
    _same_space(a, b)
    poset = a.poset
    if a.orientation == "minimal":
        return all(any(poset.leq(p, q) for p in a.points) for q in b.points)
    return all(any(poset.leq(p, q) for q in b.points) for p in a.points)


def empty_antichain(poset: Poset, orientation: Orientation = "minimal") -> Antichain:
    return Antichain(poset=poset, points=(), orientation=orientation, witnesses=())
