"""
LQG synthesis as a design problem with implementations.

Every grid point (alpha, operating noise levels, and for the digital variants
the sampling frequency, delay or drop probability) is one implementation. It
provides the noise levels it was designed for and requires the performance the
optimal controller reaches there. A controller facing milder noise, less delay
or fewer drops can always simulate the harsher setting, so this table is a
monotone feasibility relation.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import product
from typing import Iterable, List, Optional, Sequence, Tuple

from schemas.lqg import LqgBlockSpec, PlantSpec
from schemas.results import SweepRow
from services.discretization import discretize, interval_averaged_performance
from services.dpi import CatalogDpi, Dpi, ports
from services.lqg import (
    CtLqgSystem,
    DelaySpec,
    Diverged,
    Performance,
    ScalarLqg,
    ct_performance,
    delayed_performance,
    dt_performance,
    intermittent_performance,
    scalar_closed_form,
)
from services.posets import Antichain, RealsPoset
from utils.errors import CoDesignError, DpiError
from utils.logger import get_logger
from utils.settings import settings

logger = get_logger(__name__)

DIGITAL = ("digital", "digital_drops")


@dataclass(frozen=True)
class LqgDesign:
    """One grid point of an LQG block."""

    alpha: float
    v: float
    w: float
    frequency: Optional[float] = None
    delay: Optional[float] = None
    p_drop: Optional[float] = None

    def __str__(self) -> str:
        parts = [f"alpha={self.alpha:.6g}", f"v={self.v:.6g}", f"w={self.w:.6g}"]
        if self.frequency is not None:
            parts.append(f"f={self.frequency:.6g}Hz")
        if self.delay is not None:
            parts.append(f"d={self.delay:.6g}s")
        if self.p_drop is not None:
            parts.append(f"p={self.p_drop:.6g}")
        return ";".join(parts)


def design_grid(spec: LqgBlockSpec) -> List[LqgDesign]:
    """All grid points of `spec`, in lexicographic grid order."""
    freqs: Sequence[Optional[float]] = spec.frequency_grid if spec.variant in DIGITAL else [None]
    delays: Sequence[Optional[float]] = spec.delay_grid if spec.variant == "delayed" else [None]
    drops: Sequence[Optional[float]] = spec.drop_grid if spec.variant == "digital_drops" else [None]
    return [
        LqgDesign(a, v, w, f, d, p)
        for a, v, w, f, d, p in product(spec.alpha_grid, spec.v_grid, spec.w_grid, freqs, delays, drops)
    ]


def design_performance(spec: LqgBlockSpec, base: CtLqgSystem, design: LqgDesign) -> Optional[Performance]:
    """Tracking error and control effort at one grid point; None when no stabilizing design exists."""
    system = base.with_alpha(design.alpha).scaled_noise(design.v, design.w)
    try:
        if spec.variant == "continuous":
            return ct_performance(system).performance
        if spec.variant == "delayed":
            return delayed_performance(system, DelaySpec(d_obs=design.delay))
        delta = 1.0 / design.frequency
        sampled = discretize(system, delta, cross_term=spec.cross_term)
        if spec.variant == "digital":
            return interval_averaged_performance(system, delta, dt_performance(sampled))
        outcome = intermittent_performance(sampled, design.p_drop)
        if isinstance(outcome, Diverged):
            logger.debug("%s: estimator diverges (|Gamma| = %.3g)", design, outcome.norm)
            return None
        return interval_averaged_performance(system, delta, outcome)
    except CoDesignError as e:
        logger.debug("%s omitted: %s", design, e)
        return None


class LqgDpi(CatalogDpi):
    """Catalog of LQG grid points, built on first use."""

    def __init__(self, spec: LqgBlockSpec, name: str = "lqg"):
        self.spec = spec
        self.base = spec.plant.to_system()
        reals, hertz = RealsPoset(), RealsPoset("Hz")

        fun_names = ["w"] if spec.noise_as_precision else ["v", "w"]
        if spec.variant == "delayed":
            fun_names.append("delay")
        if spec.variant == "digital_drops":
            fun_names.append("drop_probability")
        fun_posets = [RealsPoset("s") if n == "delay" else reals for n in fun_names]

        res_names = ["tracking_error", "control_effort"]
        res_posets = [reals, reals]
        if spec.variant in DIGITAL:
            res_names += ["control_frequency", "obs_frequency"]
            res_posets += [hertz, hertz]
        if spec.noise_as_precision:
            res_names.append("precision")
            res_posets.append(reals)

        super().__init__(name, ports(fun_names, fun_posets), ports(res_names, res_posets))

    def _row(self, design: LqgDesign, perf: Performance) -> Tuple[LqgDesign, Tuple, Tuple]:
        prov: List[float] = [] if self.spec.noise_as_precision else [design.v]
        prov.append(design.w)
        if design.delay is not None:
            prov.append(design.delay)
        if design.p_drop is not None:
            prov.append(design.p_drop)
        req: List[float] = [perf.P_track, perf.P_effort]
        if design.frequency is not None:
            req += [design.frequency, design.frequency]
        if self.spec.noise_as_precision:
            req.append(1.0 / design.v)
        return design, tuple(prov), tuple(req)

    def load_rows(self) -> Iterable[Tuple[LqgDesign, Tuple, Tuple]]:
        grid = design_grid(self.spec)
        logger.info("Evaluating %d %s LQG designs for %s", len(grid), self.spec.variant, self.name)

        def evaluate(design: LqgDesign) -> Optional[Performance]:
            return design_performance(self.spec, self.base, design)

        if settings.WORKERS > 1 and len(grid) > 1:
            with ThreadPoolExecutor(max_workers=settings.WORKERS) as pool:
                results = list(pool.map(evaluate, grid))
        else:
            results = [evaluate(d) for d in grid]

        rows = [
            self._row(d, perf) for d, perf in zip(grid, results)
            if perf is not None and math.isfinite(perf.P_track) and math.isfinite(perf.P_effort)
        ]
        if not rows:
            raise DpiError(f"{self.name}: no grid point admits a stabilizing {self.spec.variant} controller")
        logger.info("%s: %d of %d designs are stabilizing", self.name, len(rows), len(grid))
        return rows


def make_lqg_dpi(spec: LqgBlockSpec, name: str = "lqg") -> LqgDpi:
    """Build the DPI of an LQG block; the grid is evaluated eagerly so errors surface here."""
    dpi = LqgDpi(spec, name)
    dpi.table()
    return dpi


def pareto_front(dpi: Dpi, f) -> Antichain:
    """Minimal (tracking error, control effort, ...) needed to tolerate the noise point `f`."""
    return dpi.h(f)


def achievable_front(dpi: Dpi, r, candidates=None) -> Antichain:
    """Maximal noise points that can be tolerated within the resource budget `r`."""
    return dpi.h_prime(r, candidates)


def performance_sweep(plant: PlantSpec, alphas: Sequence[float], vs: Sequence[float],
                      ws: Sequence[float]) -> List[SweepRow]:
    """Optimal continuous performance over an (alpha, v, w) grid, with closed forms for scalar plants."""
    base = plant.to_system()
    rows = []
    for alpha, v, w in product(alphas, vs, ws):
        system = base.with_alpha(alpha).scaled_noise(v, w)
        perf = ct_performance(system).performance
        row = SweepRow(alpha=alpha, v=v, w=w, P_track=perf.P_track, P_effort=perf.P_effort)
        if system.is_scalar:
            closed = scalar_closed_form(ScalarLqg.from_system(system))
            row.closed_form_P_track = closed.P_track
            row.closed_form_P_effort = closed.P_effort
        rows.append(row)
    return rows
