"""
Component blocks of the drone design problem.

Each builder turns catalog entries into a DPI with named, unit-tagged ports.
Units are part of the port posets, so wiring a power port into a mass port is
rejected when the diagram is built.
"""

import math
from typing import Optional, Sequence

from schemas.catalog import (
    ActuatorEntry,
    AlgorithmEntry,
    BatteryEntry,
    ComputerEntry,
    FeatureEntry,
    MissionSpec,
    SensorEntry,
)
from services.dpi import CatalogDpi, MapDpi, ports
from services.posets import RealsPoset
from utils.errors import DpiError
from utils.logger import get_logger
from utils.settings import settings

logger = get_logger(__name__)

COST = RealsPoset("CHF")
MASS = RealsPoset("kg")
POWER = RealsPoset("W")
FORCE = RealsPoset("N")
ENERGY = RealsPoset("Wh")
MINUTES = RealsPoset("min")
HERTZ = RealsPoset("Hz")
MEGAPIXELS = RealsPoset("MP")
OPS = RealsPoset("ops/s")
SPEED = RealsPoset("m/s")
PURE = RealsPoset()

COST_MASS_POWER = ports(["cost", "mass", "power"], [COST, MASS, POWER])


def _nonempty(kind: str, entries: Sequence) -> None:
    if not entries:
        raise DpiError(f"{kind} block needs at least one catalog entry")


def battery_block(entries: Sequence[BatteryEntry], scales: Optional[Sequence[float]] = None,
                  name: str = "battery") -> MapDpi:
    """Battery packs: every chemistry at every pack scale.

    A pack provides up to its capacity per mission. Serving n missions buys
    ceil(n / cycle_life) packs (at least one), which multiplies the cost but
    not the mass.
    """
    _nonempty("battery", entries)
    scales = settings.BATTERY_SCALES if scales is None else scales
    packs = {f"{e.name}x{s:g}": (e, e.capacity * s) for e in entries for s in scales}

    def requirement(impl, f):
        entry, capacity = packs[impl]
        energy, cycles = f
        if energy > capacity:
            return None
        bought = max(1, math.ceil(cycles / entry.cycle_life))
        return capacity / entry.specific_cost * bought, capacity / entry.specific_energy

    return MapDpi(
        name,
        ports(["energy", "cycles"], [ENERGY, PURE]),
        ports(["cost", "mass"], [COST, MASS]),
        list(packs),
        requirement,
    )


def actuator_power(entry: ActuatorEntry, lift: float, effort: float) -> float:
    return entry.idle_power + entry.k_lift * lift ** 1.5 + entry.k_effort * effort


def actuation_block(entries: Sequence[ActuatorEntry], with_speed: bool = False,
                    name: str = "actuation") -> MapDpi:
    """Actuators provide lift, control effort (and optionally speed); power grows with lift and effort."""
    _nonempty("actuator", entries)
    by_name = {e.name: e for e in entries}

    def requirement(impl, f):
        entry = by_name[impl]
        lift, effort = f[0], f[1]
        if lift > entry.max_lift or effort > entry.max_torque ** 2:
            return None
        if with_speed and f[2] > entry.speed:
            return None
        return entry.cost, entry.mass, actuator_power(entry, lift, effort)

    fun_names = ["lift", "control_effort"] + (["speed"] if with_speed else [])
    fun_posets = [FORCE, PURE] + ([SPEED] if with_speed else [])
    return MapDpi(name, ports(fun_names, fun_posets), COST_MASS_POWER, list(by_name), requirement)


def computing_block(entries: Sequence[ComputerEntry], name: str = "computer") -> CatalogDpi:
    _nonempty("computer", entries)
    rows = [(e.name, (e.computation,), (e.cost, e.mass, e.power)) for e in entries]
    return CatalogDpi(name, ports(["computation"], [OPS]), COST_MASS_POWER, rows)


def sensor_block(entries: Sequence[SensorEntry], name: str = "sensor") -> CatalogDpi:
    _nonempty("sensor", entries)
    rows = [(e.name, (e.frame_rate, e.resolution), (e.cost, e.mass, e.power)) for e in entries]
    return CatalogDpi(name, ports(["frame_rate", "resolution"], [HERTZ, MEGAPIXELS]), COST_MASS_POWER, rows)


def algorithm_block(entries: Sequence[AlgorithmEntry], role: str, name: Optional[str] = None) -> MapDpi:
    """Algorithms of one role; computation = ops_per_sample × serviced frequency.

    Detection algorithms also provide an accuracy.
    """
    chosen = [e for e in entries if e.role == role]
    if not chosen:
        raise DpiError(f"no {role} algorithms in the catalog")
    by_name = {e.name: e for e in chosen}
    detection = role == "detection"

    def requirement(impl, f):
        entry = by_name[impl]
        frequency = f[0]
        if frequency > entry.max_frequency:
            return None
        if detection and f[1] > entry.accuracy:
            return None
        return (entry.ops_per_sample * frequency,)

    fun = ports(["frequency", "accuracy"], [HERTZ, PURE]) if detection else ports(["frequency"], [HERTZ])
    return MapDpi(name or f"{role}_algorithm", fun, ports(["computation"], [OPS]), list(by_name), requirement)


def feature_extraction_block(entries: Sequence[FeatureEntry], noise_k: Optional[float] = None,
                             name: str = "feature_extraction") -> MapDpi:
    """Turns camera frames into heading observations.

    A tier with accuracy factor a observes with noise intensity k / (resolution · a),
    so delivering precision π needs resolution k · π / a and a detector at least
    as accurate as a, both at the observation frequency.
    """
    _nonempty("feature", entries)
    k = settings.FEATURE_NOISE_K if noise_k is None else noise_k
    by_name = {e.name: e for e in entries}

    def requirement(impl, f):
        entry = by_name[impl]
        frequency, precision = f
        return frequency, k * precision / entry.accuracy, frequency, entry.accuracy

    return MapDpi(
        name,
        ports(["frequency", "precision"], [HERTZ, PURE]),
        ports(["frame_rate", "resolution", "detection_frequency", "detection_accuracy"],
              [HERTZ, MEGAPIXELS, HERTZ, PURE]),
        list(by_name),
        requirement,
    )


def mission_block(spec: MissionSpec, name: str = "mission") -> MapDpi:
    """Passes mission requirements on; with `required_speed` also asks actuation for speed."""
    with_speed = spec.required_speed is not None

    def requirement(impl, f):
        mission_time, num_missions, noise = f
        r = (mission_time, num_missions, noise)
        return r + (spec.required_speed,) if with_speed else r

    res_names = ["endurance", "cycles", "noise"] + (["speed"] if with_speed else [])
    res_posets = [MINUTES, PURE, PURE] + ([SPEED] if with_speed else [])
    return MapDpi(
        name,
        ports(["mission_time", "num_missions", "system_noise"], [MINUTES, PURE, PURE]),
        ports(res_names, res_posets),
        ["mission"],
        requirement,
    )


def energy_block(name: str = "energy") -> MapDpi:
    """Supplying `power` W for `endurance` minutes takes power · endurance / 60 Wh."""

    def requirement(impl, f):
        endurance, power = f
        return power * endurance / 60.0, power

    return MapDpi(
        name,
        ports(["endurance", "power"], [MINUTES, POWER]),
        ports(["energy", "total_power"], [ENERGY, POWER]),
        ["energy"],
        requirement,
    )

