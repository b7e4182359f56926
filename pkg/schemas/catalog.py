# schemas/catalog.py

from typing import Dict, List, Literal, Optional, Type

from pydantic import BaseModel, Field, field_validator, model_validator

CatalogKind = Literal["sensor", "computer", "battery", "actuator", "algorithm", "feature"]


class CatalogEntry(BaseModel):
    """Common part of every catalog row."""
    name: str = Field(min_length=1)

    @field_validator("name")
    @classmethod
    def strip_name(cls, value: str) -> str:
        value = value.strip()
        if not value:
            raise ValueError("name must not be blank")
        return value


class SensorEntry(CatalogEntry):
    """A camera: frame rate and resolution for a cost, mass and power."""
    resolution: float = Field(ge=0, description="megapixels")
    frame_rate: float = Field(ge=0, description="Hz")
    cost: float = Field(ge=0)
    mass: float = Field(ge=0, description="kg")
    power: float = Field(ge=0, description="W")


class ComputerEntry(CatalogEntry):
    """A computing unit."""
    computation: float = Field(ge=0, description="operations per second")
    cost: float = Field(ge=0)
    mass: float = Field(ge=0)
    power: float = Field(ge=0)


class BatteryEntry(CatalogEntry):
    """A battery chemistry.

    A pack of `capacity` Wh weighs capacity / specific_energy kg and costs
    capacity / specific_cost per purchase; a mission plan of n missions buys
    ceil(n / cycle_life) packs.
    """
    capacity: float = Field(gt=0, description="Wh, base pack size")
    specific_energy: float = Field(gt=0, description="Wh/kg")
    specific_cost: float = Field(gt=0, description="Wh per currency unit")
    cycle_life: int = Field(gt=0)


class ActuatorEntry(CatalogEntry):
    """A motor set; power = idle_power + k_lift * lift^1.5 + k_effort * control effort."""
    max_lift: float = Field(ge=0, description="N")
    max_torque: float = Field(ge=0, description="N m")
    speed: float = Field(ge=0, description="m/s")
    cost: float = Field(ge=0)
    mass: float = Field(ge=0)
    idle_power: float = Field(ge=0)
    k_lift: float = Field(ge=0)
    k_effort: float = Field(ge=0)


class AlgorithmEntry(CatalogEntry):
    """A detection or control algorithm that costs `ops_per_sample` per serviced sample."""
    role: Literal["detection", "control"]
    max_frequency: float = Field(ge=0, description="Hz")
    accuracy: float = Field(ge=0, le=1)
    ops_per_sample: float = Field(ge=0)


class FeatureEntry(CatalogEntry):
    """A feature-extraction tier with its accuracy factor."""
    accuracy: float = Field(gt=0, le=1)


ENTRY_MODELS: Dict[str, Type[CatalogEntry]] = {
    "sensor": SensorEntry,
    "computer": ComputerEntry,
    "battery": BatteryEntry,
    "actuator": ActuatorEntry,
    "algorithm": AlgorithmEntry,
    "feature": FeatureEntry,
}


class Catalog(BaseModel):
    """A validated catalog document of one kind."""
    kind: CatalogKind
    entries: List[CatalogEntry]
    synthetic: bool = False
    source: Optional[str] = None

    @model_validator(mode="after")
    def unique_names(self):
        seen = set()
        for entry in self.entries:
            if entry.name in seen:
                raise ValueError(f"duplicate {self.kind} name {entry.name!r}")
            seen.add(entry.name)
        return self

    def names(self) -> List[str]:
        return [e.name for e in self.entries]

    def by_role(self, role: str) -> List[AlgorithmEntry]:
        return [e for e in self.entries if isinstance(e, AlgorithmEntry) and e.role == role]


class MissionSpec(BaseModel):
    """Mission requirements and the drone's rotational dynamics."""
    mission_time: float = Field(15.0, ge=0, description="minutes")
    num_missions: int = Field(100, ge=0)
    system_noise: float = Field(0.1, ge=0, description="process-noise intensity sigma_w^2")
    inertia: float = Field(0.05, gt=0, description="kg m^2")
    q0: float = Field(1.0, ge=0)
    r0: float = Field(1.0, gt=0)
    weight_state: Literal["theta", "omega"] = "theta"
    noise_form: Literal["scaled", "unscaled"] = "scaled"
    tracking_error_bound: Optional[float] = Field(None, gt=0)
    required_speed: Optional[float] = Field(None, ge=0)
