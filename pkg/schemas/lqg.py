# schemas/lqg.py

from typing import List, Literal, Optional

import numpy as np
from pydantic import BaseModel, Field, field_validator, model_validator

from services.lqg import CtLqgSystem
from utils.errors import LqgSystemError
from utils.settings import settings

Matrix = List[List[float]]

LqgVariant = Literal["continuous", "delayed", "digital", "digital_drops"]

# block kinds as they appear in diagram files
LQG_KINDS = {
    "lqg_ct": "continuous",
    "lqg_ct_delay": "delayed",
    "lqg_digital": "digital",
    "lqg_digital_drops": "digital_drops",
}


def _default_alpha_grid() -> List[float]:
    return [float(a) for a in np.geomspace(settings.ALPHA_MIN, settings.ALPHA_MAX, settings.ALPHA_POINTS)]


def _default_frequency_grid() -> List[float]:
    return [float(f) for f in np.geomspace(settings.FREQ_MIN, settings.FREQ_MAX, settings.FREQ_POINTS)]


def _ascending(name: str, values: List[float]) -> List[float]:
    if not values:
        raise ValueError(f"{name} must not be empty")
    if any(b <= a for a, b in zip(values, values[1:])):
        raise ValueError(f"{name} must be strictly ascending, got {values}")
    return values


class PlantSpec(BaseModel):
    """Continuous plant and cost weights; W and V are the unit-intensity noise shapes."""
    A: Matrix
    B: Matrix
    C: Matrix
    W: Matrix
    V: Matrix
    Q0: Matrix
    R0: Matrix
    alpha: float = Field(1.0, gt=0)

    def to_system(self, alpha: Optional[float] = None) -> CtLqgSystem:
        try:
            return CtLqgSystem(
                A=self.A, B=self.B, C=self.C, W=self.W, V=self.V,
                Q0=self.Q0, R0=self.R0, alpha=self.alpha if alpha is None else alpha,
            )
        except LqgSystemError as e:
            raise ValueError(str(e)) from e

    @model_validator(mode="after")
    def check_system(self):
        self.to_system()
        return self


class SystemFile(PlantSpec):
    """An LQG system file for `lqg-sweep`."""
    name: str = "system"


class LqgBlockSpec(BaseModel):
    """An LQG block: a plant template plus the grids its implementations are drawn from."""
    variant: LqgVariant = "continuous"
    plant: PlantSpec
    alpha_grid: List[float] = Field(default_factory=_default_alpha_grid)
    v_grid: List[float] = [1.0]
    w_grid: List[float] = [1.0]
    frequency_grid: List[float] = Field(default_factory=_default_frequency_grid)
    delay_grid: List[float] = [0.0]
    drop_grid: List[float] = [0.0]
    noise_as_precision: bool = False
    cross_term: bool = False

    @field_validator("alpha_grid", "v_grid", "frequency_grid")
    @classmethod
    def positive_grid(cls, values: List[float], info):
        _ascending(info.field_name, values)
        if values[0] <= 0:
            raise ValueError(f"{info.field_name} must be positive")
        return values

    @field_validator("w_grid", "delay_grid")
    @classmethod
    def nonnegative_grid(cls, values: List[float], info):
        _ascending(info.field_name, values)
        if values[0] < 0:
            raise ValueError(f"{info.field_name} must be nonnegative")
        return values

    @field_validator("drop_grid")
    @classmethod
    def probability_grid(cls, values: List[float]):
        _ascending("drop_grid", values)
        if values[0] < 0 or values[-1] > 1:
            raise ValueError("drop probabilities must lie in [0, 1]")
        return values

    @classmethod
    def for_kind(cls, kind: str, **fields) -> "LqgBlockSpec":
        if kind not in LQG_KINDS:
            raise ValueError(f"unknown LQG block kind {kind!r}; expected one of {sorted(LQG_KINDS)}")
        return cls(variant=LQG_KINDS[kind], **fields)
