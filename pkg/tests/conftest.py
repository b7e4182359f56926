from pathlib import Path

import numpy as np
import pytest

from services.catalog_service import load_catalog
from services.lqg import CtLqgSystem

DATA = Path(__file__).resolve().parent.parent / "data"
TOY = DATA / "toy"

TOY_FILES = {
    "battery": "batteries.csv",
    "actuator": "actuators.csv",
    "computer": "computers.csv",
    "sensor": "sensors.csv",
    "algorithm": "algorithms.csv",
    "feature": "features.csv",
}


def random_psd(rng: np.random.Generator, n: int, definite: bool = False) -> np.ndarray:
    G = rng.normal(size=(n, n))
    M = G @ G.T / n
    return M + np.eye(n) * (0.5 if definite else 0.0)


def random_ct_system(rng: np.random.Generator, n: int, m: int = 1, p: int = 1,
                     scale: float = 0.5, alpha: float = 1.0) -> CtLqgSystem:
    """A generic (stabilizable, detectable) continuous system with well-conditioned weights."""
    return CtLqgSystem(
        A=rng.normal(scale=scale, size=(n, n)),
        B=rng.normal(size=(n, m)),
        C=rng.normal(size=(p, n)),
        W=random_psd(rng, n, definite=True),
        V=random_psd(rng, p, definite=True),
        Q0=random_psd(rng, n, definite=True),
        R0=random_psd(rng, m, definite=True),
        alpha=alpha,
    )


def scalar_system(a=0.0, b=1.0, c=1.0, q0=1.0, r0=1.0, v=1.0, w=1.0, alpha=1.0) -> CtLqgSystem:
    return CtLqgSystem(A=[[a]], B=[[b]], C=[[c]], W=[[w]], V=[[v]], Q0=[[q0]], R0=[[r0]], alpha=alpha)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture(scope="session")
def toy_catalogs():
    return {kind: load_catalog(TOY / name) for kind, name in TOY_FILES.items()}


@pytest.fixture(scope="session")
def shipped_catalogs():
    return {kind: load_catalog(DATA / "catalogs" / name) for kind, name in TOY_FILES.items()}
