"""Configuration for pytest test suite."""

from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from src.core.model import GiantAtomSpec, SystemSpec, WaveguideSpec
from src.core.spectral import bell_state, w_state
from src.experiments.configurations import NamedConfiguration, build_configuration


@pytest.fixture(scope="session")
def project_root() -> Path:
    """Return the project root directory."""
    return Path(__file__).parent.parent


@pytest.fixture(scope="session")
def config_dir(project_root: Path) -> Path:
    """Return the directory with the example run documents."""
    return project_root / "data" / "config"


@pytest.fixture(scope="session")
def braided() -> NamedConfiguration:
    """Two braided atoms, g = 0.5, on the default 201-site ring."""
    return build_configuration("braided2", g=0.5)


@pytest.fixture(scope="session")
def separate() -> NamedConfiguration:
    """Two separate atoms, g = 0.5."""
    return build_configuration("separate2", g=0.5)


@pytest.fixture(scope="session")
def nested() -> NamedConfiguration:
    """Two nested atoms, g = 0.5."""
    return build_configuration("nested2", g=0.5)


@pytest.fixture(scope="session")
def braided3() -> NamedConfiguration:
    """Three braided atoms, g = 0.5."""
    return build_configuration("braided3", g=0.5)


@pytest.fixture
def small_ring() -> SystemSpec:
    """Single small atom on a 12-site ring, cheap enough for exact checks."""
    return SystemSpec(
        waveguide=WaveguideSpec(n_sites=12),
        atoms=(GiantAtomSpec(legs=(3, 7), g=0.3),),
    )


@pytest.fixture
def bell() -> np.ndarray:
    """Return (|eg> + |ge>)/sqrt(2)."""
    return bell_state()


@pytest.fixture
def w() -> np.ndarray:
    """Return (|egg> + |geg> + |gge>)/sqrt(3)."""
    return w_state()


@pytest.fixture
def rng() -> np.random.Generator:
    """Seeded generator for randomized invariant checks."""
    return np.random.default_rng(12345)


@pytest.fixture
def braided_toml(tmp_path: Path) -> Path:
    """Small braided run document written to a temporary file."""
    path = tmp_path / "braided.toml"
    path.write_text(
        'seed = 7\nconfiguration = "braided2"\n\n'
        "[waveguide]\nn_sites = 61\n\n"
        "[experiment]\ng = 0.5\ng_values = [0.0, 0.5]\n",
        encoding="utf-8",
    )
    return path
