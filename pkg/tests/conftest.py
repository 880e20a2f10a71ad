"""Pytest fixtures shared across the test suite.

This module:
- Adds the project root to ``sys.path`` so ``wedgeflow``, ``config`` and ``run``
  are importable.
- Provides the Mach 3 / 10° wedge used throughout: uniform inflow arriving at 10°
  against a horizontal wall (γ = 1.4, p = 1, ρ = 1.4 so that c = 1).
- Provides a perturbed variant with a small inflow step and a slightly kinked wall,
  run with functional constants calibrated for its data.
"""

import math
import os
import sys

import msgspec
import pytest

# Ensure repository root is importable
ROOT = os.path.abspath(os.path.join(os.path.dirname(__file__), ".."))
if ROOT not in sys.path:
    sys.path.insert(0, ROOT)

from config import TestingConfig  # noqa: E402
from wedgeflow.models import GasModel  # noqa: E402
from wedgeflow.services import gasdyn, tracking  # noqa: E402
from wedgeflow.services.run_config import parse_config  # noqa: E402

THETA = math.radians(10.0)
U_IN = 3.0 * math.cos(THETA)
V_IN = 3.0 * math.sin(THETA)

STRAIGHT_WEDGE = f"""
# Mach 3 inflow at 10 degrees against a horizontal wall
gas.gamma = 1.4
inflow.row = -1, {U_IN!r}, {V_IN!r}, 1, 1.4
boundary.vertex = 0, 0
tracking.eps = 0.01
tracking.x_max = 1
"""

PERTURBED_WEDGE = f"""
gas.gamma = 1.4
inflow.row = -2, {U_IN!r}, {V_IN!r}, 1, 1.4
inflow.row = -0.5, {U_IN!r}, {V_IN!r}, 1.0001, 1.4001
boundary.vertex = 0, 0
boundary.vertex = 0.4, 0
boundary.vertex = 0.7, -0.000006
tracking.eps = 0.01
tracking.x_max = 1
tracking.seed = 7
"""


@pytest.fixture
def straight_text():
    return STRAIGHT_WEDGE


@pytest.fixture
def perturbed_text():
    return PERTURBED_WEDGE


@pytest.fixture
def settings():
    return TestingConfig


@pytest.fixture
def gas():
    return GasModel(gamma=1.4)


@pytest.fixture
def inflow_state(gas):
    return gasdyn.uniform_state(3.0, THETA, gas)


@pytest.fixture(scope="session")
def straight_cfg():
    return parse_config(STRAIGHT_WEDGE)


@pytest.fixture(scope="session")
def perturbed_cfg():
    cfg = parse_config(PERTURBED_WEDGE)
    _, consts = tracking.calibrate(cfg)
    return msgspec.structs.replace(cfg, functionals=consts)


@pytest.fixture(scope="session")
def straight_history(straight_cfg):
    return tracking.run(straight_cfg)


@pytest.fixture(scope="session")
def perturbed_history(perturbed_cfg):
    return tracking.run(perturbed_cfg)


@pytest.fixture
def background(straight_cfg):
    fs, _ = tracking.discretize_initial(straight_cfg)
    return tracking.background_of(fs)


@pytest.fixture
def write_config(tmp_path):
    def _write(text, name="run.cfg"):
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return str(path)
    return _write
