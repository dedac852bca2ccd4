# tests/conftest.py

import os
import sys

import numpy as np
import pytest

# Añadir el directorio src al path, igual que hace main.py
ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
sys.path.insert(0, os.path.join(ROOT, "src"))

from core.economy import Economy, Program, RuleMode, TieBreak  # noqa: E402
from core.uncertainty import FeasibleClass, StudentPartition, programs_bitmask  # noqa: E402

FIXTURES = os.path.join(ROOT, "tests", "fixtures")
FOUR_CLASS_ROL = (4, 3, 2, 1)
FOUR_CLASS_PROGRAMS = 6


@pytest.fixture
def fixtures_dir() -> str:
    return FIXTURES


@pytest.fixture
def four_class_partition() -> StudentPartition:
    """Cuatro clases con probabilidades 0.40, 0.30, 0.25 y 0.05 y ROL (4, 3, 2, 1)."""
    return StudentPartition(
        classes=(
            FeasibleClass(feasible=programs_bitmask([3, 4]), assigned=4, count=40),
            FeasibleClass(feasible=programs_bitmask([0, 1]), assigned=1, count=30),
            FeasibleClass(feasible=programs_bitmask([0, 1, 2]), assigned=2, count=25),
            FeasibleClass(feasible=programs_bitmask([1, 4]), assigned=4, count=5),
        ),
        n_draws=100,
    )


@pytest.fixture
def lottery_economy():
    """Fábrica de economías de lotería con grupos de prioridad dados."""

    def build(capacities, intrinsic=None, n_students=None, n_groups=1, tiebreak=TieBreak.STB, **kwargs) -> Economy:
        capacities = list(capacities)
        if intrinsic is None:
            intrinsic = np.zeros((n_students, len(capacities)), dtype=np.int64)
        programs = [
            Program(id=c, capacity=cap, school_id=c, attributes={"quality": float(c)},
                    rule_mode=RuleMode.LOTTERY_COARSE, n_groups=n_groups)
            for c, cap in enumerate(capacities)
        ]
        return Economy(programs=programs, intrinsic=np.asarray(intrinsic), tiebreak=tiebreak, **kwargs)

    return build
