import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from critical_hawkes.model import ModelSpec
from critical_hawkes.primitives import (
    Dirac,
    Empirical,
    ExplicitPmf,
    Exponential,
    HawkesMixedPoisson,
    MittagLeffler,
    ParetoLike,
    ParetoTail,
    StableBranching,
    TabulatedDensity,
)

# derandomized so that every run of the suite sees the same examples
settings.register_profile("default", deadline=None, max_examples=40, derandomize=True,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def all_laws():
    return [
        HawkesMixedPoisson(Dirac(1.0)),
        HawkesMixedPoisson(ParetoTail(0.5)),
        HawkesMixedPoisson(Empirical(((0.5, 0.5), (1.5, 0.5)))),
        StableBranching(0.5),
        StableBranching(0.3),
        ExplicitPmf((0.25, 0.5, 0.25)),
    ]


def all_kernels():
    return [
        Exponential(1.0),
        Exponential(2.5),
        MittagLeffler(0.5, 1.0),
        MittagLeffler(0.7, 2.0),
        ParetoLike(0.5, 1.0),
        TabulatedDensity((0.0, 1.0, 2.0), (0.5, 0.5, 0.5)),
    ]


@pytest.fixture
def fv_spec():
    return ModelSpec(1.0, Exponential(1.0), HawkesMixedPoisson(Dirac(1.0)))


@pytest.fixture
def stable_spec():
    return ModelSpec(1.0, Exponential(1.0), StableBranching(0.5))


@pytest.fixture
def crit_spec():
    return ModelSpec(1.0, MittagLeffler(0.5, 1.0), StableBranching(0.5))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
