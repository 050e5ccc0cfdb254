"""Distributions, kernels, special functions and derived constants."""
import numpy as np

from .constants import REGIMES, DerivedConstants, c_alpha_phi, derived_constants, regime_violations
from .laws import (
    Dirac,
    DisplacementKernel,
    Empirical,
    ExplicitPmf,
    Exponential,
    HawkesMixedPoisson,
    MarkLaw,
    MittagLeffler,
    OffspringLaw,
    ParetoLike,
    ParetoTail,
    StableBranching,
    TabulatedDensity,
    positive_stable,
)
from .special import mittag_leffler, mittag_leffler_2p


def eval_G(law: OffspringLaw, s):
    return law.G(s)


def eval_H(law: OffspringLaw, u):
    return law.H(u)


def sample_offspring(law: OffspringLaw, rng, size=None, mark=None):
    """Offspring counts; ``mark`` is used by mark-driven laws (drawn if None)."""
    n = 1 if size is None else size
    marks = None if mark is None else np.broadcast_to(np.asarray(mark, dtype=float), n)
    out = law.sample(rng, n, marks=marks)
    return int(out[0]) if size is None else out


def sample_displacement(kernel, rng, size=None):
    out = kernel.sample(rng, 1 if size is None else size)
    return float(out[0]) if size is None else out


__all__ = [
    "REGIMES", "DerivedConstants", "c_alpha_phi", "derived_constants", "regime_violations",
    "Dirac", "DisplacementKernel", "Empirical", "ExplicitPmf", "Exponential",
    "HawkesMixedPoisson", "MarkLaw", "MittagLeffler", "OffspringLaw", "ParetoLike",
    "ParetoTail", "StableBranching", "TabulatedDensity", "positive_stable",
    "mittag_leffler", "mittag_leffler_2p", "eval_G", "eval_H", "sample_offspring",
    "sample_displacement",
]
