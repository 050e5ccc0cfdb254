"""The model triple (mu, kernel, offspring law) and its config representation."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import ConfigError, DomainError
from .primitives import (
    DerivedConstants,
    Dirac,
    DisplacementKernel,
    Empirical,
    ExplicitPmf,
    Exponential,
    HawkesMixedPoisson,
    MittagLeffler,
    OffspringLaw,
    ParetoLike,
    ParetoTail,
    StableBranching,
    TabulatedDensity,
    derived_constants,
)


@dataclass(frozen=True)
class ModelSpec:
    """Immigration rate, displacement kernel and offspring law of one experiment.

    With ``strict=True`` (the default) the offspring law must be critical,
    i.e. have mean one and satisfy ``G(1) = 1``, ``G'(1) = 1`` numerically.
    ``strict=False`` admits degenerate oracle models such as no offspring or
    zero marks.
    """

    mu: float
    kernel: DisplacementKernel
    offspring: OffspringLaw
    regime: str | None = None
    strict: bool = True
    constants: DerivedConstants = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not (self.mu > 0 and math.isfinite(self.mu)):
            raise DomainError(f"immigration rate must be positive, got {self.mu}")
        if self.strict:
            check_critical(self.offspring)
        object.__setattr__(self, "constants",
                           derived_constants(self.kernel, self.offspring, self.regime))

    def with_regime(self, regime):
        return ModelSpec(self.mu, self.kernel, self.offspring, regime, self.strict)

    def to_dict(self):
        return {
            "mu": self.mu,
            "kernel": self.kernel.to_dict(),
            "offspring": self.offspring.to_dict(),
            "strict": self.strict,
        }

    @classmethod
    def from_dict(cls, d: dict, regime: str | None = None, path: str = "model") -> "ModelSpec":
        try:
            mu = float(d["mu"])
        except (KeyError, TypeError, ValueError):
            raise ConfigError("missing or non-numeric 'mu'", f"{path}.mu") from None
        kernel = kernel_from_dict(_get(d, "kernel", path), f"{path}.kernel")
        offspring = offspring_from_dict(_get(d, "offspring", path), f"{path}.offspring")
        try:
            return cls(mu, kernel, offspring, regime, bool(d.get("strict", True)))
        except DomainError as exc:
            raise ConfigError(str(exc), path) from exc


def check_critical(law: OffspringLaw, tol: float = 1e-10) -> None:
    """Raise :class:`DomainError` unless ``G(1) = 1`` and ``G'(1) = 1``."""
    g1 = float(law.G(1.0))
    if abs(g1 - 1.0) > tol:
        raise DomainError(f"G(1) = {g1!r}, not 1")
    if abs(law.mean - 1.0) > tol:
        raise DomainError(f"offspring mean is {law.mean!r}; the model must be critical (mean 1)")
    # (G(1) - G(1-h)) / h = 1 - H(h) / h; written through H there is no
    # cancellation, so h can be tiny enough for heavy tails (bias ~ h**beta)
    h = 1e-200
    slope = 1.0 - float(law.H(h)) / h
    if abs(slope - 1.0) > 1e-6:
        raise DomainError(f"numerical G'(1) = {slope!r}, not 1")


def _get(d, key, path):
    if not isinstance(d, dict) or key not in d:
        raise ConfigError(f"missing field '{key}'", f"{path}.{key}")
    return d[key]


def _num(d, key, path, default=None):
    if key not in d:
        if default is None:
            raise ConfigError(f"missing field '{key}'", f"{path}.{key}")
        return default
    try:
        return float(d[key])
    except (TypeError, ValueError):
        raise ConfigError("expected a number", f"{path}.{key}") from None


def _build(path, fn, *args):
    try:
        return fn(*args)
    except DomainError as exc:
        raise ConfigError(str(exc), path) from exc


def kernel_from_dict(d: dict, path: str = "kernel") -> DisplacementKernel:
    kind = _get(d, "type", path)
    if kind == "exponential":
        return _build(path, Exponential, _num(d, "rate", path, 1.0))
    if kind == "mittag_leffler":
        return _build(path, MittagLeffler, _num(d, "beta", path), _num(d, "rate", path, 1.0))
    if kind == "pareto_like":
        return _build(path, ParetoLike, _num(d, "alpha", path), _num(d, "c_phi", path, 1.0))
    if kind == "tabulated":
        return _build(path, TabulatedDensity, tuple(_get(d, "times", path)),
                      tuple(_get(d, "values", path)))
    raise ConfigError(f"unknown kernel type {kind!r}", f"{path}.type")


def mark_from_dict(d: dict, path: str = "mark_law"):
    kind = _get(d, "type", path)
    if kind == "dirac":
        return _build(path, Dirac, _num(d, "point", path, 1.0))
    if kind == "pareto_tail":
        c_nu = d.get("c_nu")
        return _build(path, ParetoTail, _num(d, "beta", path), None if c_nu is None else float(c_nu))
    if kind == "empirical":
        atoms = _get(d, "atoms", path)
        try:
            atoms = tuple((float(x), float(p)) for x, p in atoms)
        except (TypeError, ValueError):
            raise ConfigError("atoms must be [value, probability] pairs", f"{path}.atoms") from None
        return _build(path, Empirical, atoms)
    raise ConfigError(f"unknown mark law type {kind!r}", f"{path}.type")


def offspring_from_dict(d: dict, path: str = "offspring") -> OffspringLaw:
    kind = _get(d, "type", path)
    if kind == "hawkes_mixed_poisson":
        mark = mark_from_dict(d.get("mark_law", {"type": "dirac", "point": 1.0}), f"{path}.mark_law")
        return HawkesMixedPoisson(mark)
    if kind == "stable_branching":
        return _build(path, StableBranching, _num(d, "beta", path))
    if kind == "explicit_pmf":
        return _build(path, ExplicitPmf, tuple(_get(d, "probabilities", path)))
    raise ConfigError(f"unknown offspring type {kind!r}", f"{path}.type")
