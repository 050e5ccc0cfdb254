"""Derived constants of a model and the regime each limit theorem needs."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

from ..errors import RegimeError
from .laws import DisplacementKernel, HawkesMixedPoisson, OffspringLaw, ParetoTail

REGIMES = ("alpha_gt_beta", "alpha_eq_beta", "finite_variance")

# tail indices closer than this count as equal
_TAIL_TOL = 1e-12


@dataclass(frozen=True)
class DerivedConstants:
    """Numbers the solvers and normalisations need, in one place.

    ``alpha`` is None for kernels without a power tail.  Infinite moments are
    stored as ``math.inf``.
    """

    beta: float
    K: float
    alpha: float | None
    c_nu: float | None
    c_phi: float | None
    c_alpha_phi: float | None
    m_phi: float
    sigma_G2: float
    F_T_exponent: float
    regime: str | None
    violations: dict = field(default_factory=dict)

    def F_T(self, T: float) -> float:
        """Normalisation ``T**(1+beta)`` or ``T**2``."""
        return float(T) ** self.F_T_exponent

    @property
    def c_beta_phi(self) -> float | None:
        """``c_{alpha,phi}`` at ``alpha = beta`` (only meaningful in that regime)."""
        return self.c_alpha_phi

    def to_dict(self):
        d = asdict(self)
        return {k: (None if isinstance(v, float) and math.isinf(v) else v) for k, v in d.items()}


def c_alpha_phi(alpha: float, c_phi: float) -> float:
    """``1 / (c_phi Gamma(1+alpha) Gamma(1-alpha))``, the constant in ``I_R(T) ~ c T**alpha``."""
    return 1.0 / (c_phi * math.gamma(1.0 + alpha) * math.gamma(1.0 - alpha))


def regime_violations(kernel: DisplacementKernel, offspring: OffspringLaw) -> dict:
    """Map each regime to the assumption it violates (absent when satisfied)."""
    beta = offspring.beta_exponent
    alpha = kernel.alpha_tail
    out = {}
    if beta >= 1.0:
        msg = "offspring law in the domain of a (1+beta)-stable law with beta < 1 (H(u) ~ K u^(1+beta))"
        out["alpha_gt_beta"] = msg
        out["alpha_eq_beta"] = msg
    else:
        # some delta > 0 with a finite (beta + delta) moment of the kernel
        ok = alpha is None or alpha > beta + _TAIL_TOL
        if not ok:
            out["alpha_gt_beta"] = (
                f"kernel with a finite (beta+delta)-moment for some delta > 0 "
                f"(kernel tail index {alpha} <= beta = {beta})")
        if alpha is None or abs(alpha - beta) > _TAIL_TOL:
            out["alpha_eq_beta"] = (
                f"kernel tail P(xi > t) ~ c_phi t^-alpha with alpha = beta = {beta} "
                f"(kernel tail index: {'light' if alpha is None else alpha})")
    if not math.isfinite(offspring.sigma2):
        out["finite_variance"] = "offspring law with finite variance"
    elif not math.isfinite(kernel.mean):
        out["finite_variance"] = "kernel with finite mean"
    return out


def derived_constants(kernel: DisplacementKernel, offspring: OffspringLaw,
                      regime: str | None = None) -> DerivedConstants:
    """Fill in all constants; pick the regime or check the requested one.

    Raises
    ------
    RegimeError
        If ``regime`` is given and one of its assumptions fails.
    """
    if regime is not None and regime not in REGIMES:
        raise ValueError(f"unknown regime {regime!r}; expected one of {REGIMES}")
    viol = regime_violations(kernel, offspring)
    if regime is not None and regime in viol:
        raise RegimeError(regime, viol[regime])
    if regime is None:
        regime = next((r for r in REGIMES if r not in viol), None)
    beta = offspring.beta_exponent
    alpha = kernel.alpha_tail
    c_phi = kernel.c_phi
    c_nu = None
    if isinstance(offspring, HawkesMixedPoisson) and isinstance(offspring.mark_law, ParetoTail):
        c_nu = offspring.mark_law.c_nu
    return DerivedConstants(
        beta=beta,
        K=offspring.K,
        alpha=alpha,
        c_nu=c_nu,
        c_phi=c_phi,
        c_alpha_phi=c_alpha_phi(alpha, c_phi) if alpha is not None else None,
        m_phi=kernel.mean,
        sigma_G2=offspring.sigma2,
        F_T_exponent=2.0 if regime == "finite_variance" or beta >= 1.0 else 1.0 + beta,
        regime=regime,
        violations=viol,
    )
