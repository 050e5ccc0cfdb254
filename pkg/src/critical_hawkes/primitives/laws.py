"""Mark laws, offspring laws and displacement kernels.

Every law is an immutable dataclass.  Besides its analytic description
(``G``, ``H``, densities, tails) each one exposes

* vectorised numpy samplers taking a :class:`numpy.random.Generator`, and
* a ``(code, params)`` pair consumed by the compiled kernels in
  :mod:`critical_hawkes.primitives._codes`, so that simulation and solvers can
  run without Python objects in the inner loops.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import special as sc

from ..errors import DomainError
from . import _codes
from .special import mittag_leffler

# ---------------------------------------------------------------------------
# helpers


def _em1pz(z):
    """``exp(-z) - 1 + z`` without cancellation for small ``z >= 0``."""
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    small = z < 0.1
    zs = z[small]
    # alternating series z^2/2 - z^3/6 + ..., 12 terms reach 1e-17 at z = 0.1
    acc = np.zeros_like(zs)
    term = zs * zs / 2.0
    for j in range(2, 14):
        acc += term
        term = -term * zs / (j + 1)
    out[small] = acc
    zb = z[~small]
    out[~small] = np.expm1(-zb) + zb
    return out


def _binom_rem(k, u):
    """``(1-u)**k - 1 + k u`` for integer ``k >= 0``, ``u`` in [0, 1]."""
    u = np.asarray(u, dtype=float)
    if k < 2:
        return np.zeros_like(u)
    out = np.empty_like(u)
    small = k * u < 0.5
    us = u[small]
    # sum_{j>=2} C(k,j) (-u)^j; terms shrink at least geometrically by k u
    acc = np.zeros_like(us)
    term = k * (k - 1) / 2.0 * us * us
    for j in range(2, k + 1):
        acc += term
        term = -term * (k - j) / (j + 1) * us
        if not np.any(np.abs(term) > 1e-18 * np.abs(acc)):
            break
    out[small] = acc
    ub = u[~small]
    out[~small] = np.power(1.0 - ub, k) - 1.0 + k * ub
    return out


def _uniform_check(u, name="u"):
    u = np.asarray(u, dtype=float)
    if np.any(u < 0) or np.any(u > 1) or np.any(np.isnan(u)):
        raise DomainError(f"{name} must lie in [0, 1]")
    return u


def _scalar_or_array(x, like):
    return float(x) if np.ndim(like) == 0 else x


# ---------------------------------------------------------------------------
# mark laws


@dataclass(frozen=True)
class MarkLaw:
    """Base class for the law of a mark; subclasses fill in the details."""

    def laplace(self, u):
        raise NotImplementedError

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        raise NotImplementedError

    @property
    def mean(self) -> float:
        raise NotImplementedError

    @property
    def second_moment(self) -> float:
        raise NotImplementedError


@dataclass(frozen=True)
class Dirac(MarkLaw):
    """All marks equal ``point``; ``point = 0`` switches excitation off."""

    point: float = 1.0

    def __post_init__(self):
        if not (self.point >= 0.0 and math.isfinite(self.point)):
            raise DomainError(f"Dirac mark must be a finite nonnegative number, got {self.point}")

    def laplace(self, u):
        return np.exp(-self.point * np.asarray(u, dtype=float))

    def sample(self, rng, size):
        return np.full(size, float(self.point))

    @property
    def mean(self):
        return float(self.point)

    @property
    def second_moment(self):
        return float(self.point) ** 2

    def to_dict(self):
        return {"type": "dirac", "point": self.point}


@dataclass(frozen=True)
class ParetoTail(MarkLaw):
    """Shifted Pareto marks, ``P(X > x) = (b / (b + x))**(1 + beta)``, ``b = beta``.

    The scale ``b = beta`` gives mean one, so the tail constant
    ``c_nu = beta**(1 + beta)`` is determined by ``beta``.  Passing a
    different ``c_nu`` is an error rather than being silently ignored.
    """

    beta: float
    c_nu: float | None = None

    def __post_init__(self):
        if not (0.0 < self.beta < 1.0):
            raise DomainError(f"ParetoTail beta must lie in (0, 1), got {self.beta}")
        implied = self.beta ** (1.0 + self.beta)
        if self.c_nu is None:
            object.__setattr__(self, "c_nu", implied)
        elif not math.isclose(self.c_nu, implied, rel_tol=1e-12):
            raise DomainError(
                f"with unit mean the tail constant is beta**(1+beta) = {implied:.15g}, "
                f"got c_nu = {self.c_nu}"
            )

    @property
    def scale(self) -> float:
        return self.beta

    def sf(self, x):
        x = np.asarray(x, dtype=float)
        b = self.scale
        return np.where(x <= 0, 1.0, (b / (b + np.maximum(x, 0.0))) ** (1.0 + self.beta))

    def laplace(self, u):
        # E exp(-uX) = 1 - u ∫ e^{-ux} P(X>x) dx = 1 - u + H(u) with H = u q(beta u)
        u = np.asarray(u, dtype=float)
        return 1.0 - u + u * _pareto_q(self.beta * u, self.beta)

    def sample(self, rng, size):
        v = rng.random(size)
        # 1 - U keeps the argument in (0, 1]
        return self.scale * (np.power(1.0 - v, -1.0 / (1.0 + self.beta)) - 1.0)

    @property
    def mean(self):
        return 1.0

    @property
    def second_moment(self):
        return math.inf

    def to_dict(self):
        return {"type": "pareto_tail", "beta": self.beta}


@dataclass(frozen=True)
class Empirical(MarkLaw):
    """Finitely many atoms ``(value, probability)``."""

    atoms: tuple = ()

    def __post_init__(self):
        atoms = tuple((float(x), float(p)) for x, p in self.atoms)
        if not atoms:
            raise DomainError("Empirical mark law needs at least one atom")
        if any(x < 0 or not math.isfinite(x) for x, _ in atoms):
            raise DomainError("Empirical atoms must be finite and nonnegative")
        if any(p < 0 for _, p in atoms):
            raise DomainError("Empirical probabilities must be nonnegative")
        if abs(sum(p for _, p in atoms) - 1.0) > 1e-12:
            raise DomainError("Empirical probabilities must sum to 1")
        object.__setattr__(self, "atoms", atoms)

    @property
    def values(self):
        return np.array([x for x, _ in self.atoms])

    @property
    def probs(self):
        return np.array([p for _, p in self.atoms])

    def laplace(self, u):
        u = np.asarray(u, dtype=float)
        return np.tensordot(self.probs, np.exp(-np.multiply.outer(self.values, u)), axes=1)

    def sample(self, rng, size):
        cdf = np.cumsum(self.probs)
        idx = np.searchsorted(cdf, rng.random(size) * cdf[-1], side="right")
        return self.values[np.minimum(idx, len(self.atoms) - 1)]

    @property
    def mean(self):
        return float(self.probs @ self.values)

    @property
    def second_moment(self):
        return float(self.probs @ self.values**2)

    def to_dict(self):
        return {"type": "empirical", "atoms": [list(a) for a in self.atoms]}


def _pareto_q(z, beta):
    """``e^z z^beta Gamma(1-beta, z)`` (0 at z = 0)."""
    z = np.asarray(z, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        q = np.exp(z) * np.power(z, beta) * sc.gammaincc(1.0 - beta, z) * sc.gamma(1.0 - beta)
    return np.where(z == 0.0, 0.0, q)


# ---------------------------------------------------------------------------
# offspring laws


@dataclass(frozen=True)
class OffspringLaw:
    """Law of the number of children of one particle (mean one when critical).

    Subclasses implement ``G``, ``H``, ``dH`` and a sampler.  ``beta_exponent``
    is the exponent in ``H(u) ~ K u**(1+beta)``; it is 1 for finite variance.
    """

    def G(self, s):
        s = _uniform_check(s, "s")
        return _scalar_or_array(self._G(s), s)

    def H(self, u):
        u = _uniform_check(u)
        return _scalar_or_array(self._H(u), u)

    def dH(self, u):
        u = _uniform_check(u)
        return _scalar_or_array(self._dH(u), u)

    # subclass hooks
    def _G(self, s):
        return self._H(1.0 - s) + s

    def _H(self, u):
        raise NotImplementedError

    def _dH(self, u):
        raise NotImplementedError

    @property
    def mean(self) -> float:
        raise NotImplementedError

    @property
    def sigma2(self) -> float:
        raise NotImplementedError

    @property
    def beta_exponent(self) -> float:
        raise NotImplementedError

    @property
    def K(self) -> float:
        raise NotImplementedError

    @property
    def is_mark_driven(self) -> bool:
        return False

    def sample(self, rng: np.random.Generator, size, marks=None) -> np.ndarray:
        raise NotImplementedError

    def pmf(self, kmax: int) -> np.ndarray:
        """``P(rho = k)`` for ``k = 0..kmax``."""
        raise NotImplementedError

    def codes(self):
        """``(code, params)`` for the compiled kernels."""
        raise NotImplementedError

    # ----- derived diagnostics

    def W(self, u):
        """``H(u) / (K u**(1+beta))``; tends to 1 as ``u -> 0``."""
        u = _uniform_check(u)
        with np.errstate(divide="ignore", invalid="ignore"):
            w = self._H(u) / (self.K * np.power(u, 1.0 + self.beta_exponent))
        return _scalar_or_array(np.where(u == 0.0, 1.0, w), u)

    @cached_property
    def u0(self) -> float:
        """Largest ``u`` on a log-grid such that ``|W - 1| <= 0.01`` below it."""
        grid = np.logspace(-10, 0, 401)
        bad = np.abs(np.asarray(self.W(grid)) - 1.0) > 0.01
        if not bad.any():
            return 1.0
        first = int(np.argmax(bad))
        return float(grid[first - 1]) if first > 0 else 0.0

    @cached_property
    def W_sup(self) -> float:
        grid = np.concatenate([np.logspace(-10, 0, 401), np.linspace(0.01, 1, 100)])
        # W -> 1 as u -> 0, so the supremum is at least the limit
        return max(1.0, float(np.max(self.W(grid))))

    @cached_property
    def lipschitz_constant(self) -> float:
        """``sup_w H'(w) / w**beta`` on (0, 1], the constant ``C`` in
        ``0 <= H(v) - H(u) <= C (v - u) v**beta``."""
        grid = np.concatenate([np.logspace(-10, 0, 801), np.linspace(0.001, 1, 1000)])
        return float(np.max(self._dH(grid) / grid**self.beta_exponent))

    @property
    def is_critical(self) -> bool:
        return abs(self.mean - 1.0) <= 1e-10


@dataclass(frozen=True)
class HawkesMixedPoisson(OffspringLaw):
    """Poisson(mark) children with marks drawn from ``mark_law``."""

    mark_law: MarkLaw = field(default_factory=Dirac)

    @property
    def is_mark_driven(self):
        return True

    def _H(self, u):
        m = self.mark_law
        if isinstance(m, ParetoTail):
            return u * _pareto_q(m.beta * u, m.beta)
        if isinstance(m, Dirac):
            x, p = np.array([m.point]), np.array([1.0])
        else:
            x, p = m.values, m.probs
        out = u * (1.0 - float(p @ x))
        for xj, pj in zip(x, p):
            out = out + pj * _em1pz(xj * u)
        return out

    def _dH(self, u):
        m = self.mark_law
        if isinstance(m, ParetoTail):
            b = m.beta
            q = _pareto_q(b * u, b)
            return q * (1.0 + b + b * u) - b * u
        if isinstance(m, Dirac):
            x, p = np.array([m.point]), np.array([1.0])
        else:
            x, p = m.values, m.probs
        out = np.full_like(u, 1.0 - float(p @ x))
        for xj, pj in zip(x, p):
            out = out - pj * xj * np.expm1(-xj * u)
        return out

    @property
    def mean(self):
        return self.mark_law.mean

    @property
    def sigma2(self):
        # Var(rho) = E X^2 + E X - (E X)^2
        m = self.mark_law
        return m.second_moment + m.mean - m.mean**2

    @property
    def beta_exponent(self):
        return self.mark_law.beta if isinstance(self.mark_law, ParetoTail) else 1.0

    @property
    def K(self):
        m = self.mark_law
        if isinstance(m, ParetoTail):
            return m.c_nu / m.beta * math.gamma(1.0 - m.beta)
        return 0.5 * m.second_moment

    def sample_marks(self, rng, size):
        return self.mark_law.sample(rng, size)

    def sample(self, rng, size, marks=None):
        if marks is None:
            marks = self.sample_marks(rng, size)
        marks = np.asarray(marks, dtype=float)
        if np.any(marks < 0):
            raise DomainError("marks must be nonnegative")
        return rng.poisson(marks)

    def pmf(self, kmax):
        k = np.arange(kmax + 1)
        m = self.mark_law
        if isinstance(m, (Dirac, Empirical)):
            x = np.array([m.point]) if isinstance(m, Dirac) else m.values
            p = np.array([1.0]) if isinstance(m, Dirac) else m.probs
            with np.errstate(divide="ignore"):
                logx = np.log(x)
            lp = np.where(x[:, None] > 0, k * logx[:, None] - x[:, None] - sc.gammaln(k + 1),
                          np.where(k == 0, 0.0, -np.inf))
            return p @ np.exp(lp)
        # Pareto mixture: P(rho=k) = E[e^{-X} X^k / k!], by quadrature over U
        from scipy import integrate

        def one(kk):
            def f(v):
                x = m.scale * (v ** (-1.0 / (1.0 + m.beta)) - 1.0)
                return math.exp(-x + kk * math.log(x) - math.lgamma(kk + 1)) if x > 0 else float(kk == 0)
            return integrate.quad(f, 0.0, 1.0, limit=400, epsabs=1e-14)[0]
        return np.array([one(kk) for kk in k])

    def codes(self):
        m = self.mark_law
        if isinstance(m, Dirac):
            return _codes.OFF_DIRAC, np.array([m.point])
        if isinstance(m, ParetoTail):
            return _codes.OFF_PARETO, np.array([m.beta, m.scale, math.gamma(1.0 - m.beta)])
        cdf = np.cumsum(m.probs)
        n = len(m.atoms)
        return _codes.OFF_ATOMS, np.concatenate([[n], m.values, cdf])

    def to_dict(self):
        return {"type": "hawkes_mixed_poisson", "mark_law": self.mark_law.to_dict()}


_STABLE_TABLE = 1 << 16


@dataclass(frozen=True)
class StableBranching(OffspringLaw):
    """``G(s) = s + (1 - s)**(1+beta) / (1+beta)``, so ``H(u) = u**(1+beta)/(1+beta)``.

    Sampling is by exact inversion of the tail
    ``P(rho > k) = beta Gamma(k - beta) / ((1+beta) Gamma(1-beta) k!)``,
    tabulated for small ``k`` and solved by Newton's method on its log
    beyond the table.
    """

    beta: float = 0.5

    def __post_init__(self):
        if not (0.0 < self.beta < 1.0):
            raise DomainError(f"StableBranching beta must lie in (0, 1), got {self.beta}")

    def _G(self, s):
        return s + np.power(1.0 - s, 1.0 + self.beta) / (1.0 + self.beta)

    def _H(self, u):
        return np.power(u, 1.0 + self.beta) / (1.0 + self.beta)

    def _dH(self, u):
        return np.power(u, self.beta)

    @property
    def mean(self):
        return 1.0

    @property
    def sigma2(self):
        return math.inf

    @property
    def beta_exponent(self):
        return self.beta

    @property
    def K(self):
        return 1.0 / (1.0 + self.beta)

    def pmf(self, kmax):
        b = self.beta
        p = np.zeros(kmax + 1)
        p[0] = 1.0 / (1.0 + b)
        if kmax >= 2:
            p[2] = b / 2.0
            for k in range(2, kmax):
                p[k + 1] = p[k] * (k - 1.0 - b) / (k + 1.0)
        return p

    def log_tail(self, k):
        """``log P(rho > k)`` for real ``k >= 1`` (continuous in ``k``)."""
        b = self.beta
        k = np.asarray(k, dtype=float)
        return (math.log(b / (1.0 + b)) - math.lgamma(1.0 - b)
                + sc.gammaln(k - b) - sc.gammaln(k + 1.0))

    @cached_property
    def _tail_table(self):
        k = np.arange(1, _STABLE_TABLE + 1)
        return np.exp(self.log_tail(k))  # entry j is P(rho > j + 1)

    def sample(self, rng, size, marks=None):
        v = 1.0 - rng.random(size)  # in (0, 1]
        return _codes.stable_invert_vec(v, self.beta, self._tail_table)

    def codes(self):
        b = self.beta
        head = np.array([b, math.lgamma(1.0 - b), float(_STABLE_TABLE)])
        return _codes.OFF_STABLE, np.concatenate([head, self._tail_table])

    def to_dict(self):
        return {"type": "stable_branching", "beta": self.beta}


@dataclass(frozen=True)
class ExplicitPmf(OffspringLaw):
    """Offspring count with an explicit finite pmf ``probabilities[k] = P(rho = k)``."""

    probabilities: tuple = (0.0, 1.0)

    def __post_init__(self):
        p = tuple(float(x) for x in self.probabilities)
        if not p or any(x < 0 for x in p):
            raise DomainError("ExplicitPmf needs nonnegative probabilities")
        if abs(sum(p) - 1.0) > 1e-12:
            raise DomainError("ExplicitPmf probabilities must sum to 1")
        object.__setattr__(self, "probabilities", p)

    @property
    def p(self):
        return np.array(self.probabilities)

    def _G(self, s):
        return np.polynomial.polynomial.polyval(s, self.p)

    def _H(self, u):
        p = self.p
        out = u * (1.0 - self.mean)
        for k in range(2, len(p)):
            if p[k] > 0:
                out = out + p[k] * _binom_rem(k, u)
        return out

    def _dH(self, u):
        p = self.p
        out = np.full_like(u, 1.0 - self.mean)
        for k in range(1, len(p)):
            if p[k] > 0:
                out = out + p[k] * k * (1.0 - np.power(1.0 - u, k - 1))
        return out

    @property
    def mean(self):
        return float(np.arange(len(self.p)) @ self.p)

    @property
    def sigma2(self):
        k = np.arange(len(self.p))
        return float(k**2 @ self.p) - self.mean**2

    @property
    def beta_exponent(self):
        return 1.0

    @property
    def K(self):
        return 0.5 * self.sigma2

    def sample(self, rng, size, marks=None):
        cdf = np.cumsum(self.p)
        idx = np.searchsorted(cdf, rng.random(size) * cdf[-1], side="right")
        return np.minimum(idx, len(self.p) - 1).astype(np.int64)

    def pmf(self, kmax):
        out = np.zeros(kmax + 1)
        n = min(kmax + 1, len(self.p))
        out[:n] = self.p[:n]
        return out

    def codes(self):
        cdf = np.cumsum(self.p)
        return _codes.OFF_PMF, np.concatenate([[len(self.p)], cdf])

    def to_dict(self):
        return {"type": "explicit_pmf", "probabilities": list(self.probabilities)}


# ---------------------------------------------------------------------------
# displacement kernels


@dataclass(frozen=True)
class DisplacementKernel:
    """A probability density on ``[0, inf)``; subclasses define it."""

    def density(self, t):
        raise NotImplementedError

    def sf(self, t):
        raise NotImplementedError

    def cdf(self, t):
        t = np.asarray(t, dtype=float)
        return 1.0 - self.sf(t)

    def sf_integral(self, x):
        """``int_0^x P(xi > s) ds``."""
        raise NotImplementedError

    def sf_cell_integrals(self, step: float, n: int) -> np.ndarray:
        """``int_{k step}^{(k+1) step} P(xi > s) ds`` for ``k = 0..n-1``."""
        edges = step * np.arange(n + 1)
        return np.diff(self.sf_integral(edges))

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        raise NotImplementedError

    @property
    def mean(self) -> float:
        raise NotImplementedError

    @property
    def alpha_tail(self) -> float | None:
        """Tail index ``alpha`` of ``P(xi > t) ~ c_phi t**-alpha``; None if light."""
        return None

    @property
    def c_phi(self) -> float | None:
        return None

    def moment(self, p: float) -> float:
        """``E xi**p`` (may be infinite)."""
        raise NotImplementedError

    @property
    def singular_at_zero(self) -> bool:
        return False

    def codes(self):
        raise NotImplementedError


@dataclass(frozen=True)
class Exponential(DisplacementKernel):
    rate: float = 1.0

    def __post_init__(self):
        if not (self.rate > 0 and math.isfinite(self.rate)):
            raise DomainError(f"Exponential rate must be positive, got {self.rate}")

    def density(self, t):
        t = np.asarray(t, dtype=float)
        return np.where(t < 0, 0.0, self.rate * np.exp(-self.rate * np.maximum(t, 0.0)))

    def sf(self, t):
        t = np.asarray(t, dtype=float)
        return np.exp(-self.rate * np.maximum(t, 0.0))

    def sf_integral(self, x):
        x = np.asarray(x, dtype=float)
        return -np.expm1(-self.rate * x) / self.rate

    def sf_cell_integrals(self, step, n):
        lam = self.rate
        return np.exp(-lam * step * np.arange(n)) * (-np.expm1(-lam * step) / lam)

    def sample(self, rng, size):
        return rng.standard_exponential(size) / self.rate

    @property
    def mean(self):
        return 1.0 / self.rate

    def moment(self, p):
        return math.gamma(1.0 + p) / self.rate**p

    def codes(self):
        return _codes.KER_EXP, np.array([self.rate])

    def to_dict(self):
        return {"type": "exponential", "rate": self.rate}


@dataclass(frozen=True)
class MittagLeffler(DisplacementKernel):
    """Mittag-Leffler waiting times: ``P(xi > t) = E_beta(-rate t**beta)``.

    ``beta = 1`` is the exponential law with the same rate.
    """

    beta: float = 0.5
    rate: float = 1.0

    def __post_init__(self):
        if not (0.0 < self.beta <= 1.0):
            raise DomainError(f"MittagLeffler beta must lie in (0, 1], got {self.beta}")
        if not (self.rate > 0 and math.isfinite(self.rate)):
            raise DomainError(f"MittagLeffler rate must be positive, got {self.rate}")

    def density(self, t):
        t = np.asarray(t, dtype=float)
        b, lam = self.beta, self.rate
        tp = np.maximum(t, 0.0)
        with np.errstate(divide="ignore"):
            out = lam * np.power(tp, b - 1.0) * mittag_leffler(-lam * tp**b, b, b)
        return np.where(t < 0, 0.0, out)

    def sf(self, t):
        t = np.asarray(t, dtype=float)
        return mittag_leffler(-self.rate * np.maximum(t, 0.0) ** self.beta, self.beta, 1.0)

    def sf_integral(self, x):
        x = np.asarray(x, dtype=float)
        return x * mittag_leffler(-self.rate * x**self.beta, self.beta, 2.0)

    def sf_cell_integrals(self, step, n):
        if self.beta == 1.0:
            return Exponential(self.rate).sf_cell_integrals(step, n)
        out = np.empty(n)
        out[0] = float(self.sf_integral(step))
        if n > 1:
            # the tail is smooth away from 0: 8-point Gauss-Legendre per cell
            xg, wg = np.polynomial.legendre.leggauss(8)
            left = step * np.arange(1, n)
            nodes = (left[:, None] + 0.5 * step * (xg[None, :] + 1.0)).ravel()
            vals = self.sf(nodes).reshape(n - 1, 8)
            out[1:] = 0.5 * step * (vals @ wg)
        return out

    def sample(self, rng, size):
        b, lam = self.beta, self.rate
        e = rng.standard_exponential(size)
        if b == 1.0:
            return e / lam
        return (e / lam) ** (1.0 / b) * positive_stable(rng, b, size)

    @property
    def mean(self):
        return 1.0 / self.rate if self.beta == 1.0 else math.inf

    @property
    def alpha_tail(self):
        return None if self.beta == 1.0 else self.beta

    @property
    def c_phi(self):
        if self.beta == 1.0:
            return None
        return 1.0 / (self.rate * math.gamma(1.0 - self.beta))

    def moment(self, p):
        b = self.beta
        if b == 1.0:
            return math.gamma(1.0 + p) / self.rate**p
        if p >= b:
            return math.inf
        # E xi^p = Gamma(1+p/b) E S^p / rate^(p/b) with E S^p = Gamma(1-p/b)/Gamma(1-p)
        return (math.gamma(1.0 + p / b) * math.gamma(1.0 - p / b)
                / math.gamma(1.0 - p) / self.rate ** (p / b))

    @property
    def singular_at_zero(self):
        return self.beta < 1.0

    def codes(self):
        return _codes.KER_ML, np.array([self.beta, self.rate])

    def to_dict(self):
        return {"type": "mittag_leffler", "beta": self.beta, "rate": self.rate}


@dataclass(frozen=True)
class ParetoLike(DisplacementKernel):
    """Lomax kernel ``P(xi > t) = (s / (s + t))**alpha`` with ``s = c_phi**(1/alpha)``.

    Then ``t**alpha P(xi > t) -> c_phi`` exactly; ``c_phi = 1`` is the unit-scale
    density ``alpha (1 + t)**(-alpha - 1)``.
    """

    alpha: float = 0.5
    c_phi_value: float = 1.0

    def __post_init__(self):
        if not (0.0 < self.alpha < 1.0):
            raise DomainError(f"ParetoLike alpha must lie in (0, 1), got {self.alpha}")
        if not (self.c_phi_value > 0 and math.isfinite(self.c_phi_value)):
            raise DomainError("ParetoLike c_phi must be positive")

    @property
    def scale(self):
        return self.c_phi_value ** (1.0 / self.alpha)

    def density(self, t):
        t = np.asarray(t, dtype=float)
        a, s = self.alpha, self.scale
        tp = np.maximum(t, 0.0)
        return np.where(t < 0, 0.0, a / s * (s / (s + tp)) ** (a + 1.0))

    def sf(self, t):
        t = np.asarray(t, dtype=float)
        s = self.scale
        return (s / (s + np.maximum(t, 0.0))) ** self.alpha

    def sf_integral(self, x):
        x = np.asarray(x, dtype=float)
        a, s = self.alpha, self.scale
        # s^a ((s+x)^(1-a) - s^(1-a)) / (1-a), written via expm1 for small x
        return s * np.expm1((1.0 - a) * np.log1p(x / s)) / (1.0 - a)

    def sf_cell_integrals(self, step, n):
        a, s = self.alpha, self.scale
        left = s + step * np.arange(n)
        return s**a * left ** (1.0 - a) * np.expm1((1.0 - a) * np.log1p(step / left)) / (1.0 - a)

    def sample(self, rng, size):
        v = 1.0 - rng.random(size)
        return self.scale * (np.power(v, -1.0 / self.alpha) - 1.0)

    @property
    def mean(self):
        return math.inf

    @property
    def alpha_tail(self):
        return self.alpha

    @property
    def c_phi(self):
        return self.c_phi_value

    def moment(self, p):
        a, s = self.alpha, self.scale
        if p >= a:
            return math.inf
        return s**p * math.gamma(1.0 + p) * math.gamma(a - p) / math.gamma(a)

    def codes(self):
        return _codes.KER_PARETO, np.array([self.alpha, self.scale])

    def to_dict(self):
        return {"type": "pareto_like", "alpha": self.alpha, "c_phi": self.c_phi_value}


@dataclass(frozen=True)
class TabulatedDensity(DisplacementKernel):
    """Piecewise-linear density through ``(times[i], values[i])``, zero beyond."""

    times: tuple = (0.0, 1.0, 2.0)
    values: tuple = (0.0, 1.0, 0.0)

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if t.ndim != 1 or t.shape != v.shape or t.size < 2:
            raise DomainError("TabulatedDensity needs matching 1-d times and values (>= 2 points)")
        if t[0] != 0.0 or np.any(np.diff(t) <= 0):
            raise DomainError("TabulatedDensity times must start at 0 and increase")
        if np.any(v < 0) or not np.all(np.isfinite(v)):
            raise DomainError("TabulatedDensity values must be finite and nonnegative")
        mass = float(np.sum(0.5 * (v[1:] + v[:-1]) * np.diff(t)))
        if abs(mass - 1.0) > 1e-8:
            raise DomainError(f"TabulatedDensity must integrate to 1, got {mass:.12g}")
        object.__setattr__(self, "times", tuple(t.tolist()))
        object.__setattr__(self, "values", tuple(v.tolist()))

    @cached_property
    def _arrays(self):
        t = np.array(self.times)
        v = np.array(self.values)
        cdf = np.concatenate([[0.0], np.cumsum(0.5 * (v[1:] + v[:-1]) * np.diff(t))])
        # int_0^{t_i} cdf(s) ds, exact for the piecewise-quadratic cdf
        h = np.diff(t)
        cell = h * cdf[:-1] + h * h * (2.0 * v[:-1] + v[1:]) / 6.0
        icdf = np.concatenate([[0.0], np.cumsum(cell)])
        return t, v, cdf / cdf[-1], icdf

    def _locate(self, x):
        t, v, cdf, icdf = self._arrays
        x = np.asarray(x, dtype=float)
        xc = np.clip(x, 0.0, t[-1])
        i = np.clip(np.searchsorted(t, xc, side="right") - 1, 0, t.size - 2)
        d = xc - t[i]
        h = t[i + 1] - t[i]
        slope = (v[i + 1] - v[i]) / h
        return x, xc, i, d, slope

    def density(self, x):
        t, v, _, _ = self._arrays
        x, xc, i, d, slope = self._locate(x)
        out = v[i] + slope * d
        return np.where((x < 0) | (x > t[-1]), 0.0, out)

    def cdf(self, x):
        t, v, cdf, _ = self._arrays
        x, xc, i, d, slope = self._locate(x)
        return cdf[i] + v[i] * d + 0.5 * slope * d * d

    def sf(self, x):
        return 1.0 - self.cdf(x)

    def sf_integral(self, x):
        t, v, cdf, icdf = self._arrays
        x, xc, i, d, slope = self._locate(x)
        int_cdf = icdf[i] + cdf[i] * d + v[i] * d * d / 2.0 + slope * d**3 / 6.0
        int_cdf = int_cdf + np.maximum(x - t[-1], 0.0)  # cdf = 1 beyond the support
        return x - int_cdf

    def sample(self, rng, size):
        t, v, cdf, _ = self._arrays
        w = rng.random(size)
        i = np.clip(np.searchsorted(cdf, w, side="right") - 1, 0, t.size - 2)
        h = t[i + 1] - t[i]
        slope = (v[i + 1] - v[i]) / h
        r = w - cdf[i]
        # solve v_i d + slope d^2 / 2 = r on [0, h], stable form of the root
        disc = np.sqrt(np.maximum(v[i] ** 2 + 2.0 * slope * r, 0.0))
        denom = v[i] + disc
        with np.errstate(divide="ignore", invalid="ignore"):
            d = np.where(denom > 0, 2.0 * r / denom, 0.0)
        return t[i] + np.clip(d, 0.0, h)

    @property
    def mean(self):
        return float(self.sf_integral(self.times[-1]))

    def moment(self, p):
        xg, wg = np.polynomial.legendre.leggauss(16)
        t = np.array(self.times)
        total = 0.0
        for lo, hi in zip(t[:-1], t[1:]):
            x = lo + 0.5 * (hi - lo) * (xg + 1.0)
            total += 0.5 * (hi - lo) * float(wg @ (x**p * self.density(x)))
        return total

    def codes(self):
        t, v, cdf, _ = self._arrays
        return _codes.KER_TAB, np.concatenate([[t.size], t, v, cdf])

    def to_dict(self):
        return {"type": "tabulated", "times": list(self.times), "values": list(self.values)}


# ---------------------------------------------------------------------------
# positive stable variables


def positive_stable(rng: np.random.Generator, index: float, size) -> np.ndarray:
    """Positive strictly stable draws with ``E exp(-s S) = exp(-s**index)``.

    Kanter's representation: with ``U`` uniform on (0, pi) and ``E`` standard
    exponential, ``S = sin(a U) / sin(U)**(1/a) * (sin((1-a) U) / E)**((1-a)/a)``.
    """
    a = float(index)
    if not (0.0 < a < 1.0):
        raise DomainError(f"stable index must lie in (0, 1), got {a}")
    u = np.pi * (1.0 - rng.random(size))  # (0, pi]
    u = np.where(u >= np.pi, np.nextafter(np.pi, 0.0), u)
    e = rng.standard_exponential(size)
    return (np.sin(a * u) / np.sin(u) ** (1.0 / a)) * (np.sin((1.0 - a) * u) / e) ** ((1.0 - a) / a)
