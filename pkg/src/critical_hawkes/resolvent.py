"""Renewal resolvent ``R = sum_k phi^{*k}`` and its integral ``I_R``.

The integrated renewal equation ``I_R = Phi + phi * I_R`` (``Phi`` the cdf
of the kernel) is discretised by product integration: ``I_R`` is linear
between grid nodes and the kernel is integrated exactly against each hat
function.  The weights only need the tail ``S = 1 - Phi`` at the nodes and
its integral over each cell, so densities with an integrable singularity
at 0 are handled without special cases.  The resulting lower-triangular
Toeplitz system is solved by forward substitution (small grids) or by
Newton iteration for the reciprocal power series with FFT products.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import fft as sfft

from . import io
from ._accel import USE_NUMBA, njit
from ._parallel import run_blocks
from .errors import DivergenceError, DomainError, HorizonError
from .grid import GridFunction
from .primitives import DisplacementKernel, Exponential, MittagLeffler, _codes

MAX_NODES = 1 << 22
DIRECT_MAX = 1 << 13


@dataclass(frozen=True)
class ResolventTable:
    """``R`` and ``I_R`` on a uniform grid over ``[0, horizon]``."""

    step: float
    horizon: float
    R: GridFunction
    I_R: GridFunction
    method: str
    meta: dict = field(default_factory=dict)

    @property
    def t(self):
        return self.I_R.t

    def I_R_at(self, x):
        """Linear interpolation of ``I_R``; raises beyond the horizon."""
        x = np.asarray(x, dtype=float)
        if np.any(x > self.horizon * (1 + 1e-12)):
            raise HorizonError(f"table horizon {self.horizon} is shorter than {float(np.max(x))}")
        return np.interp(x, self.t, self.I_R.values)

    def integral_I_R(self, x):
        """``int_0^x I_R(s) ds`` (trapezoid on the piecewise-linear ``I_R``)."""
        x = np.asarray(x, dtype=float)
        if np.any(x > self.horizon * (1 + 1e-12)):
            raise HorizonError(f"table horizon {self.horizon} is shorter than {float(np.max(x))}")
        v = self.I_R.values
        cum = np.concatenate([[0.0], np.cumsum(0.5 * (v[1:] + v[:-1]) * self.step)])
        i = np.clip((x / self.step).astype(np.int64), 0, v.size - 2)
        d = x - i * self.step
        vi = v[i]
        slope = (v[i + 1] - v[i]) / self.step
        return cum[i] + vi * d + 0.5 * slope * d * d

    def to_csv(self, path):
        """Write ``t, R, I_R`` to ``path`` and metadata to ``path`` + ``.json``."""
        path = io.write_csv(path, {"t": self.t, "R": self.R.values, "I_R": self.I_R.values})
        io.write_json(str(path) + ".json", {
            "step": self.step, "horizon": self.horizon, "method": self.method, **self.meta,
        })
        return path


# ---------------------------------------------------------------------------
# weights


def hat_weights(kernel: DisplacementKernel, step: float, n: int):
    """Product-integration weights on ``n`` cells.

    Returns ``(a, b, S)`` with ``a[k] = int_cell phi(r) (1 - xi) dr`` and
    ``b[k] = int_cell phi(r) xi dr`` on cell ``k = [k step, (k+1) step]``,
    ``xi`` the local coordinate in [0, 1], and ``S`` the tail at the
    ``n + 1`` nodes.
    """
    S = np.asarray(kernel.sf(step * np.arange(n + 1)), dtype=float)
    C = kernel.sf_cell_integrals(step, n) / step
    a = S[:-1] - C
    b = C - S[1:]
    # rounding can push tiny weights below zero far in the tail
    return np.maximum(a, 0.0), np.maximum(b, 0.0), S


@njit
def _forward_solve(w, rhs):
    n = rhs.size
    x = np.zeros(n)
    d = 1.0 - w[0]
    for i in range(1, n):
        acc = rhs[i]
        for m in range(1, i):
            acc += w[m] * x[i - m]
        x[i] = acc / d
    return x


def _forward_solve_numpy(w, rhs):
    n = rhs.size
    x = np.zeros(n)
    d = 1.0 - w[0]
    for i in range(1, n):
        x[i] = (rhs[i] + np.dot(w[1:i], x[i - 1:0:-1])) / d
    return x


def _conv(a, b, n):
    """First ``n`` coefficients of the product of two series."""
    m = a.size + b.size - 1
    size = sfft.next_fast_len(m, real=True)
    return sfft.irfft(sfft.rfft(a, size) * sfft.rfft(b, size), size)[:n]


def series_reciprocal(c, n):
    """First ``n`` coefficients of ``1 / sum_k c_k z^k`` (``c_0 != 0``)."""
    v = np.array([1.0 / c[0]])
    k = 1
    while k < n:
        k2 = min(2 * k, n)
        cv = _conv(c[:k2], v, k2)
        e = -cv
        e[0] += 2.0
        v = _conv(v, e, k2)
        k = k2
    return v[:n]


def solve_toeplitz(w, rhs, method="auto", use_numba=USE_NUMBA):
    """Solve ``x_i = rhs_i + sum_{m=0}^{i} w_m x_{i-m}`` with ``x_0 = 0``."""
    if method == "auto":
        method = "direct" if rhs.size <= DIRECT_MAX else "fft"
    if method == "direct":
        kern = _forward_solve if use_numba else _forward_solve_numpy
        return kern(np.ascontiguousarray(w, dtype=float), np.ascontiguousarray(rhs, dtype=float))
    c = -np.asarray(w, dtype=float).copy()
    c[0] += 1.0
    inv = series_reciprocal(c, rhs.size)
    r = np.asarray(rhs, dtype=float).copy()
    r[0] = 0.0
    return _conv(r, inv, rhs.size)


# ---------------------------------------------------------------------------
# resolvent tables


def resolvent_volterra(kernel: DisplacementKernel, horizon: float, step: float,
                       method: str = "auto") -> ResolventTable:
    """Solve the renewal equation on ``[0, horizon]`` by product integration.

    Parameters
    ----------
    kernel : DisplacementKernel
    horizon, step : float
        ``step <= horizon / 50``.  Grids beyond ``2**22`` nodes are coarsened
        uniformly to that size (with a warning).
    method : {"auto", "direct", "fft"}
        Linear solver for the Toeplitz system.

    Raises
    ------
    DivergenceError
        If some computed ``R`` is below ``-1e-8``.
    """
    if not (horizon > 0 and step > 0):
        raise DomainError("horizon and step must be positive")
    if step > horizon / 50.0:
        raise DomainError(f"step {step} exceeds horizon/50 = {horizon / 50.0}")
    n = int(math.ceil(horizon / step - 1e-9))
    meta = {}
    if n + 1 > MAX_NODES:
        n = MAX_NODES - 1
        new = horizon / n
        warnings.warn(f"resolvent grid capped at 2**22 nodes; step {step} -> {new}", RuntimeWarning)
        meta["coarsened_from_step"] = step
        step = new
    step = horizon / n
    a, b, S = hat_weights(kernel, step, n)
    w = np.zeros(n + 1)
    w[: n] += a
    w[1: n + 1] += b
    Phi = 1.0 - S
    I = solve_toeplitz(w, Phi, method)
    # R = phi + phi * R with R piecewise constant between nodes
    dI = np.diff(I) / step
    mass = S[:-1] - S[1:]
    conv = np.zeros(n + 1)
    conv[1:] = _conv(mass, dI, n)
    with np.errstate(divide="ignore"):
        dens = np.asarray(kernel.density(step * np.arange(n + 1)), dtype=float)
    R = dens + conv
    if kernel.singular_at_zero:
        R[0] = math.inf
    if np.nanmin(R[1:]) < -1e-8:
        raise DivergenceError(f"negative resolvent value {np.nanmin(R[1:]):.3g}; step too coarse")
    R = np.maximum(R, 0.0)
    return ResolventTable(step, n * step, GridFunction(step, R, name="R"),
                          GridFunction(step, I, name="I_R"), "volterra",
                          {"solver": "direct" if (method == "direct" or (method == "auto" and n + 1 <= DIRECT_MAX)) else "fft", **meta})


def resolvent_closed_form(kernel: DisplacementKernel, horizon: float, step: float) -> ResolventTable:
    """Exact tables: ``R = rate`` (exponential) and
    ``R(s) = rate s**(beta-1) / Gamma(beta)`` (Mittag-Leffler)."""
    n = int(math.ceil(horizon / step - 1e-9))
    step = horizon / n
    t = step * np.arange(n + 1)
    if isinstance(kernel, Exponential) or (isinstance(kernel, MittagLeffler) and kernel.beta == 1.0):
        lam = kernel.rate
        return ResolventTable(step, horizon, GridFunction(step, np.full(n + 1, lam), name="R"),
                              GridFunction(step, lam * t, name="I_R"), "closed_form_exp")
    if isinstance(kernel, MittagLeffler):
        b, lam = kernel.beta, kernel.rate
        with np.errstate(divide="ignore"):
            R = lam * t ** (b - 1.0) / math.gamma(b)
        return ResolventTable(step, horizon, GridFunction(step, R, name="R"),
                              GridFunction(step, lam * t**b / math.gamma(1.0 + b), name="I_R"),
                              "closed_form_ml")
    raise DomainError(f"no closed-form resolvent for {type(kernel).__name__}")


# ---------------------------------------------------------------------------
# renewal Monte Carlo


@dataclass(frozen=True)
class RenewalEstimate:
    T: float
    estimate: float
    std_error: float
    replicas: int
    truncated: int


@njit
def _renewal_counts(code, p, T, n, cap, rng):
    out = np.zeros(n, dtype=np.int64)
    trunc = 0
    for r in range(n):
        s = 0.0
        k = 0
        while True:
            s += _codes.sample_disp(code, p, rng)
            if s > T:
                break
            k += 1
            if k >= cap:
                trunc += 1
                break
        out[r] = k
    return out, trunc


def _renewal_counts_numpy(kernel, T, n, cap, rng):
    out = np.zeros(n, dtype=np.int64)
    s = np.zeros(n)
    alive = np.arange(n)
    trunc = 0
    while alive.size:
        s[alive] += kernel.sample(rng, alive.size)
        ok = s[alive] <= T
        out[alive[ok]] += 1
        alive = alive[ok]
        over = out[alive] >= cap
        trunc += int(over.sum())
        alive = alive[~over]
    return out, trunc


def _renewal_block(seed, start, size, kernel, T, cap, use_numba):
    rng = np.random.default_rng(seed)
    if use_numba:
        code, p = kernel.codes()
        return _renewal_counts(code, p, float(T), size, cap, rng)
    return _renewal_counts_numpy(kernel, T, size, cap, rng)


def resolvent_renewal_mc(kernel: DisplacementKernel, T: float, replicas: int, rng,
                         cap: int = 10**7, workers: int = 1,
                         use_numba: bool = USE_NUMBA) -> RenewalEstimate:
    """Estimate ``I_R(T) = sum_k P(xi_1 + ... + xi_k <= T)`` by counting renewals."""
    if replicas < 1000:
        raise DomainError("renewal Monte Carlo needs at least 1000 replicas")
    if T <= 0:
        return RenewalEstimate(float(T), 0.0, 0.0, replicas, 0)
    parts = run_blocks(_renewal_block, replicas, rng, (kernel, T, cap, use_numba), workers)
    counts = np.concatenate([c for c, _ in parts])
    trunc = sum(t for _, t in parts)
    return RenewalEstimate(float(T), float(counts.mean()),
                           float(counts.std(ddof=1) / math.sqrt(counts.size)), replicas, trunc)


# ---------------------------------------------------------------------------
# asymptotics


@dataclass(frozen=True)
class AsymptoticReport:
    target: float
    exponent: float
    ratio_at_horizon: float
    rel_deviation: float
    max_rel_deviation: float
    kind: str


def asymptotic_check(table: ResolventTable, constants) -> AsymptoticReport:
    """Compare ``I_R(T) / T**alpha`` (heavy tail) or ``I_R(T) / T`` (finite mean)
    with ``c_{alpha,phi}`` or ``1 / m_phi`` over the last decade of the table."""
    t = table.t
    sel = t >= table.horizon / 10.0
    if constants.alpha is not None and not math.isfinite(constants.m_phi):
        expo, target, kind = constants.alpha, constants.c_alpha_phi, "heavy_tail"
    else:
        expo, target, kind = 1.0, 1.0 / constants.m_phi, "finite_mean"
    ratio = table.I_R.values[sel] / t[sel] ** expo
    dev = np.abs(ratio / target - 1.0)
    return AsymptoticReport(target, expo, float(ratio[-1]), float(dev[-1]), float(dev.max()), kind)


def liminf_ratio(table: ResolventTable, exponent: float) -> float:
    """``min I_R(T) / T**exponent`` over the last decade of the table."""
    t = table.t
    sel = t >= table.horizon / 10.0
    return float(np.min(table.I_R.values[sel] / t[sel] ** exponent))
