"""Deterministic solvers for the Laplace functionals of ``Y_T`` and its limits.

For a step test function ``f = sum_k theta_k 1[0, t_k]`` and ``f_T(t) =
f(t/T)/F_T`` the Laplace functional of the scaled counts is ``exp(-mu int
g_T)``, with ``g_T`` the fixed point of

    g(t) = 1 - exp(-f_T(t)) G(1 - int_0^inf g(t+s) phi(s) ds).

Writing ``J(t)`` for the inner integral and ``H(u) = G(1-u) - 1 + u`` this is
``g = -expm1(-f_T) + exp(-f_T) (J - H(J))``, which keeps full relative
accuracy when ``g`` is small (as it is for large ``T``).

The limit objects are the stable-subordinator transform (light kernels),
the fractional integral equation for ``v_f`` (kernel tail index equal to the
offspring exponent) and the Riccati equation of the finite-variance case.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy import fft as sfft
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from . import io
from ._accel import USE_NUMBA, njit
from .errors import (
    BoundViolation,
    ConvergenceError,
    DivergenceError,
    DomainError,
    HorizonError,
    RegimeError,
    ResidualError,
)
from .grid import GridFunction
from .model import ModelSpec
from .primitives import _codes, positive_stable
from .resolvent import ResolventTable, hat_weights, resolvent_volterra

NEWTON_TOL = 1e-12
NEWTON_MAXITER = 50
BOUND_SLACK = 1e-8
PICARD_TOL = 1e-10
RESIDUAL_TOL = 1e-8
MAX_CELLS = 1 << 21
_BASE = 64


# ---------------------------------------------------------------------------
# queries


@dataclass(frozen=True)
class LaplaceQuery:
    """Test function ``f(t) = sum_k theta_k 1[0, t_k](t)``."""

    thetas: tuple
    times: tuple

    def __post_init__(self):
        th = tuple(float(x) for x in np.atleast_1d(self.thetas))
        ts = tuple(float(x) for x in np.atleast_1d(self.times))
        if len(th) == 0 or len(th) != len(ts):
            raise DomainError("a query needs m >= 1 thetas and as many times")
        if any(not (math.isfinite(x) and x >= 0) for x in th + ts):
            raise DomainError("thetas and times must be finite and nonnegative")
        object.__setattr__(self, "thetas", th)
        object.__setattr__(self, "times", ts)

    @property
    def a(self) -> float:
        return max(self.times)

    @property
    def is_zero(self) -> bool:
        """True when ``f`` vanishes almost everywhere."""
        return all(th == 0.0 or t == 0.0 for th, t in zip(self.thetas, self.times))

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        for th, tk in zip(self.thetas, self.times):
            out = out + th * ((t >= 0) & (t <= tk))
        return out

    def pieces(self):
        """``(edges, levels)``: ``f = levels[j]`` on ``(edges[j], edges[j+1]]``."""
        edges = np.unique(np.concatenate([[0.0], self.times]))
        levels = np.array([sum(th for th, tk in zip(self.thetas, self.times) if tk >= hi)
                           for hi in edges[1:]])
        return edges, levels

    def scaled(self, factor: float) -> "LaplaceQuery":
        return LaplaceQuery(tuple(factor * x for x in self.thetas), self.times)

    def to_dict(self):
        return {"thetas": list(self.thetas), "times": list(self.times)}


def _aligned_cells(fracs, n_min: int, n_max: int = MAX_CELLS):
    """Smallest ``n >= n_min`` with every ``frac * n`` an integer, or None."""
    den = 1
    for x in fracs:
        q = Fraction(x).limit_denominator(1 << 20)
        if abs(float(q) - x) > 1e-13:
            return None
        den = den * q.denominator // math.gcd(den, q.denominator)
        if den > n_max:
            return None
    n = den * -(-n_min // den)
    return n if n <= n_max else None


def _grid_cells(query: LaplaceQuery, length: float, step: float):
    """Cells over ``[0, length]`` with the jump points of ``f`` on nodes."""
    n_min = max(int(math.ceil(length / step - 1e-9)), 1)
    fracs = [t / query.a for t in query.times]
    n = _aligned_cells(fracs, n_min)
    if n is None:
        warnings.warn("jump points of f could not all be placed on grid nodes; "
                      "they are snapped to the nearest node", RuntimeWarning, stacklevel=3)
        n = n_min
    return n


def _kernel_scale(kernel) -> float:
    """Median of the displacement law, a natural resolution scale."""
    hi = 1.0
    while float(kernel.sf(hi)) > 0.5:
        hi *= 2.0
    return float(brentq(lambda x: float(kernel.sf(x)) - 0.5, 0.0, hi, xtol=1e-12 * hi))


def _check_regime(spec: ModelSpec, regime: str):
    viol = spec.constants.violations
    if regime in viol:
        raise RegimeError(regime, viol[regime])


# ---------------------------------------------------------------------------
# h_T


def _h_nodes(query, T, F_T, t, table, closed: bool):
    out = np.zeros_like(t)
    for th, tk in zip(query.thetas, query.times):
        x = T * tk - t
        inside = (x >= -1e-12 * max(T * tk, 1.0)) if closed else (x > 1e-12 * max(T * tk, 1.0))
        xc = np.clip(x, 0.0, None)
        out += np.where(inside, th / F_T * (1.0 + table.I_R_at(np.where(inside, xc, 0.0))), 0.0)
    return out


def solve_hT(query: LaplaceQuery, T: float, table: ResolventTable, F_T: float) -> GridFunction:
    """``h_T = f_T + int_0^inf f_T(. + s) R(s) ds`` on the table grid over ``[0, T a]``.

    For the step function ``f_T`` the integral is ``I_R(T t_k - t)`` summed
    over the active jumps, so no quadrature error beyond that of ``I_R``.

    Raises
    ------
    HorizonError
        If the table does not reach ``T a``.
    """
    length = T * query.a
    if table.horizon < length * (1 - 1e-12):
        raise HorizonError(f"resolvent table horizon {table.horizon} < T*a = {length}")
    n = int(math.ceil(length / table.step - 1e-9))
    t = table.step * np.arange(n + 1)
    return GridFunction(table.step, _h_nodes(query, T, F_T, t, table, True), name="h_T")


# ---------------------------------------------------------------------------
# g_T: backward march closed by a scalar Newton solve at each node


@njit
def _gam(f, J, hc, hp):
    e = math.exp(-f)
    return -math.expm1(-f) + e * (J - _codes.h_eval(hc, hp, J))


@njit
def _node_solve(a0, f, c, J0, hc, hp, tol, maxit):
    """Solve ``J = a0 * gam(f, J) + c`` on [0, 1] by damped Newton.

    Returns ``(J, iterations)``; ``iterations < 0`` signals failure.
    """
    e = math.exp(-f)
    J = min(max(J0, 0.0), 1.0)
    r = J - a0 * (-math.expm1(-f) + e * (J - _codes.h_eval(hc, hp, J))) - c
    for it in range(1, maxit + 1):
        d = 1.0 - a0 * e * (1.0 - _codes.dh_eval(hc, hp, J))
        step = r / d
        lam = 1.0
        while True:
            Jn = min(max(J - lam * step, 0.0), 1.0)
            rn = Jn - a0 * (-math.expm1(-f) + e * (Jn - _codes.h_eval(hc, hp, Jn))) - c
            if abs(rn) <= abs(r) or lam < 1e-6:
                break
            lam *= 0.5
        dJ = abs(Jn - J)
        J = Jn
        r = rn
        if dJ <= tol * J or dJ == 0.0 or r == 0.0:
            return J, it
    return J, -1


@njit
def _march_base(l, r, A1, B1, a0, FR, P, M, Jv, acc, hc, hp, tol, maxit, n, iters):
    for j in range(max(l, 1), r):
        s = acc[j]
        for q in range(l, j):
            s += A1[j - q] * P[q] + B1[j - q] * M[q]
        J, it = _node_solve(a0, FR[j], s, Jv[j - 1], hc, hp, tol, maxit)
        if it < 0:
            return j
        if it > iters[0]:
            iters[0] = it
        Jv[j] = J
        P[j] = _gam(FR[j], J, hc, hp)
        if j < n:
            M[j] = _gam(FR[j + 1], J, hc, hp)
    return -1


def _node_solve_py(a0, f, c, J0, hfun, dhfun, tol, maxit):
    e = math.exp(-f)
    em = -math.expm1(-f)
    J = min(max(J0, 0.0), 1.0)
    r = J - a0 * (em + e * (J - hfun(J))) - c
    for it in range(1, maxit + 1):
        step = r / (1.0 - a0 * e * (1.0 - dhfun(J)))
        lam = 1.0
        while True:
            Jn = min(max(J - lam * step, 0.0), 1.0)
            rn = Jn - a0 * (em + e * (Jn - hfun(Jn))) - c
            if abs(rn) <= abs(r) or lam < 1e-6:
                break
            lam *= 0.5
        dJ = abs(Jn - J)
        J, r = Jn, rn
        if dJ <= tol * J or dJ == 0.0 or r == 0.0:
            return J, it
    return J, -1


def _march_base_numpy(l, r, A1, B1, a0, FR, P, M, Jv, acc, hfun, dhfun, tol, maxit, n, iters):
    for j in range(max(l, 1), r):
        s = acc[j]
        if j > l:
            s += float(np.dot(A1[j - l:0:-1], P[l:j]) + np.dot(B1[j - l:0:-1], M[l:j]))
        J, it = _node_solve_py(a0, FR[j], s, Jv[j - 1], hfun, dhfun, tol, maxit)
        if it < 0:
            return j
        iters[0] = max(iters[0], it)
        Jv[j] = J
        e = math.exp(-FR[j])
        P[j] = -math.expm1(-FR[j]) + e * (J - hfun(J))
        if j < n:
            M[j] = -math.expm1(-FR[j + 1]) + math.exp(-FR[j + 1]) * (J - hfun(J))
    return -1


def _corr_add(acc, l, mid, r, P, M, A1, B1):
    """Add the contributions of indices ``[l, mid)`` to ``acc[mid:r]``."""
    L = r - l
    p, m = P[l:mid], M[l:mid]
    if L <= 512:
        c = np.convolve(p, A1[:L])[:L] + np.convolve(m, B1[:L])[:L]
    else:
        size = sfft.next_fast_len(L + mid - l, real=True)
        c = sfft.irfft(sfft.rfft(p, size) * sfft.rfft(A1[:L], size)
                       + sfft.rfft(m, size) * sfft.rfft(B1[:L], size), size)[:L]
    acc[mid:r] += c[mid - l:L]


def _march(a, b, FR, law, n, use_numba):
    """Backward march in reversed index ``j = n - i`` (``j = 0`` at ``T a``).

    ``P[j]`` and ``M[j]`` are the right and left limits of ``g`` at node
    ``j``; every node sees the later nodes through the strictly causal
    correlations ``A1 * P + B1 * M``, accumulated by divide and conquer so
    that the far part is done with FFTs.
    """
    hc, hp = _codes.h_codes(law)
    A1 = np.zeros(n + 1)
    A1[1:n] = a[1:n]
    B1 = np.zeros(n + 1)
    B1[1:n + 1] = b[:n]
    a0 = float(a[0])
    P = np.zeros(n + 1)
    M = np.zeros(n + 1)
    Jv = np.zeros(n + 1)
    acc = np.zeros(n + 1)
    M[0] = -math.expm1(-FR[1])
    iters = np.zeros(1, dtype=np.int64)
    if use_numba:
        def base(l, r):
            return _march_base(l, r, A1, B1, a0, FR, P, M, Jv, acc, hc, hp,
                               NEWTON_TOL, NEWTON_MAXITER, n, iters)
    else:
        hfun = getattr(_codes.h_eval, "py_func", _codes.h_eval)
        dhfun = getattr(_codes.dh_eval, "py_func", _codes.dh_eval)
        hpl = hp.copy()

        def base(l, r):
            return _march_base_numpy(l, r, A1, B1, a0, FR, P, M, Jv, acc,
                                     lambda u: hfun(hc, hpl, u), lambda u: dhfun(hc, hpl, u),
                                     NEWTON_TOL, NEWTON_MAXITER, n, iters)

    def rec(l, r):
        if r - l <= _BASE:
            bad = base(l, r)
            if bad >= 0:
                raise ConvergenceError(
                    f"Newton iteration did not converge at node {n - bad} of {n}; "
                    f"the grid step is probably too coarse")
            return
        mid = (l + r) // 2
        rec(l, mid)
        _corr_add(acc, l, mid, r, P, M, A1, B1)
        rec(mid, r)

    rec(0, n + 1)
    return P, M, Jv, int(iters[0])


@dataclass(frozen=True)
class PreLimitSolution:
    """``g_T`` and ``h_T`` on ``[0, T a]`` and the Laplace functional.

    Grid functions hold the left-continuous node values (``f`` includes its
    jump points); ``g_right`` and ``h_right`` hold the right limits, which
    differ only at the scaled jump points ``T t_k``.
    """

    T: float
    query: LaplaceQuery
    step: float
    g_T: GridFunction
    h_T: GridFunction
    g_right: np.ndarray
    h_right: np.ndarray
    integral: float
    laplace_value: float
    F_T: float
    meta: dict = field(default_factory=dict)

    def scaled(self):
        """``(t, T g_T(T t))`` on the node grid mapped to ``[0, a]``."""
        return self.g_T.t / self.T, self.T * self.g_T.values

    def to_csv(self, path):
        path = io.write_csv(path, {"t": self.g_T.t, "g_T": self.g_T.values,
                                   "g_T_right": self.g_right, "h_T": self.h_T.values})
        io.write_json(str(path) + ".json", {
            "query": self.query.to_dict(), "T": self.T, "step": self.step, "F_T": self.F_T,
            "integral": self.integral, "laplace_value": self.laplace_value, **self.meta,
        })
        return path


def default_step(query: LaplaceQuery, T: float, spec: ModelSpec) -> float:
    """``min(T a / 4096, median / 20)`` of the displacement law."""
    return min(T * query.a / 4096.0, _kernel_scale(spec.kernel) / 20.0)


def solve_gT(query: LaplaceQuery, T: float, spec: ModelSpec, step: float | None = None,
             check_bounds: bool = True, use_numba: bool = USE_NUMBA) -> PreLimitSolution:
    """Pre-limit Laplace functional ``exp(-mu int g_T)`` by backward marching.

    Parameters
    ----------
    step
        Grid step; must be at most ``T a / 1000``.  It is decreased slightly
        so that every ``T t_k`` is a grid node.

    Raises
    ------
    ConvergenceError
        If a node's Newton iteration does not converge.
    BoundViolation
        If ``g_T > h_T + 1e-8`` somewhere on the grid.
    """
    T = float(T)
    if not (T > 0 and math.isfinite(T)):
        raise DomainError(f"T must be positive, got {T}")
    F_T = spec.constants.F_T(T)
    if query.is_zero:
        z = GridFunction(1.0, np.zeros(2), name="g_T")
        return PreLimitSolution(T, query, 1.0, z, GridFunction(1.0, np.zeros(2), name="h_T"),
                                np.zeros(2), np.zeros(2), 0.0, 1.0, F_T, {"cells": 1})
    length = T * query.a
    if step is None:
        step = default_step(query, T, spec)
    if step > length / 1000.0 * (1 + 1e-12):
        raise DomainError(f"grid step {step} exceeds T*a/1000 = {length / 1000.0}")
    n = _grid_cells(query, length, step)
    d = length / n
    a, b, _ = hat_weights(spec.kernel, d, n)
    t = d * np.arange(n + 1)
    Fc = query((t[:-1] + 0.5 * d) / T) / F_T
    FR = np.zeros(n + 1)
    FR[1:] = Fc[::-1]
    P, M, Jv, its = _march(a, b, FR, spec.offspring, n, use_numba)
    g_right = P[::-1].copy()
    g_left = M[::-1].copy()
    g_left[0] = g_right[0]
    integral = float(0.5 * d * np.sum(g_right[:-1] + g_left[1:]))
    value = math.exp(-spec.mu * integral)

    table = resolvent_volterra(spec.kernel, max(length, 50 * d), d)
    h_left = _h_nodes(query, T, F_T, t, table, True)
    h_right = _h_nodes(query, T, F_T, t, table, False)
    excess = max(float(np.max(g_left - h_left)), float(np.max(g_right - h_right)))
    if check_bounds and excess > BOUND_SLACK:
        raise BoundViolation(f"g_T exceeds h_T by {excess:.3e} on the grid")
    return PreLimitSolution(
        T, query, d,
        GridFunction(d, g_left, name="g_T"),
        GridFunction(d, h_left, name="h_T"),
        g_right, h_right, integral, value, F_T,
        {"cells": n, "newton_max_iterations": its, "bound_excess": excess,
         "backend": "numba" if use_numba else "numpy"},
    )


# ---------------------------------------------------------------------------
# limit solutions


@dataclass(frozen=True)
class LimitSolution:
    """Limit Laplace functional; ``v`` is None in the stable-subordinator case."""

    regime: str
    query: LaplaceQuery
    v: GridFunction | None
    laplace_value: float
    residual_norm: float
    integral: float
    meta: dict = field(default_factory=dict)

    def to_csv(self, path):
        v = self.v if self.v is not None else GridFunction(1.0, np.zeros(0), name="v")
        path = io.write_csv(path, {"t": v.t, "v": v.values})
        io.write_json(str(path) + ".json", {
            "regime": self.regime, "query": self.query.to_dict(),
            "laplace_value": self.laplace_value, "integral": self.integral,
            "residual_norm": self.residual_norm, **self.meta,
        })
        return path


def stable_limit_exponent(query: LaplaceQuery, beta: float, K: float, mu: float) -> float:
    """``mu K^(-1/(1+beta)) int f^(1/(1+beta))``, exact on the pieces of ``f``."""
    edges, levels = query.pieces()
    r = 1.0 / (1.0 + beta)
    return float(mu * K ** (-r) * np.sum(np.diff(edges) * levels ** r))


def limit_laplace_stable(query: LaplaceQuery, spec: ModelSpec) -> float:
    """Limit transform ``exp(-mu K^(-1/(1+beta)) int f^(1/(1+beta)))`` for a light kernel.

    The rate ``mu`` enters through the immigration Poisson functional; the
    stable subordinator description ``K^-1 L`` corresponds to ``mu = 1``.
    """
    _check_regime(spec, "alpha_gt_beta")
    c = spec.constants
    return math.exp(-stable_limit_exponent(query, c.beta, c.K, spec.mu))


def limit_solution_stable(query: LaplaceQuery, spec: ModelSpec) -> LimitSolution:
    _check_regime(spec, "alpha_gt_beta")
    c = spec.constants
    e = stable_limit_exponent(query, c.beta, c.K, spec.mu)
    return LimitSolution("alpha_gt_beta", query, None, math.exp(-e), 0.0, e / spec.mu, {})


def fractional_weights(beta: float, n: int):
    """``(A, B)`` with ``A_k = int_k^{k+1} x^(beta-1) (k+1-x) dx`` and ``B_k`` the
    same with ``(x-k)``, evaluated without cancellation."""
    A = np.empty(n)
    B = np.empty(n)
    A[0] = 1.0 / (beta * (beta + 1.0))
    B[0] = 1.0 / (beta + 1.0)
    if n > 1:
        y, w = np.polynomial.legendre.leggauss(20)
        y = 0.5 * (y + 1.0)
        w = 0.5 * w
        k = np.arange(1, n, dtype=float)[:, None]
        base = (k + y) ** (beta - 1.0)
        B[1:] = base @ (w * y)
        A[1:] = base @ (w * (1.0 - y))
    return A, B


def _anticorr(K, w, n):
    """``sum_k K_k w_{i+k}`` for ``i = 0..n`` (``w`` of length ``n + 1``)."""
    size = sfft.next_fast_len(2 * (n + 1), real=True)
    c = sfft.irfft(sfft.rfft(K, size) * sfft.rfft(w[::-1], size), size)
    return c[n::-1][: n + 1] if False else c[:n + 1][::-1]


def solve_v_critical(query: LaplaceQuery, spec: ModelSpec, step: float | None = None,
                     start: str = "zero", tol: float = PICARD_TOL,
                     max_iter: int = 20000, sigma: float | None = None) -> LimitSolution:
    """Solve ``v = beta c int_0^inf (f - K v^(1+beta))(. + s) s^(beta-1) ds``.

    The fractional integral of the piecewise-linear ``v^(1+beta)`` is exact
    product integration against ``s^(beta-1)``; the forcing term is exact.
    Picard iterates are clamped at 0 and stop when both the plain sup norm
    and the weighted norm ``sup e^(-sigma (a-t)) |dv|`` of the update fall
    below ``tol``.

    Parameters
    ----------
    start
        ``"zero"`` or ``"bound"`` (the constant a-priori upper bound).

    Raises
    ------
    ConvergenceError
        If the weighted update does not decay over 25 iterations for any of
        ``sigma, 2 sigma, ..., 16 sigma``.
    """
    _check_regime(spec, "alpha_eq_beta")
    c = spec.constants
    beta, K = c.beta, c.K
    coef = beta * c.c_beta_phi
    a = query.a
    if query.is_zero:
        v = GridFunction(max(a, 1.0), np.zeros(2), name="v")
        return LimitSolution("alpha_eq_beta", query, v, 1.0, 0.0, 0.0, {"iterations": 0})
    if step is None:
        step = a / 4096.0
    n = _grid_cells(query, a, step)
    d = a / n
    t = d * np.arange(n + 1)
    forcing = np.zeros(n + 1)
    for th, tk in zip(query.thetas, query.times):
        forcing += th * np.clip(tk - t, 0.0, None) ** beta / beta
    forcing *= coef
    A, B = fractional_weights(beta, n)
    Aw = np.zeros(n + 1)
    Aw[:n] = A * d**beta
    Bs = np.zeros(n + 1)
    Bs[:n] = B * d**beta
    # B pairs with w_{i+k+1}: shift by one lag
    Bw = np.concatenate([[0.0], Bs[:n]])

    bound = float(forcing[0])
    C1 = 2.0 * K * (1.0 + beta) * coef * bound**beta
    if sigma is None:
        sigma = max((2.0 * C1 * math.gamma(beta)) ** (1.0 / beta) * 1.01, 1e-12)
    sigmas = sigma * 2.0 ** np.arange(5)
    weights = np.exp(-np.outer(sigmas, a - t))

    def update(v):
        w = v ** (1.0 + beta)
        conv = _anticorr(Aw, w, n) + _anticorr(Bw, w, n)
        out = forcing - coef * K * conv
        out[n] = 0.0
        return np.maximum(out, 0.0)

    v = np.zeros(n + 1) if start == "zero" else np.where(t < a, bound, 0.0)
    if start not in ("zero", "bound"):
        raise ValueError("start must be 'zero' or 'bound'")
    hist = []
    level = 0
    plain = np.inf
    it = 0
    for it in range(1, max_iter + 1):
        vn = update(v)
        dv = np.abs(vn - v)
        v = vn
        if not np.all(np.isfinite(v)):
            raise DivergenceError("Picard iterate is not finite")
        wn = np.max(weights * dv, axis=1)
        plain = float(dv.max())
        hist.append(wn)
        if wn[level] < tol and plain < tol:
            break
        if it > 25:
            while level < 5 and hist[-1][level] >= hist[-26][level] and hist[-1][level] > 0:
                level += 1
            if level >= 5:
                raise ConvergenceError(
                    "Picard update did not contract in the weighted norm over 25 iterations")
    else:
        raise ConvergenceError(f"Picard iteration did not reach {tol} in {max_iter} iterations")
    resid = float(np.max(np.abs(v - update(v))))
    integral = float(d * (v.sum() - 0.5 * (v[0] + v[-1])))
    return LimitSolution(
        "alpha_eq_beta", query, GridFunction(d, v, name="v"),
        math.exp(-spec.mu * integral), resid, integral,
        {"iterations": it, "sigma": float(sigmas[level]), "cells": n, "start": start,
         "bound": bound, "coefficient": coef, "K": K, "weighted_change": float(hist[-1][level]),
         "plain_change": plain},
    )


def solve_v_star(query: LaplaceQuery, spec: ModelSpec, points: int = 1001,
                 rtol: float = 1e-12, atol: float = 1e-14) -> LimitSolution:
    """Finite-variance limit through ``v' = (s2 / (2 m)) v^2 - f / m``, ``v(a) = 0``.

    ``s2`` is the offspring variance and ``m`` the kernel mean.  The ODE is
    integrated backward piece by piece between the jump points of ``f``
    with an adaptive Dormand-Prince pair, together with ``int v``.  The
    integral form is re-checked afterward with Gauss-Legendre quadrature of
    the dense output.

    Raises
    ------
    ResidualError
        If the integral-form residual exceeds ``1e-8``.
    """
    _check_regime(spec, "finite_variance")
    c = spec.constants
    return riccati_limit(query, spec.mu, c.m_phi, c.sigma_G2, points, rtol, atol)


def riccati_limit(query: LaplaceQuery, mu: float, m_phi: float, sigma_G2: float,
                  points: int = 1001, rtol: float = 1e-12, atol: float = 1e-14) -> LimitSolution:
    """:func:`solve_v_star` with explicit parameters."""
    a = query.a
    if query.is_zero:
        v = GridFunction(max(a, 1.0), np.zeros(2), name="v")
        return LimitSolution("finite_variance", query, v, 1.0, 0.0, 0.0, {})
    edges, levels = query.pieces()
    q = 0.5 * sigma_G2 / m_phi
    sols = []
    y = np.zeros(2)
    nfev = 0
    for j in range(levels.size - 1, -1, -1):
        lo, hi = edges[j], edges[j + 1]
        lev = levels[j]

        def rhs(_t, y, lev=lev):
            return [q * y[0] * y[0] - lev / m_phi, -y[0]]

        sol = solve_ivp(rhs, (hi, lo), y, method="RK45", rtol=rtol, atol=atol, dense_output=True)
        if not sol.success:
            raise ConvergenceError(f"Riccati integration failed: {sol.message}")
        nfev += sol.nfev
        sols.append((lo, hi, sol.sol))
        y = sol.y[:, -1]
    integral = float(y[1])

    def v_at(x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.zeros_like(x)
        for lo, hi, s in sols:
            m = (x >= lo) & (x <= hi)
            if m.any():
                out[m] = s(x[m])[0]
        return out

    t = np.linspace(0.0, a, points)
    v = np.where(t < a, np.maximum(v_at(t), 0.0), 0.0)
    # integral form: v(t) = (1/m) int_t^a (f - s2/2 v^2)
    gy, gw = np.polynomial.legendre.leggauss(30)
    resid = 0.0
    tail = 0.0
    for lo, hi, s in sols:  # from the right end backward
        lev = levels[np.searchsorted(edges, hi) - 1]
        sub = np.linspace(lo, hi, 65)
        vals = []
        acc = 0.0
        for u0, u1 in zip(sub[::-1][1:], sub[::-1][:-1]):
            x = 0.5 * (u1 - u0) * gy + 0.5 * (u0 + u1)
            acc += 0.5 * (u1 - u0) * float(np.dot(gw, lev - 0.5 * sigma_G2 * s(x)[0] ** 2))
            vals.append((u0, acc))
        for u0, acc_u in vals:
            resid = max(resid, abs(float(s(u0)[0]) - (tail + acc_u) / m_phi))
        tail += acc
    if resid > RESIDUAL_TOL:
        raise ResidualError(f"integral-form residual {resid:.3e} exceeds {RESIDUAL_TOL}")
    return LimitSolution(
        "finite_variance", query, GridFunction(t[1] - t[0], v, name="v"),
        math.exp(-mu * integral), resid, integral,
        {"nfev": nfev, "rtol": rtol, "m_phi": m_phi, "sigma_G2": sigma_G2},
    )


def riccati_closed_form(theta: float, a: float, mu: float, m_phi: float, sigma_G: float):
    """``(v, laplace)`` for a single jump: ``v(t) = sqrt(2 theta)/s tanh((s/m) sqrt(theta/2) (a-t))``."""
    k = (sigma_G / m_phi) * math.sqrt(theta / 2.0)

    def v(t):
        return math.sqrt(2.0 * theta) / sigma_G * np.tanh(k * np.clip(a - np.asarray(t), 0, None))

    return v, math.cosh(k * a) ** (-2.0 * mu * m_phi / sigma_G**2)


def limit_solution(query: LaplaceQuery, spec: ModelSpec, **kw) -> LimitSolution:
    """Dispatch to the limit solver of ``spec``'s regime."""
    regime = spec.constants.regime
    if regime == "alpha_gt_beta":
        return limit_solution_stable(query, spec)
    if regime == "alpha_eq_beta":
        return solve_v_critical(query, spec, **kw)
    if regime == "finite_variance":
        return solve_v_star(query, spec, **kw)
    raise RegimeError(str(regime), "one of the three limit regimes")


# ---------------------------------------------------------------------------
# limit-process samplers


def sample_stable_subordinator(beta_exponent: float, t_points, rng, size: int = 1) -> np.ndarray:
    """Paths of ``L`` with ``E exp(-theta L(t)) = exp(-t theta^(1/(1+beta)))``.

    Returns an array of shape ``(size, len(t_points))``; ``t_points`` must be
    nondecreasing and nonnegative.
    """
    r = 1.0 / (1.0 + float(beta_exponent))
    if not (0.5 < r < 1.0):
        raise DomainError(f"stability index 1/(1+beta) must lie in (1/2, 1), got {r}")
    t = np.asarray(t_points, dtype=float)
    dt = np.diff(np.concatenate([[0.0], t]))
    if np.any(dt < 0):
        raise DomainError("t_points must be nonnegative and nondecreasing")
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    inc = positive_stable(rng, r, (size, t.size)) * dt ** (1.0 / r)
    return np.cumsum(inc, axis=1)


def sample_integrated_cir(mu: float, m_phi: float, sigma_G: float, t_points, step: float,
                          rng, size: int = 1) -> np.ndarray:
    """``Y*(t) = int_0^t Lambda`` for ``dLambda = (mu/m) dt + (sigma/m) sqrt(Lambda) dB``.

    Transitions of ``Lambda`` are exact (scaled noncentral chi-square); the
    time integral is the trapezoid rule on the ``step`` grid, refined so
    that every ``t_points`` entry is a node.  Returns shape
    ``(size, len(t_points))``.
    """
    t = np.asarray(t_points, dtype=float)
    if np.any(np.diff(t) < 0) or np.any(t < 0):
        raise DomainError("t_points must be nonnegative and nondecreasing")
    gaps = np.diff(np.concatenate([[0.0], t]))
    pos = gaps[gaps > 0]
    if pos.size and step > pos.min() / 100.0 * (1 + 1e-12):
        raise DomainError(f"step {step} exceeds min spacing / 100 = {pos.min() / 100.0}")
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    b = mu / m_phi
    s = sigma_G / m_phi
    lam = np.zeros(size)
    y = np.zeros(size)
    out = np.zeros((size, t.size))
    for j, gap in enumerate(gaps):
        if gap > 0:
            k = int(math.ceil(gap / step - 1e-9))
            h = gap / k
            for _ in range(k):
                if s == 0.0:
                    new = lam + b * h
                else:
                    c = 0.25 * s * s * h
                    new = c * rng.noncentral_chisquare(4.0 * b / (s * s), lam / c)
                y = y + 0.5 * h * (lam + new)
                lam = new
        out[:, j] = y
    return out
