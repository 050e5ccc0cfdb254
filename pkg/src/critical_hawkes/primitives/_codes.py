"""Integer-coded laws for the compiled inner loops.

Python law objects are translated once into ``(code, params)`` pairs of an
int and a float64 array; the functions below dispatch on the code.  They are
compiled with numba when available and also run unchanged as plain Python,
which the tests use to cross-check the numpy implementations.
"""
from __future__ import annotations

import math

import numpy as np

from .._accel import njit

# offspring samplers
OFF_DIRAC = 0
OFF_PARETO = 1
OFF_ATOMS = 2
OFF_STABLE = 3
OFF_PMF = 4

# kernels
KER_EXP = 0
KER_ML = 1
KER_PARETO = 2
KER_TAB = 3

# H evaluators
H_STABLE = 0
H_PARETO = 1
H_ATOMS = 2
H_PMF = 3


# ---------------------------------------------------------------------------
# offspring


@njit
def stable_log_tail(k, beta, lg1mb):
    """``log P(rho > k)`` for the stable offspring law, real ``k >= 1``."""
    c = math.log(beta / (1.0 + beta)) - lg1mb
    if k < 1e7:
        return c + math.lgamma(k - beta) - math.lgamma(k + 1.0)
    # lgamma differences lose digits here; two-term Stirling expansion instead
    return c - (1.0 + beta) * math.log(k) + beta * (1.0 + beta) / (2.0 * k)


@njit
def stable_invert(v, beta, lg1mb, tab):
    """Smallest ``k`` with ``P(rho > k) <= v``; ``tab[j] = P(rho > j + 1)``."""
    t0 = beta / (1.0 + beta)
    if v >= t0:
        return 0
    m = tab.size
    if v >= tab[m - 1]:
        # tab is decreasing; find the first index with tab[j] <= v
        lo, hi = 0, m - 1
        while lo < hi:
            mid = (lo + hi) // 2
            if tab[mid] <= v:
                hi = mid
            else:
                lo = mid + 1
        return lo + 1
    logv = math.log(v)
    c = math.log(beta / (1.0 + beta)) - lg1mb
    k = math.exp((c - logv) / (1.0 + beta))
    if k < m:
        k = float(m)
    for _ in range(60):
        f = stable_log_tail(k, beta, lg1mb) - logv
        step = f * k / (1.0 + beta)
        k_new = k + step
        if k_new < m:
            k_new = 0.5 * (k + m)
        if abs(k_new - k) < 1e-6 * k:
            k = k_new
            break
        k = k_new
    n = math.ceil(k)
    while n > m + 1 and stable_log_tail(n - 1.0, beta, lg1mb) <= logv:
        n -= 1
    while stable_log_tail(float(n), beta, lg1mb) > logv:
        n += 1
    return n


def stable_invert_vec(v, beta, tab):
    """Vectorised :func:`stable_invert` (pure numpy)."""
    v = np.asarray(v, dtype=float)
    lg1mb = math.lgamma(1.0 - beta)
    out = np.zeros(v.shape, dtype=np.int64)
    t0 = beta / (1.0 + beta)
    m = tab.size
    mid = (v < t0) & (v >= tab[-1])
    # ascending copy of the decreasing table for searchsorted
    rev = tab[::-1]
    j = m - np.searchsorted(rev, v[mid], side="right")  # first index with tab <= v
    out[mid] = j + 1
    far = np.flatnonzero(v < tab[-1])
    for i in far:
        out[i] = stable_invert(float(v[i]), beta, lg1mb, tab)
    return out


@njit
def sample_mark(code, p, rng):
    if code == OFF_DIRAC:
        return p[0]
    if code == OFF_PARETO:
        b = p[1]
        return b * ((1.0 - rng.random()) ** (-1.0 / (1.0 + p[0])) - 1.0)
    if code == OFF_ATOMS:
        n = int(p[0])
        w = rng.random() * p[2 * n]
        for j in range(n):
            if w < p[1 + n + j]:
                return p[1 + j]
        return p[n]
    return 0.0


@njit
def sample_children(code, p, mark, rng):
    if code == OFF_DIRAC or code == OFF_PARETO or code == OFF_ATOMS:
        if mark <= 0.0:
            return 0
        return rng.poisson(mark)
    if code == OFF_STABLE:
        return stable_invert(1.0 - rng.random(), p[0], p[1], p[3:])
    # OFF_PMF
    n = int(p[0])
    w = rng.random() * p[n]
    for j in range(n):
        if w < p[1 + j]:
            return j
    return n - 1


# ---------------------------------------------------------------------------
# displacements


@njit
def sample_positive_stable(a, rng):
    u = math.pi * (1.0 - rng.random())
    if u >= math.pi:
        u = math.pi * (1.0 - 1e-16)
    e = rng.standard_exponential()
    return (math.sin(a * u) / math.sin(u) ** (1.0 / a)) * (math.sin((1.0 - a) * u) / e) ** ((1.0 - a) / a)


@njit
def sample_disp(code, p, rng):
    if code == KER_EXP:
        return rng.standard_exponential() / p[0]
    if code == KER_ML:
        b = p[0]
        e = rng.standard_exponential()
        if b == 1.0:
            return e / p[1]
        return (e / p[1]) ** (1.0 / b) * sample_positive_stable(b, rng)
    if code == KER_PARETO:
        return p[1] * ((1.0 - rng.random()) ** (-1.0 / p[0]) - 1.0)
    # KER_TAB: [n, t(n), v(n), cdf(n)]
    n = int(p[0])
    w = rng.random()
    lo, hi = 0, n - 2
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if p[1 + 2 * n + mid] <= w:
            lo = mid
        else:
            hi = mid - 1
    i = lo
    t0 = p[1 + i]
    h = p[2 + i] - t0
    v0 = p[1 + n + i]
    slope = (p[2 + n + i] - v0) / h
    r = w - p[1 + 2 * n + i]
    disc = math.sqrt(max(v0 * v0 + 2.0 * slope * r, 0.0))
    denom = v0 + disc
    d = 2.0 * r / denom if denom > 0 else 0.0
    return t0 + min(max(d, 0.0), h)


# ---------------------------------------------------------------------------
# H and H'


@njit
def _em1pz(z):
    if z < 0.1:
        acc = 0.0
        term = z * z / 2.0
        for j in range(2, 14):
            acc += term
            term = -term * z / (j + 1)
        return acc
    return math.expm1(-z) + z


@njit
def _binom_rem(k, u):
    if k < 2:
        return 0.0
    if k * u < 0.5:
        acc = 0.0
        term = k * (k - 1) / 2.0 * u * u
        for j in range(2, k + 1):
            acc += term
            term = -term * (k - j) / (j + 1) * u
            if abs(term) <= 1e-18 * abs(acc):
                break
        return acc
    return (1.0 - u) ** k - 1.0 + k * u


@njit
def _pareto_q(z, beta, gam):
    """``e^z z^beta Gamma(1-beta, z)`` for ``0 <= z <= 1``, ``gam = Gamma(1-beta)``."""
    if z == 0.0:
        return 0.0
    s = 1.0 - beta
    # lower incomplete gamma: e^z z^beta gamma(s, z) = z sum_n z^n / (s)_(n+1)
    term = 1.0 / s
    acc = term
    n = 0
    while True:
        n += 1
        term *= z / (s + n)
        acc += term
        if term < 1e-17 * acc or n > 200:
            break
    return math.exp(z) * z**beta * gam - z * acc


@njit
def h_eval(code, p, u):
    if code == H_STABLE:
        b = p[0]
        return u ** (1.0 + b) / (1.0 + b)
    if code == H_PARETO:
        return u * _pareto_q(p[0] * u, p[0], p[1])
    if code == H_ATOMS:
        n = int(p[0])
        mean = 0.0
        acc = 0.0
        for j in range(n):
            x = p[1 + j]
            w = p[1 + n + j]
            mean += w * x
            acc += w * _em1pz(x * u)
        return acc + u * (1.0 - mean)
    # H_PMF: [n, p_0..p_{n-1}]
    n = int(p[0])
    mean = 0.0
    acc = 0.0
    for k in range(n):
        mean += k * p[1 + k]
        if k >= 2 and p[1 + k] > 0:
            acc += p[1 + k] * _binom_rem(k, u)
    return acc + u * (1.0 - mean)


@njit
def dh_eval(code, p, u):
    if code == H_STABLE:
        return u ** p[0]
    if code == H_PARETO:
        b = p[0]
        q = _pareto_q(b * u, b, p[1])
        return q * (1.0 + b + b * u) - b * u
    if code == H_ATOMS:
        n = int(p[0])
        acc = 1.0
        for j in range(n):
            x = p[1 + j]
            w = p[1 + n + j]
            acc -= w * x * math.exp(-x * u)
        return acc
    n = int(p[0])
    acc = 1.0
    for k in range(1, n):
        acc -= p[1 + k] * k * (1.0 - u) ** (k - 1)
    return acc


def h_codes(law):
    """``(code, params)`` of ``H`` for :func:`h_eval` / :func:`dh_eval`."""
    from .laws import Dirac, ExplicitPmf, HawkesMixedPoisson, ParetoTail, StableBranching

    if isinstance(law, StableBranching):
        return H_STABLE, np.array([law.beta])
    if isinstance(law, HawkesMixedPoisson):
        m = law.mark_law
        if isinstance(m, ParetoTail):
            return H_PARETO, np.array([m.beta, math.gamma(1.0 - m.beta)])
        if isinstance(m, Dirac):
            x, w = np.array([m.point]), np.array([1.0])
        else:
            x, w = m.values, m.probs
        return H_ATOMS, np.concatenate([[x.size], x, w])
    if isinstance(law, ExplicitPmf):
        return H_PMF, np.concatenate([[len(law.p)], law.p])
    raise TypeError(f"no compiled H for {type(law).__name__}")
