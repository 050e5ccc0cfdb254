"""Exact simulation of the branching particle system and of the thinning oracle.

Immigrants arrive as a Poisson process of rate ``mu`` on ``[0, horizon]``;
each particle has a random number of children displaced to the right by
i.i.d. kernel draws.  Particle positions are the event times of ``N``.
Children born after the horizon are pruned immediately, which is exact
because displacements are nonnegative.

Two interchangeable engines:

* a compiled engine that walks each family depth-first with an explicit
  stack (memory stays proportional to the number of pending siblings);
* a numpy engine that advances all replicas of a block one generation at a
  time.

Both count events into buckets between evaluation times and prefix-sum.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import io
from ._accel import USE_NUMBA, njit
from ._parallel import run_blocks
from .errors import BudgetExhausted, DomainError, HorizonError
from .model import ModelSpec
from .primitives import Exponential, HawkesMixedPoisson, MittagLeffler, _codes

DEFAULT_BUDGET = 10**8


@dataclass(frozen=True)
class TruncationReport:
    families_truncated: int = 0
    events_dropped_lower_bound: int = 0
    budget: int = DEFAULT_BUDGET

    def to_dict(self):
        return {"families_truncated": self.families_truncated,
                "events_dropped_lower_bound": self.events_dropped_lower_bound,
                "budget": self.budget}


@dataclass(frozen=True)
class CountingPath:
    """One realisation of ``N`` at the nodes of ``grid``."""

    grid: np.ndarray
    counts: np.ndarray
    total_events: int
    truncation: TruncationReport = field(default_factory=TruncationReport)

    def to_csv(self, path):
        return io.write_csv(path, {"t": self.grid, "N": self.counts})


@dataclass(frozen=True)
class ScalingSample:
    """``y_values[r, k] = N(t_k T) / F_T`` for replicas ``r``."""

    T: float
    t_points: np.ndarray
    y_values: np.ndarray
    F_T_exponent: float
    counts: np.ndarray | None = None

    @property
    def F_T(self):
        return self.T**self.F_T_exponent

    @property
    def replicas(self):
        return self.y_values.shape[0]

    def to_csv(self, path):
        cols = {"replica": np.arange(self.replicas)}
        for k, t in enumerate(self.t_points):
            cols[f"y_t{k}"] = self.y_values[:, k]
        path = io.write_csv(path, cols)
        io.write_json(str(path) + ".json", {"T": self.T, "t_points": list(self.t_points),
                                            "F_T_exponent": self.F_T_exponent})
        return path

    def to_columnar(self, path):
        cols = {f"y_t{k}": self.y_values[:, k] for k in range(len(self.t_points))}
        return io.write_columnar(path, cols)


# ---------------------------------------------------------------------------
# compiled engine


@njit
def _bucket(times, x):
    # number of evaluation times strictly below x, i.e. first i with x <= times[i]
    lo, hi = 0, times.size
    while lo < hi:
        mid = (lo + hi) // 2
        if times[mid] < x:
            lo = mid + 1
        else:
            hi = mid
    return lo


@njit
def _simulate_block(mu, horizon, times, ocode, op, kcode, kp, mark_driven, n, budget, rng):
    m = times.size
    counts = np.zeros((n, m), dtype=np.int64)
    totals = np.zeros(n, dtype=np.int64)
    status = np.zeros(3, dtype=np.int64)  # failed replica + 1, dropped lower bound, work
    stack = np.empty(1024)
    hist = np.zeros(m + 1, dtype=np.int64)
    for r in range(n):
        hist[:] = 0
        work = 0
        top = 0
        n_imm = rng.poisson(mu * horizon) if horizon > 0 else 0
        for _ in range(n_imm):
            if top == stack.size:
                stack = np.concatenate((stack, np.empty(stack.size)))
            stack[top] = horizon * rng.random()
            top += 1
        total = 0
        while top > 0:
            top -= 1
            x = stack[top]
            total += 1
            hist[_bucket(times, x)] += 1
            mark = 0.0
            if mark_driven:
                mark = _codes.sample_mark(ocode, op, rng)
            c = _codes.sample_children(ocode, op, mark, rng)
            work += c + 1
            if work > budget:
                status[0] = r + 1
                status[1] = top
                return counts, totals, status
            for _ in range(c):
                y = x + _codes.sample_disp(kcode, kp, rng)
                if y <= horizon:
                    if top == stack.size:
                        stack = np.concatenate((stack, np.empty(stack.size)))
                    stack[top] = y
                    top += 1
        acc = 0
        for i in range(m):
            acc += hist[i]
            counts[r, i] = acc
        totals[r] = total
        status[2] += work
    return counts, totals, status


# ---------------------------------------------------------------------------
# numpy engine


def _simulate_block_numpy(spec: ModelSpec, horizon, times, n, budget, rng):
    m = times.size
    hist = np.zeros((n, m + 1), dtype=np.int64)
    work = np.zeros(n, dtype=np.int64)
    n_imm = rng.poisson(spec.mu * horizon, n) if horizon > 0 else np.zeros(n, dtype=np.int64)
    rep = np.repeat(np.arange(n), n_imm)
    pos = horizon * rng.random(rep.size)
    law, ker = spec.offspring, spec.kernel
    while rep.size:
        b = np.searchsorted(times, pos, side="left")
        np.add.at(hist, (rep, b), 1)
        kids = law.sample(rng, rep.size) if not law.is_mark_driven else \
            law.sample(rng, rep.size, marks=law.sample_marks(rng, rep.size))
        kids = np.asarray(kids, dtype=np.int64)
        work += np.bincount(rep, weights=kids + 1, minlength=n).astype(np.int64)
        over = np.flatnonzero(work > budget)
        if over.size:
            r = int(over[0])
            pending = int(np.sum(kids[rep == r]))
            return None, None, (r, pending)
        parent = np.repeat(np.arange(rep.size), kids)
        child = pos[parent] + ker.sample(rng, parent.size)
        keep = child <= horizon
        pos = child[keep]
        rep = rep[parent[keep]]
    counts = np.cumsum(hist[:, :m], axis=1)
    totals = hist.sum(axis=1)
    return counts, totals, None


def _block_worker(seed, start, size, spec, horizon, times, budget, use_numba):
    rng = np.random.default_rng(seed)
    if use_numba:
        ocode, op = spec.offspring.codes()
        kcode, kp = spec.kernel.codes()
        counts, totals, status = _simulate_block(
            float(spec.mu), float(horizon), times, ocode, op, kcode, kp,
            spec.offspring.is_mark_driven, size, int(budget), rng)
        if status[0] > 0:
            return None, None, (start + int(status[0]) - 1, int(status[1]))
        return counts, totals, None
    counts, totals, fail = _simulate_block_numpy(spec, horizon, times, size, budget, rng)
    if fail is not None:
        return None, None, (start + fail[0], fail[1])
    return counts, totals, None


def sample_counts(spec: ModelSpec, horizon: float, times, replicas: int, rng,
                  budget: int = DEFAULT_BUDGET, workers: int = 1,
                  use_numba: bool = USE_NUMBA):
    """``N(times[i])`` for independent replicas, shape ``(replicas, len(times))``.

    Returns ``(counts, totals)`` where ``totals`` is ``N(horizon)``.

    Raises
    ------
    BudgetExhausted
        If some replica generates more than ``budget`` particles; carries the
        replica index and a :class:`TruncationReport`.
    """
    if horizon < 0:
        raise DomainError("horizon must be nonnegative")
    times = np.ascontiguousarray(times, dtype=float)
    if times.ndim != 1 or (times.size and (np.any(np.diff(times) < 0) or times[-1] > horizon)):
        raise DomainError("evaluation times must be sorted and within [0, horizon]")
    parts = run_blocks(_block_worker, replicas, rng,
                       (spec, float(horizon), times, int(budget), use_numba), workers)
    for counts, _, fail in parts:
        if fail is not None:
            rep, dropped = fail
            raise BudgetExhausted(TruncationReport(1, int(dropped), int(budget)), rep)
    counts = np.concatenate([c for c, _, _ in parts]) if parts else np.zeros((0, times.size), np.int64)
    totals = np.concatenate([t for _, t, _ in parts]) if parts else np.zeros(0, np.int64)
    return counts, totals


def simulate_counting(spec: ModelSpec, horizon: float, grid_points: int, rng,
                      budget: int = DEFAULT_BUDGET, use_numba: bool = USE_NUMBA) -> CountingPath:
    """One path of ``N`` on ``grid_points`` equally spaced times over ``[0, horizon]``."""
    if grid_points < 1:
        raise DomainError("grid_points must be at least 1")
    grid = np.linspace(0.0, horizon, grid_points)
    counts, totals = sample_counts(spec, horizon, grid, 1, rng, budget, 1, use_numba)
    return CountingPath(grid, counts[0], int(totals[0]), TruncationReport(budget=budget))


def sample_scaling(spec: ModelSpec, T: float, t_points, replicas: int, rng,
                   budget: int = DEFAULT_BUDGET, workers: int = 1,
                   use_numba: bool = USE_NUMBA) -> ScalingSample:
    """Replicas of ``Y_T(t) = N(t T) / F_T`` at ``t_points``."""
    if T < 1:
        raise DomainError("scale T must be at least 1")
    t_points = np.asarray(t_points, dtype=float)
    order = np.argsort(t_points, kind="stable")
    times = T * t_points[order]
    horizon = float(times[-1]) if times.size else 0.0
    counts, _ = sample_counts(spec, horizon, times, replicas, rng, budget, workers, use_numba)
    inv = np.empty_like(order)
    inv[order] = np.arange(order.size)
    counts = counts[:, inv]
    e = spec.constants.F_T_exponent
    return ScalingSample(float(T), t_points, counts / float(T) ** e, e, counts)


def mean_counting(spec: ModelSpec, t: float, table) -> float:
    """``E N(t) = mu (t + int_0^t I_R(s) ds)``."""
    if t < 0:
        raise DomainError("t must be nonnegative")
    if t == 0:
        return 0.0
    if t > table.horizon * (1 + 1e-12):
        raise HorizonError(f"resolvent table horizon {table.horizon} < t = {t}")
    return float(spec.mu * (t + table.integral_I_R(t)))


# ---------------------------------------------------------------------------
# thinning oracle


@njit
def _thinning_block(mu, rate, horizon, times, ocode, op, n, rng):
    m = times.size
    counts = np.zeros((n, m), dtype=np.int64)
    totals = np.zeros(n, dtype=np.int64)
    hist = np.zeros(m + 1, dtype=np.int64)
    for r in range(n):
        hist[:] = 0
        t = 0.0
        exc = 0.0  # sum of mark * rate * exp(-rate (t - tau_i))
        total = 0
        while True:
            bound = mu + exc
            w = rng.standard_exponential() / bound
            t += w
            if t > horizon:
                break
            exc *= math.exp(-rate * w)
            if rng.random() * bound <= mu + exc:
                total += 1
                hist[_bucket(times, t)] += 1
                exc += rate * _codes.sample_mark(ocode, op, rng)
        acc = 0
        for i in range(m):
            acc += hist[i]
            counts[r, i] = acc
        totals[r] = total
    return counts, totals


def _thinning_worker(seed, start, size, mu, rate, horizon, times, ocode, op, use_numba):
    rng = np.random.default_rng(seed)
    fn = _thinning_block if use_numba else getattr(_thinning_block, "py_func", _thinning_block)
    return fn(mu, rate, horizon, times, ocode, op, size, rng)


def _thinning_rate(spec):
    k = spec.kernel
    if isinstance(k, Exponential):
        rate = k.rate
    elif isinstance(k, MittagLeffler) and k.beta == 1.0:
        rate = k.rate
    else:
        raise DomainError("thinning needs an exponential kernel (Markovian intensity)")
    if not isinstance(spec.offspring, HawkesMixedPoisson):
        raise DomainError("thinning needs a Hawkes (mixed Poisson) offspring law")
    return rate


def sample_thinning_counts(spec: ModelSpec, horizon: float, times, replicas: int, rng,
                           workers: int = 1, use_numba: bool = USE_NUMBA):
    """Thinning analogue of :func:`sample_counts`."""
    rate = _thinning_rate(spec)
    times = np.ascontiguousarray(times, dtype=float)
    ocode, op = spec.offspring.codes()
    parts = run_blocks(_thinning_worker, replicas, rng,
                       (float(spec.mu), float(rate), float(horizon), times, ocode, op, use_numba),
                       workers)
    return np.concatenate([c for c, _ in parts]), np.concatenate([t for _, t in parts])


def simulate_thinning(spec: ModelSpec, horizon: float, rng, grid_points: int = 101,
                      use_numba: bool = USE_NUMBA) -> CountingPath:
    """One path from the conditional intensity ``mu + sum_i eta_i phi(t - tau_i)``."""
    grid = np.linspace(0.0, horizon, grid_points)
    counts, totals = sample_thinning_counts(spec, horizon, grid, 1, rng, 1, use_numba)
    return CountingPath(grid, counts[0], int(totals[0]))
