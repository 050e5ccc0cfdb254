"""Monte Carlo estimators and regime sweeps comparing simulation with the solvers."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import stats

from . import io
from ._parallel import as_seed_sequence
from .analytics import LaplaceQuery, limit_solution, solve_gT
from .errors import CriticalHawkesError, DomainError, RegimeError
from .model import ModelSpec
from .simulator import DEFAULT_BUDGET, ScalingSample, sample_scaling


@dataclass(frozen=True)
class EmpiricalLaplace:
    """Sample mean of ``exp(-sum_k theta_k Y(t_k))`` and its standard error."""

    query: LaplaceQuery
    estimate: float
    std_error: float
    replicas: int


def empirical_laplace(sample: ScalingSample, query: LaplaceQuery) -> EmpiricalLaplace:
    """Estimate ``E exp(-sum_k theta_k Y_T(t_k))`` from a scaling sample.

    Raises
    ------
    DomainError
        If a query time is not among the sample's ``t_points``.
    """
    tp = np.asarray(sample.t_points, dtype=float)
    cols = []
    for t in query.times:
        hit = np.flatnonzero(np.isclose(tp, t, rtol=1e-12, atol=1e-12))
        if hit.size == 0:
            raise DomainError(f"query time {t} is not among the sample times {tp.tolist()}")
        cols.append(int(hit[0]))
    y = np.asarray(sample.y_values, dtype=float)[:, cols]
    n = y.shape[0]
    if n == 0:
        raise DomainError("empty sample")
    z = np.exp(-(y @ np.asarray(query.thetas)))
    est = float(z.mean())
    se = float(z.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return EmpiricalLaplace(query, est, se, n)


@dataclass(frozen=True)
class KSResult:
    statistic: float
    pvalue: float


def ks_two_sample(a, b) -> KSResult:
    """Two-sample Kolmogorov-Smirnov test with the asymptotic p-value."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.size < 100 or b.size < 100:
        raise DomainError("both samples need at least 100 points")
    r = stats.ks_2samp(a, b, method="asymp")
    return KSResult(float(r.statistic), float(r.pvalue))


@dataclass(frozen=True)
class Check:
    """One comparison; passes iff ``|predicted - estimated| <= tolerance``."""

    name: str
    predicted: float
    provenance: str
    estimated: float
    std_error: float
    tolerance_rule: str
    tolerance: float
    verdict: str
    detail: dict = field(default_factory=dict)

    @classmethod
    def compare(cls, name, predicted, provenance, estimated, std_error, rule, tol, **detail):
        ok = abs(predicted - estimated) <= tol
        return cls(name, float(predicted), provenance, float(estimated), float(std_error),
                   rule, float(tol), "pass" if ok else "fail", detail)

    @classmethod
    def failure(cls, name, message, **detail):
        return cls(name, math.nan, "error", math.nan, math.nan, "none", 0.0, "fail",
                   {"error": message, **detail})


@dataclass
class VerificationReport:
    checks: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.verdict == "pass" for c in self.checks)

    def extend(self, other: "VerificationReport"):
        self.checks.extend(other.checks)

    def to_dict(self):
        return {"passed": self.passed, "meta": self.meta, "checks": [asdict(c) for c in self.checks]}

    def to_json(self, path):
        return io.write_json(path, self.to_dict())

    def to_text(self) -> str:
        head = f"{'check':<40} {'predicted':>12} {'estimated':>12} {'std_err':>10} {'tol':>10}  verdict"
        lines = [head, "-" * len(head)]
        for c in self.checks:
            lines.append(f"{c.name:<40} {c.predicted:>12.6g} {c.estimated:>12.6g} "
                         f"{c.std_error:>10.3g} {c.tolerance:>10.3g}  {c.verdict}")
        lines.append(f"overall: {'pass' if self.passed else 'fail'}")
        return "\n".join(lines) + "\n"


def monotone_with_inversions(seq, allowed: int = 1, slack: float = 0.0) -> bool:
    """True if ``seq`` is nonincreasing except for at most ``allowed`` rises."""
    seq = np.asarray(seq, dtype=float)
    return int(np.sum(np.diff(seq) > slack)) <= allowed


def run_regime_sweep(spec: ModelSpec, regime: str, query: LaplaceQuery, T_list, replicas: int,
                     rng, tolerance_se: float = 3.0, workers: int = 1,
                     budget: int = DEFAULT_BUDGET, step: float | None = None,
                     limit_tolerance_se: float | None = None, limit_kw: dict | None = None,
                     label: str = "") -> VerificationReport:
    """Simulate ``Y_T`` at each ``T`` and compare with the finite-T and limit transforms.

    Per ``T`` the empirical Laplace estimate is checked against
    :func:`~critical_hawkes.analytics.solve_gT` within ``tolerance_se``
    standard errors.  The gaps ``|solve_gT(T) - limit|`` must be
    nonincreasing up to one inversion.  With ``limit_tolerance_se`` the
    empirical value is also checked against the limit at every ``T``.
    Failures at one ``T`` are recorded and the sweep continues.
    """
    if regime in spec.constants.violations:
        raise RegimeError(regime, spec.constants.violations[regime])
    report = VerificationReport(meta={"regime": regime, "query": query.to_dict(),
                                      "replicas": replicas, "T_list": list(T_list),
                                      "label": label})
    T_list = list(T_list)
    if not T_list:
        return report
    tag = f"{label}:" if label else ""
    seeds = as_seed_sequence(rng).spawn(len(T_list))
    limit = None
    try:
        limit = limit_solution(query, spec, **(limit_kw or {}))
        report.meta["limit_value"] = limit.laplace_value
    except CriticalHawkesError as exc:
        report.checks.append(Check.failure(f"{tag}limit", str(exc)))
    gaps = []
    for T, seed in zip(T_list, seeds):
        name = f"{tag}T={T:g}"
        try:
            pred = solve_gT(query, T, spec, step=step)
            sample = sample_scaling(spec, T, np.asarray(query.times), replicas, seed,
                                    budget=budget, workers=workers)
            emp = empirical_laplace(sample, query)
        except CriticalHawkesError as exc:
            report.checks.append(Check.failure(name, str(exc), T=T))
            continue
        report.checks.append(Check.compare(
            f"{name} exact", pred.laplace_value, "solve_gT", emp.estimate, emp.std_error,
            f"{tolerance_se:g} s.e.", tolerance_se * emp.std_error, T=T, replicas=emp.replicas))
        if limit is not None:
            gaps.append(abs(pred.laplace_value - limit.laplace_value))
            if limit_tolerance_se is not None:
                report.checks.append(Check.compare(
                    f"{name} limit", limit.laplace_value, f"limit ({regime})", emp.estimate,
                    emp.std_error, f"{limit_tolerance_se:g} s.e.",
                    limit_tolerance_se * emp.std_error, T=T))
    report.meta["limit_gaps"] = gaps
    if limit is not None and len(gaps) >= 2:
        ok = monotone_with_inversions(gaps, 1)
        report.checks.append(Check(
            f"{tag}limit gap shrinks", gaps[-1], "solve_gT vs limit", gaps[0], 0.0,
            "nonincreasing up to one inversion", 0.0, "pass" if ok else "fail",
            {"gaps": gaps}))
    return report
