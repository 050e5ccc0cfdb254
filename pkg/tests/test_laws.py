import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from critical_hawkes.errors import DomainError, RegimeError
from critical_hawkes.model import ModelSpec, check_critical
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
    _codes,
    derived_constants,
    eval_G,
    eval_H,
    mittag_leffler,
    sample_displacement,
    sample_offspring,
)

from conftest import all_kernels, all_laws

# oracle: tests/oracles/generate.py
ML_TAIL_AT_ONE = 0.42758357615580700441   # P(xi > 1) = E_{1/2}(-1)
ML_TAIL_CONSTANT = 0.56418958354747419216  # lim t^(1/2) P(xi > t)
STABLE_P2 = 0.25


# ----- generating functions


def test_generating_function_examples():
    assert eval_G(StableBranching(0.5), 0.0) == pytest.approx(1 / 1.5, rel=1e-15)
    assert eval_G(HawkesMixedPoisson(Dirac(1.0)), 0.5) == pytest.approx(math.exp(-0.5), rel=1e-15)
    assert eval_H(StableBranching(0.5), 1.0) == pytest.approx(1 / 1.5, rel=1e-15)
    assert eval_H(HawkesMixedPoisson(Dirac(1.0)), 1.0) == pytest.approx(math.exp(-1.0), rel=1e-15)


@pytest.mark.parametrize("law", all_laws(), ids=lambda l: type(l).__name__)
def test_criticality(law):
    assert abs(eval_G(law, 1.0) - 1.0) <= 1e-10
    assert eval_H(law, 0.0) == 0.0
    check_critical(law)
    if math.isfinite(law.sigma2):
        # plain one-sided difference quotient; its bias is O(h) here but
        # O(h^beta) for heavy tails, which check_critical handles through H
        h = 1e-7
        assert (law.G(1.0) - law.G(1.0 - h)) / h == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize("law", all_laws(), ids=lambda l: type(l).__name__)
def test_H_nondecreasing_and_matches_G(law):
    u = np.linspace(0, 1, 201)
    h = np.asarray(law.H(u))
    assert np.all(np.diff(h) >= -1e-15)
    assert np.allclose(h, np.asarray(law.G(1 - u)) - 1 + u, atol=1e-13)


@pytest.mark.parametrize("law", all_laws(), ids=lambda l: type(l).__name__)
def test_H_derivative_matches_difference_quotient(law):
    u = np.linspace(0.05, 0.95, 19)
    d = 1e-6
    fd = (np.asarray(law.H(u + d)) - np.asarray(law.H(u - d))) / (2 * d)
    assert np.allclose(np.asarray(law.dH(u)), fd, atol=1e-7)


@pytest.mark.parametrize("law", all_laws(), ids=lambda l: type(l).__name__)
def test_compiled_H_matches_reference(law):
    code, p = _codes.h_codes(law)
    for u in (0.0, 1e-9, 0.01, 0.3, 0.99, 1.0):
        assert _codes.h_eval(code, p, u) == pytest.approx(float(law.H(u)), rel=1e-12, abs=1e-300)
        assert _codes.dh_eval(code, p, u) == pytest.approx(float(law.dH(u)), rel=1e-10, abs=1e-14)


@given(st.floats(0.0, 1.0), st.floats(0.0, 1.0), st.floats(0.05, 0.95))
def test_stable_H_increment_bound(u, v, beta):
    u, v = min(u, v), max(u, v)
    law = StableBranching(beta)
    inc = float(law.H(v) - law.H(u))
    assert -1e-15 <= inc <= (v - u) * v**beta + 1e-15


@pytest.mark.parametrize("law", [HawkesMixedPoisson(ParetoTail(0.5)), HawkesMixedPoisson(ParetoTail(0.3)),
                                 StableBranching(0.4)], ids=str)
def test_general_H_increment_bound(law):
    C = law.lipschitz_constant
    b = law.beta_exponent
    g = np.linspace(0, 1, 100)
    u, v = np.meshgrid(g, g)
    m = u <= v
    inc = np.asarray(law.H(v[m])) - np.asarray(law.H(u[m]))
    assert np.all(inc >= -1e-15)
    assert np.all(inc <= C * (v[m] - u[m]) * v[m] ** b + 1e-14)


@pytest.mark.parametrize("law", [HawkesMixedPoisson(ParetoTail(0.5)), StableBranching(0.5)], ids=str)
def test_W_tends_to_one(law):
    u0 = law.u0
    assert 0 < u0 <= 1
    grid = np.logspace(-10, math.log10(u0), 60)
    w = np.abs(np.asarray(law.W(grid)) - 1.0)
    assert np.all(w <= 0.01)
    # approach is monotone along the log-grid toward 0
    assert np.all(np.diff(w) >= -1e-12)
    assert law.W_sup >= 1.0 - 1e-12


def test_stable_H_power_form():
    for beta in (0.2, 0.5, 0.8):
        law = StableBranching(beta)
        u = np.linspace(0, 1, 11)
        assert np.allclose(law.H(u), u ** (1 + beta) / (1 + beta), rtol=1e-14, atol=0)
        assert law.K == pytest.approx(1 / (1 + beta))


def test_stable_pmf():
    p = StableBranching(0.5).pmf(10)
    assert p[2] == pytest.approx(STABLE_P2, rel=1e-14)
    assert p[1] == 0.0
    assert p[0] == pytest.approx(1 / 1.5)


def test_stable_tail_matches_pmf():
    law = StableBranching(0.5)
    p = law.pmf(400)
    for k in (1, 2, 5, 50, 300):
        tail = 1.0 - p[: k + 1].sum()
        assert math.exp(law.log_tail(k)) == pytest.approx(tail, rel=1e-9)


def test_mixture_identity():
    law = HawkesMixedPoisson(ParetoTail(0.5))
    p = law.pmf(4000)
    for s in (0.0, 0.25, 0.5, 0.75, 1.0):
        series = float(np.sum(p * s ** np.arange(p.size)))
        if s == 1.0:
            series += 1.0 - p.sum()  # mass beyond the truncation
        assert abs(float(law.G(s)) - series) <= 1e-6


def test_poisson_pmf():
    p = HawkesMixedPoisson(Dirac(1.0)).pmf(8)
    assert np.allclose(p, [math.exp(-1) / math.factorial(k) for k in range(9)], rtol=1e-12)


@pytest.mark.parametrize("law", all_laws(), ids=lambda l: type(l).__name__)
def test_sample_mean_is_one(law, rng):
    x = sample_offspring(law, rng, 10**6)
    sd = math.sqrt(law.sigma2) if math.isfinite(law.sigma2) else x.std()
    assert abs(x.mean() - 1.0) <= 4 * sd / 1e3


def test_sampled_pmf_stable(rng):
    law = StableBranching(0.5)
    x = sample_offspring(law, rng, 200000)
    p = law.pmf(5)
    for k in range(5):
        f = np.mean(x == k)
        assert abs(f - p[k]) <= 4 * math.sqrt(p[k] * (1 - p[k]) / x.size) + 1e-12


def test_mark_driven_offspring(rng):
    law = HawkesMixedPoisson(Dirac(1.0))
    x = sample_offspring(law, rng, 10000, mark=0.0)
    assert np.all(x == 0)
    x = sample_offspring(law, rng, 100000, mark=3.0)
    assert abs(x.mean() - 3.0) < 0.05


# ----- mark laws


def test_mark_laws_have_unit_mean():
    assert Dirac(1.0).mean == 1.0
    assert ParetoTail(0.5).mean == pytest.approx(1.0, rel=1e-14)
    assert Empirical(((0.5, 0.5), (1.5, 0.5))).mean == pytest.approx(1.0)


def test_pareto_tail_constant():
    m = ParetoTail(0.4)
    x = 1e8
    assert x**1.4 * float(m.sf(x)) == pytest.approx(m.c_nu, rel=1e-7)
    assert m.c_nu == pytest.approx(0.4**1.4)
    with pytest.raises(DomainError):
        ParetoTail(0.4, c_nu=0.5)


def test_pareto_K_formula():
    for b in (0.3, 0.5, 0.7):
        law = HawkesMixedPoisson(ParetoTail(b))
        assert law.K == pytest.approx(ParetoTail(b).c_nu / b * math.gamma(1 - b), rel=1e-12)


def test_empirical_validation():
    # a mean-1.5 mark law is a valid law but not a critical model
    law = Empirical(((1.0, 0.5), (2.0, 0.5)))
    assert law.mean == pytest.approx(1.5)
    with pytest.raises(DomainError):
        ModelSpec(1.0, Exponential(1.0), HawkesMixedPoisson(law))
    with pytest.raises(DomainError):
        Empirical(((1.0, 0.7),))


def test_mark_samplers(rng):
    m = ParetoTail(0.5)
    x = m.sample(rng, 200000)
    for q in (0.5, 2.0, 10.0):
        f = np.mean(x > q)
        p = float(m.sf(q))
        assert abs(f - p) <= 4 * math.sqrt(p * (1 - p) / x.size)


# ----- kernels


@pytest.mark.parametrize("k", all_kernels(), ids=lambda k: type(k).__name__)
def test_kernel_density_integrates_to_one(k):
    mass = 1.0 - float(k.sf(0.0))
    assert mass == pytest.approx(0.0, abs=1e-12)
    upper = 60.0 if k.alpha_tail is None else 1e4
    pts = [0.0, 1e-6, 1e-3, 1.0, 10.0, upper]
    q = sum(integrate.quad(k.density, a, b, limit=400)[0] for a, b in zip(pts[:-1], pts[1:]))
    assert q + float(k.sf(upper)) == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize("k", all_kernels(), ids=lambda k: type(k).__name__)
def test_sf_integral_and_cells(k):
    x = 3.0
    ref = integrate.quad(k.sf, 0, x, limit=200)[0]
    assert float(k.sf_integral(x)) == pytest.approx(ref, rel=1e-8)
    cells = k.sf_cell_integrals(0.5, 6)
    assert cells.sum() == pytest.approx(ref, rel=1e-8)


@pytest.mark.parametrize("k", all_kernels(), ids=lambda k: type(k).__name__)
def test_kernel_samplers(k, rng):
    x = sample_displacement(k, rng, 200000)
    assert np.all(x >= 0)
    for t in (0.3, 1.0, 2.5):
        p = float(k.sf(t))
        assert abs(np.mean(x > t) - p) <= 4 * math.sqrt(max(p * (1 - p), 1e-12) / x.size) + 1e-12


@pytest.mark.parametrize("k", all_kernels(), ids=lambda k: type(k).__name__)
def test_compiled_sampler_matches_law(k):
    code, p = k.codes()
    rng = np.random.default_rng(5)
    fn = getattr(_codes.sample_disp, "py_func", _codes.sample_disp)
    x = np.array([fn(code, p, rng) for _ in range(20000)])
    for t in (0.5, 1.5):
        pr = float(k.sf(t))
        assert abs(np.mean(x > t) - pr) <= 4 * math.sqrt(max(pr * (1 - pr), 1e-12) / x.size)


def test_exponential_tail(rng):
    x = sample_displacement(Exponential(1.0), rng, 100000)
    p = math.exp(-1)
    assert abs(np.mean(x > 1) - p) <= 3 * math.sqrt(p * (1 - p) / x.size)


def test_mittag_leffler_kernel():
    k = MittagLeffler(0.5, 1.0)
    assert float(k.sf(1.0)) == pytest.approx(ML_TAIL_AT_ONE, abs=1e-12)
    t = np.array([0.01, 0.3, 1.0, 7.0])
    ref = t ** (-0.5) * mittag_leffler(-(t**0.5), 0.5, 0.5)
    assert np.allclose(k.density(t), ref, rtol=1e-13)
    assert k.c_phi == pytest.approx(ML_TAIL_CONSTANT, rel=1e-12)
    t = 1e10
    assert t**0.5 * float(k.sf(t)) == pytest.approx(ML_TAIL_CONSTANT, rel=1e-4)


def test_mittag_leffler_unit_index_is_exponential():
    a, b = MittagLeffler(1.0, 2.0), Exponential(2.0)
    t = np.linspace(0, 5, 11)
    assert np.allclose(a.sf(t), b.sf(t), rtol=1e-14)
    assert np.allclose(a.density(t), b.density(t), rtol=1e-14)
    assert a.mean == pytest.approx(0.5)


def test_ml_sampler_against_inverse_cdf(rng):
    """Product-form sampler vs. inversion of the tabulated cdf (independent route)."""
    from critical_hawkes.verify import ks_two_sample

    k = MittagLeffler(0.5, 1.0)
    x = k.sample(rng, 3000)
    grid = np.logspace(-12, 14, 6000)
    F = np.maximum.accumulate(np.asarray(k.cdf(grid), dtype=float))
    u = rng.uniform(F[0], F[-1], 3000)
    y = np.exp(np.interp(u, F, np.log(grid)))
    assert ks_two_sample(x, y).pvalue >= 0.01


def test_pareto_like_tail():
    k = ParetoLike(0.5, 2.0)
    t = 1e10
    assert t**0.5 * float(k.sf(t)) == pytest.approx(2.0, rel=1e-4)
    assert math.isinf(k.mean)


def test_tabulated_density_validation():
    with pytest.raises(DomainError):
        TabulatedDensity((0.0, 1.0), (0.5, 0.5))


# ----- derived constants


def test_derived_constants_examples():
    c = derived_constants(MittagLeffler(0.5, 1.0), StableBranching(0.5))
    assert c.c_phi == pytest.approx(1 / math.gamma(0.5), rel=1e-12)
    # 1/Gamma(1.5) = 1.128379...
    assert c.c_beta_phi == pytest.approx(1 / math.gamma(1.5), rel=1e-12)
    assert c.K == pytest.approx(2 / 3)
    assert c.regime == "alpha_eq_beta"
    f = derived_constants(Exponential(1.0), HawkesMixedPoisson(Dirac(1.0)))
    assert f.sigma_G2 == pytest.approx(1.0)
    assert f.regime == "finite_variance" and f.F_T_exponent == 2.0
    assert derived_constants(Exponential(1.0), StableBranching(0.5)).regime == "alpha_gt_beta"


def test_ml_constants_general():
    for b, lam in ((0.3, 2.0), (0.7, 0.5)):
        c = derived_constants(MittagLeffler(b, lam), StableBranching(b))
        assert c.c_phi == pytest.approx(1 / (lam * math.gamma(1 - b)), rel=1e-12)
        assert c.c_beta_phi == pytest.approx(lam / math.gamma(1 + b), rel=1e-12)


def test_regime_errors():
    with pytest.raises(RegimeError):
        derived_constants(Exponential(1.0), StableBranching(0.5), regime="alpha_eq_beta")
    with pytest.raises(RegimeError):
        derived_constants(ParetoLike(0.5), HawkesMixedPoisson(Dirac(1.0)), regime="finite_variance")
    with pytest.raises(RegimeError):
        ModelSpec(1.0, ParetoLike(0.3), StableBranching(0.5), regime="alpha_gt_beta")


def test_offspring_domain_errors():
    with pytest.raises(DomainError):
        StableBranching(1.2)
    with pytest.raises(DomainError):
        ExplicitPmf((0.5, 0.4))
    with pytest.raises(DomainError):
        ModelSpec(1.0, Exponential(1.0), ExplicitPmf((0.5, 0.5)))
    ModelSpec(1.0, Exponential(1.0), ExplicitPmf((0.5, 0.5)), strict=False)
    with pytest.raises(DomainError):
        StableBranching(0.5).H(1.5)
