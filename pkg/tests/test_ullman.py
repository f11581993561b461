import math

import numpy as np
import pytest
from scipy import integrate, stats

from spectral_gas.special import INF, model_constants, rate_constant_C
from spectral_gas.ullman import (
    EIGENVALUE,
    SINGULAR,
    LimitLaw,
    _h_generic,
    h_density,
    half_cdf,
    limit_density,
    log_energy_limit,
    quantile,
    sample,
)

P_FINITE = [0.5, 1.0, 2.0, 3.0, 5.0]


def semicircle(x):
    return np.sqrt(np.clip(4 - x**2, 0, None)) / (2 * np.pi)


def ullman_p1(x):
    x = np.abs(x)
    return np.log((np.pi + np.sqrt(np.pi**2 - x**2)) / x) / np.pi**2


# ---------------------------------------------------------------- h_p


def test_h_examples():
    assert h_density(2, 0.0) == pytest.approx(2 / math.pi, abs=1e-14)
    assert h_density(1, 0.5) == pytest.approx(math.log((1 + math.sqrt(0.75)) / 0.5) / math.pi, abs=1e-13)
    assert h_density(1, 0.5) == pytest.approx(0.419, abs=1e-3)
    for p in (0.5, 1, 3):
        assert h_density(p, 1.5) == 0.0
        assert h_density(p, -1.5) == 0.0
    assert h_density(3, 1.0) == 0.0


@pytest.mark.parametrize("p", [1.0, 2.0])
@pytest.mark.parametrize("x", [0.01, 0.3, 0.77, 0.999])
def test_closed_forms_match_generic_quadrature(p, x):
    assert h_density(p, x) == pytest.approx(_h_generic(p, x), rel=1e-10)


@pytest.mark.parametrize("p", [0.5, 1.7, 4.0])
@pytest.mark.parametrize("x", [0.1, 0.5, 0.95])
def test_h_against_direct_quadrature(p, x):
    # raw defining integral, singularity left to quad's algebraic weight
    val, _ = integrate.quad(lambda t: t ** (p - 1) / math.sqrt(t + x), x, 1, weight="alg", wvar=(-0.5, 0), epsabs=1e-13)
    assert h_density(p, x) == pytest.approx(p / math.pi * val, rel=1e-9)


@pytest.mark.parametrize("p", [1.0, 2.5])
@pytest.mark.parametrize("y", [0.0, 0.2, 0.6, 1.0])
def test_half_cdf_is_integral_of_h(p, y):
    # x = v^2 removes the log singularity of h_1 at the origin
    val, _ = integrate.quad(lambda v: 2 * v * h_density(p, v * v) if v > 0 else 0.0, 0, math.sqrt(y), limit=200, epsabs=1e-12)
    assert half_cdf(p, y) == pytest.approx(val, abs=1e-9)


# ---------------------------------------------------------------- limit laws


def test_limit_density_examples():
    assert limit_density(LimitLaw(2), 0.0) == pytest.approx(1 / math.pi, abs=1e-14)
    assert limit_density(LimitLaw(1), 1.0) == pytest.approx(math.log(math.pi + math.sqrt(math.pi**2 - 1)) / math.pi**2, abs=1e-13)
    assert limit_density(LimitLaw(1), 1.0) == pytest.approx(0.1835, abs=1e-4)
    assert limit_density(LimitLaw(2, SINGULAR), 0.0) == pytest.approx(2 / math.pi, abs=1e-14)
    assert limit_density(LimitLaw(INF), 0.5) == pytest.approx(1 / (math.pi * math.sqrt(0.75)), abs=1e-14)
    assert limit_density(LimitLaw(INF, SINGULAR), 0.5) == pytest.approx(2 / (math.pi * math.sqrt(0.75)), abs=1e-14)
    assert limit_density(LimitLaw(INF, SINGULAR), -0.5) == 0.0


def test_singular_p1_log_growth_at_zero():
    law = LimitLaw(1, SINGULAR)
    for x in (1e-3, 1e-5, 1e-7):
        assert law.density(x) == pytest.approx(2 / math.pi**2 * math.log((math.pi + math.sqrt(math.pi**2 - x * x)) / x), rel=1e-10)


@pytest.mark.parametrize("p", P_FINITE + [INF])
@pytest.mark.parametrize("ensemble", [EIGENVALUE, SINGULAR])
def test_normalization(p, ensemble):
    law = LimitLaw(p, ensemble)
    lo, hi = law.support
    if math.isinf(p):
        # arcsine endpoints: integrate with the algebraic weight
        if ensemble == SINGULAR:
            f, wvar = (lambda x: 2 / (math.pi * math.sqrt(1 + x))), (0, -0.5)
        else:
            f, wvar = (lambda x: 1 / math.pi), (-0.5, -0.5)
        total, _ = integrate.quad(f, lo, hi, weight="alg", wvar=wvar)
    else:
        pts = [0.0] if lo < 0 < hi else None
        total, _ = integrate.quad(law.density, lo, hi, points=pts, limit=400, epsabs=1e-12)
    assert total == pytest.approx(1.0, abs=1e-8)


@pytest.mark.parametrize("p", P_FINITE)
def test_pth_moment_is_one(p):
    law = LimitLaw(p)
    b = law.scale
    val, _ = integrate.quad(lambda x: 2 * x**p * law.density(x), 0, b, limit=400, epsabs=1e-12)
    assert val == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize("p", [1.0, 3.0])
def test_symmetry(p):
    law = LimitLaw(p)
    x = np.linspace(-law.scale, law.scale, 41)[1:-1]
    np.testing.assert_array_equal(law.density(x), law.density(-x))
    np.testing.assert_allclose(law.cdf(x) + law.cdf(-x), 1.0, atol=1e-14)


@pytest.mark.parametrize("p", [1.0, 2.0, 3.0, INF])
def test_quantile_cdf_roundtrip(p):
    law = LimitLaw(p)
    lo, hi = law.support
    x = np.linspace(lo, hi, 301)[1:-1]
    np.testing.assert_allclose(law.quantile(law.cdf(x)), x, atol=1e-8)
    u = np.linspace(0, 1, 101)
    np.testing.assert_allclose(law.cdf(law.quantile(u)), u, atol=1e-9)


def test_cdf_matches_closed_form_semicircle():
    law = LimitLaw(2)
    x = np.linspace(-2, 2, 77)
    exact = 0.5 + (x * np.sqrt(4 - x**2) / 2 + 2 * np.arcsin(x / 2)) / (2 * np.pi)
    np.testing.assert_allclose(law.cdf(x), exact, atol=1e-10)


def test_quantile_examples():
    assert quantile(LimitLaw(3), 0.5) == pytest.approx(0.0, abs=1e-14)
    assert quantile(LimitLaw(INF), 0.75) == pytest.approx(math.sin(math.pi / 4), abs=1e-14)
    for p in (1.0, 2.0, INF):
        for ens in (EIGENVALUE, SINGULAR):
            law = LimitLaw(p, ens)
            assert quantile(law, 1.0) == pytest.approx(law.support[1], abs=1e-12)
            assert quantile(law, 0.0) == pytest.approx(law.support[0], abs=1e-12)


@pytest.mark.parametrize("u", [-0.1, 1.1, math.nan])
def test_quantile_domain(u):
    with pytest.raises(ValueError):
        LimitLaw(2).quantile(u)


@pytest.mark.parametrize("p", [1.0, 2.0, INF])
def test_absolute_value_pushforward(p):
    rng = np.random.default_rng(5)
    x = sample(LimitLaw(p), rng, 100_000)
    law = LimitLaw(p, SINGULAR)
    assert stats.kstest(np.abs(x), law.cdf).statistic < 0.01


def test_sampling_reproducible():
    law = LimitLaw(1.5)
    a = law.sample(np.random.default_rng(9), 50)
    b = law.sample(np.random.default_rng(9), 50)
    np.testing.assert_array_equal(a, b)


def test_tabulation_rows():
    x, d = LimitLaw(2).tabulate(1000)
    assert x.size == d.size == 1000
    assert np.all(np.diff(x) > 0)
    np.testing.assert_allclose(d, semicircle(x), atol=1e-12)
    x, d = LimitLaw(1).tabulate(1000)
    np.testing.assert_allclose(d, ullman_p1(x), rtol=1e-10)


def test_bad_ensemble():
    with pytest.raises(ValueError):
        LimitLaw(2, "other")


# ---------------------------------------------------------------- energy


def _energy_by_quadrature(density, lo, hi):
    # inner log potential by quad with a break at the singularity
    def potential(x):
        return integrate.quad(lambda y: math.log(abs(x - y)) * density(y), lo, hi, points=[x], limit=200)[0]

    return integrate.quad(lambda x: potential(x) * density(x), lo, hi, limit=100, epsabs=1e-9)[0]


def test_energy_examples():
    assert log_energy_limit(2) == pytest.approx(-0.25, abs=1e-15)
    assert log_energy_limit(INF) == pytest.approx(-math.log(2), abs=1e-15)
    assert log_energy_limit(1) == pytest.approx(math.log(math.pi / 2) - 0.5, abs=1e-14)
    assert log_energy_limit(1) == pytest.approx(-0.0484, abs=1e-4)


def test_energy_semicircle_quadrature():
    assert _energy_by_quadrature(semicircle, -2, 2) == pytest.approx(log_energy_limit(2), abs=1e-7)


@pytest.mark.slow
def test_energy_p1_quadrature():
    assert _energy_by_quadrature(lambda y: ullman_p1(y) if y != 0 else 0.0, -math.pi, math.pi) == pytest.approx(
        log_energy_limit(1), abs=1e-6
    )


@pytest.mark.parametrize("p", P_FINITE + [10.0, INF])
@pytest.mark.parametrize("beta", [1.0, 2.0, 4.0])
def test_minimizer_has_zero_rate(p, beta):
    assert abs(-beta / 2 * log_energy_limit(p) + rate_constant_C(p, beta)) < 1e-8


def test_scale_is_b():
    assert LimitLaw(2.7).scale == pytest.approx(model_constants(2.7, 1).b_p, rel=1e-15)
