import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from spectral_gas.ratefn import (
    EIGENVALUE,
    EIGENVALUE_INF,
    SINGULAR,
    GridMeasure,
    beta_rate,
    grid_log_energy,
    grid_wasserstein1,
    log_kernel_cell_pair,
    log_kernel_column,
    log_kernel_matrix,
    rate_gas,
    rate_pair,
    rate_spectral,
)
from spectral_gas.special import INF, model_constants
from spectral_gas.ullman import LimitLaw, log_energy_limit


def discretized(p, N=2000, L=None, moment=None):
    law = LimitLaw(p)
    lo, hi = law.support if L is None else (-L, L)
    return GridMeasure.from_law(law, N, lo, hi, moment=moment)


def feasible(p, N=2000):
    return discretized(p, N, moment=None if math.isinf(p) else p)


def squared_law_grid(p, N=2000):
    # law of X^2 for X from the eigenvalue limit law
    law = LimitLaw(p)
    end = law.scale**2
    mu = GridMeasure.from_cdf(lambda x: 2 * law.cdf(np.sqrt(np.clip(x, 0, None))) - 1, 0.0, end, N)
    return mu if math.isinf(p) else mu.moment_normalized(p / 2)


def uniform_grid(lo, hi, N=64):
    return GridMeasure(lo, (hi - lo) / N, np.full(N, 1.0 / N))


def _dblquad_log(a, b, c, d):
    # split at the diagonal so quad never straddles the singularity
    def inner(x):
        pts = [x] if c < x < d else None
        return integrate.quad(lambda y: math.log(abs(x - y)), c, d, points=pts, limit=200, epsabs=1e-14)[0]

    pts = sorted({t for t in (c, d) if a < t < b}) or None
    return integrate.quad(inner, a, b, points=pts, limit=200, epsabs=1e-13)[0]


# ---------------------------------------------------------------- kernel


@pytest.mark.parametrize(
    "cells",
    [(0, 1, 10, 11), (0, 0.3, 0.3, 0.6), (-1, 0.5, 0, 2), (0, 0.01, 0.02, 0.03), (2, 5, -3, -1)],
)
def test_cell_pair_against_quadrature(cells):
    assert log_kernel_cell_pair(*cells) == pytest.approx(_dblquad_log(*cells), abs=1e-10)


def test_cell_pair_examples():
    h = 0.37
    assert log_kernel_cell_pair(0, h, 0, h) == pytest.approx(h * h * math.log(h) - 1.5 * h * h, abs=1e-15)
    assert log_kernel_cell_pair(0, 1, 10, 11) == pytest.approx(math.log(10), abs=1e-3)
    assert log_kernel_cell_pair(0, 1, 10, 11) == log_kernel_cell_pair(10, 11, 0, 1)
    with pytest.raises(ValueError):
        log_kernel_cell_pair(1, 1, 0, 2)


@pytest.mark.parametrize("width", [1e-3, 0.1, 2.0])
def test_column_matches_corner_formula(width):
    N = 300
    col = log_kernel_column(N, width)
    for k in (0, 1, 2, 3, 17, 150, 299):
        direct = log_kernel_cell_pair(0, width, k * width, (k + 1) * width) / width**2
        assert col[k] == pytest.approx(direct, abs=1e-9)
    assert col[0] == math.log(width) - 1.5


def test_far_column_asymptotics():
    # K_k -> log(k * width) with an O(1/k^2) correction
    col = log_kernel_column(100_000, 1.0)
    k = np.array([1000, 10_000, 99_999])
    np.testing.assert_allclose(col[k], np.log(k) - 1 / (12 * k**2.0), atol=1e-12)


def test_matrix_symmetric():
    K = log_kernel_matrix(50, 0.2)
    np.testing.assert_array_equal(K, K.T)
    np.testing.assert_array_equal(np.diag(K), math.log(0.2) - 1.5)


def test_energy_single_cell():
    assert grid_log_energy(GridMeasure(0.0, 1.0, [1.0])) == pytest.approx(-1.5, abs=1e-15)


def test_energy_toeplitz_path_matches_dense(rng):
    w = rng.random(200)
    mu = GridMeasure(-1.0, 0.01, w / w.sum())
    dense = mu.weights @ log_kernel_matrix(mu.N, mu.width) @ mu.weights
    assert grid_log_energy(mu) == pytest.approx(dense, abs=1e-12)


def test_energy_uniform_interval():
    # uniform law on [0, 1]: E = -3/2 exactly, at any resolution
    for N in (1, 7, 256):
        assert grid_log_energy(uniform_grid(0, 1, N)) == pytest.approx(-1.5, abs=1e-12)


@pytest.mark.parametrize("p", [2.0, INF])
def test_energy_converges(p):
    exact = log_energy_limit(p)
    tol = 1e-3 if p == 2 else 2e-3
    e1 = abs(grid_log_energy(discretized(p, 1000)) - exact)
    e2 = abs(grid_log_energy(discretized(p, 2000)) - exact)
    assert e2 < tol
    assert e1 / e2 >= 1.8


@settings(max_examples=40, deadline=None)
@given(st.floats(1e-3, 1e3), st.integers(0, 2**32 - 1), st.integers(2, 300))
def test_energy_scaling(c, seed, N):
    w = np.random.default_rng(seed).random(N)
    mu = GridMeasure(-0.3, 0.01, w / w.sum())
    assert grid_log_energy(mu.scaled(c)) == pytest.approx(grid_log_energy(mu) + math.log(c), abs=1e-10)


# ---------------------------------------------------------------- grid measures


def test_grid_validation():
    with pytest.raises(ValueError):
        GridMeasure(0.0, 1.0, [0.5, 0.4])
    with pytest.raises(ValueError):
        GridMeasure(0.0, 0.0, [1.0])
    with pytest.raises(ValueError):
        GridMeasure(0.0, 1.0, [1.5, -0.5])


def test_cell_moments_exact():
    mu = GridMeasure(-1.0, 0.5, [0.25] * 4)
    assert mu.moment(2) == pytest.approx(1 / 3, abs=1e-15)
    assert mu.moment(1) == pytest.approx(0.5, abs=1e-15)
    assert mu.mass_outside(-0.5, 0.5) == pytest.approx(0.5, abs=1e-15)


def test_csv_roundtrip(tmp_path):
    mu = discretized(1.0, 300, L=3.5)
    path = tmp_path / "g.csv"
    mu.to_csv(path)
    back = GridMeasure.from_csv(path)
    np.testing.assert_array_equal(back.weights, mu.weights)
    assert back.left == pytest.approx(mu.left, abs=1e-12)
    assert back.width == pytest.approx(mu.width, rel=1e-12)


@pytest.mark.parametrize(
    "body, line",
    [
        ("center,weight\n0.5,0.5\n1.5,x\n", ":3:"),
        ("centre,weight\n0.5,1\n", ":1:"),
        ("center,weight\n0.5,0.5\n1.5,0.25,1\n", ":3:"),
        ("center,weight\n0.5,0.5\n1.5,0.25\n3.5,0.25\n", ":4:"),
    ],
)
def test_csv_errors_carry_line(tmp_path, body, line):
    path = tmp_path / "bad.csv"
    path.write_text(body)
    with pytest.raises(ValueError, match=line):
        GridMeasure.from_csv(path)


def test_grid_w1():
    mu = uniform_grid(0, 1, 100)
    assert grid_wasserstein1(mu, mu.scaled(1.0)) == 0.0
    shifted = GridMeasure(0.1, mu.width, mu.weights)
    assert grid_wasserstein1(mu, shifted) == pytest.approx(0.1, abs=1e-12)
    assert grid_wasserstein1(discretized(2.0, 1000), LimitLaw(2.0)) < 1e-4


# ---------------------------------------------------------------- rate functions


@pytest.mark.parametrize("p", [1.0, 2.0, 5.0, INF])
def test_rate_vanishes_at_limit_law(p):
    assert abs(rate_spectral(feasible(p), p, 2.0)) <= 2e-3


def test_plain_cell_averaging_overshoots_moment():
    mu = discretized(2.0)
    excess = mu.moment(2) - 1
    assert mu.width**2 / 12 < excess < mu.width**2
    assert rate_spectral(mu, 2, 2) == math.inf
    assert feasible(2.0).moment(2) == pytest.approx(1.0, abs=1e-14)


def test_rate_examples():
    assert abs(rate_spectral(feasible(2.0), 2, 2, EIGENVALUE)) <= 2e-3
    assert abs(rate_spectral(discretized(INF), INF, 1, EIGENVALUE_INF)) <= 2e-3
    mu = uniform_grid(0, 2).scaled(math.sqrt(1.5 * 3 / 4))  # uniform on [0, a] with a^2/3 = 1.5
    assert mu.moment(2) == pytest.approx(1.5, rel=1e-12)
    assert rate_spectral(mu, 2, 2) == math.inf


@pytest.mark.parametrize("p", [1.0, 2.0, 4.0, INF])
def test_singular_rate_vanishes_at_squared_law(p):
    mu = squared_law_grid(p)
    assert abs(rate_spectral(mu, p, 2.0, SINGULAR)) <= 5e-3


def test_singular_requires_nonnegative_grid():
    with pytest.raises(ValueError):
        rate_spectral(uniform_grid(-1, 1), 2, 2, SINGULAR)


def test_gas_rate_vanishes_at_gas_minimizer():
    r = model_constants(2, 2).r_p
    mu = GridMeasure.from_law(LimitLaw(2), 2000).scaled(r / 2)
    assert mu.right == pytest.approx(math.sqrt(2))
    assert abs(rate_gas(mu, 2, 2)) <= 2e-3


def test_gas_rate_grows_with_distance():
    vals = [rate_gas(GridMeasure(s, 0.1, [1.0]), 2, 2) for s in (0.0, 1.0, 3.0, 10.0)]
    assert all(b > a for a, b in zip(vals, vals[1:]))


def test_pair_rate_examples(rng):
    w = rng.random(120)
    mu = GridMeasure(-1.2, 0.02, w / w.sum())
    m = mu.moment(3)
    assert rate_pair(mu, m, 3, 1) == rate_gas(mu, 3, 1)
    assert rate_pair(mu, m - 0.1, 3, 1) == math.inf
    assert rate_pair(mu, m + 1, 3, 1) == pytest.approx(rate_gas(mu, 3, 1) + 1, abs=1e-13)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([1.0, 2.0, 3.0]), st.sampled_from([1.0, 2.0, 4.0]))
def test_rates_nonnegative_on_feasible(seed, p, beta):
    rng = np.random.default_rng(seed)
    w = rng.random(200) + 0.05
    mu = GridMeasure(-1.0, 0.01, w / w.sum())
    scale = mu.moment(p) ** (-1 / p) * rng.uniform(0.3, 1.0)
    nu = mu.scaled(scale)
    assert rate_spectral(nu, p, beta) >= -1e-3
    assert rate_gas(nu, p, beta) >= -1e-3
    assert rate_spectral(nu.scaled(1 / max(abs(nu.left), nu.right)), INF, beta) >= -1e-3


# ---------------------------------------------------------------- beta rate


def test_beta_rate_examples():
    assert beta_rate(1.0, 1.0, 0.0) == 0.0
    assert beta_rate(1 / math.e, 1.0, 0.0) == pytest.approx(1.0, abs=1e-15)
    assert beta_rate(0.5, 1.0, 1.0) == pytest.approx(0.0, abs=1e-15)


@pytest.mark.parametrize("a, b", [(1.0, 1.0), (0.5, 2.0), (3.0, 0.0), (0.0, 2.0)])
def test_beta_rate_minimum(a, b):
    y0 = a / (a + b)
    assert beta_rate(y0, a, b) == pytest.approx(0.0, abs=1e-14)
    for y in (0.05, 0.3, 0.7, 0.95):
        if y != y0:
            assert beta_rate(y, a, b) > 0


def test_beta_rate_domains():
    assert beta_rate(0.0, 1, 1) == math.inf
    assert beta_rate(1.0, 1, 1) == math.inf
    assert beta_rate(0.0, 1, 0) == math.inf
    assert beta_rate(1.0, 0, 1) == math.inf
    assert beta_rate(0.0, 0, 1) == 0.0
    with pytest.raises(ValueError):
        beta_rate(0.5, 0, 0)
