"""Coefficient computations against closed forms and the DP oracle."""

import math

import numpy as np
import pytest

from w2lab import coefficients as co
from w2lab import oracle as orc
from w2lab import processes as pr
from w2lab.transport import PreconditionError


@pytest.fixture(scope="module")
def sym():
    return pr.two_state_symmetric(0.25)


@pytest.fixture(scope="module")
def iid_rows():
    pi = np.array([0.3, 0.45, 0.25])
    return pr.FiniteMarkovSpec(np.tile(pi, (3, 1)), np.array([1.0, -0.5, 0.0]))


@pytest.fixture(scope="module")
def asym():
    # asymmetric lattice chain with nonzero third-order structure
    return pr.FiniteMarkovSpec(
        np.array([[0.6, 0.3, 0.1], [0.2, 0.5, 0.3], [0.15, 0.25, 0.6]]),
        np.array([2.0, 0.0, -1.0]))


def test_sigma2_iid_rows_is_variance(iid_rows):
    f, pi = iid_rows.observable, iid_rows.stationary
    assert abs(co.sigma2_exact(iid_rows) - np.dot(pi, f * f)) <= 1e-14


def test_sigma2_symmetric_chain_closed_form():
    for p in (0.1, 0.25, 0.4):
        spec = pr.two_state_symmetric(p)
        assert abs(co.sigma2_exact(spec) - (1 - p) / p) <= 1e-12


def test_sigma2_circle_single_mode():
    spec = pr.CircleWalkSpec(fourier=((1, 1.0, 0.0),))
    lam = math.cos(2 * math.pi * spec.a)
    expect = 0.5 * (1 + lam) / (1 - lam)
    assert abs(co.sigma2_exact(spec) - expect) <= 1e-14


def test_sigma2_circle_vs_monte_carlo():
    spec = pr.default_circle_walk(8)
    exact = co.sigma2_exact(spec)
    v, se = co.var_sn_mc(spec, 4096, n_paths=2000, seed=3)
    assert abs(v / 4096 - exact) <= 3 * se / 4096 + 0.05 * exact


def test_sigma2_periodic_chain_rejected():
    flip = pr.FiniteMarkovSpec(np.array([[0.0, 1.0], [1.0, 0.0]]),
                               np.array([1.0, -1.0]))
    with pytest.raises(PreconditionError, match="spectral"):
        co.sigma2_exact(flip)


def test_var_sn_iid():
    assert abs(co.var_sn(pr.rademacher(), 10) - 10.0) <= 1e-12


def test_var_sn_two_state_n2(sym):
    # Cov(X_0, X_1) = 1 - 2p = 0.5; Var S_2 = 2 + 2*0.5 = 3
    assert abs(co.var_sn(sym, 2) - 3.0) <= 1e-12


def test_var_sn_converges_to_sigma2(sym, asym):
    for spec in (sym, asym, pr.default_circle_walk(8)):
        s2 = co.sigma2_exact(spec)
        n = 2**14
        assert abs(co.var_sn(spec, n) / n - s2) <= 0.01 * s2, type(spec).__name__


def test_beta3_symmetric_is_zero(sym):
    est = co.beta3(sym, truncation=32)
    assert abs(est.value) <= est.tail_bound + 1e-12


def test_beta3_iid_third_moment():
    spec = pr.IidSpec(np.array([2.0, -1.0]), np.array([1.0 / 3.0, 2.0 / 3.0]))
    est = co.beta3(spec)
    expect = np.dot(spec.probs, spec.values**3)
    assert abs(est.value - expect) <= 1e-14


def test_beta3_martingale_zero(asym):
    mg = pr.MartingaleSpec(asym.transition, np.array([0.5, 1.0, 2.0]))
    assert co.beta3(mg).value == 0.0


def test_beta3_vs_fundamental_matrix(asym):
    # independent closed form: no truncation, fundamental-matrix series
    f, pi, P = asym.observable, asym.stationary, asym.transition
    Z = np.linalg.inv(np.eye(3) - P + np.outer(np.ones(3), pi))
    h = f * f - np.dot(pi, f * f)
    zf = Z @ f
    term2a = np.dot(pi, f * f * (zf - f))
    term2b = np.dot(pi, f * (Z @ h - h))
    w = f * (zf - f)
    w0 = w - np.dot(pi, w)
    term3 = np.dot(pi, f * (Z @ w0 - w0))
    closed = np.dot(pi, f**3) + 3.0 * (term2a + term2b) + 6.0 * term3
    est = co.beta3(asym, truncation=64)
    assert abs(est.value - closed) <= max(est.tail_bound, 1e-12)


def test_beta3_vs_dp_third_moment(asym):
    # (1/n) E S_n^3 from the exact DP law at n = 2^10, within 2%
    n = 1024
    law = orc.conditional_sn_law(asym, n)
    mix = law.mixture_lattice()
    vals, probs = mix.atoms()
    third = float(np.dot(vals**3, probs)) / n
    est = co.beta3(asym, truncation=64)
    assert abs(est.value - third) <= 0.02 * max(abs(third), 1e-6)


def test_beta3_truncation_tail_bound(asym, sym):
    for spec in (asym, sym):
        for T in (16, 24):
            a = co.beta3(spec, truncation=T)
            b = co.beta3(spec, truncation=T + 8)
            assert abs(a.value - b.value) <= a.tail_bound, (type(spec).__name__, T)


def test_theta_exact_iid_rows_vanishes(iid_rows):
    for k in (1, 2, 5):
        assert co.theta_exact(iid_rows, k, 1, 1) <= 1e-14
        assert co.theta_exact(iid_rows, k, 2, 2, window=4) <= 1e-14


def test_theta_exact_symmetric_chain_closed_form():
    for p_flip in (0.1, 0.25, 0.4):
        spec = pr.two_state_symmetric(p_flip)
        r = abs(1 - 2 * p_flip)
        for k in (1, 2, 4):
            assert abs(co.theta_exact(spec, k, 1, 1) - r**k) <= 1e-12


def test_theta_exact_monotone_in_k(asym):
    vals = [co.theta_exact(asym, k, 1, 1) for k in range(1, 8)]
    assert all(b <= a + 1e-14 for a, b in zip(vals, vals[1:]))
    vals = [co.theta_exact(asym, k, 2, 2, window=6) for k in range(1, 6)]
    assert all(b <= a + 1e-14 for a, b in zip(vals, vals[1:]))


def test_theta_exact_validation(sym):
    with pytest.raises(PreconditionError):
        co.theta_exact(sym, 1, 3, 2)  # p > q
    with pytest.raises(PreconditionError):
        co.theta_exact(sym, 1, 2, 2, window=1)  # window < p


def test_theta_mc_matches_exact_three_state(asym):
    k = 2
    exact = co.theta_exact(asym, k, 1, 1, window=2)
    est, se = co.theta_mc(asym, k, 1, 1, window=2, n_start=200,
                          paths_per_start=4000, seed=11)
    assert abs(est - exact) <= 3 * se


def test_theta_mc_circle_single_mode_eigenvalue_scaling():
    spec = pr.CircleWalkSpec(fourier=((1, 1.0, 0.0),))
    lam = abs(math.cos(2 * math.pi * spec.a))
    # E(X_k | xi_0 = x) = lam_signed^k f(x); L1 factor E|cos| = 2/pi
    for k in (1, 3):
        est, se = co.theta_mc(spec, k, 1, 1, window=2, n_start=300,
                              paths_per_start=3000, seed=5)
        # window maximum over j in [k, k+2] of lam^j = lam^k
        assert abs(est - lam**k * (2 / math.pi)) <= 3 * se + 0.01


def test_theta_mc_long_lag_mixes(asym):
    est, se = co.theta_mc(asym, 40, 1, 1, window=2, n_start=100,
                          paths_per_start=2000, seed=9)
    assert est <= 3 * se + 0.02


def test_theta_mc_rejects_interval_map():
    with pytest.raises(PreconditionError):
        co.theta_mc(pr.LsvSpec(gamma=0.1, burn_in=100, center_samples=2000),
                    1, 1, 1)


def test_alpha_dep_iid_rows(iid_rows):
    for n in (1, 3):
        assert co.alpha_dep(iid_rows, n, 1) <= 1e-14


def test_alpha_dep_two_state_closed_form():
    for p_flip in (0.2, 0.25):
        spec = pr.two_state_symmetric(p_flip)
        r = abs(1 - 2 * p_flip)
        for n in (1, 2, 3):
            assert abs(co.alpha_dep(spec, n, 1) - 0.5 * r**n) <= 1e-12


def test_alpha_dep_range(asym):
    for n in (1, 2):
        for l in (1, 2):
            v = co.alpha_dep(asym, n, l, window=4)
            assert 0.0 <= v <= 1.0


def test_alpha_dep_validation(sym):
    with pytest.raises(PreconditionError):
        co.alpha_dep(sym, 1, 5)


def test_sigma2_estimated_matches_exact(asym):
    exact = co.sigma2_exact(asym)
    est, tail = co.sigma2_estimated(asym, truncation=48, n_samples=400_000, seed=21)
    assert abs(est - exact) <= 0.05 * exact + tail


def test_coefficient_table_csv(sym):
    table = co.theta_table(sym, [1, 2, 3], 1, 1)
    rows = table.csv_rows()
    assert len(rows) == 3
    assert rows[0][0] == "theta" and rows[0][3] == "1"
    r = 1 - 2 * 0.25
    assert abs(float(rows[1][4]) - r**2) <= 1e-12


def test_limit_constants(sym):
    lc = co.limit_constants(sym, n_list=[64, 256], truncation=32)
    assert abs(lc.sigma2 - 3.0) <= 1e-12
    assert abs(lc.sigma_n2[256] / 256 - 3.0) <= 0.05 * 3.0
