"""Transport distances against brute-force and quadrature oracles."""

import itertools
import math

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.optimize import linprog

from w2lab import gaussian as ga
from w2lab.transport import (
    EmpiricalDist,
    LatticeDist,
    PreconditionError,
    conditional_w2_dominates,
    kp_integral,
    quantile_gap_bound,
    verify_prop_quantile,
    w2_empirical_gaussian,
    w2_lattice_gaussian,
    wp_empirical,
)

# mpmath (dps=50): 2 - 2 sqrt(2/pi) and its square root
KP2_RADEMACHER = 0.40423087839426929
W2_RADEMACHER = 0.63579153690047596


def brute_force_wp(a, b, p):
    """Minimal assignment cost over all pairings (equal sizes, m <= 8)."""
    b = np.asarray(b, dtype=float)
    best = math.inf
    for perm in itertools.permutations(range(len(a))):
        cost = sum(abs(a[i] - b[j]) ** p for i, j in enumerate(perm))
        best = min(best, cost)
    return (best / len(a)) ** (1.0 / p)


def lp_w2sq(va, pa, vb, pb):
    """Squared W2 between discrete laws by linear programming (independent)."""
    na, nb = len(va), len(vb)
    cost = np.array([[(x - y) ** 2 for y in vb] for x in va]).ravel()
    a_eq = []
    for i in range(na):
        row = np.zeros((na, nb))
        row[i, :] = 1.0
        a_eq.append(row.ravel())
    for j in range(nb):
        row = np.zeros((na, nb))
        row[:, j] = 1.0
        a_eq.append(row.ravel())
    res = linprog(cost, A_eq=np.array(a_eq), b_eq=np.concatenate([pa, pb]),
                  bounds=(0, None), method="highs")
    assert res.success
    return res.fun


def test_wp_identical_laws():
    d = EmpiricalDist.from_samples([-1.0, 1.0])
    assert wp_empirical(d, d, 2) == 0.0


def test_wp_translation():
    a = EmpiricalDist.from_samples([0.0, 0.0])
    b = EmpiricalDist.from_samples([1.0, 1.0])
    assert abs(wp_empirical(a, b, 2) - 1.0) <= 1e-15


def test_wp_spec_example_vs_bruteforce():
    a = EmpiricalDist.from_samples([0.0, 1.0, 2.0, 5.0])
    b = EmpiricalDist.from_samples([1.0, 1.0, 3.0, 4.0])
    assert abs(wp_empirical(a, b, 2) - brute_force_wp(a.samples, b.samples, 2)) <= 1e-12


def test_wp_randomized_vs_bruteforce():
    rng = np.random.default_rng(202)
    for trial in range(60):
        m = int(rng.integers(1, 7))
        p = float(rng.choice([1, 2]))
        a = EmpiricalDist.from_samples(rng.normal(size=m) * 3)
        b = EmpiricalDist.from_samples(rng.normal(size=m) * 3)
        got = wp_empirical(a, b, p)
        ref = brute_force_wp(a.samples, b.samples, p)
        assert abs(got - ref) <= 1e-12, f"trial {trial}"


def test_wp_unequal_sizes_vs_replication():
    # replicate both laws to the lcm size; sorted pairing is then exact
    rng = np.random.default_rng(303)
    for _ in range(40):
        ma, mb = int(rng.integers(1, 7)), int(rng.integers(1, 7))
        p = float(rng.choice([1, 2, 3]))
        a = EmpiricalDist.from_samples(rng.normal(size=ma))
        b = EmpiricalDist.from_samples(rng.normal(size=mb))
        L = math.lcm(ma, mb)
        ra = np.repeat(a.samples, L // ma)
        rb = np.repeat(b.samples, L // mb)
        ref = float(np.mean(np.abs(ra - rb) ** p) ** (1.0 / p))
        assert abs(wp_empirical(a, b, p) - ref) <= 1e-12


def test_wp_metric_properties():
    rng = np.random.default_rng(404)
    for _ in range(40):
        m = int(rng.integers(2, 7))
        p = float(rng.choice([1, 2]))
        a = EmpiricalDist.from_samples(rng.normal(size=m))
        b = EmpiricalDist.from_samples(rng.normal(size=m))
        c = EmpiricalDist.from_samples(rng.normal(size=m))
        dab, dba = wp_empirical(a, b, p), wp_empirical(b, a, p)
        assert abs(dab - dba) <= 1e-14
        assert wp_empirical(a, a, p) == 0.0
        assert dab <= wp_empirical(a, c, p) + wp_empirical(c, b, p) + 1e-12


def test_wp_rejects_p_below_one():
    d = EmpiricalDist.from_samples([0.0, 1.0])
    with pytest.raises(PreconditionError):
        wp_empirical(d, d, 0.5)


def test_w2_gaussian_point_mass():
    assert abs(w2_empirical_gaussian(EmpiricalDist.from_samples([0.0, 0.0]), 1.0)
               - 1.0) <= 1e-14


def test_w2_gaussian_rademacher_closed_form():
    d = EmpiricalDist.from_samples([-1.0, 1.0])
    assert abs(w2_empirical_gaussian(d, 1.0) - W2_RADEMACHER) <= 1e-9


def test_w2_gaussian_degenerate_sigma():
    d = EmpiricalDist.from_samples([-1.0, 1.0])
    assert abs(w2_empirical_gaussian(d, 0.0) - 1.0) <= 1e-15


def test_w2_gaussian_vs_quadrature():
    rng = np.random.default_rng(505)
    for _ in range(10):
        m = int(rng.integers(2, 8))
        sigma2 = float(rng.uniform(0.25, 2.0))
        d = EmpiricalDist.from_samples(rng.normal(size=m))
        sigma = math.sqrt(sigma2)

        def integrand(u):
            return (d.quantile(u) - sigma * ga.normal_quantile(u)) ** 2

        pts = np.arange(1, m) / m
        ref = 0.0
        for lo, hi in zip(np.concatenate([[0.0], pts]), np.concatenate([pts, [1.0]])):
            val, _ = quad(integrand, lo + 1e-13, hi - 1e-13, limit=400)
            ref += val
        assert abs(w2_empirical_gaussian(d, sigma2) - math.sqrt(ref)) <= 1e-6


def test_w2_cross_term_decomposition():
    # w2^2 = mean(x^2) + sigma^2 - 2 sigma sum x_i [phi(q_{i-1}) - phi(q_i)]
    rng = np.random.default_rng(606)
    for _ in range(20):
        m = int(rng.integers(2, 50))
        sigma2 = float(rng.uniform(0.1, 3.0))
        x = np.sort(rng.normal(size=m))
        d = EmpiricalDist(x)
        u = np.arange(1, m) / m
        q = ga.normal_quantile(u)
        phi = np.concatenate([[0.0], ga.normal_pdf(q), [0.0]])
        w = phi[:-1] - phi[1:]
        sigma = math.sqrt(sigma2)
        ref = np.mean(x * x) + sigma2 - 2.0 * sigma * np.dot(x, w)
        assert abs(w2_empirical_gaussian(d, sigma2) ** 2 - ref) <= 1e-10


def test_lattice_gaussian_point_mass():
    lat = LatticeDist(0.0, 1.0, np.array([1.0]))
    assert abs(w2_lattice_gaussian(lat, 1.0) - 1.0) <= 1e-14


def test_lattice_matches_empirical_representation():
    lat = LatticeDist(-1.0, 2.0, np.array([0.5, 0.5]))
    emp = EmpiricalDist.from_samples([-1.0, 1.0])
    assert abs(w2_lattice_gaussian(lat, 1.0)
               - w2_empirical_gaussian(emp, 1.0)) <= 1e-12


def test_lattice_discretized_normal_scaling():
    # W2(N(0, s^2), N(0,1)) = |s - 1|; discretization at step h adds O(h)
    for s in (1.3, 0.7):
        h = 1e-3
        half = int(8 * s / h)
        grid = h * np.arange(-half, half + 1)
        edges = (grid[:-1] + grid[1:]) / 2 / s
        probs = np.diff(np.concatenate([[0.0], ga.normal_cdf(edges), [1.0]]))
        probs = probs / probs.sum()
        lat = LatticeDist(float(grid[0]), h, probs)
        got = w2_lattice_gaussian(lat, 1.0)
        assert abs(got - abs(s - 1.0)) <= 1e-3, f"s={s}, got {got}"


def test_kp_rademacher():
    lat = LatticeDist(-1.0, 2.0, np.array([0.5, 0.5]))
    assert abs(kp_integral(lat, 2) - KP2_RADEMACHER) <= 1e-9


def test_kp_p1_vs_quadrature():
    lat = LatticeDist(-1.0, 2.0, np.array([0.5, 0.5]))

    def integrand(u):
        x = -1.0 if u <= 0.5 else 1.0
        return abs(x - ga.normal_quantile(u))

    ref = 0.0
    for lo, hi in [(1e-12, 0.5), (0.5, 1 - 1e-12)]:
        val, _ = quad(integrand, lo, hi, limit=400)
        ref += val
    assert abs(kp_integral(lat, 1) - ref) <= 1e-7


def test_kp_discretized_normal_vanishes():
    prev = math.inf
    for h in (0.5, 0.25, 0.125):
        half = int(6 / h)
        grid = h * np.arange(-half, half + 1)
        edges = np.concatenate([(grid[:-1] + grid[1:]) / 2])
        cdf = np.concatenate([[0.0], ga.normal_cdf(edges), [1.0]])
        probs = np.diff(cdf)
        probs /= probs.sum()
        lat = LatticeDist(float(grid[0]), h, probs)
        val = kp_integral(lat, 2)
        assert val < prev
        prev = val
    assert prev <= 0.01


def test_kp_moment_preconditions():
    off_mean = LatticeDist(0.0, 1.0, np.array([0.5, 0.5]))  # mean 0.5
    with pytest.raises(PreconditionError, match="centered"):
        kp_integral(off_mean, 2)
    big_var = LatticeDist(-2.0, 4.0, np.array([0.5, 0.5]))  # second moment 4
    with pytest.raises(PreconditionError, match="Z\\^2"):
        kp_integral(big_var, 2)


def test_quantile_gap_bound_trivials():
    assert quantile_gap_bound(0.0, 0.25, 2) == 0.0
    with pytest.raises(PreconditionError):
        quantile_gap_bound(1.0, 0.6, 2)
    with pytest.raises(PreconditionError):
        quantile_gap_bound(1.0, 0.0, 2)


def test_quantile_gap_bound_formula():
    # direct high-precision evaluation of the two branches
    k_p, u, p = KP2_RADEMACHER, 0.25, 2
    core = (p + 1) * math.e * k_p
    t1 = (core / (u * ga.superquantile(u))) ** (1.0 / (p + 1))
    t2 = (core / u) ** (1.0 / p)
    assert abs(quantile_gap_bound(k_p, u, p) - max(t1, t2)) <= 1e-12


def test_quantile_gap_bound_monotone_in_kp():
    rng = np.random.default_rng(707)
    for _ in range(50):
        k = float(rng.uniform(0.0, 2.0))
        u = float(rng.uniform(0.01, 0.5))
        p = int(rng.choice([1, 2, 3]))
        assert quantile_gap_bound(2 * k, u, p) >= quantile_gap_bound(k, u, p)


def test_verify_prop_rademacher_grid():
    lat = LatticeDist(-1.0, 2.0, np.array([0.5, 0.5]))
    reps = verify_prop_quantile(lat, np.arange(0.05, 0.51, 0.05), 2)
    assert all(not r.violated for r in reps)


def test_verify_prop_discretized_normal():
    h = 0.05
    half = int(6 / h)
    grid = h * np.arange(-half, half + 1)
    edges = (grid[:-1] + grid[1:]) / 2
    probs = np.diff(np.concatenate([[0.0], ga.normal_cdf(edges), [1.0]]))
    probs /= probs.sum()
    lat = LatticeDist(float(grid[0]), h, probs)
    reps = verify_prop_quantile(lat, [0.05, 0.1, 0.25, 0.5], 2)
    for r in reps:
        assert r.lhs <= 0.05 and not r.violated


def test_verify_prop_asymmetric_two_point():
    # mean 0, variance 2: values b, -2/b with masses balancing
    for b in (0.5, 1.0, 1.7):
        other = -2.0 / b
        p_mass = -other / (b - other)
        lat = LatticeDist(other, b - other, np.array([1.0 - p_mass, p_mass]))
        assert abs(lat.mean()) <= 1e-12 and lat.second_moment() <= 2 + 1e-12
        reps = verify_prop_quantile(lat, [0.05, 0.1, 0.25, 0.4, 0.5], 1)
        assert all(not r.violated for r in reps)
        reps = verify_prop_quantile(lat, [0.05, 0.1, 0.25, 0.4, 0.5], 2)
        assert all(not r.violated for r in reps)


def test_conditional_dominates_independent_labels():
    joint = [("a", -1.0, 0.25), ("a", 1.0, 0.25), ("b", -1.0, 0.25), ("b", 1.0, 0.25)]
    for target in (ga.GaussianLaw(1.0), LatticeDist(0.0, 1.0, np.array([0.5, 0.5]))):
        u, c = conditional_w2_dominates(joint, target)
        assert abs(u - c) <= 1e-12


def test_conditional_dominates_sign_labels_point_target():
    joint = [("neg", -1.5, 0.5), ("pos", 1.5, 0.5)]
    target = LatticeDist(0.0, 1.0, np.array([1.0]))
    u, c = conditional_w2_dominates(joint, target)
    assert abs(u - 2.25) <= 1e-12 and abs(c - 2.25) <= 1e-12


def test_conditional_dominates_vs_lp_oracle():
    rng = np.random.default_rng(808)
    for _ in range(10):
        labels = ["a", "b", "c"]
        values = np.round(rng.normal(size=3), 3)
        probs = rng.dirichlet(np.ones(9))
        joint = [(lab, float(v), float(p))
                 for (lab, v), p in zip(itertools.product(labels, values), probs)]
        tv = np.round(np.sort(rng.normal(size=3)), 3)
        tp = rng.dirichlet(np.ones(3))
        mv = {}
        for _, v, p in joint:
            mv[v] = mv.get(v, 0.0) + p
        keys = sorted(mv)
        got_u, got_c = conditional_w2_dominates(joint, _lattice_from(tv, tp))
        ref_u = lp_w2sq(keys, np.array([mv[k] for k in keys]), tv, tp)
        assert abs(got_u - ref_u) <= 1e-7
        assert got_u <= got_c + 1e-12


def _lattice_from(values, probs):
    """Discrete law as a LatticeDist over the gcd lattice of the values."""
    from w2lab.oracle import detect_lattice

    values = np.asarray(values, dtype=float)
    offset, step, idx = detect_lattice(np.round(values, 6), tol=1e-7)
    width = int(idx.max()) + 1
    p = np.zeros(width)
    for i, j in enumerate(idx):
        p[j] += probs[i]
    return LatticeDist(offset, step, p)


def test_conditional_dominates_random_battery():
    rng = np.random.default_rng(909)
    for trial in range(100):
        n_lab = int(rng.integers(1, 5))
        n_val = int(rng.integers(1, 6))
        values = np.round(rng.normal(size=n_val) * 2, 4)
        probs = rng.dirichlet(np.ones(n_lab * n_val))
        joint = [(lab, float(v), float(p))
                 for (lab, v), p in zip(
                     itertools.product(range(n_lab), values), probs)]
        target = ga.GaussianLaw(float(rng.uniform(0.0, 2.0)))
        u, c = conditional_w2_dominates(joint, target)
        assert u <= c + 1e-12, f"trial {trial}: {u} > {c}"


def test_lattice_validation():
    with pytest.raises(ValueError):
        LatticeDist(0.0, 1.0, np.array([0.5, 0.6]))
    with pytest.raises(ValueError):
        LatticeDist(0.0, -1.0, np.array([1.0]))
    with pytest.raises(ValueError):
        LatticeDist(0.0, 1.0, np.array([-0.1, 1.1]))
