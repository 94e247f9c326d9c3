"""DP oracle checks: closed-form binomials, mass conservation, CLT metrics."""

import math

import numpy as np
import pytest

from w2lab import coefficients as co
from w2lab import oracle as orc
from w2lab import processes as pr
from w2lab.gaussian import normal_cdf
from w2lab.transport import LatticeDist, PreconditionError, w2_lattice_gaussian


@pytest.fixture(scope="module")
def chain3():
    return pr.FiniteMarkovSpec(
        np.array([[0.2, 0.5, 0.3], [0.4, 0.1, 0.5], [0.3, 0.4, 0.3]]),
        np.array([1.0, 0.0, -1.0]))


@pytest.fixture(scope="module")
def iid_rad_chain():
    return pr.FiniteMarkovSpec(np.array([[0.5, 0.5], [0.5, 0.5]]),
                               np.array([-1.0, 1.0]))


def test_detect_lattice_simple():
    offset, step, idx = orc.detect_lattice([-1.0, 0.0, 1.0])
    assert offset == -1.0 and abs(step - 1.0) <= 1e-12
    assert list(idx) == [0, 1, 2]


def test_detect_lattice_scaled():
    offset, step, idx = orc.detect_lattice([0.25, 1.0, 1.75])
    assert abs(step - 0.75) <= 1e-9
    assert list(idx) == [0, 1, 2]


def test_detect_lattice_rejects_irrational_mix():
    with pytest.raises(orc.NotLatticeError):
        orc.detect_lattice([0.0, 1.0, math.sqrt(2)])


def test_detect_lattice_constant():
    offset, step, idx = orc.detect_lattice([0.3, 0.3])
    assert step == 1.0 and list(idx) == [0, 0]


def test_n1_law_is_transition_row(chain3):
    law = orc.conditional_sn_law(chain3, 1)
    for x in range(3):
        lat = law.state_lattice(x)
        # law of X_1 = f(xi_1) given xi_0 = x comes straight off row x
        expect = {}
        for j in range(3):
            key = round(float(chain3.observable[j]), 9)
            expect[key] = expect.get(key, 0.0) + chain3.transition[x, j]
        vals, probs = lat.atoms()
        for v, p in zip(vals, probs):
            assert abs(expect.get(round(float(v), 9), 0.0) - p) <= 1e-12


def test_iid_rows_law_is_binomial(iid_rad_chain):
    n = 40
    law = orc.conditional_sn_law(iid_rad_chain, n)
    # per-state law = Binomial(n, 1/2) mapped to {-n..n} step 2, any state
    pmf = np.array([math.comb(n, j) for j in range(n + 1)], dtype=float) / 2.0**n
    for x in range(2):
        lat = law.state_lattice(x)
        vals, probs = lat.atoms()
        assert np.allclose(vals, -n + 2.0 * np.arange(n + 1))
        assert np.max(np.abs(probs - pmf)) <= 1e-12
    assert np.allclose(law.state_lattice(0).probs, law.state_lattice(1).probs)


def test_mass_and_mixture_consistency(chain3):
    n = 256
    law = orc.conditional_sn_law(chain3, n)
    for x in range(3):
        assert abs(law.state_mass(x) - 1.0) <= 1e-12
    mix = law.mixture_probs()
    direct = chain3.stationary @ law.per_state
    assert np.max(np.abs(mix - direct)) <= 1e-12
    assert abs(law.mixture_lattice().mean()) <= 1e-10


def test_empirical_cdf_within_dkw_band(chain3):
    n, m = 128, 100_000
    law = orc.conditional_sn_law(chain3, n)
    vals, probs = law.mixture_lattice().atoms()
    cum = np.cumsum(probs)
    sums = pr.simulate_sums(chain3, [n], m, 20260810)[0]
    emp = np.searchsorted(np.sort(sums), vals + 1e-9) / m
    ks = float(np.max(np.abs(emp - cum)))
    band = math.sqrt(math.log(2 / 0.01) / (2 * m))
    assert ks <= band


def test_fact11_unconditional_below_conditional(chain3):
    for n in (16, 64, 256):
        law = orc.conditional_sn_law(chain3, n)
        cond = orc.exact_conditional_w2(chain3, n, law=law)
        uncond = orc.exact_unconditional_w2(chain3, n, law=law)
        assert uncond <= cond + 1e-12


def test_iid_rows_conditional_equals_direct_binomial(iid_rad_chain):
    n = 64
    val = orc.exact_conditional_w2(iid_rad_chain, n, sigma2=1.0)
    pmf = np.array([math.comb(n, j) for j in range(n + 1)], dtype=float) / 2.0**n
    lat = LatticeDist(-n / math.sqrt(n), 2.0 / math.sqrt(n), pmf)
    direct = w2_lattice_gaussian(lat, 1.0) ** 2
    assert abs(val - direct) <= 1e-12


def test_degenerate_observable_gives_zero():
    spec = pr.FiniteMarkovSpec(np.array([[0.5, 0.5], [0.5, 0.5]]),
                               np.array([1.0, 1.0]))  # centers to f == 0
    assert orc.exact_conditional_w2(spec, 8, sigma2=0.0) == 0.0


def test_conditional_w2_scaling_bounded(chain3):
    vals = [2**k * orc.exact_conditional_w2(chain3, 2**k) for k in range(4, 11)]
    assert max(vals) / min(vals) <= 3.0


def test_berry_esseen_rademacher_n1(iid_rad_chain):
    expect = normal_cdf(1.0) - 0.5
    assert abs(orc.exact_berry_esseen(iid_rad_chain, 1) - expect) <= 1e-12


def test_berry_esseen_scaling(chain3):
    vals = [orc.exact_berry_esseen(chain3, 2**k) * (2**k) ** (1 / 3)
            for k in range(4, 11)]
    assert max(vals) / min(vals) <= 4.0


def test_berry_esseen_degenerate_rejected():
    spec = pr.FiniteMarkovSpec(np.array([[0.5, 0.5], [0.5, 0.5]]),
                               np.array([2.0, 2.0]))
    with pytest.raises(PreconditionError, match="sigma_n"):
        orc.exact_berry_esseen(spec, 8)


def test_quantile_gap_median_symmetric(iid_rad_chain):
    n = 33  # odd: no atom at zero, median gap is half a lattice step
    law = orc.conditional_sn_law(iid_rad_chain, n)
    scan = orc.exact_quantile_gaps(iid_rad_chain, n, [0.5], law=law)
    u, gap, bound = scan.points[0]
    sigma_n = math.sqrt(co.var_sn(iid_rad_chain, n))
    step = 2.0 / sigma_n
    assert gap <= step / 2 + 1e-12
    assert gap <= bound + 1e-15


def test_quantile_gap_decreases_with_n(chain3):
    gaps = []
    for n in (64, 256, 1024):
        scan = orc.exact_quantile_gaps(chain3, n, [0.25])
        gaps.append(scan.points[0][1])
    assert gaps[2] <= gaps[0] + 1e-12


def test_quantile_gap_scaling(chain3):
    u_grid = np.arange(0.1, 0.91, 0.1)
    stats = []
    for k in range(6, 11):
        n = 2**k
        scan = orc.exact_quantile_gaps(chain3, n, u_grid)
        stats.append(max(g * math.sqrt(n * u * (1 - u)) for u, g, _ in scan.points))
    assert max(stats) / min(stats) <= 5.0


def test_superquantile_gap_u1_is_mean(chain3):
    out = orc.exact_superquantile_gap(chain3, 64, [1.0])
    assert out[0][1] <= 1e-10


def test_superquantile_gap_scaling():
    # a chain with nonzero third cumulant: the skewness term dominates and
    # scales exactly like (nu)^{-1/2}; symmetric chains decay faster, which
    # keeps the statistic bounded but not flat
    asym = pr.FiniteMarkovSpec(
        np.array([[0.6, 0.3, 0.1], [0.2, 0.5, 0.3], [0.15, 0.25, 0.6]]),
        np.array([2.0, 0.0, -1.0]))
    u_grid = np.arange(0.1, 0.91, 0.1)
    stats = []
    for k in range(6, 11):
        n = 2**k
        out = orc.exact_superquantile_gap(asym, n, u_grid)
        stats.append(max(g * math.sqrt(n * u) for u, g in out))
    assert max(stats) / min(stats) <= 5.0


def test_superquantile_matches_monte_carlo(iid_rad_chain):
    n, m = 64, 100_000
    law = orc.conditional_sn_law(iid_rad_chain, n)
    z, probs, sigma_n = orc._normalized_atoms(law)
    exact = orc.discrete_superquantile(z, probs, 0.25)
    sums = pr.simulate_sums(iid_rad_chain, [n], m, 5)[0] / sigma_n
    srt = np.sort(sums)
    top = srt[-int(0.25 * m):]
    mc = top.mean()
    se = top.std() / math.sqrt(top.size)
    assert abs(exact - mc) <= 3 * se + 1e-3


def test_memory_cap(chain3):
    with pytest.raises(orc.OracleMemoryError):
        orc.conditional_sn_law(chain3, 4096, memory_cap=10_000)


def test_law_csv_export(tmp_path, chain3):
    law = orc.conditional_sn_law(chain3, 8)
    out = tmp_path / "law.csv"
    law.to_csv(out)
    lines = out.read_text().strip().splitlines()
    assert lines[0] == "state,atom,probability"
    assert len(lines) > 10
