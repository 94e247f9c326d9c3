"""Exact 1-D transport costs via generalized inverses.

All distances here are computed from quantile functions: for laws on the
line, W_p(mu, nu)^p = int_0^1 |F^{-1}(u) - G^{-1}(u)|^p du.  Discrete laws
have piecewise-constant quantile functions, so every integral reduces to a
finite sum of closed forms; against a Gaussian the per-interval pieces are
Gaussian partial moments.  No quadrature anywhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .gaussian import (
    GaussianLaw,
    gaussian_partial_moment,
    normal_quantile,
    superquantile,
)


class PreconditionError(ValueError):
    """A documented numeric precondition was violated."""


@dataclass(frozen=True)
class EmpiricalDist:
    """Uniform-weight law on a nondecreasing sample vector.

    The generalized inverse is F^{-1}(u) = samples[ceil(u*m) - 1] (0-based),
    i.e. the left-continuous convention F^{-1}(u) = inf{x : F(x) >= u}.
    """

    samples: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.samples, dtype=float)
        if arr.ndim != 1 or arr.size < 1:
            raise ValueError("samples must be a nonempty 1-D array")
        if not np.all(np.isfinite(arr)):
            raise ValueError("samples must be finite")
        if np.any(np.diff(arr) < 0):
            raise ValueError("samples must be nondecreasing; use from_samples to sort")
        object.__setattr__(self, "samples", arr)

    @classmethod
    def from_samples(cls, samples) -> "EmpiricalDist":
        return cls(np.sort(np.asarray(samples, dtype=float)))

    @property
    def size(self) -> int:
        return int(self.samples.size)

    def quantile(self, u: float) -> float:
        if not 0.0 < u <= 1.0:
            raise ValueError("quantile requires u in (0, 1]")
        m = self.samples.size
        return float(self.samples[math.ceil(u * m) - 1])

    def mean(self) -> float:
        return float(np.mean(self.samples))

    def second_moment(self) -> float:
        return float(np.mean(self.samples**2))


@dataclass(frozen=True)
class LatticeDist:
    """Finitely supported law with atom i at offset + i*step."""

    offset: float
    step: float
    probs: np.ndarray

    def __post_init__(self) -> None:
        p = np.asarray(self.probs, dtype=float)
        if p.ndim != 1 or p.size < 1:
            raise ValueError("probs must be a nonempty 1-D array")
        if self.step <= 0.0 or not math.isfinite(self.step):
            raise ValueError("step must be positive and finite")
        if np.any(p < -1e-15):
            raise ValueError("probs must be nonnegative")
        total = math.fsum(p.tolist())
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"probs must sum to 1 within 1e-12, got {total!r}")
        object.__setattr__(self, "probs", np.clip(p, 0.0, None))

    @property
    def support(self) -> np.ndarray:
        return self.offset + self.step * np.arange(self.probs.size)

    def atoms(self) -> tuple[np.ndarray, np.ndarray]:
        """(values, probs) with zero-probability atoms removed."""
        mask = self.probs > 0.0
        return self.support[mask], self.probs[mask]

    def cumulative(self) -> np.ndarray:
        c = np.cumsum(self.probs)
        c[-1] = 1.0
        return c

    def quantile(self, u: float) -> float:
        if not 0.0 < u <= 1.0:
            raise ValueError("quantile requires u in (0, 1]")
        c = self.cumulative()
        i = int(np.searchsorted(c, u, side="left"))
        return float(self.support[i])

    def mean(self) -> float:
        return float(np.dot(self.support, self.probs))

    def second_moment(self) -> float:
        return float(np.dot(self.support**2, self.probs))

    def scaled(self, factor: float) -> "LatticeDist":
        """Law of factor * X (factor > 0)."""
        if factor <= 0:
            raise ValueError("scale factor must be positive")
        return LatticeDist(self.offset * factor, self.step * factor, self.probs)


@dataclass(frozen=True)
class QuantileGapReport:
    """One row of a Proposition-style quantile comparison."""

    u: float
    lhs: float
    rhs: float
    p: int
    k_p: float

    @property
    def violated(self) -> bool:
        return self.lhs > self.rhs


def _atoms_of(law) -> tuple[np.ndarray, np.ndarray]:
    """(sorted values, probs) of a discrete law, zero atoms dropped."""
    if isinstance(law, LatticeDist):
        return law.atoms()
    if isinstance(law, EmpiricalDist):
        m = law.samples.size
        return law.samples, np.full(m, 1.0 / m)
    raise TypeError(f"unsupported law type: {type(law).__name__}")


def wp_empirical(a: EmpiricalDist, b: EmpiricalDist, p: float) -> float:
    """W_p between two empirical laws, exact on the merged breakpoint grid."""
    if p < 1.0:
        raise PreconditionError(f"W_p requires p >= 1, got {p}")
    xa, xb = a.samples, b.samples
    ma, mb = xa.size, xb.size
    if ma == mb:
        return float(np.mean(np.abs(xa - xb) ** p) ** (1.0 / p))
    # merged grid {i/ma} U {j/mb} handled exactly over denominator L
    g = math.gcd(ma, mb)
    L = ma * (mb // g)
    ra, rb = L // ma, L // mb
    bps = np.union1d(np.arange(1, ma + 1, dtype=np.int64) * ra,
                     np.arange(1, mb + 1, dtype=np.int64) * rb)
    du = np.diff(np.concatenate([[0], bps])) / float(L)
    ia = -(-bps // ra) - 1  # ceil(k/ra) - 1, 0-based index
    ib = -(-bps // rb) - 1
    cost = np.dot(du, np.abs(xa[ia] - xb[ib]) ** p)
    return float(cost ** (1.0 / p))


def _interior_cums(c: np.ndarray) -> np.ndarray:
    # interior breakpoints can round to 0/1 when edge atoms carry mass below
    # float resolution; clamping there changes the integral by < 1e-290
    return np.clip(c, 1e-300, 1.0 - 1e-16)


def _w2sq_discrete_gaussian(values: np.ndarray, probs: np.ndarray, sigma2: float) -> float:
    """Exact int_0^1 (F^{-1}(u) - sigma*Phi^{-1}(u))^2 du for a discrete law."""
    if sigma2 < 0:
        raise PreconditionError("sigma2 must be nonnegative")
    c = np.cumsum(probs)
    c[-1] = 1.0
    if sigma2 == 0.0:
        return float(np.dot(values**2, probs))
    sigma = math.sqrt(sigma2)
    q = np.empty(values.size + 1)
    q[0], q[-1] = -np.inf, np.inf
    if values.size > 1:
        q[1:-1] = normal_quantile(_interior_cums(c[:-1]))
    m1 = gaussian_partial_moment(1, q[:-1], q[1:])
    m2 = gaussian_partial_moment(2, q[:-1], q[1:])
    return float(np.dot(values**2, probs) - 2.0 * sigma * np.dot(values, m1)
                 + sigma2 * np.sum(m2))


def w2_empirical_gaussian(a: EmpiricalDist, sigma2: float) -> float:
    """W_2 between an empirical law and N(0, sigma2), exact per-interval."""
    values, probs = _atoms_of(a)
    return math.sqrt(max(0.0, _w2sq_discrete_gaussian(values, probs, sigma2)))


def w2_lattice_gaussian(d: LatticeDist, sigma2: float) -> float:
    """W_2 between a lattice law and N(0, sigma2), exact per-interval."""
    values, probs = _atoms_of(d)
    return math.sqrt(max(0.0, _w2sq_discrete_gaussian(values, probs, sigma2)))


def _check_kp_moments(values: np.ndarray, probs: np.ndarray) -> None:
    mean = float(np.dot(values, probs))
    second = float(np.dot(values**2, probs))
    if abs(mean) > 1e-9:
        raise PreconditionError(f"K_p requires a centered law; E Z = {mean!r}")
    if second > 2.0 + 1e-9:
        raise PreconditionError(f"K_p requires E Z^2 <= 2; got E Z^2 = {second!r}")


def kp_integral(z, p: int) -> float:
    """K_p = int_0^1 |F_Z^{-1}(t) - Phi^{-1}(t)|^p dt for integer p >= 1.

    Same piecewise scheme as the W_2 integrals; each constant piece of the
    quantile function is split at Phi(x) where the sign of x - Phi^{-1}(u)
    flips, and the signed power integrates via Gaussian partial moments.
    """
    if p < 1 or p != int(p):
        raise PreconditionError(f"K_p requires integer p >= 1, got {p}")
    p = int(p)
    values, probs = _atoms_of(z)
    _check_kp_moments(values, probs)
    cums = np.cumsum(probs)
    cums[-1] = 1.0
    inner_q = normal_quantile(_interior_cums(cums[:-1])) if values.size > 1 else []
    binom = [math.comb(p, i) for i in range(p + 1)]

    total = 0.0
    u0 = 0.0
    q0 = -np.inf
    for x, u1, q1 in zip(values, cums, list(inner_q) + [np.inf]):
        # split at s = Phi(x) when the quantile crosses x inside the piece
        pieces = []
        if q0 < x < q1:
            pieces.append((q0, x, +1.0))   # q < x on this piece: |x - q| = x - q
            pieces.append((x, q1, -1.0))   # q > x: |x - q| = q - x
        elif x <= q0:
            pieces.append((q0, q1, -1.0))
        else:
            pieces.append((q0, q1, +1.0))
        for lo, hi, sign in pieces:
            # sign=+1: (x - q)^p ; sign=-1: (q - x)^p
            acc = 0.0
            for i in range(p + 1):
                m_i = gaussian_partial_moment(i, lo, hi)
                if sign > 0:
                    coef = binom[i] * (x ** (p - i)) * ((-1.0) ** i)
                else:
                    coef = binom[i] * ((-x) ** (p - i))
                acc += coef * m_i
            total += acc
        u0, q0 = u1, q1
    return float(max(0.0, total))


def quantile_gap_bound(k_p: float, u: float, p: int) -> float:
    """Upper bound for |F_Z^{-1}(1-u) - Phi^{-1}(1-u)| from K_p, u in (0, 1/2]."""
    if not 0.0 < u <= 0.5:
        raise PreconditionError(f"quantile_gap_bound requires u in (0, 1/2], got {u}")
    if k_p < 0:
        raise PreconditionError("k_p must be nonnegative")
    if p < 1 or p != int(p):
        raise PreconditionError("p must be an integer >= 1")
    core = (p + 1) * math.e * k_p
    term1 = (core / (u * superquantile(u))) ** (1.0 / (p + 1))
    term2 = (core / u) ** (1.0 / p)
    return max(term1, term2)


def verify_prop_quantile(z, u_grid, p: int) -> list[QuantileGapReport]:
    """Exact upper-quantile gaps of a discrete law against the K_p bound."""
    k_p = kp_integral(z, p)
    reports = []
    for u in u_grid:
        if not 0.0 < u <= 0.5:
            raise PreconditionError(f"u grid must lie in (0, 1/2], got {u}")
        lhs = abs(z.quantile(1.0 - u) - normal_quantile(1.0 - u))
        rhs = quantile_gap_bound(k_p, u, int(p))
        reports.append(QuantileGapReport(u=float(u), lhs=float(lhs), rhs=float(rhs),
                                         p=int(p), k_p=k_p))
    return reports


def _w2sq_discrete_discrete(va, pa, vb, pb) -> float:
    """Exact squared W_2 between two discrete laws via merged cumulatives."""
    ca = np.cumsum(pa)
    ca[-1] = 1.0
    cb = np.cumsum(pb)
    cb[-1] = 1.0
    bounds = np.union1d(ca, cb)
    du = np.diff(np.concatenate([[0.0], bounds]))
    ia = np.searchsorted(ca, bounds, side="left")
    ib = np.searchsorted(cb, bounds, side="left")
    diff = va[np.minimum(ia, va.size - 1)] - vb[np.minimum(ib, vb.size - 1)]
    return float(np.dot(du, diff * diff))


def _w2sq_to_target(values: np.ndarray, probs: np.ndarray, target) -> float:
    if isinstance(target, GaussianLaw):
        return _w2sq_discrete_gaussian(values, probs, target.variance)
    tv, tp = _atoms_of(target)
    return _w2sq_discrete_discrete(values, probs, tv, tp)


def conditional_w2_dominates(joint, target) -> tuple[float, float]:
    """Unconditional vs label-conditional mean squared W_2 to a fixed target.

    ``joint`` is an iterable of (label, value, prob) triples with probs
    summing to 1.  Returns (W_2^2(marginal, target),
    sum_label P(label) W_2^2(value | label, target)); conditioning through the
    shared-uniform quantile coupling can only increase the cost, so the first
    output never exceeds the second beyond 1e-12 roundoff.
    """
    triples = list(joint)
    if not triples:
        raise ValueError("joint law must be nonempty")
    total = math.fsum(p for _, _, p in triples)
    if abs(total - 1.0) > 1e-10:
        raise ValueError(f"joint probabilities must sum to 1, got {total!r}")
    if any(p < 0 for _, _, p in triples):
        raise ValueError("joint probabilities must be nonnegative")

    by_label: dict = {}
    for label, value, prob in triples:
        if prob == 0.0:
            continue
        by_label.setdefault(label, []).append((float(value), float(prob)))

    # marginal law of the value
    all_pairs = sorted((v, p) for pairs in by_label.values() for v, p in pairs)
    mv = np.array([v for v, _ in all_pairs])
    mp = np.array([p for _, p in all_pairs])
    # merge duplicate values so cumulative breakpoints are clean
    uv, inv = np.unique(mv, return_inverse=True)
    up = np.zeros_like(uv)
    np.add.at(up, inv, mp)
    unconditional = _w2sq_to_target(uv, up, target)

    conditional_mean = 0.0
    for pairs in by_label.values():
        pairs.sort()
        w = math.fsum(p for _, p in pairs)
        cv = np.array([v for v, _ in pairs])
        cp = np.array([p / w for _, p in pairs])
        conditional_mean += w * _w2sq_to_target(cv, cp, target)
    return float(unconditional), float(conditional_mean)
