"""Dependence coefficients and limit constants.

Exact computations for finite chains (transfer matrices with diagonal
observable insertions, fundamental-matrix series) and for the circle walk
(kernel eigenstructure on Fourier modes); nested Monte Carlo estimators
elsewhere.  The suprema defining the coefficients run over infinite index
families, so every computed value is the exact maximum over a finite window
of index tuples and is labeled a lower bound of the full supremum.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import processes as pr
from ._seeding import rng_for
from .transport import PreconditionError

DEFAULT_WINDOW = 12


@dataclass(frozen=True)
class CoefficientTable:
    """Per-lag coefficient values with estimator metadata.

    ``kind`` is one of "theta", "alpha_dep", "tau_restricted"; ``params``
    carries (p, q) or l; exact windowed values are lower bounds of the
    defining supremum, which the estimator label records.
    """

    kind: str
    params: dict
    lags: tuple
    values: tuple
    estimator: str
    window: int
    stderr: tuple | None = None

    def csv_rows(self) -> list[list[str]]:
        rows = []
        p = self.params.get("p", self.params.get("l", ""))
        q = self.params.get("q", "")
        for i, (k, v) in enumerate(zip(self.lags, self.values)):
            se = "" if self.stderr is None else f"{self.stderr[i]:.17g}"
            rows.append([self.kind, str(p), str(q), str(k), f"{v:.17g}",
                         self.estimator, str(self.window), se])
        return rows


CSV_HEADER = ["kind", "p", "q", "k", "value", "estimator", "window", "stderr"]


def second_eigenvalue_modulus(transition: np.ndarray) -> float:
    """Modulus of the second-largest eigenvalue of the transition matrix."""
    w = np.abs(np.linalg.eigvals(transition))
    w.sort()
    return float(w[-2]) if w.size > 1 else 0.0


def _fundamental_matrix(spec: pr.FiniteMarkovSpec) -> np.ndarray:
    """Z = (I - P + 1 pi)^{-1}; Z f = sum_{k>=0} P^k f for pi-centered f."""
    s = spec.n_states
    return np.linalg.inv(np.eye(s) - spec.transition + np.outer(np.ones(s), spec.stationary))


def _require_mixing(spec: pr.FiniteMarkovSpec) -> None:
    rho = second_eigenvalue_modulus(spec.transition)
    if rho >= 1.0 - 1e-12:
        raise PreconditionError(f"restricted spectral radius {rho} >= 1; "
                                "series does not converge (periodic or reducible chain)")


def _circle_eigenvalues(spec: pr.CircleWalkSpec) -> np.ndarray:
    ks = np.array([k for k, _, _ in spec.fourier], dtype=float)
    return np.cos(2.0 * math.pi * ks * spec.a)


def sigma2_exact(model) -> float:
    """Long-run variance sigma^2 = E X_0^2 + 2 sum_k Cov(X_0, X_k), exactly.

    Finite chains use the fundamental-matrix closed form of the geometric
    series; the circle walk uses Cov(X_0, X_n) = sum_k (c_k^2/2) cos^n(2 pi
    k a) summed in closed form; martingale differences and iid laws are
    immediate.
    """
    if isinstance(model, pr.IidSpec):
        return float(np.dot(model.probs, model.values**2))
    if isinstance(model, pr.TwoPointSpec):
        return model.sigma2
    if isinstance(model, pr.MartingaleSpec):
        return float(np.dot(model.base.stationary, model.g**2))
    if isinstance(model, pr.FiniteMarkovSpec):
        _require_mixing(model)
        f, pi = model.observable, model.stationary
        z_f = _fundamental_matrix(model) @ f
        return float(np.dot(pi, f * f) + 2.0 * np.dot(pi, f * (z_f - f)))
    if isinstance(model, pr.CircleWalkSpec):
        lam = _circle_eigenvalues(model)
        cs = np.array([c for _, c, _ in model.fourier])
        if np.any(np.abs(1.0 - lam) < 1e-14):
            raise PreconditionError("a Fourier mode has eigenvalue 1; step a is "
                                    "rationally degenerate for this frequency")
        return float(np.sum(0.5 * cs**2 * (1.0 + lam) / (1.0 - lam)))
    raise PreconditionError(f"{type(model).__name__} is not exact-capable for sigma^2")


def _autocov_markov(spec: pr.FiniteMarkovSpec, max_lag: int) -> np.ndarray:
    """(c_0, ..., c_max_lag) with c_k = E X_0 X_k."""
    f, pi, P = spec.observable, spec.stationary, spec.transition
    out = np.empty(max_lag + 1)
    v = f.copy()
    out[0] = np.dot(pi, f * f)
    for k in range(1, max_lag + 1):
        v = P @ v
        out[k] = np.dot(pi, f * v)
    return out


def _autocov_circle(spec: pr.CircleWalkSpec, max_lag: int) -> np.ndarray:
    lam = _circle_eigenvalues(spec)
    half_c2 = 0.5 * np.array([c for _, c, _ in spec.fourier]) ** 2
    powers = lam[None, :] ** np.arange(max_lag + 1)[:, None]
    return powers @ half_c2


def var_sn(model, n: int, n_paths: int = 4096, seed: int = 0) -> float:
    """Var S_n; exact where covariances are exact, Monte Carlo otherwise."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if isinstance(model, (pr.IidSpec, pr.TwoPointSpec)):
        return n * sigma2_exact(model)
    if isinstance(model, pr.MartingaleSpec):
        return n * sigma2_exact(model)
    if isinstance(model, pr.FiniteMarkovSpec):
        c = _autocov_markov(model, n - 1)
    elif isinstance(model, pr.CircleWalkSpec):
        c = _autocov_circle(model, n - 1)
    else:
        return var_sn_mc(model, n, n_paths, seed)[0]
    k = np.arange(1, n)
    return float(n * c[0] + 2.0 * np.dot(n - k, c[1:]))


def var_sn_mc(model, n: int, n_paths: int = 4096, seed: int = 0) -> tuple[float, float]:
    """Monte Carlo Var S_n with a standard error from the chi-square scale."""
    sums = pr.simulate_sums(model, [n], n_paths, seed)[0]
    v = float(np.var(sums, ddof=1))
    m4 = float(np.mean((sums - sums.mean()) ** 4))
    se = math.sqrt(max(m4 - v * v, 0.0) / n_paths)
    return v, se


@dataclass(frozen=True)
class Beta3Estimate:
    """Truncated third-cumulant series with a reported tail bound."""

    value: float
    tail_bound: float
    truncation: int
    estimator: str


def beta3(model, truncation: int = 64) -> Beta3Estimate:
    """beta_3 = lim n^{-1} E S_n^3, the third-moment constant.

    Termwise E X_0^3 + 3 sum_i {E X_0^2 X_i + E X_0 X_i^2}
    + 6 sum_{u>=1} sum_{v>u} E X_0 X_u X_v, truncated at the given lag for
    finite chains (tail bound from exact extension terms plus a geometric
    remainder at the second-eigenvalue rate); exact zero for symmetric /
    independent structures; Monte Carlo n^{-1} E S_n^3 otherwise.
    """
    if truncation < 1:
        raise ValueError("truncation must be >= 1")
    if isinstance(model, pr.IidSpec):
        return Beta3Estimate(float(np.dot(model.probs, model.values**3)), 0.0,
                             truncation, "exact")
    if isinstance(model, pr.TwoPointSpec):
        return Beta3Estimate(model.beta3, 0.0, truncation, "exact")
    if isinstance(model, pr.MartingaleSpec):
        # every term carries an isolated iid sign factor with zero mean
        return Beta3Estimate(0.0, 0.0, truncation, "exact")
    if isinstance(model, pr.FiniteMarkovSpec):
        return _beta3_markov(model, truncation)
    # circle walk and interval map: plain Monte Carlo of n^{-1} E S_n^3
    n = max(4 * truncation, 256)
    sums = pr.simulate_sums(model, [n], 65536, 0xBE73)[0]
    cubes = sums**3 / n
    return Beta3Estimate(float(np.mean(cubes)),
                         float(np.std(cubes, ddof=1) / math.sqrt(cubes.size)),
                         truncation, "monte_carlo")


def _beta3_markov(spec: pr.FiniteMarkovSpec, T: int) -> Beta3Estimate:
    _require_mixing(spec)
    f, pi, P = spec.observable, spec.stationary, spec.transition
    ext = 2 * T + 8  # exact extension horizon feeding the tail bound
    h = f * f - float(np.dot(pi, f * f))  # centered f^2

    # right vectors P^m f and P^m h, left vectors pi D_f P^u
    right_f = [f]
    right_h = [h]
    for _ in range(ext):
        right_f.append(P @ right_f[-1])
        right_h.append(P @ right_h[-1])
    left = [pi * f]
    for _ in range(ext):
        left.append(left[-1] @ P)

    term2a = np.array([np.dot(pi, f * f * right_f[i]) for i in range(1, ext + 1)])
    term2b = np.array([np.dot(pi, f * right_h[i]) for i in range(1, ext + 1)])
    # pair terms E X_0 X_u X_{u+m} = (pi D_f P^u) . (f * P^m f)
    wm = [f * right_f[m] for m in range(1, ext + 1)]
    pair = np.empty((ext, ext))
    for u in range(1, ext + 1):
        lu = left[u]
        for m in range(1, ext + 1):
            pair[u - 1, m - 1] = np.dot(lu, wm[m - 1])

    value = (float(np.dot(pi, f**3))
             + 3.0 * (term2a[:T].sum() + term2b[:T].sum())
             + 6.0 * pair[:T, :T].sum())

    # tail: exact absolute terms in the extension shells, then a geometric
    # remainder at the second-eigenvalue rate
    rho = second_eigenvalue_modulus(P)
    geo = rho / (1.0 - rho) if rho < 1.0 else math.inf
    tail_single = 3.0 * (np.abs(term2a[T:]).sum() + np.abs(term2b[T:]).sum())
    shell = np.abs(pair)
    shell[:T, :T] = 0.0
    tail_pair = 6.0 * shell.sum()
    edge = max(np.abs(term2a[-1]), np.abs(term2b[-1]), np.abs(pair[-1, :]).max(),
               np.abs(pair[:, -1]).max())
    remainder = (6.0 * ext + 3.0) * edge * geo
    return Beta3Estimate(value, float(tail_single + tail_pair + remainder), T, "exact")


def _exponent_tuples(p: int, q: int, allow_smaller: bool) -> list[tuple]:
    lo = 0 if allow_smaller else 1
    out = []
    for tup in itertools.product(range(lo, q + 1), repeat=p):
        if tup[0] >= 1 and sum(tup) <= q:
            out.append(tup)
    return out


def theta_exact(model: pr.FiniteMarkovSpec, k: int, p: int, q: int,
                window: int = DEFAULT_WINDOW, allow_smaller_tuples: bool = False) -> float:
    """Windowed theta_{X,p,q}(k) for a finite chain, exact per index tuple.

    Maximizes E_pi |E(prod X_{k_i}^{a_i} | xi_0) - E prod X_{k_i}^{a_i}| over
    k <= k_1 < ... < k_p <= k + window and exponents (a_i) with a_1 >= 1 and
    sum a_i <= q.  Each candidate is computed exactly by transfer matrices
    with diagonal observable-power insertions; the result is a guaranteed
    lower bound for the unwindowed supremum.
    """
    if not isinstance(model, pr.FiniteMarkovSpec):
        raise PreconditionError("theta_exact requires a finite Markov model")
    if not (1 <= p <= q <= 4):
        raise PreconditionError(f"need 1 <= p <= q <= 4, got p={p}, q={q}")
    if window < p:
        raise PreconditionError(f"window {window} smaller than tuple size {p}")
    if k < 0:
        raise ValueError("lag k must be >= 0")
    P, pi, f = model.transition, model.stationary, model.observable
    fpow = [np.ones_like(f)] + [f**a for a in range(1, q + 1)]
    exps = _exponent_tuples(p, q, allow_smaller_tuples)

    best = 0.0
    for idx in itertools.combinations(range(k, k + window + 1), p):
        gaps = [idx[0]] + [idx[i + 1] - idx[i] for i in range(p - 1)]
        for a in exps:
            u = fpow[a[-1]].copy()
            for i in range(p - 1, 0, -1):
                for _ in range(gaps[i]):
                    u = P @ u
                u = fpow[a[i - 1]] * u
            for _ in range(gaps[0]):
                u = P @ u
            mean = float(np.dot(pi, u))
            cand = float(np.dot(pi, np.abs(u - mean)))
            best = max(best, cand)
    return best


def _mc_trajectories(model, horizon: int, n_start: int, paths_per_start: int,
                     seed: int) -> tuple[np.ndarray, np.ndarray]:
    """(X array of shape (horizon, S*R), start ids) for nested MC."""
    rng = rng_for(seed, 0x7E7A)
    total = n_start * paths_per_start
    if isinstance(model, pr.FiniteMarkovSpec):
        starts = rng.choice(model.n_states, p=model.stationary, size=n_start)
        states = np.repeat(starts, paths_per_start)
        cum = model.cum_rows()
        X = np.empty((horizon, total))
        for t in range(horizon):
            u = rng.random(total)
            states = (u[:, None] >= cum[states]).sum(axis=1)
            X[t] = model.observable[states]
        return X, starts
    if isinstance(model, pr.CircleWalkSpec):
        starts = rng.random(n_start)
        x = np.repeat(starts, paths_per_start)
        ks = np.array([t[0] for t in model.fourier], dtype=float)
        cs = np.array([t[1] for t in model.fourier])
        phs = np.array([t[2] for t in model.fourier])
        X = np.empty((horizon, total))
        for t in range(horizon):
            sign = np.where(rng.random(total) < 0.5, 1.0, -1.0)
            x = np.mod(x + sign * model.a, 1.0)
            X[t] = np.cos(2.0 * math.pi * np.outer(x, ks) + phs) @ cs
        return X, starts
    raise PreconditionError("theta_mc requires a Markov-type model "
                            "(finite chain or circle walk)")


def theta_mc(model, k: int, p: int, q: int, window: int = DEFAULT_WINDOW,
             n_start: int = 100, paths_per_start: int = 2000, seed: int = 0,
             allow_smaller_tuples: bool = False) -> tuple[float, float]:
    """Nested Monte Carlo theta estimate: (value, standard error).

    Draws ``n_start`` stationary initial conditions, estimates each
    conditional expectation with ``paths_per_start`` paths, and maximizes the
    averaged absolute deviations over the same windowed tuple family as
    theta_exact.  Small path counts inflate the absolute deviation (nested
    bias); a warning is emitted below 500 paths per start.
    """
    if not (1 <= p <= q <= 4):
        raise PreconditionError(f"need 1 <= p <= q <= 4, got p={p}, q={q}")
    if window < p:
        raise PreconditionError(f"window {window} smaller than tuple size {p}")
    if k < 1:
        raise ValueError("theta_mc requires lag k >= 1")
    if paths_per_start < 500:
        warnings.warn("paths_per_start < 500: nested-MC bias may dominate",
                      RuntimeWarning, stacklevel=2)
    horizon = k + window
    X, starts = _mc_trajectories(model, horizon, n_start, paths_per_start, seed)
    exps = _exponent_tuples(p, q, allow_smaller_tuples)

    # per-candidate per-start conditional means; the estimate maximizes the
    # mean absolute deviation, so the SE must see the same max (bootstrap
    # over starts re-runs the whole selection)
    cand_means = []
    for idx in itertools.combinations(range(k, k + window + 1), p):
        for a in exps:
            prod = np.ones(X.shape[1])
            for i, a_i in zip(idx, a):
                if a_i:
                    prod = prod * X[i - 1] ** a_i
            cand_means.append(prod.reshape(n_start, paths_per_start).mean(axis=1))
    cand_means = np.asarray(cand_means)

    def theta_of(cols: np.ndarray) -> float:
        m = cand_means[:, cols]
        overall = m.mean(axis=1, keepdims=True)
        return float(np.abs(m - overall).mean(axis=1).max())

    best = theta_of(np.arange(n_start))
    rng = rng_for(seed, 0xB5E)
    boots = np.empty(200)
    for b in range(200):
        boots[b] = theta_of(rng.integers(0, n_start, n_start))
    return best, float(np.std(boots, ddof=1))


def alpha_dep(model: pr.FiniteMarkovSpec, n: int, l: int,
              thresholds=None, window: int = DEFAULT_WINDOW) -> float:
    """Exact windowed alpha-dependence coefficient of the observable sequence.

    Maximizes E_pi |E(prod_j (1_{X_{i_j} <= x_j} - F(x_j)) | xi_0)^{(0)}|
    over 1 <= l' <= l, index tuples n <= i_1 <= ... <= i_{l'} <= n + window
    and thresholds from the (finite) observable value set, which suffices for
    finite chains.
    """
    if not isinstance(model, pr.FiniteMarkovSpec):
        raise PreconditionError("alpha_dep requires a finite Markov model")
    if l < 1 or l > 4:
        raise PreconditionError(f"need 1 <= l <= 4, got l={l}")
    if n < 1:
        raise ValueError("lag n must be >= 1")
    P, pi, f = model.transition, model.stationary, model.observable
    if thresholds is None:
        vals = np.unique(f)
        thresholds = vals[:-1] if vals.size > 1 else vals
    thresholds = np.asarray(thresholds, dtype=float)
    if thresholds.size == 0:
        return 0.0
    # centered indicator vectors per threshold
    gs = [(f <= x).astype(float) - float(np.dot(pi, (f <= x).astype(float)))
          for x in thresholds]

    best = 0.0
    for lp in range(1, l + 1):
        for idx in itertools.combinations_with_replacement(
                range(n, n + window + 1), lp):
            # group equal indices: factors at one time multiply pointwise
            groups = [(t, idx.count(t)) for t in sorted(set(idx))]
            for assign in itertools.product(range(thresholds.size), repeat=lp):
                pos = 0
                vecs = []
                for t, cnt in groups:
                    v = np.ones_like(f)
                    for j in range(cnt):
                        v = v * gs[assign[pos + j]]
                    vecs.append((t, v))
                    pos += cnt
                u = vecs[-1][1].copy()
                for gi in range(len(vecs) - 1, 0, -1):
                    gap = vecs[gi][0] - vecs[gi - 1][0]
                    for _ in range(gap):
                        u = P @ u
                    u = vecs[gi - 1][1] * u
                for _ in range(vecs[0][0]):
                    u = P @ u
                mean = float(np.dot(pi, u))
                cand = float(np.dot(pi, np.abs(u - mean)))
                best = max(best, cand)
    return best


def sigma2_estimated(model, truncation: int = 64, n_samples: int = 1_000_000,
                     seed: int = 0) -> tuple[float, float]:
    """Plug-in long-run variance from one long path: (estimate, tail term).

    sigma2_hat = c_0 + 2 sum_{k<=T} c_k with sample autocovariances; the
    reported tail term is 2 sum_{T < k <= 2T} |c_k|, the directly measured
    neglected mass.
    """
    x = pr.sample_path(model, n_samples, seed)
    x = x - x.mean()
    two_t = 2 * truncation
    c = np.empty(two_t + 1)
    for k in range(two_t + 1):
        c[k] = np.dot(x[: n_samples - k], x[k:]) / (n_samples - k)
    value = float(c[0] + 2.0 * c[1: truncation + 1].sum())
    tail = float(2.0 * np.abs(c[truncation + 1:]).sum())
    return value, tail


@dataclass(frozen=True)
class LimitConstants:
    sigma2: float
    sigma_n2: dict
    beta3: float
    truncation: int


def limit_constants(model, n_list=(), truncation: int = 64) -> LimitConstants:
    s2 = sigma2_exact(model)
    return LimitConstants(sigma2=s2,
                          sigma_n2={int(n): var_sn(model, int(n)) for n in n_list},
                          beta3=beta3(model, truncation).value,
                          truncation=truncation)


def theta_table(model, lags, p: int, q: int, window: int = DEFAULT_WINDOW,
                estimator: str = "exact", seed: int = 0,
                n_start: int = 100, paths_per_start: int = 2000) -> CoefficientTable:
    """Theta coefficients over a lag grid as a serializable table."""
    lags = tuple(int(k) for k in lags)
    if estimator == "exact":
        vals = tuple(theta_exact(model, k, p, q, window) for k in lags)
        return CoefficientTable("theta", {"p": p, "q": q}, lags, vals,
                                "exact(windowed lower bound)", window)
    pairs = [theta_mc(model, k, p, q, window, n_start, paths_per_start,
                      seed + 31 * k) for k in lags]
    return CoefficientTable("theta", {"p": p, "q": q}, lags,
                            tuple(v for v, _ in pairs),
                            f"monte_carlo(lower bound, R={paths_per_start})",
                            window, tuple(se for _, se in pairs))


def alpha_table(model, lags, l: int, window: int = DEFAULT_WINDOW) -> CoefficientTable:
    lags = tuple(int(k) for k in lags)
    vals = tuple(alpha_dep(model, k, l, window=window) for k in lags)
    return CoefficientTable("alpha_dep", {"l": l}, lags, vals,
                            "exact(windowed lower bound)", window)
