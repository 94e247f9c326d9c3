"""Stationary bounded process generators.

Six model variants: iid finite laws, finite-state Markov chains, the random
+-a rotation walk on the circle, the intermittent interval map, martingale
differences built over a finite chain, and the moment-matched iid comparison
variable Y = Z + B.  Every generator starts in the stationary regime (burn-in
for the interval map, whose invariant density has no closed form) and is
bit-reproducible from (model, n, seed).
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as _k
from ._seeding import derive_seed, path_seeds, rng_for

_LSV_OBSERVABLES = {"identity": 0, "cos": 1, "half_indicator": 2}
# fixed stream for the one-off interval-map centering prerun; not exposed
_LSV_CENTER_SEED = 0x1B873593


@dataclass(frozen=True)
class IidSpec:
    """Iid draws from a finite law; the observable is re-centered exactly."""

    values: np.ndarray
    probs: np.ndarray

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=float)
        p = np.asarray(self.probs, dtype=float)
        if v.ndim != 1 or v.size < 1 or p.shape != v.shape:
            raise ValueError("values and probs must be matching 1-D arrays")
        if np.any(p < 0) or abs(math.fsum(p.tolist()) - 1.0) > 1e-12:
            raise ValueError("probs must be nonnegative and sum to 1")
        mean = float(np.dot(v, p))
        if abs(mean) > 1e-15 * max(1.0, float(np.max(np.abs(v)))):
            v = v - mean
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "probs", p)

    @property
    def bound(self) -> float:
        return float(np.max(np.abs(self.values)))


def rademacher() -> IidSpec:
    return IidSpec(np.array([-1.0, 1.0]), np.array([0.5, 0.5]))


def _stationary_of(transition: np.ndarray) -> np.ndarray:
    w, vecs = np.linalg.eig(transition.T)
    i = int(np.argmin(np.abs(w - 1.0)))
    if abs(w[i] - 1.0) > 1e-9:
        raise ValueError("transition matrix has no unit eigenvalue")
    pi = np.real(vecs[:, i])
    pi = pi / pi.sum()
    if np.any(pi < -1e-12):
        raise ValueError("stationary vector has negative entries; chain not irreducible?")
    return np.clip(pi, 0.0, None) / np.clip(pi, 0.0, None).sum()


@dataclass(frozen=True)
class FiniteMarkovSpec:
    """Stationary finite chain with a pi-centered observable f."""

    transition: np.ndarray
    observable: np.ndarray
    stationary: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        P = np.asarray(self.transition, dtype=float)
        f = np.asarray(self.observable, dtype=float)
        if P.ndim != 2 or P.shape[0] != P.shape[1]:
            raise ValueError("transition must be a square matrix")
        if f.shape != (P.shape[0],):
            raise ValueError("observable must have one value per state")
        if np.any(P < 0) or np.any(np.abs(P.sum(axis=1) - 1.0) > 1e-12):
            raise ValueError("transition rows must be nonnegative and sum to 1 within 1e-12")
        rowsum = P.sum(axis=1, keepdims=True)
        if np.max(np.abs(rowsum - 1.0)) > 1e-15:
            P = P / rowsum
        pi = self.stationary
        if pi is None:
            pi = _stationary_of(P)
        else:
            pi = np.asarray(pi, dtype=float)
            if np.max(np.abs(pi @ P - pi)) > 1e-12:
                raise ValueError("supplied stationary vector fails pi P = pi within 1e-12")
        mean = float(np.dot(pi, f))
        if abs(mean) > 1e-15 * max(1.0, float(np.max(np.abs(f))) or 1.0):
            f = f - mean
        object.__setattr__(self, "transition", P)
        object.__setattr__(self, "observable", f)
        object.__setattr__(self, "stationary", pi)

    @property
    def n_states(self) -> int:
        return int(self.transition.shape[0])

    @property
    def bound(self) -> float:
        return float(np.max(np.abs(self.observable)))

    def cum_rows(self) -> np.ndarray:
        c = np.cumsum(self.transition, axis=1)
        c[:, -1] = 1.0
        return c


def two_state_symmetric(p_flip: float, values=(1.0, -1.0)) -> FiniteMarkovSpec:
    P = np.array([[1.0 - p_flip, p_flip], [p_flip, 1.0 - p_flip]])
    return FiniteMarkovSpec(P, np.asarray(values, dtype=float))


GOLDEN_RATIO_CONJUGATE = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class CircleWalkSpec:
    """Random walk x -> x +- a on the torus with a trigonometric observable.

    fourier is a sequence of (k, amplitude, phase) with k >= 1; the
    observable f(x) = sum c_k cos(2 pi k x + phase_k) has zero mean under
    Lebesgue by construction.  An optional (C, exponent) pair declares the
    amplitude decay |c_k| <= C k^{-exponent} and is enforced when present.
    """

    a: float = GOLDEN_RATIO_CONJUGATE
    fourier: tuple = ()
    decay: tuple | None = None

    def __post_init__(self) -> None:
        if not (0.0 < self.a < 1.0):
            raise ValueError("step a must lie in (0, 1)")
        terms = tuple((int(k), float(c), float(ph)) for k, c, ph in self.fourier)
        if not terms:
            raise ValueError("fourier must contain at least one (k, amplitude, phase) term")
        if any(k < 1 for k, _, _ in terms):
            raise ValueError("fourier frequencies must be positive integers")
        if self.decay is not None:
            C, expo = self.decay
            for k, c, _ in terms:
                if abs(c) > C * k ** (-expo) * (1.0 + 1e-12):
                    raise ValueError(f"amplitude at k={k} violates declared decay")
        object.__setattr__(self, "fourier", terms)

    @property
    def bound(self) -> float:
        return float(sum(abs(c) for _, c, _ in self.fourier))


def default_circle_walk(n_modes: int = 32) -> CircleWalkSpec:
    """Golden-ratio step with c_k = k^{-7}; satisfies the k^{-(6+eps)} decay."""
    terms = tuple((k, float(k) ** -7.0, 0.0) for k in range(1, n_modes + 1))
    return CircleWalkSpec(a=GOLDEN_RATIO_CONJUGATE, fourier=terms, decay=(1.0, 7.0))


@dataclass(frozen=True)
class LsvSpec:
    """Intermittent interval map with a named bounded observable.

    The invariant density has no closed form, so stationary sampling uses a
    uniform start plus ``burn_in`` iterations, and the observable mean is
    estimated once per spec by a long prerun (``center_samples`` steps) whose
    standard error is recorded in the centering metadata.
    """

    gamma: float
    observable: str = "identity"
    burn_in: int = 100_000
    center_samples: int = 10_000_000

    def __post_init__(self) -> None:
        if not (0.0 < self.gamma < 1.0):
            raise ValueError("gamma must lie in (0, 1)")
        if self.observable not in _LSV_OBSERVABLES:
            raise ValueError(f"unknown observable {self.observable!r}; "
                             f"choose from {sorted(_LSV_OBSERVABLES)}")
        if self.burn_in < 1 or self.center_samples < 1000:
            raise ValueError("burn_in must be >= 1 and center_samples >= 1000")

    @property
    def rate_claims_apply(self) -> bool:
        # the n^{-1/2} upper-bound regime; larger gamma is exploratory only
        return self.gamma < 0.25

    @property
    def obs_id(self) -> int:
        return _LSV_OBSERVABLES[self.observable]

    @property
    def bound(self) -> float:
        c = lsv_centering(self).mean
        raw = 1.0 if self.observable == "cos" else max(c, 1.0 - c)
        return raw + (abs(c) if self.observable == "cos" else 0.0)


@dataclass(frozen=True)
class CenteringInfo:
    mean: float
    stderr: float
    samples: int


@functools.lru_cache(maxsize=32)
def _lsv_centering_cached(gamma: float, obs_id: int, burn_in: int,
                          center_samples: int) -> CenteringInfo:
    rng = rng_for(_LSV_CENTER_SEED, obs_id, center_samples)
    x0 = float(rng.random())
    raw = np.empty(center_samples)
    _k.lsv_path(gamma, burn_in, obs_id, 0.0, x0, center_samples, raw)
    mean = float(np.mean(raw))
    n_batches = 64
    batches = raw[: (center_samples // n_batches) * n_batches]
    bm = batches.reshape(n_batches, -1).mean(axis=1)
    stderr = float(np.std(bm, ddof=1) / math.sqrt(n_batches))
    return CenteringInfo(mean=mean, stderr=stderr, samples=center_samples)


def lsv_centering(spec: LsvSpec) -> CenteringInfo:
    """Estimated observable mean under the invariant measure, with its SE."""
    return _lsv_centering_cached(spec.gamma, spec.obs_id, spec.burn_in,
                                 spec.center_samples)


@dataclass(frozen=True)
class MartingaleSpec:
    """X_k = eps_k g(xi_{k-1}) with iid signs over a stationary finite chain."""

    transition: np.ndarray
    g: np.ndarray

    def __post_init__(self) -> None:
        base = FiniteMarkovSpec(self.transition, np.zeros(np.shape(self.transition)[0]))
        gv = np.asarray(self.g, dtype=float)
        if gv.shape != (base.n_states,):
            raise ValueError("g must have one value per state")
        object.__setattr__(self, "transition", base.transition)
        object.__setattr__(self, "g", gv)
        object.__setattr__(self, "_base", base)

    @property
    def base(self) -> FiniteMarkovSpec:
        return self._base  # type: ignore[attr-defined]

    @property
    def bound(self) -> float:
        return float(np.max(np.abs(self.g)))


@dataclass(frozen=True)
class TwoPointSpec:
    """Moment-matched iid variable Y = Z + B: Z ~ N(0, sigma2/2), B two-valued.

    B takes b1 > 0 > b2 with P(B = b1) = p_mass, matching E Y = 0,
    E Y^2 = sigma2, E Y^3 = beta3.  Unbounded (Gaussian part), used only as
    the comparison variable; declared bound is +inf.
    """

    sigma2: float
    beta3: float
    b1: float = field(default=None)  # type: ignore[assignment]
    b2: float = field(default=None)  # type: ignore[assignment]
    p_mass: float = field(default=None)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        if not (self.sigma2 > 0.0) or not math.isfinite(self.sigma2):
            raise ValueError("sigma2 must be positive and finite")
        v = 0.5 * self.sigma2
        s = self.beta3 / v
        disc = math.sqrt(s * s + 4.0 * v)
        if s >= 0:
            b1 = 0.5 * (s + disc)
            b2 = -v / b1
        else:
            b2 = 0.5 * (s - disc)
            b1 = -v / b2
        object.__setattr__(self, "b1", b1)
        object.__setattr__(self, "b2", b2)
        object.__setattr__(self, "p_mass", -b2 / (b1 - b2))

    @property
    def bound(self) -> float:
        return math.inf


def construct_two_point(sigma2: float, beta3: float) -> TwoPointSpec:
    """Two-point B with p b1 + (1-p) b2 = 0, second moment sigma2/2, third beta3."""
    return TwoPointSpec(sigma2=sigma2, beta3=beta3)


ProcessModel = (IidSpec | FiniteMarkovSpec | CircleWalkSpec | LsvSpec
                | MartingaleSpec | TwoPointSpec)


def lsv_step(x: float, gamma: float) -> float:
    """One application of the intermittent map: x(1 + 2^g x^g) or 2x - 1."""
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"x must lie in [0, 1], got {x}")
    if x < 0.5:
        return x * (1.0 + 2.0**gamma * x**gamma)
    return 2.0 * x - 1.0


def circle_observable(x: float, spec: CircleWalkSpec) -> float:
    """f(x) = sum_k c_k cos(2 pi k x + phase_k)."""
    return float(sum(c * math.cos(2.0 * math.pi * k * x + ph)
                     for k, c, ph in spec.fourier))


def declared_bound(model: ProcessModel) -> float:
    return model.bound


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------

def _circle_tables(spec: CircleWalkSpec):
    ks = np.array([k for k, _, _ in spec.fourier], dtype=np.int64)
    cs = np.array([c for _, c, _ in spec.fourier])
    phs = np.array([ph for _, _, ph in spec.fourier])
    ang = 2.0 * math.pi * spec.a * ks
    return ks, cs, phs, np.cos(ang), np.sin(ang), cs * np.cos(phs), cs * np.sin(phs)


def sample_path(model: ProcessModel, n: int, seed: int) -> np.ndarray:
    """One stationary trajectory (X_1, ..., X_n); bit-reproducible."""
    if n < 1:
        raise ValueError("n must be >= 1")
    kseed = np.uint64(derive_seed(seed, 0))
    rng = rng_for(seed, 1)
    out = np.empty(n)
    if isinstance(model, IidSpec):
        cum = np.cumsum(model.probs)
        cum[-1] = 1.0
        _k.iid_path(cum, model.values, n, kseed, out)
    elif isinstance(model, FiniteMarkovSpec):
        state0 = int(rng.choice(model.n_states, p=model.stationary))
        _k.markov_path(model.cum_rows(), model.observable, state0, n, kseed, out)
    elif isinstance(model, CircleWalkSpec):
        ks, cs, phs, *_ = _circle_tables(model)
        _k.circle_path(model.a, ks, cs, phs, float(rng.random()), n, kseed, out)
    elif isinstance(model, LsvSpec):
        center = lsv_centering(model).mean
        _k.lsv_path(model.gamma, model.burn_in, model.obs_id, center,
                    float(rng.random()), n, out)
    elif isinstance(model, MartingaleSpec):
        state0 = int(rng.choice(model.base.n_states, p=model.base.stationary))
        _k.martingale_path(model.base.cum_rows(), model.g, state0, n, kseed, out)
    elif isinstance(model, TwoPointSpec):
        _k.twopoint_path(model.b1, model.b2, model.p_mass,
                         math.sqrt(0.5 * model.sigma2), n, kseed, out)
    else:
        raise TypeError(f"unsupported model type {type(model).__name__}")
    return out


def sample_moment_matched(spec: TwoPointSpec, n: int, seed: int) -> np.ndarray:
    """Iid draws of Y = Z + B with the matched first three moments."""
    return sample_path(spec, n, seed)


def martingale_difference_path(base: FiniteMarkovSpec, g, n: int, seed: int) -> np.ndarray:
    """Martingale-difference trajectory eps_k g(xi_{k-1}) over the given chain."""
    return sample_path(MartingaleSpec(base.transition, np.asarray(g, dtype=float)), n, seed)


def _prep_marks(marks) -> np.ndarray:
    m = np.unique(np.asarray(marks, dtype=np.int64))
    if m.size == 0 or m[0] < 1:
        raise ValueError("marks must be positive integers")
    return m


def simulate_sums(model: ProcessModel, marks, n_paths: int, seed: int) -> np.ndarray:
    """Partial sums S_n over n in ``marks`` for ``n_paths`` stationary paths.

    Returns an array of shape (len(marks), n_paths); one forward pass per
    path, so the rows at different marks share trajectories.
    """
    m = _prep_marks(marks)
    seeds = path_seeds(seed, 0, n_paths)
    rng = rng_for(seed, 1)
    out = np.zeros((m.size, n_paths))
    if isinstance(model, IidSpec):
        cum = np.cumsum(model.probs)
        cum[-1] = 1.0
        _k.iid_sums(cum, model.values, m, seeds, out)
    elif isinstance(model, FiniteMarkovSpec):
        states = rng.choice(model.n_states, p=model.stationary, size=n_paths).astype(np.int64)
        _k.markov_sums(model.cum_rows(), model.observable, states, m, seeds, out)
    elif isinstance(model, CircleWalkSpec):
        ks, _, _, rc, rs, wc, ws = _circle_tables(model)
        x0 = rng.random(n_paths)
        angles = np.mod(np.outer(x0, ks.astype(float)), 1.0)
        _k.circle_sums(rc, rs, wc, ws, angles, m, seeds, out)
    elif isinstance(model, LsvSpec):
        center = lsv_centering(model).mean
        x0 = rng.random(n_paths)
        _k.lsv_sums(model.gamma, model.burn_in, model.obs_id, center, x0, m, out)
    elif isinstance(model, MartingaleSpec):
        states = rng.choice(model.base.n_states, p=model.base.stationary,
                            size=n_paths).astype(np.int64)
        _k.martingale_sums(model.base.cum_rows(), model.g, states, m, seeds, out)
    elif isinstance(model, TwoPointSpec):
        _k.twopoint_sums(model.b1, model.b2, model.p_mass,
                         math.sqrt(0.5 * model.sigma2), m, seeds, out)
    else:
        raise TypeError(f"unsupported model type {type(model).__name__}")
    return out


def conditional_start_values(model: ProcessModel):
    """Enumerable conditioning states, or None when conditioning needs a draw."""
    if isinstance(model, (FiniteMarkovSpec,)):
        return list(range(model.n_states))
    if isinstance(model, MartingaleSpec):
        return list(range(model.base.n_states))
    return None


def simulate_sums_from(model: ProcessModel, start, marks, n_paths: int,
                       seed: int) -> np.ndarray:
    """Partial sums conditional on the time-0 state.

    ``start`` is a state index for chain models or a circle position in
    [0, 1).  Iid-type models ignore it (conditioning is vacuous); the
    interval map is rejected because its forward dynamics are deterministic,
    so the conditional law of S_n collapses to a point.
    """
    m = _prep_marks(marks)
    seeds = path_seeds(seed, 0, n_paths)
    out = np.zeros((m.size, n_paths))
    if isinstance(model, FiniteMarkovSpec):
        states = np.full(n_paths, int(start), dtype=np.int64)
        _k.markov_sums(model.cum_rows(), model.observable, states, m, seeds, out)
    elif isinstance(model, MartingaleSpec):
        states = np.full(n_paths, int(start), dtype=np.int64)
        _k.martingale_sums(model.base.cum_rows(), model.g, states, m, seeds, out)
    elif isinstance(model, CircleWalkSpec):
        ks, _, _, rc, rs, wc, ws = _circle_tables(model)
        angles = np.mod(np.full(n_paths, float(start))[:, None] * ks.astype(float)[None, :], 1.0)
        _k.circle_sums(rc, rs, wc, ws, angles, m, seeds, out)
    elif isinstance(model, (IidSpec, TwoPointSpec)):
        return simulate_sums(model, marks, n_paths, seed)
    elif isinstance(model, LsvSpec):
        raise ValueError("conditional sums are not defined for the interval map "
                         "(deterministic forward dynamics)")
    else:
        raise TypeError(f"unsupported model type {type(model).__name__}")
    return out


# ---------------------------------------------------------------------------
# JSON config (de)serialization
# ---------------------------------------------------------------------------

def model_to_dict(model: ProcessModel) -> dict:
    if isinstance(model, IidSpec):
        return {"variant": "iid", "values": model.values.tolist(),
                "probs": model.probs.tolist()}
    if isinstance(model, FiniteMarkovSpec):
        return {"variant": "finite_markov", "transition": model.transition.tolist(),
                "observable": model.observable.tolist()}
    if isinstance(model, CircleWalkSpec):
        d = {"variant": "circle_walk", "a": model.a,
             "fourier": [list(t) for t in model.fourier]}
        if model.decay is not None:
            d["decay"] = list(model.decay)
        return d
    if isinstance(model, LsvSpec):
        return {"variant": "lsv", "gamma": model.gamma, "observable": model.observable,
                "burn_in": model.burn_in, "center_samples": model.center_samples}
    if isinstance(model, MartingaleSpec):
        return {"variant": "martingale", "transition": model.transition.tolist(),
                "g": model.g.tolist()}
    if isinstance(model, TwoPointSpec):
        return {"variant": "moment_matched", "sigma2": model.sigma2, "beta3": model.beta3}
    raise TypeError(f"unsupported model type {type(model).__name__}")


def _take(d: dict, required: tuple, optional: dict):
    unknown = set(d) - set(required) - set(optional) - {"variant"}
    if unknown:
        raise ValueError(f"unknown model config keys: {sorted(unknown)}")
    missing = [k for k in required if k not in d]
    if missing:
        raise ValueError(f"missing model config keys: {missing}")
    args = {k: d[k] for k in required}
    for k, default in optional.items():
        args[k] = d.get(k, default)
    return args


def model_from_dict(d: dict) -> ProcessModel:
    variant = d.get("variant")
    if variant == "iid":
        a = _take(d, ("values", "probs"), {})
        return IidSpec(np.asarray(a["values"], dtype=float),
                       np.asarray(a["probs"], dtype=float))
    if variant == "finite_markov":
        a = _take(d, ("transition", "observable"), {})
        return FiniteMarkovSpec(np.asarray(a["transition"], dtype=float),
                                np.asarray(a["observable"], dtype=float))
    if variant == "circle_walk":
        a = _take(d, ("fourier",), {"a": GOLDEN_RATIO_CONJUGATE, "decay": None})
        decay = tuple(a["decay"]) if a["decay"] is not None else None
        return CircleWalkSpec(a=float(a["a"]),
                              fourier=tuple(tuple(t) for t in a["fourier"]),
                              decay=decay)
    if variant == "lsv":
        a = _take(d, ("gamma",), {"observable": "identity", "burn_in": 100_000,
                                  "center_samples": 10_000_000})
        return LsvSpec(gamma=float(a["gamma"]), observable=a["observable"],
                       burn_in=int(a["burn_in"]), center_samples=int(a["center_samples"]))
    if variant == "martingale":
        a = _take(d, ("transition", "g"), {})
        return MartingaleSpec(np.asarray(a["transition"], dtype=float),
                              np.asarray(a["g"], dtype=float))
    if variant == "moment_matched":
        a = _take(d, ("sigma2", "beta3"), {})
        return TwoPointSpec(sigma2=float(a["sigma2"]), beta3=float(a["beta3"]))
    raise ValueError(f"unknown model variant {variant!r}")
