"""Compiled path-sum kernels.

Each kernel owns a per-path splitmix64 RNG stream seeded from outside, and
writes only to its own output slots, so results are bit-identical for any
thread count or schedule.  The ``*_sums`` kernels accumulate partial sums
S_n at a sorted list of marks in one forward pass; the ``*_path`` kernels
record a single trajectory of observable values.
"""

from __future__ import annotations

import numba as nb
import numpy as np
from numba import njit, prange

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_INV53 = 1.0 / 9007199254740992.0  # 2**-53


@njit(inline="always", cache=True)
def _sm64(state):
    state = state + _GOLDEN
    z = state
    z = (z ^ (z >> _S30)) * _MIX1
    z = (z ^ (z >> _S27)) * _MIX2
    z = z ^ (z >> _S31)
    return state, z


@njit(inline="always", cache=True)
def _u01(state):
    """Uniform in [0, 1) and the advanced state."""
    state, z = _sm64(state)
    return state, (z >> _S11) * _INV53


@njit(inline="always", cache=True)
def _next_state(u, cum_row, s):
    for j in range(s):
        if u < cum_row[j]:
            return j
    return s - 1


@njit(cache=True, parallel=True)
def markov_sums(cum_rows, fvals, init_states, marks, seeds, out):
    n_marks = marks.shape[0]
    n_max = marks[n_marks - 1]
    s = fvals.shape[0]
    for i in prange(seeds.shape[0]):
        st = seeds[i]
        state = init_states[i]
        total = 0.0
        mi = 0
        for step in range(1, n_max + 1):
            st, u = _u01(st)
            state = _next_state(u, cum_rows[state], s)
            total += fvals[state]
            if step == marks[mi]:
                out[mi, i] = total
                mi += 1
                if mi == n_marks:
                    break


@njit(cache=True)
def markov_path(cum_rows, fvals, state0, n, seed, out):
    s = fvals.shape[0]
    st = seed
    state = state0
    for k in range(n):
        st, u = _u01(st)
        state = _next_state(u, cum_rows[state], s)
        out[k] = fvals[state]


@njit(cache=True, parallel=True)
def iid_sums(cumprobs, values, marks, seeds, out):
    n_marks = marks.shape[0]
    n_max = marks[n_marks - 1]
    s = values.shape[0]
    for i in prange(seeds.shape[0]):
        st = seeds[i]
        total = 0.0
        mi = 0
        for step in range(1, n_max + 1):
            st, u = _u01(st)
            total += values[_next_state(u, cumprobs, s)]
            if step == marks[mi]:
                out[mi, i] = total
                mi += 1
                if mi == n_marks:
                    break


@njit(cache=True)
def iid_path(cumprobs, values, n, seed, out):
    s = values.shape[0]
    st = seed
    for k in range(n):
        st, u = _u01(st)
        out[k] = values[_next_state(u, cumprobs, s)]


@njit(cache=True, parallel=True)
def circle_sums(rot_cos, rot_sin, w_cos, w_sin, x0, marks, seeds, out):
    """Random +-a rotation walk; f tracked per Fourier mode by unit-complex
    recurrence z_j <- z_j * exp(+-2 pi i k_j a), X = sum_j Re(w_j z_j)."""
    n_marks = marks.shape[0]
    n_max = marks[n_marks - 1]
    J = rot_cos.shape[0]
    two_pi = 2.0 * np.pi
    for i in prange(seeds.shape[0]):
        st = seeds[i]
        re = np.empty(J)
        im = np.empty(J)
        for j in range(J):
            # z_j = exp(2 pi i k_j x0); k_j folded into rot/w tables, the
            # initial angle arrives pre-multiplied in x0_angles below
            re[j] = np.cos(two_pi * x0[i, j])
            im[j] = np.sin(two_pi * x0[i, j])
        total = 0.0
        mi = 0
        for step in range(1, n_max + 1):
            st, u = _u01(st)
            if u < 0.5:
                for j in range(J):
                    tre = re[j] * rot_cos[j] - im[j] * rot_sin[j]
                    im[j] = re[j] * rot_sin[j] + im[j] * rot_cos[j]
                    re[j] = tre
            else:
                for j in range(J):
                    tre = re[j] * rot_cos[j] + im[j] * rot_sin[j]
                    im[j] = -re[j] * rot_sin[j] + im[j] * rot_cos[j]
                    re[j] = tre
            x = 0.0
            for j in range(J):
                x += w_cos[j] * re[j] - w_sin[j] * im[j]
            total += x
            if step == marks[mi]:
                out[mi, i] = total
                mi += 1
                if mi == n_marks:
                    break


@njit(cache=True)
def circle_path(a, ks, cs, phases, x0, n, seed, out):
    """Single trajectory with direct cosine evaluation (exact boundedness)."""
    st = seed
    x = x0
    two_pi = 2.0 * np.pi
    for k in range(n):
        st, u = _u01(st)
        if u < 0.5:
            x = x + a
        else:
            x = x - a
        x = x - np.floor(x)
        v = 0.0
        for j in range(ks.shape[0]):
            v += cs[j] * np.cos(two_pi * ks[j] * x + phases[j])
        out[k] = v


@njit(inline="always", cache=True)
def _lsv_map(x, gamma, pow2g):
    if x < 0.5:
        return x * (1.0 + pow2g * x**gamma)
    return 2.0 * x - 1.0


@njit(inline="always", cache=True)
def _lsv_obs(x, obs_id):
    if obs_id == 0:
        return x
    elif obs_id == 1:
        return np.cos(2.0 * np.pi * x)
    return 1.0 if x >= 0.5 else 0.0


@njit(cache=True, parallel=True)
def lsv_sums(gamma, burn_in, obs_id, center, x0, marks, out):
    n_marks = marks.shape[0]
    n_max = marks[n_marks - 1]
    pow2g = 2.0**gamma
    for i in prange(x0.shape[0]):
        x = x0[i]
        for _ in range(burn_in):
            x = _lsv_map(x, gamma, pow2g)
        total = 0.0
        mi = 0
        for step in range(1, n_max + 1):
            x = _lsv_map(x, gamma, pow2g)
            total += _lsv_obs(x, obs_id) - center
            if step == marks[mi]:
                out[mi, i] = total
                mi += 1
                if mi == n_marks:
                    break


@njit(cache=True)
def lsv_path(gamma, burn_in, obs_id, center, x0, n, out):
    pow2g = 2.0**gamma
    x = x0
    for _ in range(burn_in):
        x = _lsv_map(x, gamma, pow2g)
    for k in range(n):
        x = _lsv_map(x, gamma, pow2g)
        out[k] = _lsv_obs(x, obs_id) - center


@njit(cache=True)
def lsv_orbit(gamma, n_steps, obs_id, x0):
    """Time average of the raw observable along one orbit (centering prerun)."""
    pow2g = 2.0**gamma
    x = x0
    total = 0.0
    for _ in range(n_steps):
        x = _lsv_map(x, gamma, pow2g)
        total += _lsv_obs(x, obs_id)
    return total / n_steps


@njit(cache=True, parallel=True)
def martingale_sums(cum_rows, gvals, init_states, marks, seeds, out):
    n_marks = marks.shape[0]
    n_max = marks[n_marks - 1]
    s = gvals.shape[0]
    for i in prange(seeds.shape[0]):
        st = seeds[i]
        state = init_states[i]
        total = 0.0
        mi = 0
        for step in range(1, n_max + 1):
            st, u1 = _u01(st)
            eps = 1.0 if u1 < 0.5 else -1.0
            total += eps * gvals[state]
            st, u2 = _u01(st)
            state = _next_state(u2, cum_rows[state], s)
            if step == marks[mi]:
                out[mi, i] = total
                mi += 1
                if mi == n_marks:
                    break


@njit(cache=True)
def martingale_path(cum_rows, gvals, state0, n, seed, out):
    s = gvals.shape[0]
    st = seed
    state = state0
    for k in range(n):
        st, u1 = _u01(st)
        eps = 1.0 if u1 < 0.5 else -1.0
        out[k] = eps * gvals[state]
        st, u2 = _u01(st)
        state = _next_state(u2, cum_rows[state], s)


@njit(inline="always", cache=True)
def _normal_pair(state):
    """Box-Muller pair from two uniforms; first uniform kept in (0, 1]."""
    state, z1 = _sm64(state)
    state, z2 = _sm64(state)
    u1 = ((z1 >> _S11) + np.uint64(1)) * _INV53
    u2 = (z2 >> _S11) * _INV53
    r = np.sqrt(-2.0 * np.log(u1))
    return state, r * np.cos(2.0 * np.pi * u2), r * np.sin(2.0 * np.pi * u2)


@njit(cache=True, parallel=True)
def twopoint_sums(b1, b2, pmass, sd_z, marks, seeds, out):
    n_marks = marks.shape[0]
    n_max = marks[n_marks - 1]
    for i in prange(seeds.shape[0]):
        st = seeds[i]
        total = 0.0
        mi = 0
        have_spare = False
        spare = 0.0
        for step in range(1, n_max + 1):
            st, u = _u01(st)
            b = b1 if u < pmass else b2
            if have_spare:
                z = spare
                have_spare = False
            else:
                st, z, spare = _normal_pair(st)
                have_spare = True
            total += b + sd_z * z
            if step == marks[mi]:
                out[mi, i] = total
                mi += 1
                if mi == n_marks:
                    break


@njit(cache=True)
def twopoint_path(b1, b2, pmass, sd_z, n, seed, out):
    st = seed
    have_spare = False
    spare = 0.0
    for k in range(n):
        st, u = _u01(st)
        b = b1 if u < pmass else b2
        if have_spare:
            z = spare
            have_spare = False
        else:
            st, z, spare = _normal_pair(st)
            have_spare = True
        out[k] = b + sd_z * z
