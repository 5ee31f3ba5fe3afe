"""Hot loops of the society simulation.

Two interchangeable backends consume the same pre-drawn uniforms:

* ``numba``: scalar per-agent loops compiled with ``@njit``;
* ``numpy``: the same synchronous step vectorised across agents.

Set ``EVOC_NUMBA=0`` to force the numpy backend (numba is also skipped when
it cannot be imported). With numba off, the scalar helpers still run as
plain Python; the agent-level API in :mod:`evoc.agent` uses them directly.

Array conventions for a population of ``n`` agents:

``actions``    int16 ``(n, width)``, sub-action codes, ``-1`` past the end
``lengths``    int64 ``(n,)``
``fitness``    int64 ``(n,)``, under the active template set
``previous``   int64 ``(n,)``, ``-1`` when undefined
``rcc``        float64 ``(n,)``
``trend_sum``  float64 ``(n, 4)``, columns: symmetric, asymmetric, moving, still
``trend_cnt``  int64 ``(n, 4)``
"""

from __future__ import annotations

import math
import os

import numpy as np

from .domain import DECODE as _DECODE
from .rng import SLOT_CHANGE, SLOT_MODE, SLOT_SCAN, SLOT_VALUE


def _numba_requested() -> bool:
    return os.environ.get("EVOC_NUMBA", "1").strip().lower() not in ("0", "false", "no", "off")


try:
    if not _numba_requested():
        raise ImportError("disabled by EVOC_NUMBA")
    import numba

    HAVE_NUMBA = True
except ImportError:
    numba = None
    HAVE_NUMBA = False


def jit(fn):
    if HAVE_NUMBA:
        return numba.njit(cache=True)(fn)
    return fn


DEFAULT_BACKEND = "numba" if HAVE_NUMBA else "numpy"

# -- per-code lookup tables ----------------------------------------------------

DECODE = np.ascontiguousarray(_DECODE, dtype=np.int64)
POW3 = np.array([243, 81, 27, 9, 3, 1], dtype=np.int64)
# LA<->RA, LL<->RL; HEAD and HIPS have no partner
PARTNER = np.array([-1, 2, 1, 4, 3, -1], dtype=np.int64)
_PARTNER_IDX = np.array([0, 2, 1, 4, 3, 5], dtype=np.int64)
_IS_LIMB = PARTNER >= 0
# two alternatives to a current value, ascending: indexed by value + 1
ALT_LO = np.array([0, -1, -1], dtype=np.int64)
ALT_HI = np.array([1, 1, 0], dtype=np.int64)

_moving = (DECODE != 0).sum(axis=1)
_sym_pairs = ((DECODE[:, 1] == DECODE[:, 2]) & (DECODE[:, 1] != 0)).astype(np.int64) + (
    (DECODE[:, 3] == DECODE[:, 4]) & (DECODE[:, 3] != 0)
).astype(np.int64)
# trend features count as present when their activation exceeds one half
MOVE_PRESENT = _moving / 6.0 > 0.5
SYM_PRESENT = _sym_pairs / 2.0 > 0.5

BETA_LIMIT = 0.9
MODE_INVENT = 0
MODE_IMITATE = 1


# -- scalar helpers (shared by the numba backend and the agent API) ----------


@jit
def trend_bias(sum_present, cnt_present, sum_absent, cnt_absent):
    if cnt_present == 0 or cnt_absent == 0:
        return 0.0
    mp = sum_present / cnt_present
    ma = sum_absent / cnt_absent
    return (mp - ma) / (abs(mp) + abs(ma) + 1.0)


@jit
def mutate_code(src, rcc, sym_bias, mov_bias, u_change, u_value, decode, partner):
    """Mutate sub-action ``src`` component-wise; returns the new code."""
    code = 0
    for j in range(6):
        c = decode[src, j]
        v = c
        if u_change[j] < rcc:
            if c == -1:
                lo, hi = 0, 1
            elif c == 0:
                lo, hi = -1, 1
            else:
                lo, hi = -1, 0
            p = partner[j]
            pv = 0
            if p >= 0:
                pv = decode[src, p]
            pref_lo = (mov_bias if lo != 0 else 0.0) + (
                sym_bias if (pv != 0 and lo == pv) else 0.0
            )
            pref_hi = (mov_bias if hi != 0 else 0.0) + (
                sym_bias if (pv != 0 and hi == pv) else 0.0
            )
            beta = pref_lo - pref_hi
            if beta > 0.9:
                beta = 0.9
            elif beta < -0.9:
                beta = -0.9
            if u_value[j] < (1.0 + beta) * 0.5:
                v = lo
            else:
                v = hi
        code = code * 3 + (v + 1)
    return code


@jit
def clamp(x, lo, hi):
    if x < lo:
        return lo
    if x > hi:
        return hi
    return x


@jit
def initial_rcc(f, b, rcc_min, rcc_max):
    return clamp(math.pow(b, float(f)), rcc_min, rcc_max)


@jit
def scan_order(keys, k):
    """Stable argsort of the first ``k`` keys (insertion sort)."""
    order = np.empty(k, dtype=np.int64)
    for i in range(k):
        order[i] = i
    for i in range(1, k):
        cur = order[i]
        j = i - 1
        while j >= 0 and keys[order[j]] > keys[cur]:
            order[j + 1] = order[j]
            j -= 1
        order[j + 1] = cur
    return order


@jit
def actions_equal(actions, lengths, i, j):
    if lengths[i] != lengths[j]:
        return False
    for s in range(lengths[i]):
        if actions[i, s] != actions[j, s]:
            return False
    return True


@jit
def diversity_loop(actions, lengths):
    n = lengths.shape[0]
    count = 0
    for i in range(n):
        dup = False
        for j in range(i):
            if actions_equal(actions, lengths, i, j):
                dup = True
                break
        if not dup:
            count += 1
    return count


@jit
def step_loop(
    actions, lengths, fitness, previous, rcc, trend_sum, trend_cnt,
    draws, neighbors, table, succ, p_invent, chaining, cf, a, rcc_min, rcc_max,
    adopted, mode, decode, partner, sym_present, move_present,
):
    """One synchronous iteration, in place. Candidates read the pre-step snapshot."""
    n = lengths.shape[0]
    width = actions.shape[1]
    k = neighbors.shape[1]
    snap_actions = actions.copy()
    snap_lengths = lengths.copy()
    snap_fitness = fitness.copy()
    cand = np.empty(width, dtype=actions.dtype)
    for i in range(n):
        u = draws[i]
        length = snap_lengths[i]
        if u[SLOT_MODE] < p_invent:
            mode[i] = 0
            for s in range(width):
                cand[s] = snap_actions[i, s]
            last = snap_actions[i, length - 1]
            sym_b = trend_bias(trend_sum[i, 0], trend_cnt[i, 0], trend_sum[i, 1], trend_cnt[i, 1])
            mov_b = trend_bias(trend_sum[i, 2], trend_cnt[i, 2], trend_sum[i, 3], trend_cnt[i, 3])
            new = mutate_code(
                last, rcc[i], sym_b, mov_b,
                u[SLOT_CHANGE:SLOT_CHANGE + 6], u[SLOT_VALUE:SLOT_VALUE + 6], decode, partner,
            )
            if chaining and new != last and succ[new] and length < width:
                cand[length] = new
                cand_len = length + 1
            else:
                cand[length - 1] = new
                cand_len = length
        else:
            mode[i] = 1
            order = scan_order(u[SLOT_SCAN:SLOT_SCAN + k], k)
            src = i
            for q in range(k):
                j = neighbors[i, order[q]]
                if snap_fitness[j] > snap_fitness[i]:
                    src = j
                    break
            for s in range(width):
                cand[s] = snap_actions[src, s]
            cand_len = snap_lengths[src]
        last_c = cand[cand_len - 1]
        cand_fit = table[last_c]
        if chaining:
            cand_fit += cand_len
        old_fit = snap_fitness[i]
        if cand_fit > old_fit:
            adopted[i] = 1
            for s in range(width):
                actions[i, s] = cand[s]
            lengths[i] = cand_len
            previous[i] = old_fit
            fitness[i] = cand_fit
        else:
            adopted[i] = 0
        col = 0 if sym_present[last_c] else 1
        trend_sum[i, col] += cand_fit
        trend_cnt[i, col] += 1
        col = 2 if move_present[last_c] else 3
        trend_sum[i, col] += cand_fit
        trend_cnt[i, col] += 1
        if cf:
            rcc[i] = clamp(rcc[i] + a * float(cand_fit - old_fit), rcc_min, rcc_max)


@jit
def apply_switch_loop(
    actions, lengths, fitness, previous, rcc, table, chaining, cf, b, rcc_min, rcc_max, seed_on_sub
):
    """Rescore under a new table; CF agents re-seed RCC as at the start of a run."""
    n = lengths.shape[0]
    for i in range(n):
        fs = table[actions[i, lengths[i] - 1]]
        f = fs
        if chaining:
            f += lengths[i]
        fitness[i] = f
        previous[i] = -1
        if cf:
            rcc[i] = initial_rcc(fs if seed_on_sub else f, b, rcc_min, rcc_max)


@jit
def simulate_loop(
    actions, lengths, fitness, previous, rcc, trend_sum, trend_cnt,
    draws, neighbors, table1, table2, succ1, succ2, p_invent, chaining, cf,
    a, b, rcc_min, rcc_max, switch_at, seed_on_sub,
    decode, partner, sym_present, move_present,
    m_fitness, m_diversity, m_rcc, m_length,
    t_fitness, t_length, t_rcc, t_adopted, t_mode,
):
    iterations = draws.shape[0]
    n = lengths.shape[0]
    adopted = np.zeros(n, dtype=np.int8)
    mode = np.zeros(n, dtype=np.int8)
    table = table1
    succ = succ1
    for t in range(iterations):
        step_loop(
            actions, lengths, fitness, previous, rcc, trend_sum, trend_cnt,
            draws[t], neighbors, table, succ, p_invent, chaining, cf, a, rcc_min, rcc_max,
            adopted, mode, decode, partner, sym_present, move_present,
        )
        if t + 1 == switch_at:
            table = table2
            succ = succ2
            apply_switch_loop(
                actions, lengths, fitness, previous, rcc, table, chaining, cf, b, rcc_min, rcc_max,
                seed_on_sub,
            )
        fsum = 0
        rsum = 0.0
        lsum = 0
        for i in range(n):
            fsum += fitness[i]
            rsum += rcc[i]
            lsum += lengths[i]
            t_fitness[t, i] = fitness[i]
            t_length[t, i] = lengths[i]
            t_rcc[t, i] = rcc[i]
            t_adopted[t, i] = adopted[i]
            t_mode[t, i] = mode[i]
        m_fitness[t] = fsum / n
        m_rcc[t] = rsum / n
        m_length[t] = lsum / n
        m_diversity[t] = diversity_loop(actions, lengths)


# -- numpy backend -------------------------------------------------------------


def _bias_vec(trend_sum, trend_cnt, col_p, col_a):
    cp = trend_cnt[:, col_p]
    ca = trend_cnt[:, col_a]
    ok = (cp > 0) & (ca > 0)
    mp = np.where(ok, trend_sum[:, col_p] / np.maximum(cp, 1), 0.0)
    ma = np.where(ok, trend_sum[:, col_a] / np.maximum(ca, 1), 0.0)
    return np.where(ok, (mp - ma) / (np.abs(mp) + np.abs(ma) + 1.0), 0.0)


def step_vec(
    actions, lengths, fitness, previous, rcc, trend_sum, trend_cnt,
    draws, neighbors, table, succ, p_invent, chaining, cf, a, rcc_min, rcc_max,
    adopted, mode,
):
    """Vectorised twin of :func:`step_loop`; same arguments, same in-place effect."""
    n, width = actions.shape
    k = neighbors.shape[1]
    rows = np.arange(n)
    snap_fitness = fitness.copy()
    last = actions[rows, lengths - 1].astype(np.int64)

    # invention
    comps = DECODE[last]
    sym_b = _bias_vec(trend_sum, trend_cnt, 0, 1)
    mov_b = _bias_vec(trend_sum, trend_cnt, 2, 3)
    change = draws[:, SLOT_CHANGE:SLOT_CHANGE + 6] < rcc[:, None]
    lo = ALT_LO[comps + 1]
    hi = ALT_HI[comps + 1]
    pv = np.where(_IS_LIMB[None, :], comps[:, _PARTNER_IDX], 0)
    pref_lo = np.where(lo != 0, mov_b[:, None], 0.0) + np.where(
        (pv != 0) & (lo == pv), sym_b[:, None], 0.0
    )
    pref_hi = np.where(hi != 0, mov_b[:, None], 0.0) + np.where(
        (pv != 0) & (hi == pv), sym_b[:, None], 0.0
    )
    beta = np.clip(pref_lo - pref_hi, -BETA_LIMIT, BETA_LIMIT)
    take_lo = draws[:, SLOT_VALUE:SLOT_VALUE + 6] < (1.0 + beta) * 0.5
    new_comps = np.where(change, np.where(take_lo, lo, hi), comps)
    new = (new_comps + 1) @ POW3
    append = chaining & (new != last) & succ[new] & (lengths < width)

    inv_actions = actions.copy()
    pos = np.where(append, lengths, lengths - 1)
    inv_actions[rows, pos] = new
    inv_len = lengths + append

    # imitation
    keys = draws[:, SLOT_SCAN:SLOT_SCAN + k]
    order = np.argsort(keys, axis=1, kind="stable")
    scanned = np.take_along_axis(neighbors, order, axis=1)
    fitter = snap_fitness[scanned] > snap_fitness[:, None]
    found = fitter.any(axis=1)
    src = np.where(found, scanned[rows, np.argmax(fitter, axis=1)], rows)

    invent = draws[:, SLOT_MODE] < p_invent
    cand = np.where(invent[:, None], inv_actions, actions[src])
    cand_len = np.where(invent, inv_len, lengths[src])
    cand_last = cand[rows, cand_len - 1].astype(np.int64)
    cand_fit = table[cand_last] + (cand_len if chaining else 0)

    take = cand_fit > snap_fitness
    actions[take] = cand[take]
    lengths[take] = cand_len[take]
    previous[take] = snap_fitness[take]
    fitness[take] = cand_fit[take]
    adopted[:] = take
    mode[:] = np.where(invent, MODE_INVENT, MODE_IMITATE)

    col = np.where(SYM_PRESENT[cand_last], 0, 1)
    trend_sum[rows, col] += cand_fit
    trend_cnt[rows, col] += 1
    col = np.where(MOVE_PRESENT[cand_last], 2, 3)
    trend_sum[rows, col] += cand_fit
    trend_cnt[rows, col] += 1
    if cf:
        rcc[:] = np.clip(rcc + a * (cand_fit - snap_fitness).astype(np.float64), rcc_min, rcc_max)


def apply_switch_vec(
    actions, lengths, fitness, previous, rcc, table, chaining, cf, b, rcc_min, rcc_max, seed_on_sub
):
    rows = np.arange(lengths.shape[0])
    fs = table[actions[rows, lengths - 1].astype(np.int64)]
    f = fs + (lengths if chaining else 0)
    fitness[:] = f
    previous[:] = -1
    if cf:
        basis = fs if seed_on_sub else f
        # few distinct values; go through the scalar rule so both backends share one pow
        vals, inv = np.unique(basis, return_inverse=True)
        seeded = np.array([initial_rcc(int(v), b, rcc_min, rcc_max) for v in vals])
        rcc[:] = seeded[inv.reshape(-1)]


def diversity_vec(actions) -> int:
    return int(np.unique(actions, axis=0).shape[0])


def simulate_vec(
    actions, lengths, fitness, previous, rcc, trend_sum, trend_cnt,
    draws, neighbors, table1, table2, succ1, succ2, p_invent, chaining, cf,
    a, b, rcc_min, rcc_max, switch_at, seed_on_sub,
    m_fitness, m_diversity, m_rcc, m_length,
    t_fitness, t_length, t_rcc, t_adopted, t_mode,
):
    n = lengths.shape[0]
    adopted = np.zeros(n, dtype=np.int8)
    mode = np.zeros(n, dtype=np.int8)
    table, succ = table1, succ1
    for t in range(draws.shape[0]):
        step_vec(
            actions, lengths, fitness, previous, rcc, trend_sum, trend_cnt,
            draws[t], neighbors, table, succ, p_invent, chaining, cf, a, rcc_min, rcc_max,
            adopted, mode,
        )
        if t + 1 == switch_at:
            table, succ = table2, succ2
            apply_switch_vec(
                actions, lengths, fitness, previous, rcc, table, chaining, cf, b, rcc_min, rcc_max,
                seed_on_sub,
            )
        # sequential sums keep the float results identical to the loop backend
        m_fitness[t] = int(fitness.sum()) / n
        m_rcc[t] = _seq_sum(rcc) / n
        m_length[t] = int(lengths.sum()) / n
        m_diversity[t] = diversity_vec(actions)
        t_fitness[t] = fitness
        t_length[t] = lengths
        t_rcc[t] = rcc
        t_adopted[t] = adopted
        t_mode[t] = mode


def _seq_sum(x) -> float:
    s = 0.0
    for v in x.tolist():
        s += v
    return s

