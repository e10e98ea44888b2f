"""JIT-compiled inner loops for influence-graph construction.

All dot products are sequential-accumulation loops (no BLAS, no fastmath),
so results are bit-identical for any thread count and reproducible by a
plain Python loop over the same arrays. The scalar ``pair_weight`` and the
bulk ``window_weights`` share the same per-pair helpers, so a brute-force
enumeration using ``pair_weight`` reproduces the bulk build exactly.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit, prange


@njit(cache=True)
def _content_pair(pt, pt_has, pv, pv_has, mu, csign, p, j):
    # text channel, weighted with visual when both sides have it
    if pt_has[p] and pt_has[j]:
        c = 0.0
        for k in range(pt.shape[1]):
            c += pt[p, k] * pt[j, k]
        if c > 1.0:
            c = 1.0
        elif c < -1.0:
            c = -1.0
        ct = 0.5 * (1.0 + csign * c)
        if pv_has[p] and pv_has[j]:
            v = 0.0
            for k in range(pv.shape[1]):
                v += pv[p, k] * pv[j, k]
            if v > 1.0:
                v = 1.0
            elif v < -1.0:
                v = -1.0
            cv = 0.5 * (1.0 + csign * v)
            return mu * ct + (1.0 - mu) * cv
        return ct
    if pv_has[p] and pv_has[j]:
        v = 0.0
        for k in range(pv.shape[1]):
            v += pv[p, k] * pv[j, k]
        if v > 1.0:
            v = 1.0
        elif v < -1.0:
            v = -1.0
        return 0.5 * (1.0 + csign * v)
    return 0.0


@njit(cache=True)
def _sbar_pair(art_idx, art_off, s_art, p, j):
    s = 0.0
    for ia in range(art_off[p], art_off[p + 1]):
        a = art_idx[ia]
        for ib in range(art_off[j], art_off[j + 1]):
            s += s_art[a, art_idx[ib]]
    na = art_off[p + 1] - art_off[p]
    nb = art_off[j + 1] - art_off[j]
    return s / (na * nb)


@njit(cache=True)
def _intersects(art_idx, art_off, p, j):
    # article index lists are sorted, so a sorted merge finds any overlap
    ia = art_off[p]
    ib = art_off[j]
    while ia < art_off[p + 1] and ib < art_off[j + 1]:
        if art_idx[ia] == art_idx[ib]:
            return True
        if art_idx[ia] < art_idx[ib]:
            ia += 1
        else:
            ib += 1
    return False


@njit(cache=True)
def _pair_eval(ranks, users, set_ids, art_idx, art_off, s_art,
               pt, pt_has, pv, pv_has, time_keys, decay_tab,
               use_rank_decay, inv_unit, mu, csign, p, j):
    internal = users[p] == users[j]
    if internal and set_ids[p] == set_ids[j]:
        return 0.0, internal, True
    sc = _content_pair(pt, pt_has, pv, pv_has, mu, csign, p, j)
    sb = _sbar_pair(art_idx, art_off, s_art, p, j)
    if use_rank_decay:
        dt = decay_tab[ranks[j] - ranks[p]]
    else:
        dt = math.exp(1.0 - (time_keys[j] - time_keys[p]) * inv_unit)
    return (sb * sc) * dt, internal, False


@njit(cache=True)
def pair_weight(ranks, users, set_ids, art_idx, art_off, s_art,
                pt, pt_has, pv, pv_has, time_keys, decay_tab,
                use_rank_decay, inv_unit, mu, csign, p, j):
    """Weight, internal flag, and blocked flag for one ordered pair."""
    return _pair_eval(ranks, users, set_ids, art_idx, art_off, s_art,
                      pt, pt_has, pv, pv_has, time_keys, decay_tab,
                      use_rank_decay, inv_unit, mu, csign, p, j)


@njit(cache=True, parallel=True)
def window_weights(ranks, users, set_ids, art_idx, art_off, s_art,
                   pt, pt_has, pv, pv_has, time_keys, decay_tab,
                   use_rank_decay, inv_unit, lo, hi, off,
                   mu, csign, eps, variant):
    """Evaluate every in-window pair; destinations are independent rows.

    Slot layout: destination j owns slots off[j] .. off[j] + (hi[j]-lo[j]),
    one per candidate source, so parallel writes never collide and output
    is independent of the thread count.
    """
    n = ranks.shape[0]
    total = off[n]
    keep = np.zeros(total, np.bool_)
    w = np.zeros(total, np.float64)
    internal = np.zeros(total, np.bool_)
    for j in prange(n):
        base = off[j]
        a = lo[j]
        b = hi[j]
        for p in range(a, b):
            slot = base + (p - a)
            wv, is_int, blocked = _pair_eval(
                ranks, users, set_ids, art_idx, art_off, s_art,
                pt, pt_has, pv, pv_has, time_keys, decay_tab,
                use_rank_decay, inv_unit, mu, csign, p, j)
            internal[slot] = is_int
            if blocked or wv <= eps:
                continue
            if variant == 1 and not is_int:
                continue
            if variant == 2 and is_int:
                continue
            if variant == 3 and not is_int and not _intersects(art_idx, art_off, p, j):
                continue
            keep[slot] = True
            w[slot] = wv
    return keep, w, internal
