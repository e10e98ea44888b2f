"""Backend selection for the graph-construction inner loops.

Two interchangeable backends implement the same pair semantics:

* ``numba``  -- JIT-compiled parallel kernels (default when numba imports)
* ``numpy``  -- pure-numpy per-destination vectorization

Select via the ``INTENTGRAPH_BACKEND`` environment variable (``numba`` or
``numpy``) or per call. Within a backend the scalar ``pair_weight`` and the
bulk ``window_weights`` are bit-consistent by construction; across backends
weights may differ in the last ulp (numba accumulates dot products
sequentially, numpy uses pairwise reduction). ``benchmarks/bench_build.py``
compares speed and deviation of the two.
"""

from __future__ import annotations

import math
import os

import numpy as np

ENV_BACKEND = "INTENTGRAPH_BACKEND"

try:
    from . import _kernels_numba as _nb
    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba installed
    _nb = None
    _HAVE_NUMBA = False


def available_backends() -> tuple[str, ...]:
    return ("numba", "numpy") if _HAVE_NUMBA else ("numpy",)


def default_backend() -> str:
    env = os.environ.get(ENV_BACKEND, "").strip().lower()
    if env:
        if env not in ("numba", "numpy"):
            raise ValueError(f"{ENV_BACKEND} must be 'numba' or 'numpy', got {env!r}")
        if env == "numba" and not _HAVE_NUMBA:
            raise RuntimeError("numba backend requested via environment but numba is not importable")
        return env
    return "numba" if _HAVE_NUMBA else "numpy"


def resolve_backend(name: str | None) -> str:
    if name is None:
        return default_backend()
    name = name.strip().lower()
    if name not in ("numba", "numpy"):
        raise ValueError(f"backend must be 'numba' or 'numpy', got {name!r}")
    if name == "numba" and not _HAVE_NUMBA:
        raise RuntimeError("numba backend requested but numba is not importable")
    return name


def set_thread_count(threads: int | None) -> int:
    """Set the numba worker count (clamped to the runtime maximum).

    Returns the effective count. The numpy backend is single-threaded and
    ignores this; results never depend on it either way.
    """
    if not _HAVE_NUMBA:
        return 1
    import numba

    cap = numba.config.NUMBA_NUM_THREADS
    if threads is None or threads <= 0:
        return numba.get_num_threads()
    effective = min(threads, cap)
    numba.set_num_threads(effective)
    return effective


# ---------------------------------------------------------------------------
# numpy backend


def _content_pair_numpy(pt, pt_has, pv, pv_has, mu, csign, p, j) -> float:
    if pt_has[p] and pt_has[j]:
        c = min(1.0, max(-1.0, (pt[p] * pt[j]).sum()))
        ct = 0.5 * (1.0 + csign * c)
        if pv_has[p] and pv_has[j]:
            v = min(1.0, max(-1.0, (pv[p] * pv[j]).sum()))
            cv = 0.5 * (1.0 + csign * v)
            return mu * ct + (1.0 - mu) * cv
        return ct
    if pv_has[p] and pv_has[j]:
        v = min(1.0, max(-1.0, (pv[p] * pv[j]).sum()))
        return 0.5 * (1.0 + csign * v)
    return 0.0


def _sbar_pair_numpy(art_idx, art_off, s_art, p, j) -> float:
    s = 0.0
    for ia in range(art_off[p], art_off[p + 1]):
        a = art_idx[ia]
        for ib in range(art_off[j], art_off[j + 1]):
            s += s_art[a, art_idx[ib]]
    na = art_off[p + 1] - art_off[p]
    nb = art_off[j + 1] - art_off[j]
    return s / (na * nb)


def _intersects_numpy(art_idx, art_off, p, j) -> bool:
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


def _pair_weight_numpy(ranks, users, set_ids, art_idx, art_off, s_art,
                       pt, pt_has, pv, pv_has, time_keys, decay_tab,
                       use_rank_decay, inv_unit, mu, csign, p, j):
    internal = bool(users[p] == users[j])
    if internal and set_ids[p] == set_ids[j]:
        return 0.0, internal, True
    sc = _content_pair_numpy(pt, pt_has, pv, pv_has, mu, csign, p, j)
    sb = _sbar_pair_numpy(art_idx, art_off, s_art, p, j)
    if use_rank_decay:
        dt = decay_tab[ranks[j] - ranks[p]]
    else:
        dt = math.exp(1.0 - (time_keys[j] - time_keys[p]) * inv_unit)
    return (sb * sc) * dt, internal, False


def _window_weights_numpy(ranks, users, set_ids, art_idx, art_off, s_art,
                          pt, pt_has, pv, pv_has, time_keys, decay_tab,
                          use_rank_decay, inv_unit, lo, hi, off,
                          mu, csign, eps, variant):
    n = ranks.shape[0]
    total = int(off[n])
    keep = np.zeros(total, dtype=bool)
    w = np.zeros(total, dtype=np.float64)
    internal = np.zeros(total, dtype=bool)
    # single-article posts take a vectorized path; multi-article sets fall
    # back to per-pair loops (uncommon in practice)
    if n > 0:
        art_count = art_off[1:] - art_off[:-1]
        art_single = np.where(art_count == 1, art_idx[art_off[:-1]], -1)
    else:
        art_single = np.empty(0, dtype=np.int64)

    for j in range(n):
        a = int(lo[j])
        b = int(hi[j])
        if a >= b:
            continue
        o = int(off[j])
        sl = slice(a, b)
        count = b - a

        both_t = pt_has[sl] & pt_has[j]
        both_v = pv_has[sl] & pv_has[j]
        ct = 0.5 * (1.0 + csign * np.clip((pt[sl] * pt[j]).sum(axis=1), -1.0, 1.0))
        cv = 0.5 * (1.0 + csign * np.clip((pv[sl] * pv[j]).sum(axis=1), -1.0, 1.0))
        sc = np.where(both_t,
                      np.where(both_v, mu * ct + (1.0 - mu) * cv, ct),
                      np.where(both_v, cv, 0.0))

        if art_single[j] >= 0 and np.all(art_single[sl] >= 0):
            sb = s_art[art_single[sl], art_single[j]]
        else:
            sb = np.empty(count, dtype=np.float64)
            for k in range(count):
                sb[k] = _sbar_pair_numpy(art_idx, art_off, s_art, a + k, j)

        if use_rank_decay:
            dt = decay_tab[ranks[j] - ranks[sl]]
        else:
            tkj = time_keys[j]
            dt = np.array([math.exp(1.0 - (tkj - time_keys[p]) * inv_unit)
                           for p in range(a, b)], dtype=np.float64)

        wv = (sb * sc) * dt
        kind_v = users[sl] == users[j]
        blocked = kind_v & (set_ids[sl] == set_ids[j])
        wv = np.where(blocked, 0.0, wv)
        keep_v = ~blocked & (wv > eps)
        if variant == 1:
            keep_v &= kind_v
        elif variant == 2:
            keep_v &= ~kind_v
        elif variant == 3:
            if art_single[j] >= 0 and np.all(art_single[sl] >= 0):
                inter = art_single[sl] == art_single[j]
            else:
                inter = np.array([_intersects_numpy(art_idx, art_off, a + k, j)
                                  for k in range(count)], dtype=bool)
            keep_v &= kind_v | inter

        keep[o:o + count] = keep_v
        w[o:o + count] = np.where(keep_v, wv, 0.0)
        internal[o:o + count] = kind_v
    return keep, w, internal


# ---------------------------------------------------------------------------
# dispatch


def window_weights(backend: str, *args):
    if backend == "numba":
        return _nb.window_weights(*args)
    return _window_weights_numpy(*args)


def pair_weight(backend: str, *args):
    if backend == "numba":
        return _nb.pair_weight(*args)
    return _pair_weight_numpy(*args)
