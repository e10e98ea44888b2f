"""Sparsified influence-graph construction over a validated corpus.

A directed edge runs from an earlier post to a later one (by competition
rank) whenever they fall within the rank window, unless the same user
repeats an identical article set. Edge weight multiplies article-set
similarity, content similarity, and exponential rank decay; edges at or
below ``weight_epsilon`` are dropped. Variant subgraphs (internal-only,
external-only, internal plus same-news external) filter edges after
weighting, so all variants share identical per-edge weights.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from . import _kernels as kernels
from .model import Corpus, Post
from .similarity import (DECAY_UNIT_SECONDS, SimilarityConfig, avg_article_similarity,
                         decay, pair_similarity, text_representation)

VARIANTS = ("full", "internal_only", "external_only", "same_news_external")
_VARIANT_CODES = {name: code for code, name in enumerate(VARIANTS)}

KIND_INTERNAL = "internal"
KIND_EXTERNAL = "external"


@dataclass(frozen=True)
class GraphConfig:
    theta_t: int = 100
    variant: str = "full"
    weight_epsilon: float = 1e-12
    similarity: SimilarityConfig = field(default_factory=SimilarityConfig)

    def __post_init__(self):
        if self.theta_t < 1:
            raise ValueError(f"theta_t must be >= 1, got {self.theta_t}")
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if self.weight_epsilon < 0.0:
            raise ValueError(f"weight_epsilon must be >= 0, got {self.weight_epsilon}")


@dataclass(frozen=True)
class InfluenceEdge:
    src: str
    dst: str
    weight: float
    kind: str


class InfluenceGraph:
    """Immutable influence graph: incoming adjacency sorted by source rank.

    Arrays are aligned: edge e runs from post position ``src[e]`` to
    ``dst[e]``; edges are stored grouped by destination in ascending source
    order, with ``dst_off`` delimiting each destination's incoming slice.
    """

    def __init__(self, post_ids: tuple[str, ...], ranks: np.ndarray,
                 dst_off: np.ndarray, src: np.ndarray, dst: np.ndarray,
                 weight: np.ndarray, internal: np.ndarray):
        self.post_ids = post_ids
        self.ranks = ranks
        self.dst_off = dst_off
        self.src = src
        self.dst = dst
        self.weight = weight
        self.internal = internal
        for arr in (ranks, dst_off, src, dst, weight, internal):
            arr.setflags(write=False)

    @property
    def n_nodes(self) -> int:
        return len(self.post_ids)

    @property
    def n_edges(self) -> int:
        return len(self.src)

    def incoming(self, position: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(source positions, weights, internal flags) for one destination."""
        a, b = self.dst_off[position], self.dst_off[position + 1]
        return self.src[a:b], self.weight[a:b], self.internal[a:b]

    def edges(self) -> Iterator[InfluenceEdge]:
        for e in range(self.n_edges):
            yield InfluenceEdge(
                src=self.post_ids[self.src[e]],
                dst=self.post_ids[self.dst[e]],
                weight=float(self.weight[e]),
                kind=KIND_INTERNAL if self.internal[e] else KIND_EXTERNAL,
            )

    def edge_records(self) -> list[dict]:
        """JSONL-ready edge dump, sorted by (dst, src) identifiers."""
        records = [
            {"src": self.post_ids[self.src[e]], "dst": self.post_ids[self.dst[e]],
             "weight": float(self.weight[e]),
             "kind": KIND_INTERNAL if self.internal[e] else KIND_EXTERNAL}
            for e in range(self.n_edges)
        ]
        records.sort(key=lambda r: (r["dst"], r["src"]))
        return records


@dataclass
class PreparedCorpus:
    """Array form of a corpus consumed by the pair kernels."""

    n: int
    post_ids: tuple[str, ...]
    ranks: np.ndarray
    users: np.ndarray
    set_ids: np.ndarray
    art_idx: np.ndarray
    art_off: np.ndarray
    s_art: np.ndarray
    pt: np.ndarray
    pt_has: np.ndarray
    pv: np.ndarray
    pv_has: np.ndarray
    time_keys: np.ndarray
    decay_tab: np.ndarray
    use_rank_decay: bool
    inv_unit: float
    lo: np.ndarray
    hi: np.ndarray
    off: np.ndarray
    mu: float
    csign: float
    eps: float
    variant_code: int

    def kernel_args(self):
        return (self.ranks, self.users, self.set_ids, self.art_idx, self.art_off,
                self.s_art, self.pt, self.pt_has, self.pv, self.pv_has,
                self.time_keys, self.decay_tab, self.use_rank_decay, self.inv_unit)

    def window_args(self):
        return self.kernel_args() + (self.lo, self.hi, self.off,
                                     self.mu, self.csign, self.eps, self.variant_code)


def _stack_embeddings(vectors: list[np.ndarray | None], what: str) -> tuple[np.ndarray, np.ndarray]:
    """Stack per-item vectors into a row-normalized matrix plus presence mask.

    All present vectors must share one dimension; zero vectors stay zero
    (their cosine against anything is defined as 0).
    """
    n = len(vectors)
    has = np.array([v is not None for v in vectors], dtype=bool)
    dims = {v.shape[0] for v in vectors if v is not None}
    if len(dims) > 1:
        raise ValueError(
            f"mixed {what} dimensions {sorted(dims)}; embeddings compared against "
            "each other must share one dimension (check fallback_dim against "
            "ingested embeddings)")
    dim = dims.pop() if dims else 1
    mat = np.zeros((n, dim), dtype=np.float64)
    for i, v in enumerate(vectors):
        if v is not None:
            mat[i] = v
    norms = np.sqrt((mat * mat).sum(axis=1))
    nonzero = norms > 0.0
    mat[nonzero] /= norms[nonzero, None]
    return mat, has


def _combined_matrix(tmat, thas, vmat, vhas, mu: float, csign: float) -> np.ndarray:
    """Dense pairwise similarity matrix with per-pair channel fallbacks.

    BLAS-free on purpose: each row is a pairwise-summed product, which keeps
    results identical across thread counts and BLAS builds.
    """
    m = tmat.shape[0]
    out = np.zeros((m, m), dtype=np.float64)
    for j in range(m):
        ct = 0.5 * (1.0 + csign * np.clip((tmat * tmat[j]).sum(axis=1), -1.0, 1.0))
        cv = 0.5 * (1.0 + csign * np.clip((vmat * vmat[j]).sum(axis=1), -1.0, 1.0))
        both_t = thas & thas[j]
        both_v = vhas & vhas[j]
        out[:, j] = np.where(both_t,
                             np.where(both_v, mu * ct + (1.0 - mu) * cv, ct),
                             np.where(both_v, cv, 0.0))
    return out


def prepare_corpus(corpus: Corpus, cfg: GraphConfig) -> PreparedCorpus:
    """Convert a corpus into the array form used by the kernels."""
    sim = cfg.similarity
    n = len(corpus.posts)
    posts = corpus.posts
    post_ids = tuple(p.post_id for p in posts)

    ranks = np.array([p.rank for p in posts], dtype=np.int64)
    user_codes: dict[str, int] = {}
    users = np.empty(n, dtype=np.int64)
    for i, p in enumerate(posts):
        users[i] = user_codes.setdefault(p.user_id, len(user_codes))

    art_col = {aid: k for k, aid in enumerate(sorted(corpus.articles))}
    set_codes: dict[tuple[int, ...], int] = {}
    set_ids = np.empty(n, dtype=np.int64)
    idx_chunks: list[tuple[int, ...]] = []
    off = np.zeros(n + 1, dtype=np.int64)
    for i, p in enumerate(posts):
        cols = tuple(art_col[a] for a in p.article_ids)  # article_ids sorted => cols sorted
        set_ids[i] = set_codes.setdefault(cols, len(set_codes))
        idx_chunks.append(cols)
        off[i + 1] = off[i] + len(cols)
    art_idx = np.array([c for chunk in idx_chunks for c in chunk], dtype=np.int64)

    arts = [corpus.articles[a] for a in sorted(corpus.articles)]
    at_mat, at_has = _stack_embeddings([text_representation(a, sim) for a in arts],
                                       "article text embedding")
    av_mat, av_has = _stack_embeddings([a.visual_embedding for a in arts],
                                       "article visual embedding")
    s_art = _combined_matrix(at_mat, at_has, av_mat, av_has, sim.mu, sim.cos_sign)

    pt, pt_has = _stack_embeddings([text_representation(p, sim) for p in posts],
                                   "post text embedding")
    pv, pv_has = _stack_embeddings([p.visual_embedding for p in posts],
                                   "post visual embedding")

    time_keys = np.array([p.time_key for p in posts], dtype=np.float64)

    theta = int(cfg.theta_t)
    if n > 0:
        span = int(ranks[-1] - ranks[0])
        theta_eff = min(theta, span) if span > 0 else 1
        lo = np.searchsorted(ranks, ranks - theta, side="left").astype(np.int64)
        hi = np.searchsorted(ranks, ranks, side="left").astype(np.int64)
    else:
        theta_eff = 1
        lo = np.empty(0, dtype=np.int64)
        hi = np.empty(0, dtype=np.int64)
    decay_tab = np.zeros(theta_eff + 1, dtype=np.float64)
    for d in range(1, theta_eff + 1):
        decay_tab[d] = math.exp(1.0 - d)

    win_off = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(hi - lo, out=win_off[1:])

    use_rank = sim.decay_mode == "rank"
    inv_unit = 1.0 if use_rank else 1.0 / DECAY_UNIT_SECONDS[sim.decay_mode]

    return PreparedCorpus(
        n=n, post_ids=post_ids, ranks=ranks, users=users, set_ids=set_ids,
        art_idx=art_idx, art_off=off, s_art=s_art,
        pt=pt, pt_has=pt_has, pv=pv, pv_has=pv_has,
        time_keys=time_keys, decay_tab=decay_tab,
        use_rank_decay=use_rank, inv_unit=inv_unit,
        lo=lo, hi=hi, off=win_off,
        mu=sim.mu, csign=sim.cos_sign, eps=cfg.weight_epsilon,
        variant_code=_VARIANT_CODES[cfg.variant],
    )


def prepared_pair_weight(prep: PreparedCorpus, p: int, j: int,
                         backend: str | None = None) -> tuple[float, bool, bool]:
    """(weight, internal, blocked) for one pair, via the active backend.

    Bit-identical to what :func:`build_influence_graph` computes for the
    same pair on the same backend.
    """
    backend = kernels.resolve_backend(backend)
    w, internal, blocked = kernels.pair_weight(backend, *prep.kernel_args(),
                                               prep.mu, prep.csign, p, j)
    return float(w), bool(internal), bool(blocked)


def build_influence_graph(corpus: Corpus, cfg: GraphConfig | None = None,
                          backend: str | None = None) -> InfluenceGraph:
    """Build the influence graph for a validated, rank-assigned corpus.

    Deterministic for a given corpus and config: destinations are processed
    over disjoint slots, and the surviving edges are compacted in
    (destination, ascending source rank) order.
    """
    cfg = cfg or GraphConfig()
    backend = kernels.resolve_backend(backend)
    prep = prepare_corpus(corpus, cfg)
    n = prep.n
    if n == 0 or prep.off[n] == 0:
        empty = np.empty(0, dtype=np.int64)
        return InfluenceGraph(prep.post_ids, prep.ranks, np.zeros(n + 1, dtype=np.int64),
                              empty, empty.copy(), np.empty(0, dtype=np.float64),
                              np.empty(0, dtype=bool))

    keep, w, internal = kernels.window_weights(backend, *prep.window_args())

    counts = prep.hi - prep.lo
    dst_all = np.repeat(np.arange(n, dtype=np.int64), counts)
    slots = np.arange(prep.off[n], dtype=np.int64)
    src_all = slots - prep.off[dst_all] + prep.lo[dst_all]

    kept = np.flatnonzero(keep)
    src = src_all[kept]
    dst = dst_all[kept]
    weight = w[kept]
    internal_kept = internal[kept].astype(bool)

    dst_off = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(dst, minlength=n), out=dst_off[1:])

    return InfluenceGraph(prep.post_ids, prep.ranks, dst_off, src, dst,
                          weight, internal_kept)


def edge_weight(corpus: Corpus, post_i: Post, post_j: Post,
                cfg: GraphConfig | None = None) -> float:
    """Scalar edge weight from the similarity-module primitives.

    Equals the kernel-computed weight for the same pair to floating-point
    tolerance (the bulk path reorders accumulation for speed).
    """
    cfg = cfg or GraphConfig()
    sim = cfg.similarity
    if post_i.rank >= post_j.rank:
        raise ValueError("edge weight requires rank(src) < rank(dst)")
    arts_i = [corpus.articles[a] for a in post_i.article_ids]
    arts_j = [corpus.articles[a] for a in post_j.article_ids]
    sbar = avg_article_similarity(arts_i, arts_j, sim)
    s_content = pair_similarity(post_i, post_j, sim)
    if sim.decay_mode == "rank":
        delta = float(post_j.rank - post_i.rank)
    else:
        delta = (post_j.time_key - post_i.time_key) / DECAY_UNIT_SECONDS[sim.decay_mode]
    return sbar * s_content * decay(delta, sim.decay_mode)
