"""Affected degrees: per-post incoming influence sums and their normalization.

A post's affected degree is the sum of its incoming edge weights, split
into an internal part (same author) and an external part (other authors).
With rank-based decay the combined degree is strictly below
``e/(e-1)``, so scaling by ``(e-1)/e`` maps every value into [0,1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .graph import InfluenceGraph
from .model import Corpus

F_MAX = math.e / (math.e - 1.0)
NORMALIZER = (math.e - 1.0) / math.e


class BoundViolationError(RuntimeError):
    """A degree reached the theoretical upper bound.

    Impossible for rank-decay graphs built by this package; reachable only
    with raw-time decay under sub-unit intervals.
    """


def normalize(raw: float) -> float:
    """Map a raw affected degree into [0,1) by the closed-form bound."""
    if raw < 0.0:
        raise ValueError(f"degree must be >= 0, got {raw}")
    if raw >= F_MAX:
        raise BoundViolationError(
            f"degree {raw} >= upper bound {F_MAX}; rank-decay graphs cannot produce this")
    return raw * NORMALIZER


@dataclass(frozen=True)
class AffectedDegree:
    post_id: str
    internal: float
    external: float
    combined: float

    @property
    def normalized_internal(self) -> float:
        return self.internal * NORMALIZER

    @property
    def normalized_external(self) -> float:
        return self.external * NORMALIZER

    @property
    def normalized_combined(self) -> float:
        return self.combined * NORMALIZER


@dataclass(frozen=True)
class UserDegree:
    """Mean affected degrees over one user's fake-sharing posts."""

    user_id: str
    mean_internal: float
    mean_external: float
    mean_combined: float
    post_count: int

    @property
    def normalized_mean_internal(self) -> float:
        return self.mean_internal * NORMALIZER

    @property
    def normalized_mean_external(self) -> float:
        return self.mean_external * NORMALIZER

    @property
    def normalized_mean_combined(self) -> float:
        return self.mean_combined * NORMALIZER


class DegreeTable:
    """Per-post degrees as aligned columns, in corpus post order."""

    def __init__(self, post_ids: tuple[str, ...], internal: np.ndarray,
                 external: np.ndarray, combined: np.ndarray):
        self.post_ids = post_ids
        self.internal = internal
        self.external = external
        self.combined = combined
        if np.any(combined >= F_MAX) or np.any(internal >= F_MAX) or np.any(external >= F_MAX):
            raise BoundViolationError(
                "an affected degree reached e/(e-1); only raw-time decay with "
                "sub-unit intervals can do this")
        self.normalized_internal = internal * NORMALIZER
        self.normalized_external = external * NORMALIZER
        self.normalized_combined = combined * NORMALIZER
        self._position = {pid: i for i, pid in enumerate(post_ids)}
        for arr in (self.internal, self.external, self.combined,
                    self.normalized_internal, self.normalized_external,
                    self.normalized_combined):
            arr.setflags(write=False)

    def __len__(self) -> int:
        return len(self.post_ids)

    def __getitem__(self, post_id: str) -> AffectedDegree:
        i = self._position[post_id]
        return AffectedDegree(post_id=post_id, internal=float(self.internal[i]),
                              external=float(self.external[i]), combined=float(self.combined[i]))

    def rows(self) -> Iterator[AffectedDegree]:
        for pid in self.post_ids:
            yield self[pid]

    def to_records(self) -> list[dict]:
        return [
            {"post_id": pid,
             "internal": float(self.internal[i]),
             "external": float(self.external[i]),
             "combined": float(self.combined[i]),
             "normalized_internal": float(self.normalized_internal[i]),
             "normalized_external": float(self.normalized_external[i]),
             "normalized_combined": float(self.normalized_combined[i])}
            for i, pid in enumerate(self.post_ids)
        ]


def affected_degrees(graph: InfluenceGraph) -> DegreeTable:
    """Sum incoming edge weights per post, split by edge kind.

    Edges are stored grouped by destination in ascending source rank, and
    the sums accumulate in that fixed order, so results are independent of
    build parallelism. ``combined`` sums all incoming edges directly;
    it equals internal + external to float tolerance.
    """
    n = len(graph.post_ids)
    w = graph.weight
    internal_mask = graph.internal
    dst = graph.dst
    internal = np.bincount(dst, weights=np.where(internal_mask, w, 0.0), minlength=n)
    external = np.bincount(dst, weights=np.where(internal_mask, 0.0, w), minlength=n)
    combined = np.bincount(dst, weights=w, minlength=n)
    if n == 0:
        internal = np.zeros(0)
        external = np.zeros(0)
        combined = np.zeros(0)
    return DegreeTable(graph.post_ids, internal, external, combined)


def degrees_from_edges(post_ids: tuple[str, ...],
                       edges: list[tuple[str, str, float, bool]]) -> DegreeTable:
    """Rebuild a DegreeTable from dumped edges (src, dst, weight, internal).

    Sums in the same (destination, ascending source position) order as
    :func:`affected_degrees`, so the two paths agree byte-for-byte.
    """
    pos = {pid: i for i, pid in enumerate(post_ids)}
    n = len(post_ids)
    if edges:
        src = np.array([pos[e[0]] for e in edges], dtype=np.int64)
        dst = np.array([pos[e[1]] for e in edges], dtype=np.int64)
        w = np.array([e[2] for e in edges], dtype=np.float64)
        internal_mask = np.array([e[3] for e in edges], dtype=bool)
        order = np.lexsort((src, dst))
        src, dst, w, internal_mask = src[order], dst[order], w[order], internal_mask[order]
        internal = np.bincount(dst, weights=np.where(internal_mask, w, 0.0), minlength=n)
        external = np.bincount(dst, weights=np.where(internal_mask, 0.0, w), minlength=n)
        combined = np.bincount(dst, weights=w, minlength=n)
    else:
        internal = np.zeros(n)
        external = np.zeros(n)
        combined = np.zeros(n)
    return DegreeTable(post_ids, internal, external, combined)


def user_level_degree(degrees: DegreeTable, corpus: Corpus) -> dict[str, UserDegree]:
    """Average degrees over each user's fake-sharing posts.

    A post "shares fake news" when its article set intersects the
    fake-labeled articles. Users with no such posts are omitted.
    """
    out: dict[str, UserDegree] = {}
    for user_id in corpus.user_ids():
        positions = [i for i in corpus.posts_by_user[user_id]
                     if corpus.shares_fake(corpus.posts[i])]
        if not positions:
            continue
        sel = np.array(positions, dtype=np.int64)
        out[user_id] = UserDegree(
            user_id=user_id,
            mean_internal=float(degrees.internal[sel].mean()),
            mean_external=float(degrees.external[sel].mean()),
            mean_combined=float(degrees.combined[sel].mean()),
            post_count=len(positions),
        )
    return out
