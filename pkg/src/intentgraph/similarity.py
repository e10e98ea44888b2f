"""Similarity kernels between articles/posts and the temporal decay function.

Content similarity combines a text channel and an optional visual channel
through a unit-interval cosine map. Two cosine maps ship: ``aligned``
(default, ``(1+cos)/2``, identical content scores 1) and ``distance``
(``(1-cos)/2``, identical content scores 0). Influence between posts fades
exponentially with their rank (or raw-time) distance.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from hashlib import blake2b

import numpy as np

COS_ALIGNED = "aligned"
COS_DISTANCE = "distance"
COS_MODES = (COS_ALIGNED, COS_DISTANCE)

DECAY_MODES = ("rank", "seconds", "minutes", "hours", "days")
DECAY_UNIT_SECONDS = {"seconds": 1.0, "minutes": 60.0, "hours": 3600.0, "days": 86400.0}

_TOKEN_RE = re.compile(r"[0-9a-z]+")


@dataclass(frozen=True)
class SimilarityConfig:
    mu: float = 0.8
    cos_mode: str = COS_ALIGNED
    fallback_dim: int = 256
    decay_mode: str = "rank"

    def __post_init__(self):
        if not (0.0 <= self.mu <= 1.0):
            raise ValueError(f"mu must be in [0,1], got {self.mu}")
        if self.cos_mode not in COS_MODES:
            raise ValueError(f"cos_mode must be one of {COS_MODES}, got {self.cos_mode!r}")
        if self.fallback_dim < 8:
            raise ValueError(f"fallback_dim must be >= 8, got {self.fallback_dim}")
        if self.decay_mode not in DECAY_MODES:
            raise ValueError(f"decay_mode must be one of {DECAY_MODES}, got {self.decay_mode!r}")

    @property
    def cos_sign(self) -> float:
        """+1 for the aligned map, -1 for the distance map."""
        return 1.0 if self.cos_mode == COS_ALIGNED else -1.0


def _as_vector(v, name: str) -> np.ndarray:
    arr = np.asarray(v, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError(f"{name} must be a nonempty 1-d vector")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"non-finite entry in {name}")
    return arr


def unit_interval_cos(u, v, mode: str = COS_ALIGNED) -> float:
    """Cosine of two vectors mapped onto [0,1].

    ``aligned`` returns (1+cos)/2, ``distance`` returns (1-cos)/2. An
    all-zero vector has cosine 0 by definition, so either map yields 0.5.
    """
    if mode not in COS_MODES:
        raise ValueError(f"mode must be one of {COS_MODES}, got {mode!r}")
    uu = _as_vector(u, "u")
    vv = _as_vector(v, "v")
    if uu.shape[0] != vv.shape[0]:
        raise ValueError(f"dimension mismatch: {uu.shape[0]} vs {vv.shape[0]}")
    nu = math.sqrt((uu * uu).sum())
    nv = math.sqrt((vv * vv).sum())
    if nu == 0.0 or nv == 0.0:
        c = 0.0
    else:
        c = ((uu / nu) * (vv / nv)).sum()
        c = min(1.0, max(-1.0, c))
    sign = 1.0 if mode == COS_ALIGNED else -1.0
    return 0.5 * (1.0 + sign * c)


def fallback_embed(text: str, dim: int) -> np.ndarray:
    """Deterministic hashed bag-of-tokens embedding, L2-normalized.

    Lowercases, splits on non-alphanumerics, hashes each token to one of
    ``dim`` buckets, counts, then normalizes. An empty token set yields the
    all-zero vector. Stable across runs and platforms (keyed blake2b, not
    Python's salted hash).
    """
    if dim < 8:
        raise ValueError(f"dim must be >= 8, got {dim}")
    vec = np.zeros(dim, dtype=np.float64)
    for token in _TOKEN_RE.findall(text.lower()):
        bucket = int.from_bytes(blake2b(token.encode("utf-8"), digest_size=8).digest(), "little") % dim
        vec[bucket] += 1.0
    norm = math.sqrt((vec * vec).sum())
    if norm > 0.0:
        vec /= norm
    return vec


def text_representation(obj, cfg: SimilarityConfig) -> np.ndarray | None:
    """Text vector for an article or post: ingested embedding, else hashed
    fallback from raw text, else None."""
    if obj.text_embedding is not None:
        return obj.text_embedding
    if obj.text is not None:
        return fallback_embed(obj.text, cfg.fallback_dim)
    return None


def pair_similarity(x, y, cfg: SimilarityConfig | None = None) -> float:
    """Multimodal similarity between two articles or two posts, in [0,1].

    mu weights the text channel against the visual channel. When the visual
    channel is missing on either side the weight renormalizes to text alone;
    when the text channel is missing on either side but both have visual
    embeddings, visual alone is used; with no comparable channel at all the
    similarity is 0.
    """
    cfg = cfg or SimilarityConfig()
    tx = text_representation(x, cfg)
    ty = text_representation(y, cfg)
    vx, vy = x.visual_embedding, y.visual_embedding
    if tx is not None and ty is not None:
        ct = unit_interval_cos(tx, ty, cfg.cos_mode)
        if vx is not None and vy is not None:
            cv = unit_interval_cos(vx, vy, cfg.cos_mode)
            return cfg.mu * ct + (1.0 - cfg.mu) * cv
        return ct
    if vx is not None and vy is not None:
        return unit_interval_cos(vx, vy, cfg.cos_mode)
    return 0.0


def avg_article_similarity(articles_i, articles_j, cfg: SimilarityConfig | None = None) -> float:
    """Mean pair similarity over the Cartesian product of two article sets."""
    arts_i = list(articles_i)
    arts_j = list(articles_j)
    if not arts_i or not arts_j:
        raise ValueError("article sets must be nonempty")
    total = 0.0
    for a in arts_i:
        for b in arts_j:
            total += pair_similarity(a, b, cfg)
    return total / (len(arts_i) * len(arts_j))


def decay(delta_t: float, mode: str = "rank") -> float:
    """Temporal decay exp(1 - delta_t); 1.0 at the closest admissible distance.

    In rank mode connected posts have distinct integer ranks, so delta_t
    must be >= 1 and the result lies in (0,1]. In raw-time modes any
    positive delta_t is accepted (values below one unit exceed 1, and the
    affected-degree bound no longer applies).
    """
    if mode not in DECAY_MODES:
        raise ValueError(f"mode must be one of {DECAY_MODES}, got {mode!r}")
    if not np.isfinite(delta_t) or delta_t <= 0.0:
        raise ValueError(f"delta_t must be positive, got {delta_t}")
    if mode == "rank" and delta_t < 1.0:
        raise ValueError(f"rank distance must be >= 1, got {delta_t}")
    return math.exp(1.0 - delta_t)
