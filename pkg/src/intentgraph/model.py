"""Domain types, corpus ingestion and validation, chronological rank assignment.

A corpus is a keyed set of news articles, a time-ordered sequence of posts
that share those articles, and per-user bot/troll scores. Validation is
all-at-once: every violation is collected with a record locator before the
error is raised, so a bad file produces one complete report.
"""

from __future__ import annotations

import datetime as _dt
from dataclasses import dataclass, field, replace
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

LABEL_FAKE = "fake"
LABEL_TRUE = "true"
LABEL_UNLABELED = "unlabeled"

ENGAGEMENT_KEYS = ("reposts", "favorites", "hashtags", "mentions", "symbols", "quotes", "replies")


class CorpusValidationError(ValueError):
    """Raised when ingested records violate the corpus contracts.

    ``issues`` is a list of ``(locator, message)`` pairs covering every
    violation found, not just the first.
    """

    def __init__(self, issues: Sequence[tuple[str, str]]):
        self.issues = list(issues)
        shown = "; ".join(f"{loc}: {msg}" for loc, msg in self.issues[:8])
        extra = "" if len(self.issues) <= 8 else f" (+{len(self.issues) - 8} more)"
        super().__init__(f"{len(self.issues)} validation issue(s): {shown}{extra}")

    def to_report(self) -> list[dict[str, str]]:
        return [{"where": loc, "message": msg} for loc, msg in self.issues]


@dataclass(frozen=True)
class Article:
    """A news item with a credibility label and optional content embeddings."""

    article_id: str
    label: str = LABEL_UNLABELED
    text: str | None = None
    text_embedding: np.ndarray | None = None
    visual_embedding: np.ndarray | None = None


@dataclass(frozen=True)
class Post:
    """One social post: articles shared, content, posting time, and author.

    ``rank`` is assigned by :func:`assign_ranks`, never ingested. ``time_key``
    is the numeric ordering key derived from ``time`` (tick value, or epoch
    seconds for calendar timestamps).
    """

    post_id: str
    user_id: str
    time: int | str
    article_ids: tuple[str, ...]
    rank: int = 0
    time_key: float = 0.0
    text: str | None = None
    text_embedding: np.ndarray | None = None
    visual_embedding: np.ndarray | None = None
    is_correction: bool | None = None
    engagement: Mapping[str, int] | None = None


@dataclass(frozen=True)
class UserScores:
    """Per-user platform scores in [0,1]; ``corrector`` is derived, not ingested."""

    user_id: str
    bot: float | None = None
    troll: float | None = None
    corrector: float | None = None


class Corpus:
    """Validated, immutable view over articles, rank-ordered posts, and scores.

    Posts are sorted ascending by (time, post_id) and carry competition
    ranks. Safe to share across threads; nothing here mutates after
    construction.
    """

    def __init__(self, articles: Iterable[Article], posts: Iterable[Post],
                 user_scores: Iterable[UserScores], time_kind: str = "tick"):
        self.articles: dict[str, Article] = {a.article_id: a for a in sorted(articles, key=lambda a: a.article_id)}
        self.posts: tuple[Post, ...] = tuple(posts)
        self.user_scores: dict[str, UserScores] = {
            s.user_id: s for s in sorted(user_scores, key=lambda s: s.user_id)
        }
        self.time_kind = time_kind
        self.fake_article_ids: frozenset[str] = frozenset(
            a.article_id for a in self.articles.values() if a.label == LABEL_FAKE
        )
        self._position = {p.post_id: i for i, p in enumerate(self.posts)}
        by_user: dict[str, list[int]] = {}
        for i, p in enumerate(self.posts):
            by_user.setdefault(p.user_id, []).append(i)
        self.posts_by_user: dict[str, tuple[int, ...]] = {u: tuple(v) for u, v in by_user.items()}

    def __len__(self) -> int:
        return len(self.posts)

    def position(self, post_id: str) -> int:
        return self._position[post_id]

    def shares_fake(self, post: Post) -> bool:
        return any(a in self.fake_article_ids for a in post.article_ids)

    def fake_sharing_posts(self) -> list[Post]:
        return [p for p in self.posts if self.shares_fake(p)]

    def scores_for(self, user_id: str) -> UserScores:
        return self.user_scores.get(user_id, UserScores(user_id=user_id))

    def user_ids(self) -> list[str]:
        return sorted(self.posts_by_user)


def assign_ranks(posts: Sequence[Post]) -> list[Post]:
    """Assign competition ranks to posts already sorted ascending by time.

    Posts with equal time share one rank; after a tie group of size K at
    rank r, the next distinct time gets rank r + K. First rank is 1.
    """
    ranked: list[Post] = []
    rank = 1
    for i, post in enumerate(posts):
        if i > 0:
            prev = posts[i - 1]
            if post.time_key < prev.time_key:
                raise ValueError("posts must be sorted ascending by time before rank assignment")
            if post.time_key > prev.time_key:
                rank = i + 1
        ranked.append(replace(post, rank=rank))
    return ranked


def _located(items: Iterable[Any], default_name: str) -> list[tuple[str, Any]]:
    out = []
    for i, item in enumerate(items):
        if isinstance(item, tuple) and len(item) == 2 and isinstance(item[0], str):
            out.append(item)
        else:
            out.append((f"{default_name}[{i}]", item))
    return out


def _parse_time(value: Any) -> tuple[str, float] | None:
    """Return (kind, numeric key) for an int tick or RFC3339 string, else None."""
    if isinstance(value, bool):
        return None
    if isinstance(value, int):
        return "tick", float(value)
    if isinstance(value, str):
        text = value.replace("Z", "+00:00") if value.endswith("Z") else value
        try:
            dt = _dt.datetime.fromisoformat(text)
        except ValueError:
            return None
        if dt.tzinfo is None:
            dt = dt.replace(tzinfo=_dt.timezone.utc)
        return "timestamp", dt.timestamp()
    return None


def _parse_embedding(value: Any, loc: str, name: str, issues: list,
                     require_nonzero: bool = False) -> np.ndarray | None:
    if value is None:
        return None
    if not isinstance(value, (list, tuple)) or len(value) == 0 or not all(
        isinstance(x, (int, float)) and not isinstance(x, bool) for x in value
    ):
        issues.append((loc, f"{name} must be a nonempty list of numbers"))
        return None
    arr = np.asarray(value, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        issues.append((loc, f"non-finite embedding entry in {name}"))
        return None
    if require_nonzero and not np.any(arr != 0.0):
        issues.append((loc, f"{name} is all-zero"))
        return None
    arr.setflags(write=False)
    return arr


def _check_score(value: Any, loc: str, name: str, issues: list) -> float | None:
    if value is None:
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        issues.append((loc, f"{name} must be a number"))
        return None
    x = float(value)
    if not np.isfinite(x) or x < 0.0 or x > 1.0:
        issues.append((loc, f"{name} score outside [0,1]"))
        return None
    return x


def validate_corpus(posts: Iterable[Any], articles: Iterable[Any],
                    user_scores: Iterable[Any]) -> Corpus:
    """Build a validated Corpus from raw records.

    Each input item is a dict matching the JSONL schemas (see the CLI
    module), optionally wrapped as a ``(locator, dict)`` pair so reports can
    point at file lines. Raises :class:`CorpusValidationError` listing every
    violation; on success the result is canonically sorted and rank-assigned
    regardless of input order.
    """
    issues: list[tuple[str, str]] = []

    parsed_articles: dict[str, Article] = {}
    for loc, rec in _located(articles, "articles"):
        if not isinstance(rec, Mapping):
            issues.append((loc, "record must be a JSON object"))
            continue
        aid = rec.get("article_id")
        if not isinstance(aid, str) or not aid:
            issues.append((loc, "article_id must be a nonempty string"))
            continue
        if aid in parsed_articles:
            issues.append((loc, f"duplicate article_id {aid}"))
            continue
        label = rec.get("label")
        if label is None:
            label = LABEL_UNLABELED
        if label not in (LABEL_FAKE, LABEL_TRUE, LABEL_UNLABELED):
            issues.append((loc, f"label must be 'fake', 'true' or null, got {label!r}"))
            continue
        text = rec.get("text")
        if text is not None and not isinstance(text, str):
            issues.append((loc, "text must be a string"))
            continue
        t_emb = _parse_embedding(rec.get("text_embedding"), loc, "text_embedding", issues,
                                 require_nonzero=True)
        v_emb = _parse_embedding(rec.get("visual_embedding"), loc, "visual_embedding", issues,
                                 require_nonzero=True)
        parsed_articles[aid] = Article(article_id=aid, label=label, text=text,
                                       text_embedding=t_emb, visual_embedding=v_emb)

    parsed_posts: dict[str, Post] = {}
    time_kinds: set[str] = set()
    for loc, rec in _located(posts, "posts"):
        if not isinstance(rec, Mapping):
            issues.append((loc, "record must be a JSON object"))
            continue
        pid = rec.get("post_id")
        if not isinstance(pid, str) or not pid:
            issues.append((loc, "post_id must be a nonempty string"))
            continue
        if pid in parsed_posts:
            issues.append((loc, f"duplicate post_id {pid}"))
            continue
        uid = rec.get("user_id")
        if not isinstance(uid, str) or not uid:
            issues.append((loc, "user_id must be a nonempty string"))
            continue
        parsed_time = _parse_time(rec.get("time"))
        if parsed_time is None:
            issues.append((loc, "time must be an integer tick or RFC3339 timestamp"))
            continue
        kind, time_key = parsed_time
        time_kinds.add(kind)
        raw_arts = rec.get("article_ids")
        if not isinstance(raw_arts, (list, tuple)) or not raw_arts or not all(
            isinstance(a, str) and a for a in raw_arts
        ):
            issues.append((loc, "article_ids must be a nonempty list of strings"))
            continue
        art_ids = tuple(sorted(set(raw_arts)))
        for aid in art_ids:
            if aid not in parsed_articles:
                issues.append((loc, f"dangling article reference {aid}"))
        text = rec.get("text")
        if text is not None and not isinstance(text, str):
            issues.append((loc, "text must be a string"))
            continue
        t_emb = _parse_embedding(rec.get("text_embedding"), loc, "text_embedding", issues)
        v_emb = _parse_embedding(rec.get("visual_embedding"), loc, "visual_embedding", issues)
        is_corr = rec.get("is_correction")
        if is_corr is not None and not isinstance(is_corr, bool):
            issues.append((loc, "is_correction must be a boolean"))
            continue
        engagement = rec.get("engagement")
        if engagement is not None:
            if not isinstance(engagement, Mapping):
                issues.append((loc, "engagement must be an object of counts"))
                continue
            bad = False
            eng: dict[str, int] = {}
            for key, val in engagement.items():
                if key not in ENGAGEMENT_KEYS:
                    issues.append((loc, f"unknown engagement field {key!r}"))
                    bad = True
                elif isinstance(val, bool) or not isinstance(val, int) or val < 0:
                    issues.append((loc, f"engagement count {key} must be a nonnegative integer"))
                    bad = True
                else:
                    eng[key] = val
            if bad:
                continue
            engagement = eng
        parsed_posts[pid] = Post(
            post_id=pid, user_id=uid, time=rec["time"], time_key=time_key,
            article_ids=art_ids, text=text, text_embedding=t_emb,
            visual_embedding=v_emb, is_correction=is_corr, engagement=engagement,
        )

    if len(time_kinds) > 1:
        issues.append(("posts", "mixed time types: use integer ticks or timestamps, not both"))

    parsed_scores: dict[str, UserScores] = {}
    for loc, rec in _located(user_scores, "user_scores"):
        if not isinstance(rec, Mapping):
            issues.append((loc, "record must be a JSON object"))
            continue
        uid = rec.get("user_id")
        if not isinstance(uid, str) or not uid:
            issues.append((loc, "user_id must be a nonempty string"))
            continue
        if uid in parsed_scores:
            issues.append((loc, f"duplicate user_id {uid}"))
            continue
        bot = _check_score(rec.get("bot"), loc, "bot", issues)
        troll = _check_score(rec.get("troll"), loc, "troll", issues)
        parsed_scores[uid] = UserScores(user_id=uid, bot=bot, troll=troll)

    if issues:
        raise CorpusValidationError(issues)

    ordered = sorted(parsed_posts.values(), key=lambda p: (p.time_key, p.post_id))
    ranked = assign_ranks(ordered)
    time_kind = time_kinds.pop() if time_kinds else "tick"
    return Corpus(parsed_articles.values(), ranked, parsed_scores.values(), time_kind=time_kind)
