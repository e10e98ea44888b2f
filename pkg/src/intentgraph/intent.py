"""Spreader-intent annotation from bot, troll, and corrector scores.

Standard mode labels a fake-news spreader intentional when any score
reaches the threshold. Strict mode adds an abstain band: intentional only
above ``1 - strict_theta``, unintentional only below ``strict_theta``. A
correction flag forces a tweet intentional in both modes. Missing platform
scores count as 0 (assume human).
"""

from __future__ import annotations

from dataclasses import dataclass

from .model import Corpus, Post

INTENTIONAL = "intentional"
UNINTENTIONAL = "unintentional"
ABSTAIN = "abstain"

BASIS_BOT = "bot"
BASIS_TROLL = "troll"
BASIS_CORRECTOR = "corrector"
BASIS_ORDER = (BASIS_BOT, BASIS_TROLL, BASIS_CORRECTOR)

SUBJECT_POST = "post"
SUBJECT_USER = "user"


class NotFakeSharingError(ValueError):
    """Tweet-level intent is defined only for posts that share fake news."""


@dataclass(frozen=True)
class IntentConfig:
    theta: float = 0.5
    strict_theta: float | None = None

    def __post_init__(self):
        if not (0.0 < self.theta < 1.0):
            raise ValueError(f"theta must be in (0,1), got {self.theta}")
        if self.strict_theta is not None and not (0.0 < self.strict_theta <= 0.5):
            raise ValueError(f"strict_theta must be in (0,0.5], got {self.strict_theta}")

    @property
    def strict(self) -> bool:
        return self.strict_theta is not None


@dataclass(frozen=True)
class IntentLabel:
    subject_kind: str
    subject_id: str
    label: str
    basis: tuple[str, ...] = ()


def corrector_score(corpus: Corpus, user_id: str) -> float:
    """Share of the user's fake-sharing posts that are corrections.

    Users with no fake-sharing posts score 0.
    """
    fake_posts = [corpus.posts[i] for i in corpus.posts_by_user.get(user_id, ())
                  if corpus.shares_fake(corpus.posts[i])]
    if not fake_posts:
        return 0.0
    corrections = sum(1 for p in fake_posts if p.is_correction)
    return corrections / len(fake_posts)


def corrector_scores(corpus: Corpus) -> dict[str, float]:
    """Corrector score for every user that authored at least one post."""
    return {uid: corrector_score(corpus, uid) for uid in corpus.user_ids()}


def _score_triplet(corpus: Corpus, user_id: str,
                   corrector: float | None = None) -> tuple[float, float, float]:
    scores = corpus.scores_for(user_id)
    b = scores.bot if scores.bot is not None else 0.0
    r = scores.troll if scores.troll is not None else 0.0
    c = corrector if corrector is not None else corrector_score(corpus, user_id)
    return b, r, c


def classify_user(user_id: str, bot: float, troll: float, corrector: float,
                  cfg: IntentConfig | None = None) -> IntentLabel:
    """User-level intent from the three scores.

    Standard: intentional iff any score >= theta, with every qualifying
    score in the basis. Strict: intentional above the upper band,
    unintentional when all scores sit below the lower band, abstain
    in between.
    """
    cfg = cfg or IntentConfig()
    values = {BASIS_BOT: bot, BASIS_TROLL: troll, BASIS_CORRECTOR: corrector}
    if cfg.strict:
        hi = 1.0 - cfg.strict_theta
        basis = tuple(name for name in BASIS_ORDER if values[name] >= hi)
        if basis:
            label = INTENTIONAL
        elif all(v < cfg.strict_theta for v in values.values()):
            label = UNINTENTIONAL
        else:
            label = ABSTAIN
    else:
        basis = tuple(name for name in BASIS_ORDER if values[name] >= cfg.theta)
        label = INTENTIONAL if basis else UNINTENTIONAL
    return IntentLabel(subject_kind=SUBJECT_USER, subject_id=user_id, label=label, basis=basis)


def classify_tweet(corpus: Corpus, post: Post,
                   cfg: IntentConfig | None = None) -> IntentLabel:
    """Tweet-level intent for a fake-sharing post.

    A correction post is intentional in both modes. Otherwise the author's
    bot/troll scores decide; the corrector score plays no role at tweet
    level beyond the explicit correction flag.
    """
    cfg = cfg or IntentConfig()
    if not corpus.shares_fake(post):
        raise NotFakeSharingError(f"post {post.post_id} does not share fake news")
    scores = corpus.scores_for(post.user_id)
    b = scores.bot if scores.bot is not None else 0.0
    r = scores.troll if scores.troll is not None else 0.0

    basis: list[str] = []
    threshold = (1.0 - cfg.strict_theta) if cfg.strict else cfg.theta
    if b >= threshold:
        basis.append(BASIS_BOT)
    if r >= threshold:
        basis.append(BASIS_TROLL)
    if post.is_correction:
        basis.append(BASIS_CORRECTOR)

    if basis:
        label = INTENTIONAL
    elif cfg.strict and not (b < cfg.strict_theta and r < cfg.strict_theta):
        label = ABSTAIN
    else:
        label = UNINTENTIONAL
    return IntentLabel(subject_kind=SUBJECT_POST, subject_id=post.post_id,
                       label=label, basis=tuple(basis))


def annotate_posts(corpus: Corpus, cfg: IntentConfig | None = None) -> list[IntentLabel]:
    """Tweet-level labels for every fake-sharing post, in corpus order."""
    cfg = cfg or IntentConfig()
    return [classify_tweet(corpus, p, cfg) for p in corpus.posts if corpus.shares_fake(p)]


def annotate_users(corpus: Corpus, cfg: IntentConfig | None = None) -> list[IntentLabel]:
    """User-level labels for every user with at least one fake-sharing post."""
    cfg = cfg or IntentConfig()
    out = []
    for uid in corpus.user_ids():
        if not any(corpus.shares_fake(corpus.posts[i]) for i in corpus.posts_by_user[uid]):
            continue
        b, r, c = _score_triplet(corpus, uid)
        out.append(classify_user(uid, b, r, c, cfg))
    return out


def label_records(labels: list[IntentLabel]) -> list[dict]:
    return [
        {"subject_kind": lab.subject_kind, "subject_id": lab.subject_id,
         "label": lab.label, "basis": list(lab.basis)}
        for lab in labels
    ]
