"""Statistical battery for validating affected-degree discrimination.

Rank statistics (Mann-Whitney U, Spearman rho, ROC-AUC) use midranks, so
tied observations contribute half-wins; p-values come from the usual
normal/t/F approximations rather than exact permutation. Group comparison
joins per-subject degrees with intent labels and reports the direction
(mean unintentional minus mean intentional) alongside the chosen test.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy import stats as sps

from .intent import (ABSTAIN, BASIS_ORDER, INTENTIONAL, UNINTENTIONAL, IntentLabel)

TAILS = ("one", "two")

GROUP_OTHERS = "others"


@dataclass(frozen=True)
class TestResult:
    statistic: float
    p_value: float
    group_sizes: tuple[int, ...]
    tails: str = "two"
    degenerate: bool = False
    df: float | None = None

    @property
    def n1(self) -> int:
        return self.group_sizes[0]

    @property
    def n2(self) -> int:
        return self.group_sizes[1]


@dataclass(frozen=True)
class KappaResult:
    kappa: float
    degenerate: bool = False


@dataclass(frozen=True)
class GroupComparison:
    comparison: str
    test: str
    result: TestResult
    group_means: dict[str, float]
    group_sizes: dict[str, int]
    direction: float | None = None

    def to_dict(self) -> dict:
        stat = self.result.statistic
        return {
            "comparison": self.comparison,
            "test": self.test,
            "statistic": stat if math.isfinite(stat) else None,
            "p_value": self.result.p_value,
            "tails": self.result.tails,
            "degenerate": self.result.degenerate,
            "group_means": self.group_means,
            "group_sizes": self.group_sizes,
            "direction": self.direction,
        }


def _as_sample(x, name: str, min_size: int = 1) -> np.ndarray:
    arr = np.asarray(list(x) if not isinstance(x, np.ndarray) else x, dtype=np.float64)
    if arr.ndim != 1 or arr.size < min_size:
        raise ValueError(f"{name} must be 1-d with at least {min_size} values")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"non-finite value in {name}")
    return arr


def _check_tails(tails: str) -> str:
    if tails not in TAILS:
        raise ValueError(f"tails must be one of {TAILS}, got {tails!r}")
    return tails


def _tail_p(p_two: float, tails: str) -> float:
    # one-tailed p is reported in the direction of the observed effect
    return p_two if tails == "two" else p_two / 2.0


def welch_t(sample1, sample2, tails: str = "two") -> TestResult:
    """Welch's unequal-variance t test with Welch-Satterthwaite df.

    Two constant samples are degenerate: equal means give t=0, p=1;
    differing means give an infinite statistic with p=0.
    """
    tails = _check_tails(tails)
    a = _as_sample(sample1, "sample1", 2)
    b = _as_sample(sample2, "sample2", 2)
    m1, m2 = a.mean(), b.mean()
    v1, v2 = a.var(ddof=1), b.var(ddof=1)
    sizes = (len(a), len(b))
    if v1 == 0.0 and v2 == 0.0:
        if m1 == m2:
            return TestResult(0.0, 1.0, sizes, tails, degenerate=True)
        stat = math.inf if m1 > m2 else -math.inf
        return TestResult(stat, 0.0, sizes, tails, degenerate=True)
    se2 = v1 / len(a) + v2 / len(b)
    t = (m1 - m2) / math.sqrt(se2)
    df = se2 ** 2 / (
        (v1 / len(a)) ** 2 / (len(a) - 1) + (v2 / len(b)) ** 2 / (len(b) - 1)
    )
    p_two = min(1.0, 2.0 * float(sps.t.sf(abs(t), df)))
    return TestResult(t, _tail_p(p_two, tails), sizes, tails, df=df)


def mann_whitney_u(sample1, sample2, tails: str = "two") -> TestResult:
    """Mann-Whitney U by the midrank method.

    Reports U for sample1; p uses the normal approximation with
    tie-corrected variance and a 0.5 continuity correction.
    """
    tails = _check_tails(tails)
    a = _as_sample(sample1, "sample1", 1)
    b = _as_sample(sample2, "sample2", 1)
    n1, n2 = len(a), len(b)
    pooled = np.concatenate([a, b])
    ranks = sps.rankdata(pooled)
    r1 = ranks[:n1].sum()
    u1 = r1 - n1 * (n1 + 1) / 2.0

    n = n1 + n2
    _, tie_counts = np.unique(pooled, return_counts=True)
    tie_term = float(((tie_counts ** 3) - tie_counts).sum())
    var = n1 * n2 / 12.0 * ((n + 1) - tie_term / (n * (n - 1))) if n > 1 else 0.0
    mu = n1 * n2 / 2.0
    if var <= 0.0:
        return TestResult(u1, 1.0, (n1, n2), tails, degenerate=True)
    d = u1 - mu
    if d > 0:
        z = (d - 0.5) / math.sqrt(var)
    elif d < 0:
        z = (d + 0.5) / math.sqrt(var)
    else:
        z = 0.0
    p_two = min(1.0, 2.0 * float(sps.norm.sf(abs(z))))
    return TestResult(u1, _tail_p(p_two, tails), (n1, n2), tails)


def anova_f(groups: Sequence) -> TestResult:
    """One-way ANOVA F over two or more groups of size >= 2."""
    samples = [_as_sample(g, f"group {i}", 2) for i, g in enumerate(groups)]
    if len(samples) < 2:
        raise ValueError("anova_f needs at least 2 groups")
    allv = np.concatenate(samples)
    if np.all(allv == allv[0]):
        raise ValueError("all observations equal: F undefined")
    grand = allv.mean()
    ssb = sum(len(s) * (s.mean() - grand) ** 2 for s in samples)
    ssw = sum(((s - s.mean()) ** 2).sum() for s in samples)
    df_b = len(samples) - 1
    df_w = len(allv) - len(samples)
    sizes = tuple(len(s) for s in samples)
    if ssw == 0.0:
        return TestResult(math.inf, 0.0, sizes, "two", degenerate=True, df=float(df_b))
    f = (ssb / df_b) / (ssw / df_w)
    p = float(sps.f.sf(f, df_b, df_w))
    return TestResult(f, p, sizes, "two", df=float(df_b))


def spearman_rho(x, y, tails: str = "two") -> TestResult:
    """Spearman correlation as Pearson over midranks, p via t approximation."""
    tails = _check_tails(tails)
    xs = _as_sample(x, "x", 3)
    ys = _as_sample(y, "y", 3)
    if len(xs) != len(ys):
        raise ValueError("x and y must have equal length")
    if np.all(xs == xs[0]) or np.all(ys == ys[0]):
        raise ValueError("constant input vector: correlation undefined")
    rx = sps.rankdata(xs)
    ry = sps.rankdata(ys)
    rho = _pearson(rx, ry)
    n = len(xs)
    if abs(rho) >= 1.0:
        return TestResult(rho, 0.0, (n,), tails)
    t = rho * math.sqrt((n - 2) / (1.0 - rho * rho))
    p_two = min(1.0, 2.0 * float(sps.t.sf(abs(t), n - 2)))
    return TestResult(rho, _tail_p(p_two, tails), (n,), tails)


def _pearson(x: np.ndarray, y: np.ndarray) -> float:
    dx = x - x.mean()
    dy = y - y.mean()
    num = (dx * dy).sum()
    den = math.sqrt((dx * dx).sum() * (dy * dy).sum())
    if den == 0.0:
        raise ValueError("constant input vector: correlation undefined")
    return float(min(1.0, max(-1.0, num / den)))


def cohens_kappa(counts) -> KappaResult:
    """Cohen's kappa from a 2x2 (or kxk) agreement matrix.

    Chance agreement of exactly 1 makes kappa undefined; that case returns
    0 with the degenerate flag set.
    """
    table = np.asarray(counts, dtype=np.float64)
    if table.ndim != 2 or table.shape[0] != table.shape[1] or table.shape[0] < 2:
        raise ValueError("counts must be a square matrix with size >= 2")
    if np.any(table < 0) or not np.all(np.isfinite(table)):
        raise ValueError("counts must be nonnegative and finite")
    total = table.sum()
    if total <= 0:
        raise ValueError("counts must have a positive total")
    p_o = np.trace(table) / total
    rows = table.sum(axis=1) / total
    cols = table.sum(axis=0) / total
    p_e = float((rows * cols).sum())
    if p_e >= 1.0:
        return KappaResult(0.0, degenerate=True)
    return KappaResult(float((p_o - p_e) / (1.0 - p_e)))


def roc_auc(scores, labels) -> float:
    """Probability a random positive outranks a random negative; ties count 0.5."""
    s = _as_sample(scores, "scores", 1)
    y = np.asarray(list(labels) if not isinstance(labels, np.ndarray) else labels)
    if len(s) != len(y):
        raise ValueError("scores and labels must have equal length")
    pos = y.astype(bool)
    n_pos = int(pos.sum())
    n_neg = len(y) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("roc_auc needs at least one positive and one negative label")
    ranks = sps.rankdata(s)
    r_pos = ranks[pos].sum()
    return float((r_pos - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def _label_name(label) -> str:
    return label.label if isinstance(label, IntentLabel) else str(label)


def group_compare(values: Mapping[str, float], labels: Mapping[str, object],
                  test: str = "welch_t", tails: str = "two",
                  comparison: str = "degree_by_intent") -> GroupComparison:
    """Compare degrees of unintentional vs intentional subjects.

    Joins on subject id; abstain-labeled subjects are excluded. Direction is
    mean(unintentional) - mean(intentional): positive when unintentional
    subjects carry more influence, the expected pattern.
    """
    if test not in ("welch_t", "mann_whitney_u"):
        raise ValueError(f"test must be 'welch_t' or 'mann_whitney_u', got {test!r}")
    unint: list[float] = []
    intent: list[float] = []
    for subject, label in labels.items():
        if subject not in values:
            continue
        name = _label_name(label)
        if name == UNINTENTIONAL:
            unint.append(values[subject])
        elif name == INTENTIONAL:
            intent.append(values[subject])
        elif name != ABSTAIN:
            raise ValueError(f"unknown label {name!r} for subject {subject!r}")
    if not unint or not intent:
        raise ValueError("both intent classes must be nonempty after the join")
    fn = welch_t if test == "welch_t" else mann_whitney_u
    result = fn(unint, intent, tails=tails)
    mean_u = float(np.mean(unint))
    mean_i = float(np.mean(intent))
    return GroupComparison(
        comparison=comparison, test=test, result=result,
        group_means={UNINTENTIONAL: mean_u, INTENTIONAL: mean_i},
        group_sizes={UNINTENTIONAL: len(unint), INTENTIONAL: len(intent)},
        direction=mean_u - mean_i,
    )


def basis_groups(values: Mapping[str, float],
                 labels: Mapping[str, IntentLabel]) -> dict[str, list[float]]:
    """Split degrees into bot / troll / corrector / others groups.

    Subjects with several qualifying scores go to the first basis in
    (bot, troll, corrector) order; unintentional subjects form "others";
    abstain is excluded.
    """
    groups: dict[str, list[float]] = {name: [] for name in BASIS_ORDER}
    groups[GROUP_OTHERS] = []
    for subject, label in labels.items():
        if subject not in values or label.label == ABSTAIN:
            continue
        if label.label == INTENTIONAL:
            groups[label.basis[0]].append(values[subject])
        else:
            groups[GROUP_OTHERS].append(values[subject])
    return groups


def basis_anova(values: Mapping[str, float], labels: Mapping[str, IntentLabel],
                comparison: str = "degree_by_basis") -> GroupComparison:
    """One-way ANOVA across the bot / troll / corrector / others groups.

    Groups with fewer than two members are dropped from the test (their
    means still appear in the report).
    """
    groups = basis_groups(values, labels)
    used = {name: vals for name, vals in groups.items() if len(vals) >= 2}
    if len(used) < 2:
        raise ValueError("need at least two groups of size >= 2 for ANOVA")
    result = anova_f(list(used.values()))
    return GroupComparison(
        comparison=comparison, test="anova_f", result=result,
        group_means={name: float(np.mean(vals)) for name, vals in groups.items() if vals},
        group_sizes={name: len(vals) for name, vals in groups.items()},
        direction=None,
    )
