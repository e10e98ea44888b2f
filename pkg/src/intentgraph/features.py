"""Per-news detection features and the news-post heterogeneous graph export.

Feature rows average affected degrees and engagement counts over the
earliest K posts sharing each article, for downstream classifiers. The
heterogeneous export links posts to the articles they share and carries the
influence edges of whichever graph variant was built.

Columns prefixed ``ext_`` in features.csv are reserved for externally
computed content features (lexicon or sentiment scores) and are never
written by this package.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

from .degree import DegreeTable
from .graph import InfluenceGraph, KIND_INTERNAL, KIND_EXTERNAL
from .model import Corpus, ENGAGEMENT_KEYS

FEATURE_COLUMNS = (
    "article_id", "label", "post_count", "k_used",
    "avg_internal", "avg_external", "avg_combined",
    "avg_reposts", "avg_favorites", "avg_hashtags", "avg_mentions",
    "avg_symbols", "avg_quotes", "avg_replies",
)


@dataclass(frozen=True)
class NewsFeatureRow:
    article_id: str
    label: str
    post_count: int
    k_used: int | str
    avg_internal: float
    avg_external: float
    avg_combined: float
    avg_engagement: dict[str, float | None]


def _check_k(k) -> int | str:
    if k == "all":
        return "all"
    if isinstance(k, bool) or not isinstance(k, int) or k < 1:
        raise ValueError(f"K must be a positive integer or 'all', got {k!r}")
    return k


def news_features(corpus: Corpus, degrees: DegreeTable, k="all") -> list[NewsFeatureRow]:
    """Average degrees and engagement over each article's earliest K posts.

    Posts are taken in ascending rank order and truncated to K (no-op when
    the article has fewer). Articles nobody shared are omitted. Engagement
    averages cover only the selected posts that report the count.
    """
    k = _check_k(k)
    sharing: dict[str, list[int]] = {aid: [] for aid in corpus.articles}
    for i, post in enumerate(corpus.posts):  # corpus order == ascending rank
        for aid in post.article_ids:
            sharing[aid].append(i)

    rows: list[NewsFeatureRow] = []
    for aid in sorted(corpus.articles):
        positions = sharing[aid]
        if not positions:
            continue
        selected = positions if k == "all" else positions[:k]
        count = len(selected)
        avg_int = sum(float(degrees.internal[i]) for i in selected) / count
        avg_ext = sum(float(degrees.external[i]) for i in selected) / count
        avg_com = sum(float(degrees.combined[i]) for i in selected) / count
        engagement: dict[str, float | None] = {}
        for key in ENGAGEMENT_KEYS:
            vals = [corpus.posts[i].engagement[key] for i in selected
                    if corpus.posts[i].engagement is not None
                    and key in corpus.posts[i].engagement]
            engagement[key] = (sum(vals) / len(vals)) if vals else None
        rows.append(NewsFeatureRow(
            article_id=aid, label=corpus.articles[aid].label,
            post_count=count, k_used=k,
            avg_internal=avg_int, avg_external=avg_ext, avg_combined=avg_com,
            avg_engagement=engagement,
        ))
    return rows


def write_features_csv(rows: list[NewsFeatureRow], path) -> None:
    """Write feature rows with the fixed header order; deterministic bytes."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(FEATURE_COLUMNS)
        for row in rows:
            record = [row.article_id, row.label, row.post_count, row.k_used,
                      repr(row.avg_internal), repr(row.avg_external), repr(row.avg_combined)]
            for key in ENGAGEMENT_KEYS:
                val = row.avg_engagement.get(key)
                record.append("" if val is None else repr(val))
            writer.writerow(record)


def export_hetgraph(corpus: Corpus, graph: InfluenceGraph) -> tuple[list[dict], list[dict], dict]:
    """News-post heterogeneous graph as node and edge records plus counts.

    Node ids are namespaced ("news:<id>", "post:<id>") so the two kinds
    cannot collide. Share edges run post -> news; influence edges carry the
    built graph's weights with their kind as the relation.
    """
    nodes = [{"id": f"news:{aid}", "kind": "news"} for aid in sorted(corpus.articles)]
    nodes += [{"id": f"post:{p.post_id}", "kind": "post"} for p in corpus.posts]

    share_edges = []
    for post in corpus.posts:
        for aid in post.article_ids:
            share_edges.append({"src": f"post:{post.post_id}", "dst": f"news:{aid}",
                                "relation": "shares"})
    share_edges.sort(key=lambda e: (e["src"], e["dst"]))

    influence_edges = [
        {"src": f"post:{rec['src']}", "dst": f"post:{rec['dst']}",
         "relation": rec["kind"], "weight": rec["weight"]}
        for rec in graph.edge_records()
    ]

    counts = {
        "news_nodes": len(corpus.articles),
        "post_nodes": len(corpus.posts),
        "share_edges": len(share_edges),
        "influence_edges": len(influence_edges),
        "internal_edges": sum(1 for e in influence_edges if e["relation"] == KIND_INTERNAL),
        "external_edges": sum(1 for e in influence_edges if e["relation"] == KIND_EXTERNAL),
    }
    return nodes, share_edges + influence_edges, counts
