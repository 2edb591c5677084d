"""Overlap error and category-mean similarities between term categories.

Given two semantically close categories (diagnostic and therapeutic
procedures) and one distant category (organisms), the overlap error counts
triples where an anchor term is at least as similar to the distant category
as to the close one.  Term lists are plain text; terms an embedding cannot
encode are dropped from the counts, so every figure refers to the encodable
subset of each category.
"""

import logging
from dataclasses import dataclass

import numpy as np

from .embeddings import WordEmbedding, term_matrix
from .errors import EvaluationError
from .simmetrics import MetricSpec, score_pair

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CategoryPartition:
    """Two close categories (dp, tp) and one distant category (org)."""

    dp_terms: tuple
    tp_terms: tuple
    org_terms: tuple

    def __post_init__(self):
        sets = {
            "dp": {t.lower() for t in self.dp_terms},
            "tp": {t.lower() for t in self.tp_terms},
            "org": {t.lower() for t in self.org_terms},
        }
        for name, terms in sets.items():
            if not terms:
                raise ValueError(f"category {name} has no terms")
        names = list(sets)
        for i, a in enumerate(names):
            for b in names[i + 1 :]:
                common = sets[a] & sets[b]
                if common:
                    raise ValueError(
                        f"categories {a} and {b} share terms: {sorted(common)[:3]}"
                    )


@dataclass(frozen=True)
class OverlapResult:
    raw_count: int
    relative: float
    n_dp: int
    n_tp: int
    n_org: int


@dataclass(frozen=True)
class CategoryMeans:
    """Mean similarity per category cell; None when a within-cell has no pairs."""

    dp_tp: float
    dp_org: float
    dp_dp: float | None
    tp_tp: float | None
    org_org: float | None


def load_category_terms(path) -> tuple:
    """One term per line, UTF-8; blanks skipped, duplicates dropped with a warning."""
    terms = []
    seen = set()
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            term = line.strip()
            if not term:
                continue
            if term.lower() in seen:
                logger.warning("%s: duplicate category term %r dropped", path, term)
                continue
            seen.add(term.lower())
            terms.append(term)
    return tuple(terms)


def _encode_category(embedding: WordEmbedding, terms, name: str):
    kept, mats = [], []
    for t in terms:
        m = term_matrix(embedding, t)
        if m is None:
            logger.info("category %s: term %r not encodable by %s", name, t, embedding.name)
            continue
        kept.append(t)
        mats.append(m)
    if not kept:
        raise EvaluationError(
            f"category {name} has no terms encodable by embedding {embedding.name}"
        )
    return kept, mats


def _sim_matrix(mats_a, mats_b, metric: MetricSpec) -> np.ndarray:
    out = np.empty((len(mats_a), len(mats_b)))
    for i, ma in enumerate(mats_a):
        for j, mb in enumerate(mats_b):
            out[i, j] = score_pair(ma, mb, metric)
    return out


def _overlap_count(tp_sims: np.ndarray, org_sims: np.ndarray) -> int:
    """Triples with sim(anchor, close) <= sim(anchor, distant); rows are anchors."""
    count = 0
    for i in range(tp_sims.shape[0]):
        org_sorted = np.sort(org_sims[i])
        # for each close similarity s, ties included: #{k : org[k] >= s}
        idx = np.searchsorted(org_sorted, tp_sims[i], side="left")
        count += int((org_sorted.size - idx).sum())
    return count


def overlap_error(
    partition: CategoryPartition, embedding: WordEmbedding, metric: MetricSpec
) -> OverlapResult:
    """Relative number of (anchor, close, distant) triples ordered wrongly.

    Ties count as errors, so a constant similarity scores the full 1.0.
    """
    _, dp = _encode_category(embedding, partition.dp_terms, "dp")
    _, tp = _encode_category(embedding, partition.tp_terms, "tp")
    _, org = _encode_category(embedding, partition.org_terms, "org")
    tp_sims = _sim_matrix(dp, tp, metric)
    org_sims = _sim_matrix(dp, org, metric)
    raw = _overlap_count(tp_sims, org_sims)
    total = len(dp) * len(tp) * len(org)
    return OverlapResult(
        raw_count=raw,
        relative=raw / total,
        n_dp=len(dp),
        n_tp=len(tp),
        n_org=len(org),
    )


def _within_mean(mats, metric: MetricSpec) -> float | None:
    n = len(mats)
    if n < 2:
        return None
    scores = [
        score_pair(mats[i], mats[j], metric) for i in range(n) for j in range(i + 1, n)
    ]
    return float(np.mean(scores))


def avg_category_similarity(
    partition: CategoryPartition, embedding: WordEmbedding, metric: MetricSpec
) -> CategoryMeans:
    """Mean similarities across and within categories (self-pairs excluded)."""
    _, dp = _encode_category(embedding, partition.dp_terms, "dp")
    _, tp = _encode_category(embedding, partition.tp_terms, "tp")
    _, org = _encode_category(embedding, partition.org_terms, "org")
    return CategoryMeans(
        dp_tp=float(_sim_matrix(dp, tp, metric).mean()),
        dp_org=float(_sim_matrix(dp, org, metric).mean()),
        dp_dp=_within_mean(dp, metric),
        tp_tp=_within_mean(tp, metric),
        org_org=_within_mean(org, metric),
    )
