"""Ten similarity-metric variants over term matrices, plus dataset scoring.

Four base measures (cosine, Pearson's r, Spearman's rho, Kendall's tau-b)
combine with two multi-word aggregation schemes, averaging the word vectors
(avg_*) or averaging all pairwise word similarities (pair_*).  Two set-style
scores complete the family: a fuzzy Jaccard over max-pooled dot-product
memberships in the union of both terms' word vectors, and a dimension-wise
max-pooling Jaccard.  Undefined values (zero vectors, constant vectors, zero
denominators) raise rather than be coerced: scoring marks such pairs as
missing so they are excluded downstream instead of biasing results.
"""

from dataclasses import dataclass

import numpy as np
from scipy import stats

from .embeddings import TermMatrix, WordEmbedding, term_matrix
from .errors import UndefinedScoreError

AVG = "avg"
PAIR = "pair"
FUZZY_JACCARD = "fuzzy_jaccard"
MAX_JACCARD = "max_jaccard"

COS = "cos"
PEARSON = "pearson"
SPEARMAN = "spearman"
KENDALL = "kendall"
BASES = (COS, PEARSON, SPEARMAN, KENDALL)


@dataclass(frozen=True)
class MetricSpec:
    aggregation: str
    base: str | None = None

    def __post_init__(self):
        if self.aggregation in (AVG, PAIR):
            if self.base not in BASES:
                raise ValueError(f"{self.aggregation} needs a base from {BASES}")
        elif self.aggregation in (FUZZY_JACCARD, MAX_JACCARD):
            if self.base is not None:
                raise ValueError(f"{self.aggregation} takes no base measure")
        else:
            raise ValueError(f"unknown aggregation {self.aggregation!r}")

    @property
    def name(self) -> str:
        if self.base is None:
            return self.aggregation
        return f"{self.aggregation}_{self.base}"

    @classmethod
    def parse(cls, name: str) -> "MetricSpec":
        if name in (FUZZY_JACCARD, MAX_JACCARD):
            return cls(name)
        agg, sep, base = name.partition("_")
        if sep and agg in (AVG, PAIR):
            return cls(agg, base)
        raise ValueError(f"unknown metric name {name!r}")


ALL_METRICS = tuple(
    [MetricSpec(agg, base) for agg in (AVG, PAIR) for base in BASES]
    + [MetricSpec(FUZZY_JACCARD), MetricSpec(MAX_JACCARD)]
)
METRIC_NAMES = tuple(m.name for m in ALL_METRICS)


def cosine(u, v) -> float:
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        raise UndefinedScoreError("cosine of a zero vector is undefined")
    return float(np.dot(u, v) / (nu * nv))


def pearson(u, v) -> float:
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    uc, vc = u - u.mean(), v - v.mean()
    nu, nv = np.linalg.norm(uc), np.linalg.norm(vc)
    if nu == 0.0 or nv == 0.0:
        raise UndefinedScoreError("pearson of a constant vector is undefined")
    return float(np.dot(uc, vc) / (nu * nv))


def spearman(u, v) -> float:
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    ru = stats.rankdata(u, method="average")
    rv = stats.rankdata(v, method="average")
    return pearson(ru, rv)


def kendall(u, v) -> float:
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    tau = stats.kendalltau(u, v, variant="b").statistic
    if not np.isfinite(tau):
        raise UndefinedScoreError("kendall tau-b is undefined for this input")
    return float(tau)


_BASE_FUNCS = {COS: cosine, PEARSON: pearson, SPEARMAN: spearman, KENDALL: kendall}


def avg_metric(a: TermMatrix, b: TermMatrix, base: str) -> float:
    """Base measure applied to the two mean word vectors."""
    return _BASE_FUNCS[base](a.rows.mean(axis=0), b.rows.mean(axis=0))


def pair_metric(a: TermMatrix, b: TermMatrix, base: str) -> float:
    """Mean base measure over all ordered cross pairs of word vectors."""
    func = _BASE_FUNCS[base]
    scores = [func(u, v) for u in a.rows for v in b.rows]
    return float(np.mean(scores))


def _jaccard_ratio(mem_a, mem_b) -> float:
    denom = np.maximum(mem_a, mem_b).sum()
    if denom == 0.0:
        raise UndefinedScoreError("jaccard denominator is zero (all memberships zero)")
    return float(np.minimum(mem_a, mem_b).sum() / denom)


def fuzzy_jaccard(a: TermMatrix, b: TermMatrix) -> float:
    """Max-pooled dot-product memberships over the union of both word sets."""
    universe = np.vstack([a.rows, b.rows])
    mem_a = np.clip((a.rows @ universe.T).max(axis=0), 0.0, None)
    mem_b = np.clip((b.rows @ universe.T).max(axis=0), 0.0, None)
    return _jaccard_ratio(mem_a, mem_b)


def max_jaccard(a: TermMatrix, b: TermMatrix) -> float:
    """Dimension-wise max pooling followed by the min/max-sum ratio."""
    pa = np.clip(a.rows.max(axis=0), 0.0, None)
    pb = np.clip(b.rows.max(axis=0), 0.0, None)
    return _jaccard_ratio(pa, pb)


def score_pair(a: TermMatrix, b: TermMatrix, metric: MetricSpec) -> float:
    if metric.aggregation == AVG:
        return avg_metric(a, b, metric.base)
    if metric.aggregation == PAIR:
        return pair_metric(a, b, metric.base)
    if metric.aggregation == FUZZY_JACCARD:
        return fuzzy_jaccard(a, b)
    return max_jaccard(a, b)


def _iter_pairs(dataset_or_graded):
    pairs = getattr(dataset_or_graded, "pairs", None)
    if pairs is None:
        pairs = dataset_or_graded
    for p in pairs:
        # entries are LabeledPair objects or raw (a, b, value) tuples
        if hasattr(p, "pair"):
            yield p.pair.term_a, p.pair.term_b, p.label
        else:
            term_a, term_b, value = p
            yield term_a, term_b, value


def score_dataset(dataset_or_graded, embedding: WordEmbedding, metric: MetricSpec):
    """One score per pair, in dataset order; None marks OOV or undefined pairs."""
    out = []
    for term_a, term_b, _ in _iter_pairs(dataset_or_graded):
        ma = term_matrix(embedding, term_a)
        mb = term_matrix(embedding, term_b)
        if ma is None or mb is None:
            out.append(None)
            continue
        try:
            out.append(score_pair(ma, mb, metric))
        except UndefinedScoreError:
            out.append(None)
    return out


def write_score_report(dataset_or_graded, embedding: WordEmbedding, path, metrics=ALL_METRICS):
    """TSV of term_a, term_b, label, and one column per metric; NA when missing."""
    columns = [score_dataset(dataset_or_graded, embedding, m) for m in metrics]
    rows = list(_iter_pairs(dataset_or_graded))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        names = "\t".join(m.name for m in metrics)
        fh.write(f"term_a\tterm_b\tlabel\t{names}\n")
        for i, (term_a, term_b, value) in enumerate(rows):
            cells = [
                "NA" if col[i] is None else f"{col[i]:.10g}" for col in columns
            ]
            fh.write(f"{term_a}\t{term_b}\t{value}\t" + "\t".join(cells) + "\n")
