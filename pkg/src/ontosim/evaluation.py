"""Correlation, classification, significance testing, and annotation analytics.

Embeddings are compared by Spearman correlation between similarity scores and
labels (or graded gold scores) and by accuracy at a per-system optimized
threshold.  Differences are tested with BCa bootstrap intervals on the
correlation difference and McNemar's test on classifications, both under
Bonferroni correction across all pairwise comparisons.  Annotation studies
are summarized by majority vote, nominal Krippendorff's alpha, and
agreement metrics against the dataset's own labels.
"""

import csv
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats as sps

from .errors import EvaluationError, ParseError, UndefinedScoreError
from .simmetrics import spearman

logger = logging.getLogger(__name__)

CORRELATION = "correlation"
CLASSIFICATION = "classification"

BETTER = "better"
WORSE = "worse"
INDISTINCT = "indistinct"


@dataclass(frozen=True)
class GradedDataset:
    """Term pairs with a gold similarity score on a dataset-native scale."""

    name: str
    pairs: tuple  # of (term_a, term_b, gold_score)
    bounds: tuple  # (low, high)

    def __post_init__(self):
        low, high = self.bounds
        for term_a, term_b, score in self.pairs:
            if not math.isfinite(score):
                raise ValueError(f"{self.name}: non-finite gold score for {term_a!r}")
            if not low <= score <= high:
                raise ValueError(
                    f"{self.name}: score {score} outside bounds [{low}, {high}]"
                )


@dataclass(frozen=True)
class ClassificationResult:
    threshold: float
    accuracy: float
    auc: float
    predictions: tuple  # per-pair {0, 1}


@dataclass(frozen=True)
class BootstrapConfig:
    resamples: int = 10_000
    alpha: float = 0.05
    seed: int = 0
    max_retries: int = 100

    def __post_init__(self):
        if self.resamples < 1:
            raise ValueError("resamples must be positive")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must be in (0, 1)")


@dataclass(frozen=True)
class BootstrapResult:
    theta_hat: float
    low: float
    high: float
    significant: bool


@dataclass(frozen=True)
class SignificanceMatrix:
    entities: tuple
    verdicts: dict  # (entity_a, entity_b) -> BETTER | WORSE | INDISTINCT
    alpha: float
    comparisons: int  # Bonferroni divisor = C(n, 2)

    def better_count(self, entity) -> int:
        return sum(
            1 for other in self.entities
            if other != entity and self.verdicts[(entity, other)] == BETTER
        )

    def worse_count(self, entity) -> int:
        return sum(
            1 for other in self.entities
            if other != entity and self.verdicts[(entity, other)] == WORSE
        )


@dataclass(frozen=True)
class AnnotationTable:
    """Items x annotators votes: 1 (same), 0 (not same), None (don't know)."""

    items: tuple
    annotators: tuple
    votes: tuple  # votes[i][a] for item i, annotator a

    def __post_init__(self):
        if len(self.annotators) < 2:
            raise ValueError("an annotation table needs at least 2 annotators")
        for row in self.votes:
            if len(row) != len(self.annotators):
                raise ValueError("vote rows must match the annotator count")


@dataclass(frozen=True)
class AgreementResult:
    krippendorff_alpha: float | None
    nan_fraction: float
    accuracy: float | None
    recall: float | None
    precision: float | None


# ---------------------------------------------------------------------------
# correlation and classification


def spearman_correlation(pred_scores, gold_scores) -> float:
    """Spearman's rho with average ranks; inputs must be pre-filtered."""
    pred = np.asarray(pred_scores, dtype=np.float64)
    gold = np.asarray(gold_scores, dtype=np.float64)
    if pred.shape != gold.shape:
        raise ValueError("score vectors must have equal length")
    if pred.size < 3:
        raise EvaluationError(f"need at least 3 paired values, got {pred.size}")
    return spearman(pred, gold)


def _check_binary(labels) -> np.ndarray:
    labels = np.asarray(labels)
    classes = set(np.unique(labels).tolist())
    if not classes <= {0, 1}:
        raise ValueError(f"labels must be binary 0/1, found {sorted(classes)}")
    if len(classes) != 2:
        raise EvaluationError("both classes must be present")
    return labels.astype(np.int64)


def optimize_threshold(scores, labels) -> tuple:
    """Best accuracy threshold for predicting 1 iff score >= threshold.

    Candidates are midpoints between consecutive distinct sorted scores plus
    -inf/+inf sentinels; ties resolve to the smallest threshold, and the
    sentinels guarantee at least the majority-class accuracy.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = _check_binary(labels)
    n = scores.size
    order = np.argsort(scores, kind="stable")
    s_sorted = scores[order]
    l_sorted = labels[order]
    # accuracy when the cut sits before sorted position i:
    # negatives below i are correct, positives at or above i are correct
    neg_below = np.concatenate([[0], np.cumsum(1 - l_sorted)])
    pos_at_or_above = np.concatenate([np.cumsum(l_sorted[::-1])[::-1], [0]])
    distinct = np.concatenate([[True], s_sorted[1:] != s_sorted[:-1]])
    candidates = [(-math.inf, 0)]
    for i in range(1, n):
        if distinct[i]:
            candidates.append(((s_sorted[i - 1] + s_sorted[i]) / 2.0, i))
    candidates.append((math.inf, n))
    best_t, best_acc = None, -1.0
    for t, i in candidates:
        acc = (neg_below[i] + pos_at_or_above[i]) / n
        if acc > best_acc:
            best_t, best_acc = t, acc
    return float(best_t), float(best_acc)


def auc(scores, labels) -> float:
    """Mann-Whitney AUC: P(pos score > neg score) + half the ties."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = _check_binary(labels)
    ranks = sps.rankdata(scores, method="average")
    n_pos = int(labels.sum())
    n_neg = labels.size - n_pos
    rank_sum = float(ranks[labels == 1].sum())
    return (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def classification_result(scores, labels) -> ClassificationResult:
    threshold, accuracy = optimize_threshold(scores, labels)
    scores = np.asarray(scores, dtype=np.float64)
    preds = tuple(int(x) for x in (scores >= threshold))
    return ClassificationResult(
        threshold=threshold,
        accuracy=accuracy,
        auc=auc(scores, labels),
        predictions=preds,
    )


# ---------------------------------------------------------------------------
# significance machinery


def mcnemar(pred_a, pred_b, labels) -> float:
    """Two-sided McNemar p: exact binomial below 25 discordant pairs, else
    continuity-corrected chi-squared with 1 degree of freedom."""
    pred_a = np.asarray(pred_a)
    pred_b = np.asarray(pred_b)
    labels = np.asarray(labels)
    if not (pred_a.shape == pred_b.shape == labels.shape):
        raise ValueError("predictions and labels must have equal length")
    correct_a = pred_a == labels
    correct_b = pred_b == labels
    b = int(np.sum(correct_a & ~correct_b))
    c = int(np.sum(~correct_a & correct_b))
    n = b + c
    if n == 0:
        return 1.0
    if n < 25:
        k = max(b, c)
        tail = sum(math.comb(n, i) for i in range(k, n + 1)) / 2.0**n
        return min(1.0, 2.0 * tail)
    chi2 = (abs(b - c) - 1.0) ** 2 / n
    return float(sps.chi2.sf(chi2, df=1))


def _theta(scores_a, scores_b, gold, idx) -> float:
    return spearman(scores_a[idx], gold[idx]) - spearman(scores_b[idx], gold[idx])


def _bca_quantiles(z0: float, accel: float, alpha: float) -> tuple:
    """Adjusted lower/upper quantile levels of the BCa interval."""
    out = []
    for z_alpha in (sps.norm.ppf(alpha / 2.0), sps.norm.ppf(1.0 - alpha / 2.0)):
        num = z0 + z_alpha
        out.append(float(sps.norm.cdf(z0 + num / (1.0 - accel * num))))
    return tuple(out)


def _percentile(sorted_stats: np.ndarray, q: float) -> float:
    b = sorted_stats.size
    idx = min(max(int(math.floor(q * b)), 0), b - 1)
    return float(sorted_stats[idx])


def bca_bootstrap_diff(
    scores_a, scores_b, gold, config: BootstrapConfig = BootstrapConfig()
) -> BootstrapResult:
    """BCa interval for the Spearman-correlation difference of paired scores.

    Resamples are paired over instances (the two score vectors are never
    resampled independently) and each resample draws from its own
    counter-based RNG stream, so results do not depend on execution order.
    A resample with constant ranks is redrawn a bounded number of times.
    """
    scores_a = np.asarray(scores_a, dtype=np.float64)
    scores_b = np.asarray(scores_b, dtype=np.float64)
    gold = np.asarray(gold, dtype=np.float64)
    if not (scores_a.shape == scores_b.shape == gold.shape):
        raise ValueError("paired score vectors must have equal length")
    n = gold.size
    full = np.arange(n)
    theta_hat = _theta(scores_a, scores_b, gold, full)

    b_stats = np.empty(config.resamples)
    for i in range(config.resamples):
        for attempt in range(config.max_retries):
            rng = np.random.default_rng((config.seed, i, attempt))
            idx = rng.integers(0, n, size=n)
            try:
                b_stats[i] = _theta(scores_a, scores_b, gold, idx)
                break
            except UndefinedScoreError:
                continue
        else:
            raise EvaluationError(
                f"resample {i}: no valid draw in {config.max_retries} attempts"
            )

    if np.ptp(b_stats) == 0.0:
        # every resample produced the same statistic: the interval collapses
        value = float(b_stats[0])
        return BootstrapResult(
            theta_hat=theta_hat, low=value, high=value, significant=value != 0.0
        )

    frac_below = float(np.mean(b_stats < theta_hat))
    eps = 1.0 / (2.0 * config.resamples)
    z0 = float(sps.norm.ppf(min(max(frac_below, eps), 1.0 - eps)))

    jack = np.empty(n)
    for i in range(n):
        idx = np.concatenate([full[:i], full[i + 1 :]])
        try:
            jack[i] = _theta(scores_a, scores_b, gold, idx)
        except UndefinedScoreError:
            raise EvaluationError(
                f"jackknife sample {i} has constant ranks; cannot estimate acceleration"
            ) from None
    dev = jack.mean() - jack
    denom = float(np.sum(dev**2)) ** 1.5
    accel = float(np.sum(dev**3) / (6.0 * denom)) if denom > 0.0 else 0.0

    q_low, q_high = _bca_quantiles(z0, accel, config.alpha)
    b_sorted = np.sort(b_stats)
    low = _percentile(b_sorted, q_low)
    high = _percentile(b_sorted, q_high)
    return BootstrapResult(
        theta_hat=theta_hat,
        low=low,
        high=high,
        significant=not (low <= 0.0 <= high),
    )


def significance_matrix(
    entities,
    per_instance_scores,
    gold_or_labels,
    mode: str,
    alpha: float = 0.05,
    config: BootstrapConfig = BootstrapConfig(),
) -> SignificanceMatrix:
    """All-pairs significance verdicts at Bonferroni-corrected alpha.

    Correlation mode runs BCa bootstrap on each correlation difference;
    classification mode optimizes a threshold per entity and applies
    McNemar's test, with direction taken from the accuracies.
    """
    entities = tuple(entities)
    if len(entities) < 2:
        raise ValueError("need at least 2 entities to compare")
    if mode not in (CORRELATION, CLASSIFICATION):
        raise ValueError(f"unknown mode {mode!r}")
    gold = np.asarray(gold_or_labels, dtype=np.float64)
    comparisons = len(entities) * (len(entities) - 1) // 2
    per_test_alpha = alpha / comparisons

    verdicts = {(e, e): INDISTINCT for e in entities}
    if mode == CLASSIFICATION:
        results = {
            e: classification_result(per_instance_scores[e], gold.astype(np.int64))
            for e in entities
        }
    for i, ea in enumerate(entities):
        for eb in entities[i + 1 :]:
            if mode == CORRELATION:
                res = bca_bootstrap_diff(
                    np.asarray(per_instance_scores[ea], dtype=np.float64),
                    np.asarray(per_instance_scores[eb], dtype=np.float64),
                    gold,
                    BootstrapConfig(
                        resamples=config.resamples,
                        alpha=per_test_alpha,
                        seed=config.seed,
                        max_retries=config.max_retries,
                    ),
                )
                if res.significant and res.theta_hat > 0:
                    fwd = BETTER
                elif res.significant and res.theta_hat < 0:
                    fwd = WORSE
                else:
                    fwd = INDISTINCT
            else:
                ra, rb = results[ea], results[eb]
                p = mcnemar(
                    ra.predictions, rb.predictions, gold.astype(np.int64)
                )
                if p < per_test_alpha and ra.accuracy != rb.accuracy:
                    fwd = BETTER if ra.accuracy > rb.accuracy else WORSE
                else:
                    fwd = INDISTINCT
            verdicts[(ea, eb)] = fwd
            verdicts[(eb, ea)] = {BETTER: WORSE, WORSE: BETTER, INDISTINCT: INDISTINCT}[fwd]
    return SignificanceMatrix(
        entities=entities, verdicts=verdicts, alpha=alpha, comparisons=comparisons
    )


def metric_variance(values: dict) -> dict:
    """Min/median/max across datasets of the per-dataset variance across metrics.

    `values` maps embedding -> dataset -> metric -> score; the variance is the
    population variance, and an even dataset count takes the mean of the two
    middle variances.
    """
    out = {}
    for embedding, per_dataset in values.items():
        variances = []
        for dataset, per_metric in per_dataset.items():
            if len(per_metric) < 2:
                raise ValueError(
                    f"{embedding}/{dataset}: need at least 2 metric values"
                )
            variances.append(float(np.var(list(per_metric.values()))))
        out[embedding] = (
            min(variances),
            float(np.median(variances)),
            max(variances),
        )
    return out


# ---------------------------------------------------------------------------
# annotation analytics


def majority_vote(votes) -> float:
    """Strict majority among non-missing votes; NaN when there is none."""
    ones = sum(1 for v in votes if v == 1)
    zeros = sum(1 for v in votes if v == 0)
    if ones > zeros:
        return 1.0
    if zeros > ones:
        return 0.0
    return math.nan


def krippendorff_alpha(table: AnnotationTable) -> float:
    """Nominal Krippendorff's alpha with missing values excluded per item."""
    pairable = [
        [v for v in row if v is not None]
        for row in table.votes
    ]
    pairable = [vals for vals in pairable if len(vals) >= 2]
    if not pairable:
        raise EvaluationError("no item has two or more codings; alpha is undefined")
    totals = {}
    n_total = 0
    for vals in pairable:
        for v in vals:
            totals[v] = totals.get(v, 0) + 1
            n_total += 1
    # observed disagreement: within-item mismatched ordered pairs, each item
    # weighted by 1/(m_u - 1)
    d_o = 0.0
    for vals in pairable:
        m = len(vals)
        mismatch = sum(
            1 for i in range(m) for j in range(m) if i != j and vals[i] != vals[j]
        )
        d_o += mismatch / (m - 1)
    d_o /= n_total
    d_e = sum(
        totals[a] * totals[b]
        for a in totals
        for b in totals
        if a != b
    ) / (n_total * (n_total - 1))
    if d_e == 0.0:
        return 1.0
    return 1.0 - d_o / d_e


def agreement_metrics(ground_truth, dataset_labels, alpha: float | None = None) -> AgreementResult:
    """Accuracy/recall/precision of dataset labels against majority-vote truth.

    The dataset label plays the prediction role with 1 as the positive class;
    items whose ground truth is NaN are excluded and reported as a fraction.
    """
    truth = np.asarray(ground_truth, dtype=np.float64)
    labels = np.asarray(dataset_labels, dtype=np.float64)
    if truth.shape != labels.shape:
        raise ValueError("ground truth and labels must have equal length")
    if truth.size == 0:
        raise ValueError("no items")
    defined = ~np.isnan(truth)
    nan_fraction = 1.0 - float(defined.sum()) / truth.size
    t = truth[defined].astype(np.int64)
    d = labels[defined].astype(np.int64)
    if t.size == 0:
        return AgreementResult(alpha, nan_fraction, None, None, None)
    tp = int(np.sum((d == 1) & (t == 1)))
    fp = int(np.sum((d == 1) & (t == 0)))
    fn = int(np.sum((d == 0) & (t == 1)))
    accuracy = float(np.mean(d == t))
    recall = tp / (tp + fn) if tp + fn else None
    precision = tp / (tp + fp) if tp + fp else None
    return AgreementResult(alpha, nan_fraction, accuracy, recall, precision)


def analyze_annotations(table: AnnotationTable, dataset_labels) -> AgreementResult:
    """Krippendorff's alpha plus agreement metrics from majority-vote truth."""
    truth = [majority_vote(row) for row in table.votes]
    return agreement_metrics(truth, dataset_labels, alpha=krippendorff_alpha(table))


_VERDICTS = {"same": 1, "not_same": 0, "dont_know": None}


def read_annotation_csv(path) -> AnnotationTable:
    """Read "item_id,annotator,verdict" rows into an AnnotationTable."""
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty annotation file") from None
        if [h.strip().lower() for h in header] != ["item_id", "annotator", "verdict"]:
            raise ParseError(f"{path}:1: expected header item_id,annotator,verdict")
        entries = {}
        items, annotators = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise ParseError(f"{path}:{lineno}: expected 3 fields, found {len(row)}")
            item, annotator, verdict = (x.strip() for x in row)
            key = verdict.lower().replace("-", "_").replace("'", "").replace(" ", "_")
            if key not in _VERDICTS:
                raise ParseError(f"{path}:{lineno}: unknown verdict {verdict!r}")
            if (item, annotator) in entries:
                raise ParseError(
                    f"{path}:{lineno}: duplicate annotation for item {item!r} by {annotator!r}"
                )
            entries[(item, annotator)] = _VERDICTS[key]
            if item not in items:
                items.append(item)
            if annotator not in annotators:
                annotators.append(annotator)
    votes = tuple(
        tuple(entries.get((item, annotator)) for annotator in annotators)
        for item in items
    )
    return AnnotationTable(items=tuple(items), annotators=tuple(annotators), votes=votes)


def read_graded_csv(path, bounds=None, name: str | None = None) -> GradedDataset:
    """Read "term_a,term_b,score" rows into a GradedDataset."""
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty graded dataset") from None
        if [h.strip().lower() for h in header] != ["term_a", "term_b", "score"]:
            raise ParseError(f"{path}:1: expected header term_a,term_b,score")
        pairs = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise ParseError(f"{path}:{lineno}: expected 3 fields, found {len(row)}")
            term_a, term_b, raw = row
            try:
                score = float(raw)
            except ValueError:
                raise ParseError(f"{path}:{lineno}: non-numeric score {raw!r}") from None
            pairs.append((term_a, term_b, score))
    if not pairs:
        raise ParseError(f"{path}: no data rows")
    if bounds is None:
        scores = [s for _, _, s in pairs]
        bounds = (min(scores), max(scores))
    import os

    stem = os.path.splitext(os.path.basename(str(path)))[0]
    return GradedDataset(name=name or stem, pairs=tuple(pairs), bounds=tuple(bounds))
