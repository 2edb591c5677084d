"""Construct balanced binary term-similarity datasets from an ontology snapshot.

Five families of positive pairs come out of the snapshot: FSN-synonym pairs,
synonym-synonym pairs (a superset of the former), and one family per
replacement-association kind over deactivated concepts.  Each family splits
into lexically easy and hard halves by Levenshtein distance, and every
positive gets exactly one sampled negative, either uniformly at random or by
nearest edit distance.  Negatives are never "similar": similarity is closed
transitively over all positive pairs of the family plus the terms of each
concept.

Everything is deterministic in (family, split, strategy, seed, snapshot),
whatever the worker count.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .editdist import EditDistanceIndex, build_index, levenshtein, nearest_excluding
from .errors import DatasetGenerationError, ParseError
from .ontology import OntologySnapshot, active_synonyms, fsn_of
from . import __version__

logger = logging.getLogger(__name__)

FSN_SYN = "fsn_syn"
SYN_SYN = "syn_syn"
POSS_EQUIV_TO = "possibly_equivalent_to"
REPLACED_BY = "replaced_by"
SAME_AS = "same_as"
FAMILIES = (FSN_SYN, SYN_SYN, POSS_EQUIV_TO, REPLACED_BY, SAME_AS)
ASSOCIATION_FAMILIES = (POSS_EQUIV_TO, REPLACED_BY, SAME_AS)

EASY = "easy"
HARD = "hard"
ALL = "all"
SPLITS = (EASY, HARD, ALL)

RANDOM = "random"
LEVENSHTEIN = "levenshtein"
STRATEGIES = (RANDOM, LEVENSHTEIN)

_REJECTION_BUDGET = 1000


@dataclass(frozen=True)
class TermPair:
    """An unordered pair of normalized terms; term_a is the instance's first term."""

    term_a: str
    term_b: str

    @property
    def canonical(self) -> tuple:
        return tuple(sorted((self.term_a.lower(), self.term_b.lower())))


@dataclass(frozen=True)
class LabeledPair:
    pair: TermPair
    label: int  # 1 similar, 0 dissimilar
    distance: int  # cached levenshtein(term_a, term_b)


@dataclass(frozen=True)
class SplitSpec:
    threshold: int = 5

    def __post_init__(self):
        if self.threshold < 0:
            raise ValueError("threshold must be nonnegative")


@dataclass
class SimilarityDataset:
    name: str
    family: str
    split: str
    neg_strategy: str
    seed: int
    pairs: list  # of LabeledPair
    threshold: int = 5
    extra_metadata: dict = field(default_factory=dict)

    @property
    def positives(self) -> list:
        return [p for p in self.pairs if p.label == 1]

    @property
    def negatives(self) -> list:
        return [p for p in self.pairs if p.label == 0]


@dataclass(frozen=True)
class DatasetStats:
    size: int
    avg_lev_pos: float
    avg_lev_neg_random: float | None
    avg_lev_neg_levenshtein: float | None


class SimilarityClosure:
    """Union-find over lowercase normalized terms; same class means similar."""

    def __init__(self):
        self._parent = {}

    def _find(self, key: str) -> str:
        parent = self._parent
        if key not in parent:
            parent[key] = key
            return key
        root = key
        while parent[root] != root:
            root = parent[root]
        while parent[key] != root:
            parent[key], key = root, parent[key]
        return root

    def union(self, a: str, b: str):
        ra, rb = self._find(a.lower()), self._find(b.lower())
        if ra != rb:
            self._parent[rb] = ra

    def same(self, a: str, b: str) -> bool:
        return self._find(a.lower()) == self._find(b.lower())

    def members(self, term: str) -> tuple:
        """All known terms in the class of `term` (lowercase forms)."""
        root = self._find(term.lower())
        return tuple(k for k in self._parent if self._find(k) == root)

    def classes(self) -> dict:
        """root -> sorted tuple of member terms (lowercase forms)."""
        out = {}
        for k in list(self._parent):
            out.setdefault(self._find(k), []).append(k)
        return {root: tuple(sorted(ms)) for root, ms in out.items()}


def _tie_key(term: str) -> tuple:
    return (term.lower(), term)


def _sorted_concept_ids(snapshot: OntologySnapshot):
    def key(cid):
        return (0, len(cid), cid) if cid.isdigit() else (1, 0, cid)

    return sorted(snapshot.concepts, key=key)


def _dedup(pairs):
    seen = set()
    out = []
    for p in pairs:
        if p.canonical in seen:
            continue
        seen.add(p.canonical)
        out.append(p)
    return out


def extract_fsn_synonym(snapshot: OntologySnapshot):
    """(FSN, synonym) pairs over active concepts; the FSN is the first term."""
    pairs = []
    for cid in _sorted_concept_ids(snapshot):
        if not snapshot.concepts[cid].active:
            continue
        fsn = fsn_of(snapshot, cid) if _has_fsn(snapshot, cid) else None
        if not fsn:
            if _has_fsn(snapshot, cid):
                logger.warning("concept %s FSN normalizes to empty; skipped", cid)
            continue
        for syn in active_synonyms(snapshot, cid):
            pairs.append(TermPair(fsn, syn))
    return _dedup(pairs)


def extract_synonym_synonym(snapshot: OntologySnapshot):
    """FSN-synonym pairs plus all synonym-synonym pairs within each concept.

    For synonym-synonym pairs the lexicographically smaller term comes first.
    """
    pairs = []
    for cid in _sorted_concept_ids(snapshot):
        if not snapshot.concepts[cid].active:
            continue
        fsn = fsn_of(snapshot, cid) if _has_fsn(snapshot, cid) else None
        syns = active_synonyms(snapshot, cid)
        if fsn:
            for syn in syns:
                pairs.append(TermPair(fsn, syn))
        for i in range(len(syns)):
            for j in range(i + 1, len(syns)):
                a, b = syns[i], syns[j]
                if _tie_key(b) < _tie_key(a):
                    a, b = b, a
                pairs.append(TermPair(a, b))
    return _dedup(pairs)


def _has_fsn(snapshot, cid):
    from .ontology import FSN

    return any(r.type == FSN for r in snapshot.descriptions.get(cid, ()))


def extract_association_pairs(snapshot: OntologySnapshot, kind: str):
    """(source FSN, target FSN) pairs from active associations of one kind."""
    pairs = []
    for row in snapshot.associations:
        if not row.active or row.refset_kind != kind:
            continue
        src = fsn_of(snapshot, row.source_concept_id)
        tgt = fsn_of(snapshot, row.target_concept_id)
        if not src or not tgt:
            logger.warning(
                "association %s: unresolved FSN for %s -> %s; skipped",
                row.id,
                row.source_concept_id,
                row.target_concept_id,
            )
            continue
        if src.lower() == tgt.lower():
            logger.info("association %s: FSNs normalize to the same term; dropped", row.id)
            continue
        pairs.append(TermPair(src, tgt))
    return _dedup(pairs)


_EXTRACTORS = {
    FSN_SYN: extract_fsn_synonym,
    SYN_SYN: extract_synonym_synonym,
    POSS_EQUIV_TO: lambda s: extract_association_pairs(s, POSS_EQUIV_TO),
    REPLACED_BY: lambda s: extract_association_pairs(s, REPLACED_BY),
    SAME_AS: lambda s: extract_association_pairs(s, SAME_AS),
}


def extract_family(snapshot: OntologySnapshot, family: str):
    try:
        extractor = _EXTRACTORS[family]
    except KeyError:
        raise ValueError(f"unknown family {family!r}; expected one of {FAMILIES}") from None
    return extractor(snapshot)


def split_easy_hard(pairs, spec: SplitSpec = SplitSpec()):
    """Partition positives by distance: <= threshold is easy, the rest hard."""
    easy, hard = [], []
    for p in pairs:
        d = levenshtein(p.term_a, p.term_b)
        (easy if d <= spec.threshold else hard).append(p)
    return easy, hard


def build_similarity_closure(family_pairs, snapshot: OntologySnapshot) -> SimilarityClosure:
    """Transitive similarity over the family's positives and per-concept term sets."""
    closure = SimilarityClosure()
    for p in family_pairs:
        closure.union(p.term_a, p.term_b)
    for cid in _sorted_concept_ids(snapshot):
        terms = []
        if _has_fsn(snapshot, cid):
            fsn = fsn_of(snapshot, cid)
            if fsn:
                terms.append(fsn)
        terms.extend(active_synonyms(snapshot, cid))
        for a, b in zip(terms, terms[1:]):
            closure.union(a, b)
    return closure


def _positive_pool(family_pairs):
    """Deduplicated terms of the family's positive instances, in tie-break order."""
    seen = {}
    for p in family_pairs:
        for t in (p.term_a, p.term_b):
            seen.setdefault(t, None)
    return sorted(seen, key=_tie_key)


def sample_negatives_random(positives, pool, closure: SimilarityClosure, seed: int):
    """One uniformly drawn negative per positive.

    Draws come from a counter-based substream per positive index, so any
    worker layout produces the same output.  Candidates similar to the first
    term under the closure, or duplicating an already-used canonical pair,
    are rejected; after the rejection budget the pool is scanned in
    seeded-shuffled order.
    """
    used = {p.canonical for p in positives}
    out = []
    for i, p in enumerate(positives):
        first = p.term_a
        rng = np.random.default_rng((seed, i))
        choice = None
        for _ in range(_REJECTION_BUDGET):
            cand = pool[int(rng.integers(len(pool)))]
            if closure.same(first, cand):
                continue
            if TermPair(first, cand).canonical in used:
                continue
            choice = cand
            break
        if choice is None:
            for j in rng.permutation(len(pool)):
                cand = pool[int(j)]
                if closure.same(first, cand):
                    continue
                if TermPair(first, cand).canonical in used:
                    continue
                choice = cand
                break
        if choice is None:
            raise DatasetGenerationError(
                f"no admissible random negative for positive {i} ({first!r})"
            )
        neg = TermPair(first, choice)
        used.add(neg.canonical)
        out.append(LabeledPair(neg, 0, levenshtein(first, choice)))
    return out


def sample_negatives_levenshtein(
    positives, pool, closure: SimilarityClosure, index: EditDistanceIndex, jobs: int = 1
):
    """One nearest-neighbor negative per positive.

    The candidate is the pool term closest to the positive's first term that
    is not closure-similar to it and not already paired with it.  A first
    parallel pass queries with the exclusions known up front; a sequential
    merge in positive order re-queries the rare candidates that would
    duplicate a pair produced earlier in the same run, which keeps the result
    independent of the worker count.
    """
    used = {p.canonical for p in positives}
    partners = {}
    for p in positives:
        partners.setdefault(p.term_a.lower(), set()).add(p.term_b.lower())
        partners.setdefault(p.term_b.lower(), set()).add(p.term_a.lower())

    def base_excluded(first):
        excl = set(closure.members(first))
        excl.update(partners.get(first.lower(), ()))
        return excl

    def query(p):
        return nearest_excluding(index, p.term_a, base_excluded(p.term_a))

    if jobs > 1 and len(positives) > 1:
        # warm the compiled kernel once before fanning out
        query(positives[0])
        with ThreadPoolExecutor(max_workers=jobs) as ex:
            first_pass = list(ex.map(query, positives, chunksize=64))
    else:
        first_pass = [query(p) for p in positives]

    out = []
    for i, p in enumerate(positives):
        first = p.term_a
        found = first_pass[i]
        if found is not None and TermPair(first, found[0]).canonical in used:
            # duplicate against a pair from this run: take the next-nearest
            # (base_excluded reads the live partner map, which now includes
            # every negative accepted so far)
            found = nearest_excluding(index, first, base_excluded(first))
        if found is None:
            raise DatasetGenerationError(
                f"pool exhausted: no nearest-neighbor negative for positive {i} ({first!r})"
            )
        term, dist = found
        neg = TermPair(first, term)
        used.add(neg.canonical)
        partners.setdefault(first.lower(), set()).add(term.lower())
        partners.setdefault(term.lower(), set()).add(first.lower())
        out.append(LabeledPair(neg, 0, dist))
    return out


_FAMILY_ORD = {f: i for i, f in enumerate(FAMILIES)}
_SPLIT_ORD = {s: i for i, s in enumerate(SPLITS)}
_STRAT_ORD = {s: i for i, s in enumerate(STRATEGIES)}


def assemble_dataset(
    snapshot: OntologySnapshot,
    family: str,
    split: str,
    strategy: str,
    seed: int,
    spec: SplitSpec = SplitSpec(),
    jobs: int = 1,
) -> SimilarityDataset:
    """Extract, split, sample negatives, and shuffle one benchmark dataset."""
    if split not in SPLITS:
        raise ValueError(f"unknown split {split!r}; expected one of {SPLITS}")
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}; expected one of {STRATEGIES}")
    family_pairs = extract_family(snapshot, family)
    if not family_pairs:
        raise DatasetGenerationError(f"family {family!r} has no positive pairs")
    closure = build_similarity_closure(family_pairs, snapshot)
    easy, hard = split_easy_hard(family_pairs, spec)
    positives = {EASY: easy, HARD: hard, ALL: family_pairs}[split]
    if not positives:
        raise DatasetGenerationError(f"family {family!r} has no {split} positives")
    pool = _positive_pool(family_pairs)

    if strategy == RANDOM:
        negatives = sample_negatives_random(positives, pool, closure, seed)
    else:
        index = build_index(pool)
        negatives = sample_negatives_levenshtein(positives, pool, closure, index, jobs=jobs)

    labeled = [
        LabeledPair(p, 1, levenshtein(p.term_a, p.term_b)) for p in positives
    ] + negatives
    rng = np.random.default_rng(
        (seed, _FAMILY_ORD[family], _SPLIT_ORD[split], _STRAT_ORD[strategy])
    )
    order = rng.permutation(len(labeled))
    pairs = [labeled[int(i)] for i in order]
    return SimilarityDataset(
        name=f"{family}_{split}_{strategy}",
        family=family,
        split=split,
        neg_strategy=strategy,
        seed=seed,
        pairs=pairs,
        threshold=spec.threshold,
    )


def dataset_stats(
    random_dataset: SimilarityDataset | None = None,
    levenshtein_dataset: SimilarityDataset | None = None,
) -> DatasetStats:
    """Size and mean distances for one family/split under both strategies."""
    present = [d for d in (random_dataset, levenshtein_dataset) if d is not None]
    if not present:
        raise ValueError("at least one dataset is required")
    sizes = {len(d.pairs) for d in present}
    if len(sizes) != 1:
        raise ValueError(f"datasets disagree on size: {sorted(sizes)}")
    pos_sets = [frozenset(p.pair.canonical for p in d.positives) for d in present]
    if len(set(pos_sets)) != 1:
        raise ValueError("datasets disagree on their positive pairs")

    def mean_distance(pairs):
        return float(np.mean([p.distance for p in pairs])) if pairs else float("nan")

    return DatasetStats(
        size=sizes.pop(),
        avg_lev_pos=mean_distance(present[0].positives),
        avg_lev_neg_random=(
            mean_distance(random_dataset.negatives) if random_dataset else None
        ),
        avg_lev_neg_levenshtein=(
            mean_distance(levenshtein_dataset.negatives) if levenshtein_dataset else None
        ),
    )


def export_tsv(dataset: SimilarityDataset, path, extra_metadata: dict | None = None):
    """Write a dataset as a metadata-commented, LF-normalized TSV file."""
    meta = {
        "family": dataset.family,
        "split": dataset.split,
        "neg_strategy": dataset.neg_strategy,
        "seed": dataset.seed,
        "threshold": dataset.threshold,
        "generator_version": __version__,
    }
    if extra_metadata:
        meta.update(extra_metadata)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for key, value in meta.items():
            fh.write(f"#{key}={value}\n")
        fh.write("term_a\tterm_b\tlabel\n")
        for p in dataset.pairs:
            fh.write(f"{p.pair.term_a}\t{p.pair.term_b}\t{p.label}\n")


def import_tsv(path) -> SimilarityDataset:
    """Read a dataset written by export_tsv; CRLF input is accepted."""
    with open(path, encoding="utf-8", newline="") as fh:
        text = fh.read()
    meta = {}
    pairs = []
    header_seen = False
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line:
            continue
        if line.startswith("#"):
            if header_seen:
                raise ParseError(f"{path}:{lineno}: metadata after header")
            key, sep, value = line[1:].partition("=")
            if not sep:
                raise ParseError(f"{path}:{lineno}: malformed metadata comment")
            meta[key.strip()] = value
            continue
        if not header_seen:
            if line.rstrip("\r") != "term_a\tterm_b\tlabel":
                raise ParseError(f"{path}:{lineno}: unexpected header {line!r}")
            header_seen = True
            continue
        fields = line.rstrip("\r").split("\t")
        if len(fields) != 3:
            raise ParseError(f"{path}:{lineno}: expected 3 fields, found {len(fields)}")
        term_a, term_b, label = fields
        if label not in ("0", "1"):
            raise ParseError(f"{path}:{lineno}: label must be 0 or 1, found {label!r}")
        pair = TermPair(term_a, term_b)
        pairs.append(LabeledPair(pair, int(label), levenshtein(term_a, term_b)))
    if not header_seen:
        raise ParseError(f"{path}: missing header line")

    def meta_int(key, default=None):
        if key not in meta:
            return default
        try:
            return int(meta[key])
        except ValueError:
            raise ParseError(f"{path}: metadata {key}={meta[key]!r} is not an integer") from None

    known = {"family", "split", "neg_strategy", "seed", "threshold", "generator_version"}
    family = meta.get("family", "")
    split = meta.get("split", "")
    strategy = meta.get("neg_strategy", "")
    return SimilarityDataset(
        name="_".join(x for x in (family, split, strategy) if x) or str(path),
        family=family,
        split=split,
        neg_strategy=strategy,
        seed=meta_int("seed", 0),
        pairs=pairs,
        threshold=meta_int("threshold", 5),
        extra_metadata={k: v for k, v in meta.items() if k not in known},
    )
