"""Load word/term vector files, tokenize terms, and compute coverage diagnostics.

Two kinds of embedding files are supported: word-level text files in the
common "token v1 ... vd" format with an optional "count dim" header, and
term-level TSV files mapping a full term to one precomputed vector.  A term
is out of vocabulary (OOV) as soon as any of its tokens is missing; analyses
downstream run on the subset of pairs covered by every embedding involved.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import ParseError

logger = logging.getLogger(__name__)


@dataclass
class WordEmbedding:
    """An immutable token -> vector mapping; term_level keys are full terms."""

    name: str
    dim: int
    vocab: dict  # token -> np.ndarray of shape (dim,)
    term_level: bool = False

    def __post_init__(self):
        if self.dim <= 0:
            raise ValueError("dim must be positive")

    def __contains__(self, token: str) -> bool:
        return token in self.vocab

    def __len__(self) -> int:
        return len(self.vocab)


@dataclass(frozen=True)
class TermMatrix:
    """One vector per token of a covered term (a single row for term-level)."""

    term: str
    tokens: tuple
    rows: np.ndarray  # shape (len(tokens), dim)


@dataclass(frozen=True)
class CoverageReport:
    """Coverage fractions per embedding and jointly across all embeddings."""

    per_embedding: dict  # (embedding_name, dataset_name) -> fraction in [0, 1]
    joint: dict  # dataset_name -> fraction covered under every embedding


def tokenize(term: str) -> list:
    """Lowercase, replace non-alphanumeric scalars with spaces, split."""
    cleaned = "".join(ch if ch.isalnum() else " " for ch in term.lower())
    return cleaned.split()


def _parse_components(fields, path, lineno, dim):
    if dim is not None and len(fields) != dim:
        raise ParseError(
            f"{path}:{lineno}: expected {dim} components, found {len(fields)}"
        )
    try:
        vec = np.array([float(x) for x in fields], dtype=np.float64)
    except ValueError:
        raise ParseError(f"{path}:{lineno}: non-numeric vector component") from None
    if not np.all(np.isfinite(vec)):
        raise ParseError(f"{path}:{lineno}: non-finite vector component")
    return vec


def load_word_vectors_text(path, name: str | None = None) -> WordEmbedding:
    """Read a space-separated word-vector text file.

    A first line of exactly two integers is a "count dim" header; otherwise
    the first line is a vector line and the dimension is inferred from it.
    The header count is advisory: a mismatch warns and everything is loaded.
    """
    vocab = {}
    dim = None
    declared_count = None
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n").rstrip("\r")
            if not line.strip():
                continue
            fields = line.split()
            if lineno == 1 and len(fields) == 2:
                try:
                    declared_count, dim = int(fields[0]), int(fields[1])
                except ValueError:
                    pass  # not a header; fall through to vector parsing
                else:
                    if dim <= 0:
                        raise ParseError(f"{path}:1: header dimension must be positive")
                    continue
            token, comps = fields[0], fields[1:]
            if not comps:
                raise ParseError(f"{path}:{lineno}: vector line with no components")
            vec = _parse_components(comps, path, lineno, dim)
            if dim is None:
                dim = len(vec)
            if token in vocab:
                logger.warning("%s:%d: duplicate token %r; first occurrence kept", path, lineno, token)
                continue
            vocab[token] = vec
    if not vocab:
        raise ParseError(f"{path}: no vector lines found")
    if declared_count is not None and declared_count != len(vocab):
        logger.warning(
            "%s: header declares %d vectors but %d were read; all loaded",
            path,
            declared_count,
            len(vocab),
        )
    return WordEmbedding(name=name or _stem(path), dim=dim, vocab=vocab)


def load_term_vectors(path, name: str | None = None) -> WordEmbedding:
    """Read a TSV of "term<TAB>v1 v2 ... vd" into a term-level embedding.

    Keys are stored lowercased so lookups share the terms' pairing equality.
    """
    vocab = {}
    dim = None
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n").rstrip("\r")
            if not line.strip():
                continue
            term, sep, rest = line.partition("\t")
            if not sep or not term:
                raise ParseError(f"{path}:{lineno}: expected 'term<TAB>components'")
            vec = _parse_components(rest.split(), path, lineno, dim)
            if dim is None:
                dim = len(vec)
            key = term.lower()
            if key in vocab:
                logger.warning("%s:%d: duplicate term %r; first occurrence kept", path, lineno, term)
                continue
            vocab[key] = vec
    if not vocab:
        raise ParseError(f"{path}: no vector lines found")
    return WordEmbedding(name=name or _stem(path), dim=dim, vocab=vocab, term_level=True)


def write_term_vectors(embedding: WordEmbedding, path):
    """Write a term-level embedding back to its TSV format."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for term, vec in embedding.vocab.items():
            comps = " ".join(f"{x:.9g}" for x in vec)
            fh.write(f"{term}\t{comps}\n")


def _stem(path) -> str:
    import os

    return os.path.splitext(os.path.basename(str(path)))[0]


def term_matrix(embedding: WordEmbedding, term: str) -> TermMatrix | None:
    """Token vectors of a term, or None when any token is out of vocabulary."""
    if embedding.term_level:
        key = term.lower()
        vec = embedding.vocab.get(key)
        if vec is None:
            return None
        return TermMatrix(term=term, tokens=(key,), rows=vec.reshape(1, -1))
    tokens = tokenize(term)
    if not tokens:
        return None
    rows = []
    for tok in tokens:
        vec = embedding.vocab.get(tok)
        if vec is None:
            return None
        rows.append(vec)
    return TermMatrix(term=term, tokens=tuple(tokens), rows=np.stack(rows))


def _entry_terms(entry) -> tuple:
    # dataset entries are either LabeledPair objects or raw (a, b, value) tuples
    pair = getattr(entry, "pair", None)
    if pair is not None:
        return pair.term_a, pair.term_b
    return entry[0], entry[1]


def _pair_covered(entry, embeddings) -> bool:
    return all(
        term_matrix(e, t) is not None
        for e in embeddings
        for t in _entry_terms(entry)
    )


def covered_subset(datasets, embeddings) -> dict:
    """Indices of pairs whose both terms are in-vocabulary under every embedding."""
    if not embeddings:
        raise ValueError("at least one embedding is required")
    out = {}
    for ds in datasets:
        idx = np.array(
            [i for i, p in enumerate(ds.pairs) if _pair_covered(p, embeddings)],
            dtype=np.int64,
        )
        if idx.size == 0:
            logger.warning(
                "dataset %s: no pair is covered by all of %s",
                ds.name,
                ", ".join(e.name for e in embeddings),
            )
        out[ds.name] = idx
    return out


def coverage_report(datasets, embeddings) -> CoverageReport:
    """Coverage fraction per (embedding, dataset) and under all embeddings jointly."""
    if not embeddings:
        raise ValueError("at least one embedding is required")
    per = {}
    for e in embeddings:
        for ds in datasets:
            covered = sum(_pair_covered(p, (e,)) for p in ds.pairs)
            per[(e.name, ds.name)] = covered / len(ds.pairs) if ds.pairs else 0.0
    joint = {
        ds.name: (
            sum(_pair_covered(p, embeddings) for p in ds.pairs) / len(ds.pairs)
            if ds.pairs
            else 0.0
        )
        for ds in datasets
    }
    return CoverageReport(per_embedding=per, joint=joint)


def vocab_overlap(e1: WordEmbedding, e2: WordEmbedding) -> float:
    """Percentage of e2's vocabulary also present in e1's."""
    if not e2.vocab:
        raise ValueError("second embedding has an empty vocabulary")
    inter = e1.vocab.keys() & e2.vocab.keys()
    return 100.0 * len(inter) / len(e2.vocab)
