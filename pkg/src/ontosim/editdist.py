"""Exact Levenshtein distance and a pruned nearest-neighbor index over term pools.

The index buckets terms by length and scans buckets in order of increasing
length difference, which is a lower bound on the distance.  Candidate scans
run in a compiled kernel with a banded dynamic program, a bag-of-characters
lower-bound prefilter, and an escalating distance budget, so large pools
(10^5 terms and up) stay tractable.  All results are exact; pruning only
skips candidates that provably cannot beat the current best.
"""

from collections.abc import Collection, Iterable

import numpy as np
from numba import njit

__all__ = ["levenshtein", "levenshtein_within", "build_index", "nearest_excluding", "EditDistanceIndex"]


def _encode(s: str) -> np.ndarray:
    return np.fromiter(map(ord, s), dtype=np.int32, count=len(s))


@njit(cache=True, nogil=True)
def _bounded_lev(a, b, limit):
    """Exact unit-cost edit distance if <= limit, else limit + 1 (banded DP)."""
    n, m = len(a), len(b)
    if n > m:
        a, b = b, a
        n, m = m, n
    if m - n > limit:
        return limit + 1
    inf = limit + 1
    prev = np.full(m + 1, inf, dtype=np.int32)
    cur = np.full(m + 1, inf, dtype=np.int32)
    top = limit if limit < m else m
    for j in range(top + 1):
        prev[j] = j
    for i in range(1, n + 1):
        lo = i - limit if i - limit > 1 else 1
        hi = i + limit if i + limit < m else m
        cur[lo - 1] = i if lo == 1 and i <= limit else inf
        row_min = cur[lo - 1]
        ai = a[i - 1]
        for j in range(lo, hi + 1):
            v = prev[j - 1] + (0 if ai == b[j - 1] else 1)
            if prev[j] + 1 < v:
                v = prev[j] + 1
            if cur[j - 1] + 1 < v:
                v = cur[j - 1] + 1
            if v > inf:
                v = inf
            cur[j] = v
            if v < row_min:
                row_min = v
        if row_min > limit:
            return limit + 1
        if hi < m:
            cur[hi + 1] = inf
        prev, cur = cur, prev
        cur[lo - 1] = inf
    return prev[m] if prev[m] <= limit else limit + 1


@njit(cache=True, nogil=True)
def _nearest_kernel(q, lengths, bstart, coff, flat, bags, row2id, excl_rows, kmax):
    """Best (row, distance) over the packed index, or (-1, -1) if all candidates excluded.

    Ties resolve to the smallest term id; ids are assigned in the global
    tie-break order, so this realizes the lexicographic rule.
    """
    qlen = len(q)
    qbag = np.zeros(128, dtype=np.int32)
    for t in range(qlen):
        c = q[t]
        qbag[c if c < 127 else 127] += 1
    nb = len(lengths)
    # position of the first bucket with length >= qlen
    split = 0
    while split < nb and lengths[split] < qlen:
        split += 1

    k = 4 if kmax > 4 else kmax
    while True:
        best_dist = k + 1
        best_id = np.int64(-1)
        best_row = np.int64(-1)
        left = split - 1
        right = split
        while left >= 0 or right < nb:
            dl = qlen - lengths[left] if left >= 0 else (1 << 40)
            dr = lengths[right] - qlen if right < nb else (1 << 40)
            if dl <= dr:
                b = left
                delta = dl
                left -= 1
            else:
                b = right
                delta = dr
                right += 1
            cutoff = best_dist if best_dist < k else k
            if delta > cutoff:
                break
            for r in range(bstart[b], bstart[b + 1]):
                cutoff = best_dist if best_dist < k else k
                over = 0
                under = 0
                for t in range(128):
                    d = bags[r, t] - qbag[t]
                    if d > 0:
                        over += d
                    else:
                        under -= d
                lb = over if over > under else under
                if lb > cutoff:
                    continue
                if len(excl_rows) > 0:
                    pos = np.searchsorted(excl_rows, r)
                    if pos < len(excl_rows) and excl_rows[pos] == r:
                        continue
                d = _bounded_lev(q, flat[coff[r]:coff[r + 1]], cutoff)
                if d <= cutoff:
                    tid = row2id[r]
                    if d < best_dist or (d == best_dist and tid < best_id):
                        best_dist = d
                        best_id = tid
                        best_row = r
        if best_id >= 0:
            return best_row, np.int64(best_dist)
        if k >= kmax:
            return np.int64(-1), np.int64(-1)
        k = k * 2 if k * 2 < kmax else kmax


def levenshtein(a: str, b: str) -> int:
    """Exact unit-cost edit distance between two strings.

    Operates on Unicode scalar values and is case sensitive.
    """
    limit = max(len(a), len(b))
    if limit == 0:
        return 0
    return int(_bounded_lev(_encode(a), _encode(b), limit))


def levenshtein_within(a: str, b: str, limit: int) -> int:
    """Exact distance if it is <= limit, else limit + 1."""
    if limit < 0:
        raise ValueError("limit must be nonnegative")
    if max(len(a), len(b)) == 0:
        return 0
    return int(_bounded_lev(_encode(a), _encode(b), limit))


def _tie_key(term: str) -> tuple[str, str]:
    # lexicographic rule: lowercase form first, raw form second
    return (term.lower(), term)


class EditDistanceIndex:
    """Immutable nearest-neighbor index over a deduplicated term pool."""

    def __init__(self, terms: Iterable[str]):
        uniq = sorted(set(terms), key=_tie_key)
        if not uniq:
            raise ValueError("cannot build an index over an empty term pool")
        self.terms: tuple[str, ...] = tuple(uniq)
        n = len(uniq)
        self._lower = [t.lower() for t in uniq]
        self._ids_by_lower: dict[str, list[int]] = {}
        for i, low in enumerate(self._lower):
            self._ids_by_lower.setdefault(low, []).append(i)

        by_len: dict[int, list[int]] = {}
        for i, t in enumerate(uniq):
            by_len.setdefault(len(t), []).append(i)
        self._lengths = np.array(sorted(by_len), dtype=np.int64)
        self._bstart = np.zeros(len(self._lengths) + 1, dtype=np.int64)
        row2id = np.empty(n, dtype=np.int64)
        id2row = np.empty(n, dtype=np.int64)
        row = 0
        for b, length in enumerate(self._lengths):
            for tid in by_len[int(length)]:
                row2id[row] = tid
                id2row[tid] = row
                row += 1
            self._bstart[b + 1] = row
        self._row2id = row2id
        self._id2row = id2row

        row_lens = np.fromiter((len(uniq[int(i)]) for i in row2id), dtype=np.int64, count=n)
        coff = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(row_lens, out=coff[1:])
        self._coff = coff
        joined = "".join(uniq[int(i)] for i in row2id)
        flat = np.frombuffer(joined.encode("utf-32-le"), dtype="<u4").astype(np.int32)
        rows = np.repeat(np.arange(n, dtype=np.int64), row_lens)
        cols = np.minimum(flat.astype(np.int64), 127)
        bags = np.bincount(rows * 128 + cols, minlength=n * 128).reshape(n, 128).astype(np.int32)
        self._flat = flat
        self._bags = bags
        self._maxlen = int(self._lengths[-1])

    @property
    def buckets(self) -> dict[int, np.ndarray]:
        """Mapping term length -> array of term ids with that length."""
        out = {}
        for b, length in enumerate(self._lengths):
            rows = np.arange(self._bstart[b], self._bstart[b + 1])
            out[int(length)] = self._row2id[rows].copy()
        return out

    def __len__(self) -> int:
        return len(self.terms)

    def excluded_rows(self, excluded: Collection[str]) -> np.ndarray:
        """Packed rows of indexed terms pairing-equal to any excluded string."""
        rows = []
        for e in excluded:
            for tid in self._ids_by_lower.get(e.lower(), ()):
                rows.append(int(self._id2row[tid]))
        return np.array(sorted(set(rows)), dtype=np.int64)


def build_index(terms: Iterable[str]) -> EditDistanceIndex:
    """Index a term pool for nearest-neighbor queries (terms are deduplicated)."""
    return EditDistanceIndex(terms)


def nearest_excluding(
    index: EditDistanceIndex, query: str, excluded: Collection[str] = ()
) -> tuple[str, int] | None:
    """Closest indexed term to the query, skipping excluded terms.

    Exclusion uses pairing-equality (case-insensitive match).  Ties on
    distance resolve to the lexicographically smallest term, comparing the
    lowercase form first and the raw form second.  Returns None iff every
    indexed term is excluded.  The query itself is NOT implicitly excluded.
    """
    excl_rows = index.excluded_rows(excluded)
    if len(excl_rows) == len(index.terms):
        return None
    kmax = max(len(query), index._maxlen)
    row, dist = _nearest_kernel(
        _encode(query),
        index._lengths,
        index._bstart,
        index._coff,
        index._flat,
        index._bags,
        index._row2id,
        excl_rows,
        kmax,
    )
    if row < 0:
        return None
    return index.terms[int(index._row2id[row])], int(dist)
