"""Parse RF2-style release files into a latest-state snapshot of terms.

The three inputs (concepts, descriptions, associations) are tab-separated
UTF-8 files with header rows.  Either Full or Snapshot releases work: for
every component id only the row with the greatest effectiveTime is kept.
A small configuration object maps raw typeId/refsetId values onto the two
description types and three association kinds, so real ontology identifiers
and fixture identifiers are handled the same way.
"""

import csv
import logging
from dataclasses import dataclass, field

from .errors import ParseError

logger = logging.getLogger(__name__)

FSN = "FSN"
SYNONYM = "Synonym"

POSSIBLY_EQUIVALENT_TO = "possibly_equivalent_to"
REPLACED_BY = "replaced_by"
SAME_AS = "same_as"
ASSOCIATION_KINDS = (POSSIBLY_EQUIVALENT_TO, REPLACED_BY, SAME_AS)


@dataclass(frozen=True)
class IdMap:
    """Binds raw typeId/refsetId values to description types and association kinds.

    Defaults are the standard SNOMED CT identifiers.
    """

    fsn_type_ids: frozenset = frozenset({"900000000000003001"})
    synonym_type_ids: frozenset = frozenset({"900000000000013009"})
    association_refsets: dict = field(
        default_factory=lambda: {
            "900000000000523009": POSSIBLY_EQUIVALENT_TO,
            "900000000000526001": REPLACED_BY,
            "900000000000527005": SAME_AS,
        }
    )


@dataclass(frozen=True)
class ConceptRow:
    id: str
    effective_time: int
    active: bool
    module_id: str


@dataclass(frozen=True)
class DescriptionRow:
    id: str
    effective_time: int
    active: bool
    module_id: str
    concept_id: str
    type: str  # FSN or SYNONYM
    term: str


@dataclass(frozen=True)
class AssociationRow:
    id: str
    effective_time: int
    active: bool
    module_id: str
    refset_kind: str  # one of ASSOCIATION_KINDS
    source_concept_id: str
    target_concept_id: str


@dataclass(frozen=True)
class OntologySnapshot:
    """Latest-state view of a release: one row per component id."""

    concepts: dict  # id -> ConceptRow
    descriptions: dict  # concept_id -> tuple of DescriptionRow
    associations: tuple  # AssociationRow


_CONCEPT_COLUMNS = ("id", "effectiveTime", "active", "moduleId")
_DESCRIPTION_COLUMNS = ("id", "effectiveTime", "active", "moduleId", "conceptId", "typeId", "term")
_ASSOCIATION_COLUMNS = (
    "id",
    "effectiveTime",
    "active",
    "moduleId",
    "refsetId",
    "referencedComponentId",
    "targetComponentId",
)


def _read_rows(path, required):
    """Yield (line_number, {column: value}) for each data row of an RF2 table."""
    with open(path, encoding="utf-8-sig", newline="") as fh:
        reader = csv.reader(fh, delimiter="\t", quoting=csv.QUOTE_NONE)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty file, expected a header row") from None
        header = [h.strip() for h in header]
        positions = {}
        for col in required:
            if col not in header:
                raise ParseError(f"{path}: missing required column '{col}'")
            positions[col] = header.index(col)
        width = len(header)
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and row[0] == ""):
                continue
            if len(row) != width:
                raise ParseError(
                    f"{path}:{lineno}: expected {width} fields, found {len(row)}"
                )
            yield lineno, {col: row[positions[col]] for col in required}


def _parse_common(path, lineno, rec):
    time_raw = rec["effectiveTime"].strip()
    if len(time_raw) != 8 or not time_raw.isdigit():
        raise ParseError(f"{path}:{lineno}: effectiveTime '{time_raw}' is not an 8-digit date")
    active_raw = rec["active"].strip()
    if active_raw not in ("0", "1"):
        raise ParseError(f"{path}:{lineno}: active flag '{active_raw}' is not '0' or '1'")
    rid = rec["id"].strip()
    if not rid:
        raise ParseError(f"{path}:{lineno}: empty id")
    return rid, int(time_raw), active_raw == "1"


def _resolve_latest(rows_with_keys, path):
    """Keep, per id, the row with maximal effective_time; duplicates are fatal."""
    latest = {}
    times_seen = {}
    for row in rows_with_keys:
        seen = times_seen.setdefault(row.id, set())
        if row.effective_time in seen:
            raise ParseError(
                f"{path}: duplicate rows for id {row.id} at effectiveTime {row.effective_time}"
            )
        seen.add(row.effective_time)
        cur = latest.get(row.id)
        if cur is None or row.effective_time > cur.effective_time:
            latest[row.id] = row
    return latest


def parse_release(concepts_path, descriptions_path, associations_path=None, id_map=None):
    """Read the three release tables and resolve every component to its latest state.

    associations_path may be None when no association file is available; the
    snapshot then simply carries no associations.
    """
    id_map = id_map or IdMap()

    concept_rows = []
    for lineno, rec in _read_rows(concepts_path, _CONCEPT_COLUMNS):
        rid, etime, active = _parse_common(concepts_path, lineno, rec)
        concept_rows.append(ConceptRow(rid, etime, active, rec["moduleId"].strip()))
    concepts = _resolve_latest(concept_rows, concepts_path)
    logger.info("%s: %d rows, %d concepts", concepts_path, len(concept_rows), len(concepts))

    desc_rows = []
    skipped_types = 0
    for lineno, rec in _read_rows(descriptions_path, _DESCRIPTION_COLUMNS):
        rid, etime, active = _parse_common(descriptions_path, lineno, rec)
        type_id = rec["typeId"].strip()
        if type_id in id_map.fsn_type_ids:
            dtype = FSN
        elif type_id in id_map.synonym_type_ids:
            dtype = SYNONYM
        else:
            skipped_types += 1
            continue
        term = rec["term"]
        if not term.strip():
            raise ParseError(f"{descriptions_path}:{lineno}: empty term")
        desc_rows.append(
            DescriptionRow(rid, etime, active, rec["moduleId"].strip(), rec["conceptId"].strip(), dtype, term)
        )
    latest_desc = _resolve_latest(desc_rows, descriptions_path)
    logger.info(
        "%s: %d rows kept, %d descriptions (%d rows of unmapped types ignored)",
        descriptions_path,
        len(desc_rows),
        len(latest_desc),
        skipped_types,
    )

    assoc_rows = []
    skipped_refsets = 0
    if associations_path is not None:
        for lineno, rec in _read_rows(associations_path, _ASSOCIATION_COLUMNS):
            rid, etime, active = _parse_common(associations_path, lineno, rec)
            kind = id_map.association_refsets.get(rec["refsetId"].strip())
            if kind is None:
                skipped_refsets += 1
                continue
            source = rec["referencedComponentId"].strip()
            target = rec["targetComponentId"].strip()
            if source == target:
                raise ParseError(
                    f"{associations_path}:{lineno}: association with identical source and target {source}"
                )
            assoc_rows.append(
                AssociationRow(rid, etime, active, rec["moduleId"].strip(), kind, source, target)
            )
        logger.info(
            "%s: %d rows kept (%d rows of unmapped refsets ignored)",
            associations_path,
            len(assoc_rows),
            skipped_refsets,
        )
    latest_assoc = _resolve_latest(assoc_rows, associations_path or "")

    descriptions = {}
    dangling = 0
    for row in latest_desc.values():
        if row.concept_id not in concepts:
            dangling += 1
        descriptions.setdefault(row.concept_id, []).append(row)
    if dangling:
        logger.warning("%d descriptions reference unknown concepts", dangling)
    descriptions = {
        cid: tuple(sorted(rows, key=lambda r: _id_sort_key(r.id)))
        for cid, rows in descriptions.items()
    }

    associations = tuple(
        sorted(latest_assoc.values(), key=lambda r: _id_sort_key(r.id))
    )
    return OntologySnapshot(concepts=concepts, descriptions=descriptions, associations=associations)


def _id_sort_key(raw_id: str):
    # numeric ids sort numerically, anything else lexicographically
    return (0, len(raw_id), raw_id) if raw_id.isdigit() else (1, 0, raw_id)


def exclude_module(snapshot: OntologySnapshot, module_id: str) -> OntologySnapshot:
    """Drop every concept, description, and association in the given module.

    Descriptions of excluded concepts are removed as well, whatever their own
    module is.  Excluding an absent module is a no-op.
    """
    concepts = {cid: row for cid, row in snapshot.concepts.items() if row.module_id != module_id}
    descriptions = {}
    for cid, rows in snapshot.descriptions.items():
        if cid in snapshot.concepts and cid not in concepts:
            continue
        kept = tuple(r for r in rows if r.module_id != module_id)
        if kept:
            descriptions[cid] = kept
    associations = tuple(r for r in snapshot.associations if r.module_id != module_id)
    return OntologySnapshot(concepts=concepts, descriptions=descriptions, associations=associations)


def _strip_final_tag(s: str) -> str:
    """Remove one trailing parenthesized group preceded by whitespace."""
    if not s.endswith(")"):
        return s
    depth = 0
    for i in range(len(s) - 1, -1, -1):
        if s[i] == ")":
            depth += 1
        elif s[i] == "(":
            depth -= 1
            if depth == 0:
                if i > 0 and s[i - 1].isspace():
                    return s[:i].rstrip()
                return s
    return s  # unbalanced, leave untouched


def _strip_d_marker(s: str) -> str:
    if s.startswith("[D]"):
        s = s[3:].lstrip()
    if s.endswith("[D]"):
        s = s[:-3].rstrip()
    return s


def normalize_term(raw: str) -> str:
    """Normalize a description term for pairing.

    Trailing parenthesized semantic tags and a literal "[D]" token at either
    end are removed, whitespace is trimmed and internal runs collapse to a
    single space.  The function is idempotent.  An empty result is returned
    as-is; callers skip such terms.
    """
    s = raw.strip()
    while True:
        t = _strip_d_marker(_strip_final_tag(s)).strip()
        if t == s:
            break
        s = t
    return " ".join(s.split())


def fsn_of(snapshot: OntologySnapshot, concept_id: str):
    """Normalized FSN of a concept, or None (with a warning) if it has none.

    Active FSNs win; a concept whose FSNs are all inactive keeps its most
    recent one, which is what association pairs over deactivated concepts
    need.  Latest effective_time decides; ties fall to the lowest
    description id and are warned about.
    """
    rows = [r for r in snapshot.descriptions.get(concept_id, ()) if r.type == FSN]
    if not rows:
        logger.warning("concept %s has no FSN; skipped", concept_id)
        return None
    active = [r for r in rows if r.active]
    pool = active if active else rows
    top_time = max(r.effective_time for r in pool)
    winners = [r for r in pool if r.effective_time == top_time]
    winners.sort(key=lambda r: _id_sort_key(r.id))
    if len(winners) > 1:
        logger.warning(
            "concept %s has %d FSNs at effectiveTime %d; picking description %s",
            concept_id,
            len(winners),
            top_time,
            winners[0].id,
        )
    return normalize_term(winners[0].term)


def active_synonyms(snapshot: OntologySnapshot, concept_id: str) -> list:
    """Normalized terms of the concept's active synonyms.

    Deduplicated case-insensitively (first by description id wins) and
    excluding anything pairing-equal to the concept's FSN.  Empty
    normalizations are dropped.
    """
    has_fsn = any(r.type == FSN for r in snapshot.descriptions.get(concept_id, ()))
    fsn = fsn_of(snapshot, concept_id) if has_fsn else None
    fsn_key = fsn.lower() if fsn else None
    out = []
    seen = set()
    for row in snapshot.descriptions.get(concept_id, ()):
        if row.type != SYNONYM or not row.active:
            continue
        term = normalize_term(row.term)
        if not term:
            logger.warning("description %s normalizes to empty; skipped", row.id)
            continue
        key = term.lower()
        if key == fsn_key or key in seen:
            continue
        seen.add(key)
        out.append(term)
    return out
