#!/usr/bin/env python3
"""Regenerate the committed fixture release under fixtures/ontology/.

The fixture is a small hand-designed RF2-style release (about 200 concepts)
covering every construction case the test suite needs:

* active concepts with synonym sets that are lexically close (easy split)
  and lexically distant (hard split),
* combinatorial term families ("<injury> of <site>") so every term has a
  near non-synonymous neighbor, which keeps nearest-neighbor negatives
  meaningfully closer than random ones,
* deactivated concepts wired to replacement associations of all three kinds,
  some with "[D]"-marked or inactive-only FSNs,
* metadata concepts in a separate module that exclusion must remove,
* multi-version component histories to exercise latest-state resolution,
  including an inactive latest state shadowing an older active one.

Running the script is deterministic: byte-identical files every time.
"""

import argparse
import io
from pathlib import Path

MAIN_MODULE = "1000001"
META_MODULE = "1000002"

FSN_TYPE = "3001"
SYN_TYPE = "3009"

REFSET_POSS_EQUIV = "5230"
REFSET_REPLACED = "5260"
REFSET_SAME_AS = "5270"

T_OLD = "20170731"
T_MID = "20180131"
T_NEW = "20190131"


class Builder:
    def __init__(self):
        self.concepts = []      # (id, effectiveTime, active, moduleId)
        self.descriptions = []  # (id, effectiveTime, active, moduleId, conceptId, languageCode, typeId, term, caseSignificanceId)
        self.associations = []  # (id, effectiveTime, active, moduleId, refsetId, referencedComponentId, targetComponentId)
        self._next_concept = 100000
        self._next_desc = 500000
        self._next_assoc = 900000

    def concept(self, active=True, module=MAIN_MODULE, time=T_NEW, history=()):
        cid = str(self._next_concept)
        self._next_concept += 1
        for h_time, h_active in history:
            self.concepts.append((cid, h_time, "1" if h_active else "0", module))
        self.concepts.append((cid, time, "1" if active else "0", module))
        return cid

    def description(self, concept_id, term, dtype=SYN_TYPE, active=True,
                    module=MAIN_MODULE, time=T_NEW, history=()):
        did = str(self._next_desc)
        self._next_desc += 1
        for h_time, h_term, h_active in history:
            self.descriptions.append(
                (did, h_time, "1" if h_active else "0", module, concept_id, "en", dtype, h_term, "900448")
            )
        self.descriptions.append(
            (did, time, "1" if active else "0", module, concept_id, "en", dtype, term, "900448")
        )
        return did

    def association(self, refset, source, target, active=True, module=MAIN_MODULE, time=T_NEW):
        aid = str(self._next_assoc)
        self._next_assoc += 1
        self.associations.append(
            (aid, time, "1" if active else "0", module, refset, source, target)
        )
        return aid

    def simple_concept(self, fsn, synonyms=(), tag="disorder", active=True):
        cid = self.concept(active=active)
        self.description(cid, f"{fsn} ({tag})", dtype=FSN_TYPE)
        for syn in synonyms:
            self.description(cid, syn)
        return cid


def build() -> Builder:
    b = Builder()

    # -- metadata module: must disappear under module exclusion ------------
    meta = b.concept(module=META_MODULE)
    b.description(meta, "Fully specified name (core metadata concept)", dtype=FSN_TYPE, module=META_MODULE)
    meta2 = b.concept(module=META_MODULE)
    b.description(meta2, "Entire term case sensitive (core metadata concept)", dtype=FSN_TYPE, module=META_MODULE)
    meta3 = b.concept(module=META_MODULE)
    b.description(meta3, "Synonym (core metadata concept)", dtype=FSN_TYPE, module=META_MODULE)
    b.description(meta3, "Synonym", module=META_MODULE)

    # -- combinatorial injury grid: dense near-neighbor structure ----------
    # "<injury> of <site>" with an easy synonym (small surface edit) and the
    # reordered form (hard: large edit distance).
    injuries = [
        ("Sprain", "Sprains"),
        ("Strain", "Strains"),
        ("Fracture", "Fractures"),
        ("Contusion", "Contusions"),
        ("Laceration", "Lacerations"),
    ]
    sites = [
        "ankle", "elbow", "femur", "radius", "ulna", "wrist",
        "shoulder", "sacrum", "thumb", "knee",
    ]
    for injury, injury_plural in injuries:
        for site in sites:
            b.simple_concept(
                f"{injury} of {site}",
                synonyms=[
                    f"{injury_plural} of {site}",        # distance 1: easy
                    f"{site.capitalize()} {injury.lower()}",  # reordered: hard
                ],
            )

    # -- classic hard synonym pairs (different lexical roots) --------------
    hard_pairs = [
        ("Malaria", ["Paludism"]),
        ("Rabies", ["Hydrophobia"]),
        ("Pertussis", ["Whooping cough"]),
        ("Variola", ["Smallpox"]),
        ("Rubeola", ["Measles", "Morbilli"]),
        ("Icterus", ["Jaundice"]),
        ("Pyrexia", ["Fever", "Febrile state"]),
        ("Cephalalgia", ["Headache"]),
        ("Emesis", ["Vomiting"]),
        ("Pruritus", ["Itching"]),
        ("Epistaxis", ["Nosebleed"]),
        ("Cholelithiasis", ["Gallstones"]),
        ("Singultus", ["Hiccups"]),
        ("Tussis", ["Cough"]),
        ("Vertigo", ["Dizziness"]),
    ]
    for fsn, syns in hard_pairs:
        b.simple_concept(fsn, synonyms=syns)

    # -- easy synonym pairs (morphological variants) ------------------------
    easy_pairs = [
        ("Sacrum sprain", ["Sacral sprain"]),
        ("Tumour of lung", ["Tumor of lung"]),
        ("Oesophagitis", ["Esophagitis"]),
        ("Anaemia", ["Anemia"]),
        ("Diarrhoea", ["Diarrhea"]),
        ("Foetal distress", ["Fetal distress"]),
        ("Haematuria", ["Hematuria"]),
        ("Leukaemia", ["Leukemia"]),
        ("Oedema of leg", ["Edema of leg"]),
        ("Paralysis agitans", ["Paralysis agitans NOS"]),
    ]
    for fsn, syns in easy_pairs:
        b.simple_concept(fsn, synonyms=syns)

    # -- case-only synonym: excluded from pairing by pairing-equality ------
    b.simple_concept("Angina pectoris", synonyms=["ANGINA PECTORIS", "Cardiac angina"])

    # -- concept with several synonyms: synonym-synonym pairs --------------
    b.simple_concept(
        "Myocardial infarction",
        synonyms=["Heart attack", "Cardiac infarction", "Infarction of heart"],
    )
    b.simple_concept(
        "Cerebrovascular accident",
        synonyms=["Stroke", "Brain attack", "CVA"],
    )

    # -- procedures (used by the category fixture) -------------------------
    procedures = [
        "Biopsy of liver", "Biopsy of kidney", "Excision of appendix",
        "Repair of hernia", "Amputation of toe", "Suture of wound",
        "Drainage of abscess", "Incision of skin",
    ]
    for p in procedures:
        b.simple_concept(p, synonyms=[p.replace(" of ", " procedure of ")], tag="procedure")

    # -- organisms (lexically isolated; used by the category fixture) -------
    organisms = [
        "Plasmodium falciparum", "Escherichia coli", "Staphylococcus aureus",
        "Mycobacterium tuberculosis", "Bordetella pertussis", "Candida albicans",
        "Treponema pallidum", "Giardia lamblia",
    ]
    for o in organisms:
        b.simple_concept(o, tag="organism")

    # -- multi-version histories -------------------------------------------
    # concept whose old row is inactive and latest row active
    revived = b.concept(history=[(T_OLD, False)])
    b.description(revived, "Chronic sinusitis (disorder)", dtype=FSN_TYPE)
    b.description(revived, "Chronic inflammation of sinus")
    # description renamed over time: latest term wins
    renamed = b.concept()
    b.description(
        renamed,
        "Acute bronchitis (disorder)",
        dtype=FSN_TYPE,
        history=[(T_OLD, "Acute bronchitis NOS (disorder)", True)],
    )
    b.description(renamed, "Acute bronchial inflammation")
    # synonym deactivated in latest state: must not pair
    muted = b.concept()
    b.description(muted, "Chronic gastritis (disorder)", dtype=FSN_TYPE)
    b.description(muted, "Chronic gastric inflammation")
    b.description(muted, "Gastritis chronica", active=False, history=[(T_OLD, "Gastritis chronica", True)])

    # -- deactivated concepts with associations -----------------------------
    # Easy targets: replacement FSN lexically near the source FSN.
    # Hard targets: replacement FSN lexically far from the source FSN.
    def deactivated(fsn, tag="disorder", d_marker=False, inactive_fsn_only=False):
        cid = b.concept(active=False, history=[(T_OLD, True)])
        term = f"[D] {fsn} ({tag})" if d_marker else f"{fsn} ({tag})"
        b.description(cid, term, dtype=FSN_TYPE, active=not inactive_fsn_only)
        return cid

    # Grid sources/targets give every association term a near neighbor inside
    # its own family pool, so nearest-neighbor negatives stay close.
    assoc_grid = {
        REFSET_POSS_EQUIV: ("ankle", "wrist", "knee"),
        REFSET_REPLACED: ("elbow", "thumb", "shoulder"),
        REFSET_SAME_AS: ("finger", "thorax", "forearm"),
    }
    for refset, grid_sites in assoc_grid.items():
        for injury in ("Sprain", "Strain"):
            for site in grid_sites:
                # source -> target is a hard pair; sources and targets are
                # pairwise near within the family (Sprain/Strain differ by 2)
                src = deactivated(f"{injury} of the {site}")
                tgt = b.simple_concept(f"{injury} of {site} joint")
                b.association(refset, src, tgt)

    assoc_specs = [
        # (refset, source FSN, target FSN, target synonyms, d_marker, inactive_fsn)
        # easy pairs (distance <= 5 after normalization)
        (REFSET_POSS_EQUIV, "Fracture of left femur", "Fracture of the femur", [], False, False),
        (REFSET_POSS_EQUIV, "Contusion of the hip", "Contusion of a hip", [], False, False),
        (REFSET_POSS_EQUIV, "Laceration of scalps", "Laceration of scalp", [], False, False),
        (REFSET_POSS_EQUIV, "Tumour of the larynx", "Tumor of the larynx", [], True, False),
        (REFSET_REPLACED, "Fracture of the ulnas", "Fracture of the ulna", [], False, False),
        (REFSET_REPLACED, "Oedema of the leg", "Edema of the leg", [], False, False),
        (REFSET_REPLACED, "Laceration of a thumb", "Laceration of the thumb", [], False, False),
        (REFSET_REPLACED, "Abrasion of the cheeks", "Abrasion of the cheek", [], False, True),
        (REFSET_SAME_AS, "Haematoma of the ear", "Hematoma of the ear", [], False, False),
        (REFSET_SAME_AS, "Strain of the shoulders", "Strain of the shoulder", [], False, False),
        (REFSET_SAME_AS, "Contusion of one wrist", "Contusion of a wrist", [], True, False),
        (REFSET_SAME_AS, "Sprain of one knee", "Sprain of the knee", [], False, False),
        # hard pairs (different lexical roots)
        (REFSET_POSS_EQUIV, "Grippe", "Influenza", ["Flu"], False, False),
        (REFSET_POSS_EQUIV, "Lockjaw", "Tetanus infection", [], True, False),
        (REFSET_POSS_EQUIV, "Dropsy", "Generalised oedema", [], False, True),
        (REFSET_POSS_EQUIV, "Consumption", "Tuberculosis of lung", [], False, False),
        (REFSET_REPLACED, "Quinsy", "Peritonsillar abscess", [], False, False),
        (REFSET_REPLACED, "Apoplexy", "Apoplexia cerebri", [], True, False),
        (REFSET_REPLACED, "Saint Anthony fire", "Erysipelas infection", [], False, True),
        (REFSET_REPLACED, "Winter fever", "Pneumonia of winter season", [], False, False),
        (REFSET_SAME_AS, "Infantile paralysis", "Poliomyelitis", [], False, False),
        (REFSET_SAME_AS, "German measles", "Rubella", [], True, False),
        (REFSET_SAME_AS, "Gripes", "Infantile colic", [], False, False),
        (REFSET_SAME_AS, "Bright disease", "Glomerulonephritis", [], False, True),
    ]
    for refset, src_fsn, tgt_fsn, tgt_syns, d_marker, inactive_fsn in assoc_specs:
        src = deactivated(src_fsn, d_marker=d_marker, inactive_fsn_only=inactive_fsn)
        tgt = b.simple_concept(tgt_fsn, synonyms=tgt_syns)
        b.association(refset, src, tgt)

    # duplicate association rows (distinct component ids, same source/target
    # and kind): the extracted pair must be deduplicated
    dup_src = deactivated("Falling sickness")
    dup_tgt = b.simple_concept("Epilepsy")
    b.association(REFSET_SAME_AS, dup_src, dup_tgt)
    b.association(REFSET_SAME_AS, dup_src, dup_tgt)

    # one source with TWO associations of different kinds (also deactivated)
    twin_src = deactivated("Ague")
    twin_a = b.simple_concept("Intermittent fever")
    b.association(REFSET_POSS_EQUIV, twin_src, twin_a)
    b.association(REFSET_SAME_AS, twin_src, twin_a)

    # association retired in its latest state: must be ignored
    retired_src = deactivated("Dengue haemorrhagic fever")
    retired_tgt = b.simple_concept("Dengue hemorrhagic fever")
    b.association(REFSET_REPLACED, retired_src, retired_tgt, active=False)
    # association whose older state was active, latest inactive
    flip_src = deactivated("Camp fever")
    flip_tgt = b.simple_concept("Epidemic typhus")
    aid = b.association(REFSET_SAME_AS, flip_src, flip_tgt, active=False)
    b.associations.insert(
        len(b.associations) - 1,
        (aid, T_OLD, "1", MAIN_MODULE, REFSET_SAME_AS, flip_src, flip_tgt),
    )
    # association in the metadata module: removed by module exclusion
    meta_src = deactivated("Obsolete metadata link")
    meta_tgt = b.simple_concept("Current metadata target")
    b.association(REFSET_SAME_AS, meta_src, meta_tgt, module=META_MODULE)

    # association to a concept with no FSN at all: skipped with a warning
    nofsn = b.concept(active=False, history=[(T_OLD, True)])
    b.description(nofsn, "Orphaned synonym only")
    nofsn_tgt = b.simple_concept("Orphan replacement target")
    b.association(REFSET_REPLACED, nofsn, nofsn_tgt)

    # concept whose FSN normalizes to a [D]-trailing form
    trailing = b.concept(active=False, history=[(T_OLD, True)])
    b.description(trailing, "Ship fever [D] (disorder)", dtype=FSN_TYPE)
    trailing_tgt = b.simple_concept("Epidemic louse-borne typhus")
    b.association(REFSET_SAME_AS, trailing, trailing_tgt)

    return b


def write_tsv(path: Path, header, rows):
    buf = io.StringIO()
    buf.write("\t".join(header) + "\n")
    for row in rows:
        buf.write("\t".join(row) + "\n")
    path.write_text(buf.getvalue(), encoding="utf-8", newline="\n")


def write_embeddings(b, out: Path):
    """Write three deterministic embedding fixtures derived from the release.

    * alpha.txt: word vectors with a count header, full token coverage, dim 24
    * beta.txt: word vectors without header, ~15% of tokens dropped, dim 12
    * gamma_terms.tsv: term-level vectors for every normalized term, dim 10
    """
    import numpy as np

    from ontosim.embeddings import tokenize
    from ontosim.ontology import normalize_term

    terms = sorted({normalize_term(d[7]) for d in b.descriptions})
    terms = [t for t in terms if t]
    tokens = sorted({tok for t in terms for tok in tokenize(t)})

    def vector_lines(words, dim, seed):
        rng = np.random.default_rng(seed)
        lines = []
        for w in words:
            vals = rng.standard_normal(dim)
            lines.append(w + " " + " ".join("%.6f" % v for v in vals))
        return lines

    out.mkdir(parents=True, exist_ok=True)

    alpha = [f"{len(tokens)} 24"] + vector_lines(tokens, 24, 24_001)
    (out / "alpha.txt").write_text("\n".join(alpha) + "\n",
                                   encoding="utf-8", newline="\n")

    drop = np.random.default_rng(12_002)
    keep_mask = drop.random(len(tokens)) >= 0.15
    kept = [t for t, k in zip(tokens, keep_mask) if k]
    beta = vector_lines(kept, 12, 12_003)
    (out / "beta.txt").write_text("\n".join(beta) + "\n",
                                  encoding="utf-8", newline="\n")

    rng = np.random.default_rng(10_004)
    gamma = []
    # lowercase dedup: lookups are case-insensitive, so keys must be unique
    for t in sorted({t.lower() for t in terms}):
        vals = rng.standard_normal(10)
        gamma.append(t + "\t" + "\t".join("%.6f" % v for v in vals))
    (out / "gamma_terms.tsv").write_text("\n".join(gamma) + "\n",
                                         encoding="utf-8", newline="\n")
    return len(tokens), len(kept), len(terms)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    fixtures = Path(__file__).resolve().parent.parent / "fixtures"
    parser.add_argument(
        "--out",
        default=str(fixtures / "ontology"),
        help="output directory (default: fixtures/ontology next to this script)",
    )
    parser.add_argument(
        "--embeddings-out",
        default=str(fixtures / "embeddings"),
        help="directory for the embedding fixtures (default: fixtures/embeddings)",
    )
    args = parser.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    b = build()
    write_tsv(
        out / "concepts.tsv",
        ["id", "effectiveTime", "active", "moduleId", "definitionStatusId"],
        [(c[0], c[1], c[2], c[3], "074008") for c in b.concepts],
    )
    write_tsv(
        out / "descriptions.tsv",
        ["id", "effectiveTime", "active", "moduleId", "conceptId",
         "languageCode", "typeId", "term", "caseSignificanceId"],
        b.descriptions,
    )
    write_tsv(
        out / "associations.tsv",
        ["id", "effectiveTime", "active", "moduleId", "refsetId",
         "referencedComponentId", "targetComponentId"],
        b.associations,
    )
    n_concepts = len({c[0] for c in b.concepts})
    n_desc = len({d[0] for d in b.descriptions})
    print(f"wrote {out}: {n_concepts} concepts, {n_desc} descriptions, "
          f"{len({a[0] for a in b.associations})} association components")

    n_tok, n_kept, n_terms = write_embeddings(b, Path(args.embeddings_out))
    print(f"wrote {args.embeddings_out}: alpha {n_tok} tokens, "
          f"beta {n_kept} tokens, gamma {n_terms} terms")


if __name__ == "__main__":
    main()
