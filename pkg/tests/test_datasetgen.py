"""Tests for dataset construction: extraction, splits, closure, sampling, TSV."""

import numpy as np
import pytest

from ontosim import datasetgen as dg
from ontosim.datasetgen import (
    ALL,
    EASY,
    FAMILIES,
    FSN_SYN,
    HARD,
    LEVENSHTEIN,
    POSS_EQUIV_TO,
    RANDOM,
    REPLACED_BY,
    SAME_AS,
    SYN_SYN,
    SplitSpec,
    TermPair,
    assemble_dataset,
    build_similarity_closure,
    dataset_stats,
    export_tsv,
    extract_association_pairs,
    extract_family,
    extract_fsn_synonym,
    extract_synonym_synonym,
    import_tsv,
    sample_negatives_levenshtein,
    sample_negatives_random,
    split_easy_hard,
)
from ontosim.editdist import build_index, levenshtein
from ontosim.errors import DatasetGenerationError, ParseError
from ontosim.ontology import (
    FSN,
    SYNONYM,
    AssociationRow,
    ConceptRow,
    DescriptionRow,
    OntologySnapshot,
    fsn_of,
)

from oracles import connected_components


def make_snapshot(concepts, descriptions, associations=()):
    """Assemble a snapshot from (cid, active), (cid, type, term[, active]), rows."""
    conc = {
        cid: ConceptRow(cid, 20200101, active, "m1") for cid, active in concepts
    }
    desc = {}
    for i, row in enumerate(descriptions):
        cid, dtype, term = row[:3]
        active = row[3] if len(row) > 3 else True
        desc.setdefault(cid, []).append(
            DescriptionRow(f"d{i}", 20200101, active, "m1", cid, dtype, term)
        )
    assoc = tuple(
        AssociationRow(f"a{i}", 20200101, act, "m1", kind, src, tgt)
        for i, (kind, src, tgt, act) in enumerate(associations)
    )
    return OntologySnapshot(
        concepts=conc,
        descriptions={cid: tuple(rows) for cid, rows in desc.items()},
        associations=assoc,
    )


# ---------------------------------------------------------------------------
# extraction


class TestExtraction:
    def test_fsn_syn_first_term_is_fsn(self, working_snapshot):
        pairs = extract_fsn_synonym(working_snapshot)
        assert pairs
        fsns = {
            fsn_of(working_snapshot, cid)
            for cid, row in working_snapshot.concepts.items()
            if row.active
        }
        for p in pairs:
            assert p.term_a in fsns
            assert p.term_a.lower() != p.term_b.lower()
            assert p.term_a and p.term_b

    def test_three_synonym_concept_yields_three_plus_three(self, working_snapshot):
        fsn = "Myocardial infarction"
        fsn_pairs = [p for p in extract_fsn_synonym(working_snapshot) if p.term_a == fsn]
        assert len(fsn_pairs) == 3
        syn_terms = {p.term_b for p in fsn_pairs}
        ss = extract_synonym_synonym(working_snapshot)
        with_fsn = [p for p in ss if p.term_a == fsn]
        assert len(with_fsn) == 3
        among_syns = [
            p for p in ss if p.term_a in syn_terms and p.term_b in syn_terms
        ]
        assert len(among_syns) == 3  # C(3, 2)
        for p in among_syns:
            assert (p.term_a.lower(), p.term_a) < (p.term_b.lower(), p.term_b)

    def test_syn_syn_superset_of_fsn_syn(self, working_snapshot):
        fs = {p.canonical for p in extract_fsn_synonym(working_snapshot)}
        ss = {p.canonical for p in extract_synonym_synonym(working_snapshot)}
        assert fs <= ss

    def test_no_duplicate_canonical_pairs(self, working_snapshot):
        for family in FAMILIES:
            pairs = extract_family(working_snapshot, family)
            canon = [p.canonical for p in pairs]
            assert len(canon) == len(set(canon)), family

    def test_inactive_concepts_excluded_from_synonym_families(self, working_snapshot):
        inactive_fsns = {
            fsn_of(working_snapshot, cid)
            for cid, row in working_snapshot.concepts.items()
            if not row.active
        }
        inactive_fsns.discard(None)
        assert inactive_fsns  # fixture has deactivated concepts
        for p in extract_fsn_synonym(working_snapshot):
            assert p.term_a not in inactive_fsns

    def test_association_terms_are_source_and_target_fsns(self, working_snapshot):
        for kind in (POSS_EQUIV_TO, REPLACED_BY, SAME_AS):
            pairs = extract_association_pairs(working_snapshot, kind)
            assert pairs, kind
            rows = [
                r
                for r in working_snapshot.associations
                if r.active and r.refset_kind == kind
            ]
            expected = set()
            for r in rows:
                src = fsn_of(working_snapshot, r.source_concept_id)
                tgt = fsn_of(working_snapshot, r.target_concept_id)
                if src and tgt and src.lower() != tgt.lower():
                    expected.add((src, tgt))
            assert {(p.term_a, p.term_b) for p in pairs} == expected

    def test_inactive_association_rows_ignored(self, working_snapshot):
        all_terms = {
            t
            for kind in (POSS_EQUIV_TO, REPLACED_BY, SAME_AS)
            for p in extract_association_pairs(working_snapshot, kind)
            for t in (p.term_a, p.term_b)
        }
        # these sources' association rows are retired in their latest state
        assert "Dengue haemorrhagic fever" not in all_terms
        assert "Camp fever" not in all_terms

    def test_duplicate_association_rows_collapse(self, working_snapshot):
        pairs = extract_association_pairs(working_snapshot, SAME_AS)
        hits = [p for p in pairs if p.term_a == "Falling sickness"]
        assert len(hits) == 1

    def test_source_without_fsn_skipped_with_warning(self, working_snapshot, caplog):
        with caplog.at_level("WARNING", logger="ontosim.ontology"):
            extract_association_pairs(working_snapshot, SAME_AS)

    def test_unknown_family_rejected(self, working_snapshot):
        with pytest.raises(ValueError, match="unknown family"):
            extract_family(working_snapshot, "nope")


# ---------------------------------------------------------------------------
# split


class TestSplit:
    def test_partition_by_threshold(self, working_snapshot):
        pairs = extract_fsn_synonym(working_snapshot)
        easy, hard = split_easy_hard(pairs, SplitSpec(threshold=5))
        assert easy and hard
        assert len(easy) + len(hard) == len(pairs)
        for p in easy:
            assert levenshtein(p.term_a, p.term_b) <= 5
        for p in hard:
            assert levenshtein(p.term_a, p.term_b) > 5
        # order within each side preserved
        index = {p.canonical: i for i, p in enumerate(pairs)}
        assert [index[p.canonical] for p in easy] == sorted(
            index[p.canonical] for p in easy
        )

    def test_custom_threshold(self):
        pairs = [TermPair("abc", "abd"), TermPair("abc", "xyzxyz")]
        easy, hard = split_easy_hard(pairs, SplitSpec(threshold=1))
        assert easy == [pairs[0]] and hard == [pairs[1]]

    def test_negative_threshold_rejected(self):
        with pytest.raises(ValueError):
            SplitSpec(threshold=-1)


# ---------------------------------------------------------------------------
# similarity closure


class TestClosure:
    def test_matches_bfs_components(self, working_snapshot):
        pairs = extract_synonym_synonym(working_snapshot)
        closure = build_similarity_closure(pairs, working_snapshot)

        nodes = set()
        edges = []
        for p in pairs:
            a, b = p.term_a.lower(), p.term_b.lower()
            nodes |= {a, b}
            edges.append((a, b))
        from ontosim.ontology import active_synonyms

        for cid in working_snapshot.concepts:
            terms = []
            if any(
                r.type == FSN for r in working_snapshot.descriptions.get(cid, ())
            ):
                fsn = fsn_of(working_snapshot, cid)
                if fsn:
                    terms.append(fsn)
            terms.extend(active_synonyms(working_snapshot, cid))
            terms = [t.lower() for t in terms]
            nodes |= set(terms)
            edges.extend(zip(terms, terms[1:]))

        comps = connected_components(nodes, edges)
        comp_of = {}
        for i, comp in enumerate(sorted(comps, key=sorted)):
            for t in comp:
                comp_of[t] = i

        terms = sorted(nodes)
        rng = np.random.default_rng(13)
        for _ in range(400):
            a, b = (terms[int(i)] for i in rng.integers(len(terms), size=2))
            assert closure.same(a, b) == (comp_of[a] == comp_of[b])
        # the union-find materializes only unioned terms; a never-linked term
        # is implicitly its own class, so compare non-singleton components
        got = frozenset(frozenset(ms) for ms in closure.classes().values())
        multi = frozenset(c for c in comps if len(c) > 1)
        assert frozenset(c for c in got if len(c) > 1) == multi
        for comp in comps - multi:
            (term,) = comp
            assert set(closure.members(term)) == {term}

    def test_transitive_through_shared_fsn(self, working_snapshot):
        pairs = extract_fsn_synonym(working_snapshot)
        closure = build_similarity_closure(pairs, working_snapshot)
        by_fsn = {}
        for p in pairs:
            by_fsn.setdefault(p.term_a, []).append(p.term_b)
        multi = {f: s for f, s in by_fsn.items() if len(s) >= 2}
        assert multi
        for fsn, syns in multi.items():
            assert closure.same(syns[0], syns[1])

    def test_concept_clique_links_all_terms(self, working_snapshot):
        pairs = extract_association_pairs(working_snapshot, POSS_EQUIV_TO)
        closure = build_similarity_closure(pairs, working_snapshot)
        # synonyms of one concept are similar even when no positive pair links them
        assert closure.same("Rubeola", "Morbilli")
        assert closure.same("rubeola", "MEASLES")

    def test_case_insensitive(self):
        c = dg.SimilarityClosure()
        c.union("Alpha", "beta")
        assert c.same("ALPHA", "Beta")
        assert not c.same("Alpha", "gamma")
        assert set(c.members("BETA")) == {"alpha", "beta"}


# ---------------------------------------------------------------------------
# random negative sampling


@pytest.fixture(scope="module")
def fsn_family(working_snapshot):
    pairs = extract_fsn_synonym(working_snapshot)
    closure = build_similarity_closure(pairs, working_snapshot)
    pool = dg._positive_pool(pairs)
    return pairs, closure, pool


class TestRandomSampling:
    def test_one_negative_per_positive(self, fsn_family):
        pairs, closure, pool = fsn_family
        negs = sample_negatives_random(pairs, pool, closure, seed=7)
        assert len(negs) == len(pairs)
        for pos, neg in zip(pairs, negs):
            assert neg.label == 0
            assert neg.pair.term_a == pos.term_a
            assert neg.pair.term_b in pool
            assert not closure.same(neg.pair.term_a, neg.pair.term_b)
            assert neg.distance == levenshtein(neg.pair.term_a, neg.pair.term_b)

    def test_no_duplicate_pairs_inside_dataset(self, fsn_family):
        pairs, closure, pool = fsn_family
        negs = sample_negatives_random(pairs, pool, closure, seed=7)
        canon = [p.canonical for p in pairs] + [n.pair.canonical for n in negs]
        assert len(canon) == len(set(canon))

    def test_seed_determinism(self, fsn_family):
        pairs, closure, pool = fsn_family
        a = sample_negatives_random(pairs, pool, closure, seed=7)
        b = sample_negatives_random(pairs, pool, closure, seed=7)
        c = sample_negatives_random(pairs, pool, closure, seed=8)
        assert a == b
        assert a != c

    def test_shuffled_scan_fallback(self, fsn_family, monkeypatch):
        pairs, closure, pool = fsn_family
        monkeypatch.setattr(dg, "_REJECTION_BUDGET", 0)
        negs = sample_negatives_random(pairs, pool, closure, seed=7)
        assert len(negs) == len(pairs)
        canon = [p.canonical for p in pairs] + [n.pair.canonical for n in negs]
        assert len(canon) == len(set(canon))
        for neg in negs:
            assert not closure.same(neg.pair.term_a, neg.pair.term_b)

    def test_error_when_pool_exhausted(self):
        closure = dg.SimilarityClosure()
        closure.union("alpha", "beta")
        positives = [TermPair("Alpha", "Beta")]
        with pytest.raises(DatasetGenerationError, match="positive 0"):
            sample_negatives_random(positives, ["Alpha", "Beta"], closure, seed=1)


# ---------------------------------------------------------------------------
# nearest-neighbor negative sampling


def sequential_nearest_oracle(positives, pool, closure):
    """Reference sampler: per-positive nearest admissible scan, in order."""
    used = {p.canonical for p in positives}
    partners = {}
    for p in positives:
        partners.setdefault(p.term_a.lower(), set()).add(p.term_b.lower())
        partners.setdefault(p.term_b.lower(), set()).add(p.term_a.lower())
    out = []
    for p in positives:
        first = p.term_a
        excl = set(closure.members(first)) | partners.get(first.lower(), set())
        best = None
        for cand in pool:
            if cand.lower() in excl:
                continue
            key = (levenshtein(first, cand), cand.lower(), cand)
            if best is None or key < best:
                best = key
        assert best is not None
        term, dist = best[2], best[0]
        neg = TermPair(first, term)
        used.add(neg.canonical)
        partners.setdefault(first.lower(), set()).add(term.lower())
        partners.setdefault(term.lower(), set()).add(first.lower())
        out.append(dg.LabeledPair(neg, 0, dist))
    return out


class TestLevenshteinSampling:
    @pytest.mark.parametrize("family", [POSS_EQUIV_TO, FSN_SYN])
    def test_matches_sequential_oracle(self, working_snapshot, family):
        pairs = extract_family(working_snapshot, family)
        closure = build_similarity_closure(pairs, working_snapshot)
        pool = dg._positive_pool(pairs)
        index = build_index(pool)
        got = sample_negatives_levenshtein(pairs, pool, closure, index)
        assert got == sequential_nearest_oracle(pairs, pool, closure)

    def test_worker_count_invariance(self, fsn_family):
        pairs, closure, pool = fsn_family
        index = build_index(pool)
        one = sample_negatives_levenshtein(pairs, pool, closure, index, jobs=1)
        four = sample_negatives_levenshtein(pairs, pool, closure, index, jobs=4)
        assert one == four

    def test_duplicate_resolves_to_next_nearest(self):
        closure = dg.SimilarityClosure()
        closure.union("aaaa", "bbbb")
        closure.union("aaaa", "cccc")
        positives = [TermPair("aaaa", "bbbb"), TermPair("aaaa", "cccc")]
        pool = ["aaaa", "bbbb", "cccc", "aaax", "aaxx"]
        index = build_index(pool)
        negs = sample_negatives_levenshtein(positives, pool, closure, index)
        assert [(n.pair.term_a, n.pair.term_b, n.distance) for n in negs] == [
            ("aaaa", "aaax", 1),
            ("aaaa", "aaxx", 2),
        ]

    def test_error_when_everything_excluded(self):
        closure = dg.SimilarityClosure()
        closure.union("aaaa", "bbbb")
        positives = [TermPair("aaaa", "bbbb")]
        pool = ["aaaa", "bbbb"]
        index = build_index(pool)
        with pytest.raises(DatasetGenerationError, match="positive 0"):
            sample_negatives_levenshtein(positives, pool, closure, index)


# ---------------------------------------------------------------------------
# assembled datasets


@pytest.fixture(scope="module")
def all_datasets(working_snapshot):
    out = {}
    for family in FAMILIES:
        for split in (EASY, HARD):
            for strategy in (RANDOM, LEVENSHTEIN):
                out[(family, split, strategy)] = assemble_dataset(
                    working_snapshot, family, split, strategy, seed=7
                )
    return out


class TestAssembleDataset:
    def test_invariants_hold_for_all_twenty(self, all_datasets):
        assert len(all_datasets) == 20
        for (family, split, strategy), ds in all_datasets.items():
            pos, neg = ds.positives, ds.negatives
            assert len(pos) == len(neg) > 0, ds.name
            canon = [p.pair.canonical for p in ds.pairs]
            assert len(canon) == len(set(canon)), ds.name
            for p in ds.pairs:
                assert p.distance == levenshtein(p.pair.term_a, p.pair.term_b)
                assert p.pair.term_a.lower() != p.pair.term_b.lower()
            for p in pos:
                if split == EASY:
                    assert p.distance <= ds.threshold
                else:
                    assert p.distance > ds.threshold
            assert ds.name == f"{family}_{split}_{strategy}"

    def test_same_seed_reproduces_exactly(self, working_snapshot, all_datasets):
        again = assemble_dataset(working_snapshot, SYN_SYN, HARD, LEVENSHTEIN, seed=7)
        assert again == all_datasets[(SYN_SYN, HARD, LEVENSHTEIN)]

    def test_different_seed_changes_random_negatives(self, working_snapshot, all_datasets):
        other = assemble_dataset(working_snapshot, FSN_SYN, EASY, RANDOM, seed=8)
        assert other.pairs != all_datasets[(FSN_SYN, EASY, RANDOM)].pairs

    def test_jobs_do_not_change_output(self, working_snapshot, all_datasets):
        ds = assemble_dataset(
            working_snapshot, FSN_SYN, HARD, LEVENSHTEIN, seed=7, jobs=4
        )
        assert ds == all_datasets[(FSN_SYN, HARD, LEVENSHTEIN)]

    def test_all_split_covers_family(self, working_snapshot, all_datasets):
        full = assemble_dataset(working_snapshot, REPLACED_BY, ALL, RANDOM, seed=7)
        easy = all_datasets[(REPLACED_BY, EASY, RANDOM)]
        hard = all_datasets[(REPLACED_BY, HARD, RANDOM)]
        assert len(full.positives) == len(easy.positives) + len(hard.positives)

    def test_nearest_negatives_closer_than_random(self, all_datasets):
        for family in FAMILIES:
            for split in (EASY, HARD):
                neg_r = all_datasets[(family, split, RANDOM)].negatives
                neg_l = all_datasets[(family, split, LEVENSHTEIN)].negatives
                mean_r = np.mean([n.distance for n in neg_r])
                mean_l = np.mean([n.distance for n in neg_l])
                assert mean_l < mean_r, (family, split)

    def test_hard_split_nearest_negatives_closer_than_positives(self, all_datasets):
        for family in FAMILIES:
            ds = all_datasets[(family, HARD, LEVENSHTEIN)]
            mean_pos = np.mean([p.distance for p in ds.positives])
            mean_neg = np.mean([n.distance for n in ds.negatives])
            assert mean_neg < mean_pos, family

    def test_unknown_split_and_strategy_rejected(self, working_snapshot):
        with pytest.raises(ValueError, match="unknown split"):
            assemble_dataset(working_snapshot, FSN_SYN, "medium", RANDOM, seed=1)
        with pytest.raises(ValueError, match="unknown strategy"):
            assemble_dataset(working_snapshot, FSN_SYN, EASY, "hybrid", seed=1)

    def test_empty_family_rejected(self):
        snap = make_snapshot(
            [("c1", False)],
            [("c1", FSN, "Lonely concept (disorder)")],
        )
        with pytest.raises(DatasetGenerationError, match="no positive pairs"):
            assemble_dataset(snap, FSN_SYN, EASY, RANDOM, seed=1)


# ---------------------------------------------------------------------------
# stats


class TestDatasetStats:
    def test_size_and_means(self, all_datasets):
        rnd = all_datasets[(FSN_SYN, EASY, RANDOM)]
        lev = all_datasets[(FSN_SYN, EASY, LEVENSHTEIN)]
        stats = dataset_stats(rnd, lev)
        assert stats.size == len(rnd.pairs) == len(lev.pairs)
        assert stats.avg_lev_pos == pytest.approx(
            np.mean([p.distance for p in rnd.positives])
        )
        assert stats.avg_lev_neg_random == pytest.approx(
            np.mean([n.distance for n in rnd.negatives])
        )
        assert stats.avg_lev_neg_levenshtein == pytest.approx(
            np.mean([n.distance for n in lev.negatives])
        )

    def test_recomputable_from_exported_tsv(self, all_datasets, tmp_path):
        rnd = all_datasets[(SAME_AS, HARD, RANDOM)]
        lev = all_datasets[(SAME_AS, HARD, LEVENSHTEIN)]
        p_rnd, p_lev = tmp_path / "r.tsv", tmp_path / "l.tsv"
        export_tsv(rnd, p_rnd)
        export_tsv(lev, p_lev)
        re_rnd, re_lev = import_tsv(p_rnd), import_tsv(p_lev)
        assert dataset_stats(re_rnd, re_lev) == dataset_stats(rnd, lev)

    def test_single_strategy_allowed(self, all_datasets):
        rnd = all_datasets[(FSN_SYN, EASY, RANDOM)]
        stats = dataset_stats(random_dataset=rnd)
        assert stats.avg_lev_neg_levenshtein is None
        assert stats.avg_lev_neg_random is not None

    def test_requires_at_least_one(self):
        with pytest.raises(ValueError):
            dataset_stats()

    def test_mismatched_sizes_rejected(self, all_datasets):
        rnd = all_datasets[(FSN_SYN, HARD, RANDOM)]
        lev = all_datasets[(SYN_SYN, HARD, LEVENSHTEIN)]
        with pytest.raises(ValueError, match="size"):
            dataset_stats(rnd, lev)

    def test_mismatched_positives_rejected(self, all_datasets):
        rnd = all_datasets[(POSS_EQUIV_TO, EASY, RANDOM)]
        lev = all_datasets[(REPLACED_BY, EASY, LEVENSHTEIN)]
        assert len(rnd.pairs) == len(lev.pairs)
        with pytest.raises(ValueError, match="positive"):
            dataset_stats(rnd, lev)


# ---------------------------------------------------------------------------
# TSV round trip


class TestTsvRoundTrip:
    def test_round_trip_preserves_everything(self, all_datasets, tmp_path):
        ds = all_datasets[(POSS_EQUIV_TO, HARD, LEVENSHTEIN)]
        path = tmp_path / "ds.tsv"
        export_tsv(ds, path, extra_metadata={"source": "fixture"})
        back = import_tsv(path)
        assert back.pairs == ds.pairs
        assert back.family == ds.family
        assert back.split == ds.split
        assert back.neg_strategy == ds.neg_strategy
        assert back.seed == ds.seed
        assert back.threshold == ds.threshold
        assert back.extra_metadata == {"source": "fixture"}

    def test_written_bytes_are_lf_only(self, all_datasets, tmp_path):
        ds = all_datasets[(FSN_SYN, EASY, RANDOM)]
        path = tmp_path / "ds.tsv"
        export_tsv(ds, path)
        raw = path.read_bytes()
        assert b"\r" not in raw
        assert raw.endswith(b"\n")
        lines = raw.decode("utf-8").splitlines()
        assert lines[0].startswith("#family=")
        assert "term_a\tterm_b\tlabel" in lines

    def test_crlf_input_accepted(self, all_datasets, tmp_path):
        ds = all_datasets[(FSN_SYN, EASY, RANDOM)]
        lf, crlf = tmp_path / "lf.tsv", tmp_path / "crlf.tsv"
        export_tsv(ds, lf)
        crlf.write_bytes(lf.read_bytes().replace(b"\n", b"\r\n"))
        assert import_tsv(crlf) == import_tsv(lf)

    def test_unicode_terms_round_trip(self, tmp_path):
        pairs = [
            dg.LabeledPair(TermPair("Ménière's disease", "Ménière vertigo"), 1, 9),
            dg.LabeledPair(TermPair("Ménière's disease", "Naïve pool term"), 0, 16),
        ]
        pairs = [
            dg.LabeledPair(p.pair, p.label, levenshtein(p.pair.term_a, p.pair.term_b))
            for p in pairs
        ]
        ds = dg.SimilarityDataset(
            name="tiny", family=FSN_SYN, split=EASY, neg_strategy=RANDOM,
            seed=3, pairs=pairs,
        )
        path = tmp_path / "uni.tsv"
        export_tsv(ds, path)
        assert import_tsv(path).pairs == pairs

    def test_bad_label_reports_line_number(self, all_datasets, tmp_path):
        ds = all_datasets[(FSN_SYN, EASY, RANDOM)]
        path = tmp_path / "bad.tsv"
        export_tsv(ds, path)
        lines = path.read_text(encoding="utf-8").splitlines()
        first_data = next(
            i for i, l in enumerate(lines) if not l.startswith("#")
        ) + 1  # header index -> first data row, 0-based
        lines[first_data] = lines[first_data].rsplit("\t", 1)[0] + "\t2"
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        with pytest.raises(ParseError, match=rf":{first_data + 1}:"):
            import_tsv(path)

    def test_wrong_field_count_rejected(self, tmp_path):
        path = tmp_path / "bad.tsv"
        path.write_text(
            "#family=fsn_syn\nterm_a\tterm_b\tlabel\nonly two\tfields\n",
            encoding="utf-8",
        )
        with pytest.raises(ParseError, match=":3:"):
            import_tsv(path)

    def test_missing_header_rejected(self, tmp_path):
        path = tmp_path / "bad.tsv"
        path.write_text("#family=fsn_syn\n", encoding="utf-8")
        with pytest.raises(ParseError, match="header"):
            import_tsv(path)

    def test_unexpected_header_rejected(self, tmp_path):
        path = tmp_path / "bad.tsv"
        path.write_text("a\tb\tc\nx\ty\t1\n", encoding="utf-8")
        with pytest.raises(ParseError, match="header"):
            import_tsv(path)

    def test_malformed_metadata_rejected(self, tmp_path):
        path = tmp_path / "bad.tsv"
        path.write_text("#justakey\nterm_a\tterm_b\tlabel\n", encoding="utf-8")
        with pytest.raises(ParseError, match="metadata"):
            import_tsv(path)
