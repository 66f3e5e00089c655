"""Memory stores and physical-neighbor retrieval."""

import random

import pytest
from hypothesis import given, settings, strategies as st

from hmit.codes import AnnotationRecord
from hmit.corpus import load_corpus
from hmit.memory import (
    MemoryStoreError,
    NeighborQuery,
    Origin,
    ProofreadingEntry,
    ProofreadingMemory,
    TranslationEntry,
    TranslationMemory,
    export_memory,
    import_memory,
    pns_neighbors,
    seed_translation_memory,
)


def t_entry(doc, seg, src="src", tar="tar", origin=Origin.CORPUS):
    return TranslationEntry(doc, seg, f"{src} {doc}#{seg}", f"{tar} {doc}#{seg}", origin)


def p_entry(doc, seg, origin=Origin.PIPELINE):
    return ProofreadingEntry(
        doc_id=doc,
        seg_id=seg,
        source_text=f"source {doc}#{seg}",
        machine_translation=f"mt {doc}#{seg}",
        annotated_errors=(AnnotationRecord("CW", f"mt {doc}#{seg}", f"final {doc}#{seg}"),),
        final_translation=f"final {doc}#{seg}",
        origin=origin,
    )


class TestStoreBasics:
    def test_upsert_get_round_trip(self, tmp_path):
        store = TranslationMemory(tmp_path / "tm.ndjson")
        entry = t_entry("FACC1/2021", 3)
        store.upsert(entry)
        assert store.get(("FACC1/2021", 3)) == entry

    def test_last_writer_wins(self, tmp_path):
        store = TranslationMemory(tmp_path / "tm.ndjson")
        store.upsert(t_entry("A", 1, tar="first"))
        newer = t_entry("A", 1, tar="second")
        store.upsert(newer)
        assert store.get(("A", 1)) == newer
        assert len(store) == 1

    def test_reload_replays_log(self, tmp_path):
        path = tmp_path / "tm.ndjson"
        store = TranslationMemory(path)
        store.upsert(t_entry("A", 1, tar="first"))
        store.upsert(t_entry("A", 1, tar="second"))
        store.upsert(t_entry("B", 1))
        reloaded = TranslationMemory(path)
        assert reloaded.entries() == store.entries()
        # append log keeps both versions on disk; replay keeps the last
        assert len(path.read_text().strip().split("\n")) == 3
        assert len(reloaded) == 2

    def test_random_upserts_match_map_oracle(self, tmp_path):
        path = tmp_path / "tm.ndjson"
        store = TranslationMemory(path)
        oracle = {}
        rng = random.Random(42)
        for i in range(1000):
            doc = f"D{rng.randrange(5)}"
            seg = rng.randrange(1, 20)
            entry = TranslationEntry(doc, seg, f"s{i}", f"t{i}", Origin.PIPELINE)
            store.upsert(entry)
            oracle[(doc, seg)] = entry
        assert {e.key: e for e in store.entries()} == oracle
        reloaded = TranslationMemory(path)
        assert {e.key: e for e in reloaded.entries()} == oracle

    def test_durable_before_return(self, tmp_path):
        path = tmp_path / "tm.ndjson"
        TranslationMemory(path).upsert(t_entry("A", 1))
        # a fresh handle on the same file sees the entry with no close/flush
        # of the first store
        assert len(TranslationMemory(path)) == 1

    def test_failed_write_leaves_store_unchanged(self, tmp_path):
        path = tmp_path / "tm.ndjson"
        store = TranslationMemory(path)
        store.upsert(t_entry("A", 1))
        path.unlink()
        path.mkdir()  # appending now fails
        with pytest.raises(OSError):
            store.upsert(t_entry("A", 2))
        assert store.keys() == [("A", 1)]

    def test_in_memory_store(self):
        store = TranslationMemory()
        store.upsert(t_entry("A", 1))
        assert len(store) == 1

    def test_compact_dedupes_file(self, tmp_path):
        path = tmp_path / "tm.ndjson"
        store = TranslationMemory(path)
        for tar in ("a", "b", "c"):
            store.upsert(t_entry("A", 1, tar=tar))
        store.compact()
        assert len(path.read_text().strip().split("\n")) == 1
        assert TranslationMemory(path).entries() == store.entries()

    def test_invalid_entry_rejected(self, tmp_path):
        store = TranslationMemory(tmp_path / "tm.ndjson")
        with pytest.raises(MemoryStoreError):
            store.upsert(TranslationEntry("A", 1, "", "tar"))

    def test_proofreading_origin_restricted(self):
        with pytest.raises(MemoryStoreError):
            ProofreadingMemory().upsert(p_entry("A", 1, origin=Origin.CORPUS))

    def test_proofreading_round_trip_with_annotations(self, tmp_path):
        path = tmp_path / "pm.ndjson"
        store = ProofreadingMemory(path)
        entry = ProofreadingEntry(
            doc_id="A",
            seg_id=1,
            source_text="src",
            machine_translation="mt with 判案書",
            annotated_errors=(
                AnnotationRecord("CW", "判案書", "判決書"),
                AnnotationRecord("OM", 'quoted "span"'),
            ),
            final_translation="mt with 判決書",
            origin=Origin.PIPELINE,
        )
        store.upsert(entry)
        assert ProofreadingMemory(path).get(("A", 1)) == entry
        assert '[CW] \\"判案書\\" -> \\"判決書\\"' in path.read_text(encoding="utf-8")

    def test_empty_annotations_round_trip(self, tmp_path):
        path = tmp_path / "pm.ndjson"
        entry = ProofreadingEntry("A", 1, "s", "m", (), "f", Origin.POST_EDIT)
        store = ProofreadingMemory(path)
        store.upsert(entry)
        assert ProofreadingMemory(path).get(("A", 1)) == entry


def brute_force_pns(entries, anchor, k, exclude_anchor=True):
    doc, seg = anchor

    def distance(entry):
        if entry.doc_id == doc:
            return (0, abs(entry.seg_id - seg), entry.doc_id, entry.seg_id)
        return (1, entry.doc_id, entry.seg_id)

    pool = [e for e in entries if not (exclude_anchor and e.key == anchor)]
    return sorted(pool, key=distance)[:k]


class TestNeighborSampling:
    def test_single_document_window(self):
        # independently derived: distances from seg 5 are 4:1, 6:1, 3:2,
        # 7:2, 2:3, ...; ascending seg_id breaks the ties
        store = TranslationMemory()
        for seg in range(1, 11):
            store.upsert(t_entry("DOC", seg))
        result = pns_neighbors(store, NeighborQuery(anchor=("DOC", 5)))
        assert [e.seg_id for e in result] == [4, 6, 3, 7, 2]

    def test_k_larger_than_store(self):
        store = TranslationMemory()
        for seg in range(1, 4):
            store.upsert(t_entry("DOC", seg))
        result = pns_neighbors(store, NeighborQuery(anchor=("DOC", 2), k=10))
        assert [e.seg_id for e in result] == [1, 3]

    def test_empty_store(self):
        assert pns_neighbors(TranslationMemory(), NeighborQuery(anchor=("X", 1))) == []

    def test_include_anchor(self):
        store = TranslationMemory()
        for seg in range(1, 4):
            store.upsert(t_entry("DOC", seg))
        result = pns_neighbors(store, NeighborQuery(anchor=("DOC", 2), k=3, exclude_anchor=False))
        assert [e.seg_id for e in result] == [2, 1, 3]

    def test_other_documents_follow_same_document(self):
        store = TranslationMemory()
        for doc in ("B", "A", "C"):
            for seg in (1, 2):
                store.upsert(t_entry(doc, seg))
        result = pns_neighbors(store, NeighborQuery(anchor=("B", 1), k=6))
        assert [(e.doc_id, e.seg_id) for e in result] == [
            ("B", 2),
            ("A", 1),
            ("A", 2),
            ("C", 1),
            ("C", 2),
        ]

    def test_query_validation(self):
        with pytest.raises(ValueError):
            NeighborQuery(anchor=("A", 1), k=0)

    def test_defaults(self):
        query = NeighborQuery(anchor=("A", 1))
        assert query.k == 5 and query.exclude_anchor is True

    @settings(max_examples=200)
    @given(
        entries=st.lists(
            st.tuples(st.sampled_from("ABCD"), st.integers(min_value=1, max_value=30)),
            max_size=40,
            unique=True,
        ),
        anchor=st.tuples(st.sampled_from("ABCD"), st.integers(min_value=1, max_value=30)),
        k=st.integers(min_value=1, max_value=10),
        exclude=st.booleans(),
    )
    def test_oracle_equivalence(self, entries, anchor, k, exclude):
        store = TranslationMemory()
        for doc, seg in entries:
            store.upsert(t_entry(doc, seg))
        query = NeighborQuery(anchor=anchor, k=k, exclude_anchor=exclude)
        result = pns_neighbors(store, query)
        assert result == brute_force_pns(store.entries(), anchor, k, exclude)
        if exclude:
            assert all(e.key != anchor for e in result)
        # determinism
        assert pns_neighbors(store, query) == result


class TestInterchange:
    def test_translation_round_trip(self, tmp_path):
        store = TranslationMemory()
        for seg in range(1, 6):
            store.upsert(t_entry("DOC/2021", seg, origin=Origin.PIPELINE))
        out = tmp_path / "tm.export.ndjson"
        export_memory(store, out)
        imported = import_memory(out)
        assert isinstance(imported, TranslationMemory)
        assert imported.entries() == store.entries()

    def test_proofreading_round_trip(self, tmp_path):
        store = ProofreadingMemory()
        for seg in range(1, 4):
            store.upsert(p_entry("DOC", seg))
        out = tmp_path / "pm.export.ndjson"
        export_memory(store, out)
        imported = import_memory(out)
        assert isinstance(imported, ProofreadingMemory)
        assert imported.entries() == store.entries()

    def test_duplicate_key_names_key(self, tmp_path):
        store = TranslationMemory()
        store.upsert(t_entry("A", 1))
        out = tmp_path / "dup.ndjson"
        export_memory(store, out)
        out.write_text(out.read_text() * 2)
        with pytest.raises(MemoryStoreError, match=r"\('A', 1\)"):
            import_memory(out)

    def test_corpus_seeding_count(self, corpus_path):
        store = TranslationMemory()
        count = seed_translation_memory(store, load_corpus(corpus_path))
        # record count recounted independently over the fixture file
        assert count == 10
        assert len(store) == 10
        assert all(e.origin is Origin.CORPUS for e in store.entries())

    def test_empty_import(self, tmp_path):
        path = tmp_path / "empty.ndjson"
        path.write_text("")
        assert len(import_memory(path)) == 0
