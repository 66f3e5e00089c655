"""Translation and proofreading memories with physical-neighbor retrieval.

Both memories are keyed by (doc_id, seg_id) and persisted as append-compacted
object-per-line files: every upsert appends one record and fsyncs before the
in-memory view changes, and loading replays the log with last-writer-wins.
Annotation lists are stored in the canonical one-line format of
:mod:`hmit.codes`.

Physical Neighbor Sampling ranks candidate examples by positional proximity
to an anchor segment: same-document entries first by paragraph distance, then
other documents in lexicographic order. The distance is deliberately a plain
function so a different ranking strategy can replace it without touching
callers.
"""

from __future__ import annotations

import json
import os
import threading
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable

from .codes import AnnotationRecord, format_annotations, parse_annotations
from .corpus import ParallelSegment

Key = tuple[str, int]


class Origin(str, Enum):
    CORPUS = "corpus"
    POST_EDIT = "post-edit"
    PIPELINE = "pipeline"


class MemoryStoreError(ValueError):
    """A memory entry or store file violates an invariant."""


@dataclass(frozen=True)
class TranslationEntry:
    doc_id: str
    seg_id: int
    source_text: str
    target_text: str
    origin: Origin = Origin.CORPUS

    @property
    def key(self) -> Key:
        return (self.doc_id, self.seg_id)

    def validate(self) -> None:
        if not self.source_text or not self.target_text:
            raise MemoryStoreError(f"translation entry {self.key} has an empty text")
        if not isinstance(self.origin, Origin):
            raise MemoryStoreError(f"bad origin {self.origin!r}")


@dataclass(frozen=True)
class ProofreadingEntry:
    doc_id: str
    seg_id: int
    source_text: str
    machine_translation: str
    annotated_errors: tuple[AnnotationRecord, ...]
    final_translation: str
    origin: Origin = Origin.PIPELINE

    @property
    def key(self) -> Key:
        return (self.doc_id, self.seg_id)

    def validate(self) -> None:
        if not self.source_text or not self.machine_translation or not self.final_translation:
            raise MemoryStoreError(f"proofreading entry {self.key} has an empty text")
        if self.origin not in (Origin.PIPELINE, Origin.POST_EDIT):
            raise MemoryStoreError(
                f"proofreading entry {self.key} has origin {self.origin!r}; "
                f"only pipeline and post-edit entries belong here"
            )


@dataclass(frozen=True)
class NeighborQuery:
    anchor: Key
    k: int = 5
    exclude_anchor: bool = True

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValueError("k must be at least 1")


def _translation_record(entry: TranslationEntry) -> dict:
    return {
        "doc_id": entry.doc_id,
        "seg_id": entry.seg_id,
        "source_text": entry.source_text,
        "target_text": entry.target_text,
        "origin": entry.origin.value,
    }


def _proofreading_record(entry: ProofreadingEntry) -> dict:
    return {
        "doc_id": entry.doc_id,
        "seg_id": entry.seg_id,
        "source_text": entry.source_text,
        "machine_translation": entry.machine_translation,
        "annotated_errors": format_annotations(list(entry.annotated_errors)),
        "final_translation": entry.final_translation,
        "origin": entry.origin.value,
    }


def _parse_canonical_annotations(line: str, where: str) -> tuple[AnnotationRecord, ...]:
    records = parse_annotations(line)
    if format_annotations(records) != line:
        raise MemoryStoreError(f"{where}: annotated_errors is not in canonical form: {line!r}")
    return tuple(records)


def _translation_from_record(record: dict, where: str) -> TranslationEntry:
    try:
        entry = TranslationEntry(
            doc_id=record["doc_id"],
            seg_id=record["seg_id"],
            source_text=record["source_text"],
            target_text=record["target_text"],
            origin=Origin(record["origin"]),
        )
    except (KeyError, ValueError) as exc:
        raise MemoryStoreError(f"{where}: malformed translation record ({exc})") from exc
    entry.validate()
    return entry


def _proofreading_from_record(record: dict, where: str) -> ProofreadingEntry:
    try:
        entry = ProofreadingEntry(
            doc_id=record["doc_id"],
            seg_id=record["seg_id"],
            source_text=record["source_text"],
            machine_translation=record["machine_translation"],
            annotated_errors=_parse_canonical_annotations(record["annotated_errors"], where),
            final_translation=record["final_translation"],
            origin=Origin(record["origin"]),
        )
    except (KeyError, ValueError) as exc:
        raise MemoryStoreError(f"{where}: malformed proofreading record ({exc})") from exc
    entry.validate()
    return entry


class _JsonlStore:
    """Append-compacted object-per-line store with last-writer-wins replay.

    With no path the store is purely in-memory (tests, dry runs). One writer
    at a time; readers get consistent snapshots.
    """

    _to_record = None
    _from_record = None

    def __init__(self, path: str | Path | None = None):
        self._path = Path(path) if path is not None else None
        self._entries: dict[Key, object] = {}
        self._lock = threading.Lock()
        if self._path is not None and self._path.exists():
            self._replay()

    def _replay(self) -> None:
        with self._path.open(encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                where = f"{self._path.name}:{lineno}"
                try:
                    record = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise MemoryStoreError(f"{where}: invalid JSON ({exc.msg})") from exc
                entry = type(self)._from_record(record, where)
                self._entries[entry.key] = entry

    def _append(self, entry) -> None:
        if self._path is None:
            return
        line = json.dumps(type(self)._to_record(entry), ensure_ascii=False) + "\n"
        self._path.parent.mkdir(parents=True, exist_ok=True)
        with self._path.open("a", encoding="utf-8") as fh:
            fh.write(line)
            fh.flush()
            os.fsync(fh.fileno())

    def upsert(self, entry) -> None:
        """Durably persist, then expose; on write failure the store is unchanged."""
        entry.validate()
        with self._lock:
            self._append(entry)
            self._entries[entry.key] = entry

    def get(self, key: Key):
        with self._lock:
            return self._entries.get(key)

    def entries(self) -> list:
        """Snapshot of all entries, ordered by key."""
        with self._lock:
            return [self._entries[key] for key in sorted(self._entries)]

    def keys(self) -> list[Key]:
        with self._lock:
            return sorted(self._entries)

    def __len__(self) -> int:
        with self._lock:
            return len(self._entries)

    def __contains__(self, key: Key) -> bool:
        with self._lock:
            return key in self._entries

    def compact(self) -> None:
        """Rewrite the backing file with one record per live entry."""
        if self._path is None:
            return
        with self._lock:
            tmp = self._path.with_suffix(self._path.suffix + ".tmp")
            with tmp.open("w", encoding="utf-8") as fh:
                for key in sorted(self._entries):
                    fh.write(
                        json.dumps(type(self)._to_record(self._entries[key]), ensure_ascii=False)
                        + "\n"
                    )
                fh.flush()
                os.fsync(fh.fileno())
            tmp.replace(self._path)


class TranslationMemory(_JsonlStore):
    _to_record = staticmethod(_translation_record)
    _from_record = staticmethod(_translation_from_record)


class ProofreadingMemory(_JsonlStore):
    _to_record = staticmethod(_proofreading_record)
    _from_record = staticmethod(_proofreading_from_record)


def pns_rank_key(anchor: Key, doc_id: str, seg_id: int):
    """Sort key for physical distance from the anchor segment.

    Same-document entries rank first by paragraph distance; everything else
    follows in lexicographic (doc_id, seg_id) order. Ties always resolve by
    (doc_id, seg_id).
    """
    anchor_doc, anchor_seg = anchor
    if doc_id == anchor_doc:
        return (0, abs(seg_id - anchor_seg), doc_id, seg_id)
    return (1, doc_id, seg_id)


def pns_neighbors(store: _JsonlStore, query: NeighborQuery) -> list:
    """Up to k entries nearest the anchor under the physical distance."""
    candidates = store.entries()
    if query.exclude_anchor:
        candidates = [e for e in candidates if e.key != query.anchor]
    candidates.sort(key=lambda e: pns_rank_key(query.anchor, e.doc_id, e.seg_id))
    return candidates[: query.k]


def seed_translation_memory(
    store: TranslationMemory, segments: Iterable[ParallelSegment]
) -> int:
    """Import corpus segments as corpus-origin translation entries."""
    count = 0
    for seg in segments:
        store.upsert(
            TranslationEntry(
                doc_id=seg.doc_id,
                seg_id=seg.seg_id,
                source_text=seg.source_text,
                target_text=seg.target_text,
                origin=Origin.CORPUS,
            )
        )
        count += 1
    return count


def export_memory(store: _JsonlStore, path: str | Path) -> None:
    """Write a compacted, key-ordered interchange file of the store."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for entry in store.entries():
            fh.write(json.dumps(type(store)._to_record(entry), ensure_ascii=False) + "\n")


def import_memory(
    path: str | Path, store_path: str | Path | None = None
) -> TranslationMemory | ProofreadingMemory:
    """Load an interchange file, inferring the memory kind from its records.

    Unlike store replay, interchange files are strict: a duplicate key is an
    error naming the key, not a newer version of the entry.
    """
    path = Path(path)
    store: TranslationMemory | ProofreadingMemory | None = None
    seen: set[Key] = set()
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            where = f"{path.name}:{lineno}"
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MemoryStoreError(f"{where}: invalid JSON ({exc.msg})") from exc
            if store is None:
                kind = ProofreadingMemory if "machine_translation" in record else TranslationMemory
                store = kind(store_path)
            entry = type(store)._from_record(record, where)
            if entry.key in seen:
                raise MemoryStoreError(f"{where}: duplicate key {entry.key}")
            seen.add(entry.key)
            store.upsert(entry)
    return store if store is not None else TranslationMemory(store_path)
