"""File-backed service state: document segments, jobs, sheets, cost reports.

One directory holds everything: the segment store, both memories, per-job
run-logs and usage ledgers, and sealed evaluation sheets. All mutations to a
document are serialized under a per-document lock; post-edits are durable on
disk before the caller gets a response. Blinded sheet mappings live next to
their sheets but are only ever read server-side for scoring.
"""

from __future__ import annotations

import dataclasses
import json
import os
import threading
import time
import uuid
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path
from typing import Mapping, Sequence

from ..backends import BackendError, backends_for_config
from ..codes import AnnotationRecord, format_annotations
from ..config import PipelineConfig
from ..corpus import ParallelSegment, load_corpus
from ..costing import UsageLedger, api_cost, cost_ratio, default_pricing, human_cost
from ..evaluation import (
    EvaluationError,
    SystemOutput,
    make_eval_sheet,
    read_eval_sheet,
    read_mapping,
    score_eval_sheet,
    write_eval_sheet,
)
from ..memory import (
    Origin,
    ProofreadingEntry,
    ProofreadingMemory,
    TranslationEntry,
    TranslationMemory,
    _JsonlStore,
    _parse_canonical_annotations,
)
from ..pipeline import run_tap


class NotFoundError(LookupError):
    """Unknown document, segment, job, or sheet."""


class ConflictError(RuntimeError):
    """Stale version, or a write raced an active pipeline run."""


class InvalidRequestError(ValueError):
    """A submission that is well-formed JSON but semantically invalid."""


@dataclass(frozen=True)
class SegmentState:
    doc_id: str
    seg_id: int
    source: str
    machine_translation: str | None
    annotations: tuple[AnnotationRecord, ...]
    final: str | None
    origin: str
    version: int

    @property
    def key(self) -> tuple[str, int]:
        return (self.doc_id, self.seg_id)

    def validate(self) -> None:
        if not self.source.strip():
            raise InvalidRequestError("segment source must be non-empty")
        if self.version < 1:
            raise InvalidRequestError("segment version must be positive")


class _DocumentStore(_JsonlStore):
    @staticmethod
    def _to_record(entry: SegmentState) -> dict:
        return {
            "doc_id": entry.doc_id,
            "seg_id": entry.seg_id,
            "source": entry.source,
            "machine_translation": entry.machine_translation,
            "annotations": format_annotations(list(entry.annotations)),
            "final": entry.final,
            "origin": entry.origin,
            "version": entry.version,
        }

    @staticmethod
    def _from_record(record: dict, where: str) -> SegmentState:
        return SegmentState(
            doc_id=record["doc_id"],
            seg_id=record["seg_id"],
            source=record["source"],
            machine_translation=record["machine_translation"],
            annotations=_parse_canonical_annotations(record["annotations"], where),
            final=record["final"],
            origin=record["origin"],
            version=record["version"],
        )


_JOB_ORDER = {"queued": 0, "running": 1, "done": 2, "failed": 2}


@dataclass
class RunJob:
    job_id: str
    doc_id: str
    config_summary: str
    state: str = "queued"
    total: int = 0
    done: int = 0
    failed_segments: int = 0
    error: str | None = None
    created_at: float = 0.0

    def to_dict(self) -> dict:
        return dict(self.__dict__)


class ServiceState:
    """Owns the stores and serializes every mutation path through them."""

    def __init__(
        self,
        data_dir: str | Path,
        env: Mapping[str, str] | None = None,
        pricing=None,
    ):
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self.runs_dir = self.data_dir / "runs"
        self.runs_dir.mkdir(exist_ok=True)
        self.sheets_dir = self.data_dir / "sheets"
        self.sheets_dir.mkdir(exist_ok=True)
        self.documents = _DocumentStore(self.data_dir / "documents.jsonl")
        self.translation_memory = TranslationMemory(self.data_dir / "translation.jsonl")
        self.proofreading_memory = ProofreadingMemory(
            self.data_dir / "proofreading.jsonl"
        )
        self.env = dict(env) if env is not None else dict(os.environ)
        self.pricing = pricing if pricing is not None else default_pricing()
        self._lock = threading.Lock()
        self._doc_locks: dict[str, threading.Lock] = {}
        self._active_docs: set[str] = set()
        self._jobs: dict[str, RunJob] = {}
        self._threads: dict[str, threading.Thread] = {}
        self._jobs_path = self.data_dir / "jobs.jsonl"
        self._load_jobs()

    # --- locking helpers ---

    def _doc_lock(self, doc_id: str) -> threading.Lock:
        with self._lock:
            return self._doc_locks.setdefault(doc_id, threading.Lock())

    # --- jobs persistence ---

    def _load_jobs(self) -> None:
        if not self._jobs_path.exists():
            return
        with self._jobs_path.open(encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    record = json.loads(line)
                    self._jobs[record["job_id"]] = RunJob(**record)
        # a job that was live when the process died can never finish
        for job in self._jobs.values():
            if job.state in ("queued", "running"):
                job.state = "failed"
                job.error = "interrupted by service restart"
                self._persist_job(job)

    def _persist_job(self, job: RunJob) -> None:
        with self._jobs_path.open("a", encoding="utf-8") as fh:
            fh.write(json.dumps(job.to_dict(), ensure_ascii=False) + "\n")
            fh.flush()
            os.fsync(fh.fileno())

    def _transition(self, job: RunJob, state: str) -> None:
        with self._lock:
            if _JOB_ORDER[state] < _JOB_ORDER[job.state]:
                raise RuntimeError(f"job {job.job_id}: {job.state} -> {state}")
            job.state = state
            self._persist_job(job)

    # --- documents ---

    def ingest_corpus(self, path: str | Path) -> tuple[int, int]:
        """Load a corpus file into the document store, seeding translation
        memory for new segments. Re-ingesting is a no-op for known keys."""
        segments = load_corpus(path)
        added = 0
        skipped = 0
        for seg in segments:
            with self._doc_lock(seg.doc_id):
                if (seg.doc_id, seg.seg_id) in self.documents:
                    skipped += 1
                    continue
                self.documents.upsert(
                    SegmentState(
                        doc_id=seg.doc_id,
                        seg_id=seg.seg_id,
                        source=seg.source_text,
                        machine_translation=None,
                        annotations=(),
                        final=seg.target_text,
                        origin="corpus",
                        version=1,
                    )
                )
                self.translation_memory.upsert(
                    TranslationEntry(
                        doc_id=seg.doc_id,
                        seg_id=seg.seg_id,
                        source_text=seg.source_text,
                        target_text=seg.target_text,
                        origin=Origin.CORPUS,
                    )
                )
                added += 1
        return added, skipped

    def list_documents(self) -> list[dict]:
        counts: dict[str, int] = {}
        edited: dict[str, int] = {}
        for entry in self.documents.entries():
            counts[entry.doc_id] = counts.get(entry.doc_id, 0) + 1
            if entry.origin == "post-edit":
                edited[entry.doc_id] = edited.get(entry.doc_id, 0) + 1
        return [
            {"doc_id": doc_id, "segments": counts[doc_id], "edited": edited.get(doc_id, 0)}
            for doc_id in sorted(counts)
        ]

    def get_segments(self, doc_id: str) -> list[SegmentState]:
        segments = [e for e in self.documents.entries() if e.doc_id == doc_id]
        if not segments:
            raise NotFoundError(f"unknown document {doc_id!r}")
        return segments

    def vetting_bundle(self, doc_id: str) -> dict:
        segments = self.get_segments(doc_id)
        return {
            "doc_id": doc_id,
            "segments": [
                {
                    "seg_id": seg.seg_id,
                    "source": seg.source,
                    "final": seg.final,
                    "annotations": format_annotations(list(seg.annotations)),
                }
                for seg in segments
            ],
        }

    # --- post-editing ---

    def _feed_memories(self, seg: SegmentState) -> None:
        """Push an edited segment into both memories as post-edit feedback."""
        assert seg.final is not None
        machine = seg.machine_translation or seg.final
        self.proofreading_memory.upsert(
            ProofreadingEntry(
                doc_id=seg.doc_id,
                seg_id=seg.seg_id,
                source_text=seg.source,
                machine_translation=machine,
                annotated_errors=seg.annotations,
                final_translation=seg.final,
                origin=Origin.POST_EDIT,
            )
        )
        self.translation_memory.upsert(
            TranslationEntry(
                doc_id=seg.doc_id,
                seg_id=seg.seg_id,
                source_text=seg.source,
                target_text=seg.final,
                origin=Origin.POST_EDIT,
            )
        )

    def edit_segment(
        self,
        doc_id: str,
        seg_id: int,
        edited_translation: str,
        base_version: int,
        editor_annotations: Sequence[AnnotationRecord] | None = None,
    ) -> SegmentState:
        if not edited_translation or not edited_translation.strip():
            raise InvalidRequestError("edited_translation must be non-empty")
        with self._doc_lock(doc_id):
            if doc_id in self._active_docs:
                raise ConflictError(
                    f"a pipeline run is active for {doc_id}; retry when it finishes"
                )
            current = self.documents.get((doc_id, seg_id))
            if current is None:
                raise NotFoundError(f"unknown segment {doc_id!r} #{seg_id}")
            if base_version != current.version:
                raise ConflictError(
                    f"stale version {base_version}; segment is at {current.version}"
                )
            annotations = (
                tuple(editor_annotations)
                if editor_annotations is not None
                else current.annotations
            )
            updated = dataclasses.replace(
                current,
                final=edited_translation,
                annotations=annotations,
                origin="post-edit",
                version=current.version + 1,
            )
            self.documents.upsert(updated)
            self._feed_memories(updated)
            return updated

    def replace_all(self, doc_id: str, find: str, replace: str) -> dict:
        if not find:
            raise InvalidRequestError("find must be non-empty")
        with self._doc_lock(doc_id):
            if doc_id in self._active_docs:
                raise ConflictError(
                    f"a pipeline run is active for {doc_id}; retry when it finishes"
                )
            segments = self.get_segments(doc_id)
            planned = []
            for seg in segments:
                if seg.final and find in seg.final:
                    new_final = seg.final.replace(find, replace)
                    if not new_final.strip():
                        raise InvalidRequestError(
                            f"replacement would empty segment {seg.seg_id}"
                        )
                    planned.append((seg, new_final, seg.final.count(find)))
            replacements = 0
            for seg, new_final, count in planned:
                updated = dataclasses.replace(
                    seg,
                    final=new_final,
                    origin="post-edit",
                    version=seg.version + 1,
                )
                self.documents.upsert(updated)
                self._feed_memories(updated)
                replacements += count
            return {
                "doc_id": doc_id,
                "changed_segments": len(planned),
                "replacements": replacements,
            }

    # --- pipeline runs ---

    def start_run(
        self,
        doc_id: str,
        config: PipelineConfig,
        seg_ids: Sequence[int] | None = None,
        manual_annotations: Mapping[int, str] | None = None,
    ) -> RunJob:
        segments = self.get_segments(doc_id)
        by_id = {seg.seg_id: seg for seg in segments}
        if seg_ids is None:
            chosen = segments
        else:
            missing = [i for i in seg_ids if i not in by_id]
            if missing:
                raise InvalidRequestError(f"unknown segments: {missing}")
            chosen = [by_id[i] for i in sorted(set(seg_ids))]
        try:
            backends = backends_for_config(config, self.env)
        except (BackendError, ValueError) as exc:
            raise InvalidRequestError(str(exc)) from exc
        manual = {
            (doc_id, seg_id): line
            for seg_id, line in (manual_annotations or {}).items()
        }
        with self._lock:
            if doc_id in self._active_docs:
                raise ConflictError(f"a run is already active for {doc_id}")
            job = RunJob(
                job_id=uuid.uuid4().hex,
                doc_id=doc_id,
                config_summary=config.describe(),
                total=len(chosen),
                created_at=time.time(),
            )
            self._jobs[job.job_id] = job
            self._active_docs.add(doc_id)
            self._persist_job(job)
        thread = threading.Thread(
            target=self._execute_run,
            args=(job, config, chosen, manual, backends),
            daemon=True,
        )
        self._threads[job.job_id] = thread
        thread.start()
        return job

    def _execute_run(
        self,
        job: RunJob,
        config: PipelineConfig,
        segments: Sequence[SegmentState],
        manual: Mapping[tuple[str, int], str],
        backends: Mapping[str, object],
    ) -> None:
        try:
            self._transition(job, "running")
            doc = [
                ParallelSegment(
                    doc_id=seg.doc_id,
                    seg_id=seg.seg_id,
                    source_text=seg.source,
                    target_text=seg.final or seg.source,
                )
                for seg in segments
            ]
            ledger = UsageLedger(self.runs_dir / f"{job.job_id}.usage.jsonl")

            def on_segment(outcome) -> None:
                if outcome.status != "done":
                    job.failed_segments += 1
                    return
                current = self.documents.get((outcome.doc_id, outcome.seg_id))
                self.documents.upsert(
                    dataclasses.replace(
                        current,
                        machine_translation=outcome.machine_translation,
                        annotations=outcome.annotations,
                        final=outcome.final_translation,
                        origin="pipeline",
                        version=current.version + 1,
                    )
                )
                job.done += 1

            result = run_tap(
                doc,
                config,
                self.translation_memory,
                self.proofreading_memory,
                backends,
                manual_annotations=manual,
                ledger=ledger,
                run_id=job.job_id,
                on_segment=on_segment,
            )
            log_path = self.runs_dir / f"{job.job_id}.log.jsonl"
            with log_path.open("w", encoding="utf-8") as fh:
                for record in result.log:
                    fh.write(json.dumps(record.to_dict(), ensure_ascii=False) + "\n")
                fh.flush()
                os.fsync(fh.fileno())
            self._transition(job, "done")
        except Exception as exc:
            job.error = f"{type(exc).__name__}: {exc}"
            self._transition(job, "failed")
        finally:
            with self._lock:
                self._active_docs.discard(job.doc_id)

    def get_job(self, job_id: str) -> RunJob:
        job = self._jobs.get(job_id)
        if job is None:
            raise NotFoundError(f"unknown job {job_id!r}")
        return job

    def list_jobs(self) -> list[RunJob]:
        return sorted(self._jobs.values(), key=lambda j: j.created_at)

    def wait(self, job_id: str, timeout: float | None = None) -> RunJob:
        thread = self._threads.get(job_id)
        if thread is not None:
            thread.join(timeout)
        return self.get_job(job_id)

    def run_log(self, job_id: str) -> list[dict]:
        self.get_job(job_id)
        path = self.runs_dir / f"{job_id}.log.jsonl"
        if not path.exists():
            return []
        records = []
        with path.open(encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    records.append(json.loads(line))
        return records

    def run_cost(self, job_id: str) -> dict:
        job = self.get_job(job_id)
        path = self.runs_dir / f"{job_id}.usage.jsonl"
        ledger = UsageLedger(path) if path.exists() else UsageLedger()
        per_role, total = api_cost(ledger, self.pricing)
        words = sum(ledger.source_words().values())
        translation = human_cost(words, self.pricing, "translation")
        editing = human_cost(words, self.pricing, "editing")

        def money(value: Decimal) -> str:
            return str(value.quantize(Decimal("0.01"), rounding=ROUND_HALF_UP))

        report = {
            "job_id": job_id,
            "doc_id": job.doc_id,
            "source_words": words,
            "api_per_role": {role: money(cost) for role, cost in per_role.items()},
            "api_total": money(total),
            "human_translation": money(translation),
            "human_editing": money(editing),
        }
        if total > 0:
            report["ratio_vs_human_translation"] = float(cost_ratio(translation, total))
        return report

    # --- blinded evaluation sheets ---

    def create_sheet(
        self,
        doc_id: str,
        systems: Sequence[tuple[str, Mapping[int, str]]],
        seed: int,
        sample_size: int | None = None,
    ) -> tuple[str, list[dict]]:
        segments = self.get_segments(doc_id)
        pairs = [
            ParallelSegment(
                doc_id=seg.doc_id,
                seg_id=seg.seg_id,
                source_text=seg.source,
                target_text=seg.final or seg.source,
            )
            for seg in segments
        ]
        outputs = [
            SystemOutput(
                system_id=system_id,
                translations={
                    (doc_id, seg_id): text for seg_id, text in translations.items()
                },
            )
            for system_id, translations in systems
        ]
        sheet_id = uuid.uuid4().hex[:12]
        rows, _mapping = make_eval_sheet(
            pairs,
            outputs,
            seed=seed,
            sample_size=sample_size,
            mapping_path=self.sheets_dir / f"{sheet_id}.mapping.jsonl",
        )
        write_eval_sheet(rows, self.sheets_dir / f"{sheet_id}.csv")
        views = [
            {
                "segment_no": row.segment_no,
                "sentence_no": row.sentence_no,
                "source": row.source_sentence,
                "blinded_id": row.blinded_system_id,
                "translation": row.translation,
            }
            for row in rows
        ]
        return sheet_id, views

    def score_sheet(
        self,
        sheet_id: str,
        scores: Sequence[Mapping],
        baseline: str | None = None,
    ) -> list[dict]:
        sheet_path = self.sheets_dir / f"{sheet_id}.csv"
        mapping_path = self.sheets_dir / f"{sheet_id}.mapping.jsonl"
        if not sheet_path.exists() or not mapping_path.exists():
            raise NotFoundError(f"unknown sheet {sheet_id!r}")
        rows = read_eval_sheet(sheet_path)
        mapping = read_mapping(mapping_path)
        by_key = {
            (row.segment_no, row.sentence_no, row.blinded_system_id): i
            for i, row in enumerate(rows)
        }
        filled = list(rows)
        for score in scores:
            key = (score["segment_no"], score["sentence_no"], score["blinded_id"])
            index = by_key.get(key)
            if index is None:
                raise InvalidRequestError(f"no sheet row matches {key}")
            filled[index] = dataclasses.replace(
                filled[index], a=score["a"], c=score["c"], s=score["s"]
            )
        results = score_eval_sheet(filled, mapping, baseline=baseline)
        return [
            {
                "system_id": item.system_id,
                "a": item.score.a,
                "c": item.score.c,
                "s": item.score.s,
                "acs": item.score.i,
                "deltas": dict(item.deltas) if item.deltas is not None else None,
            }
            for item in results
        ]
