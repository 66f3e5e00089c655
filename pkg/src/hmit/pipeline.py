"""Three-phase translate/annotate/proofread pipeline over a document.

Paragraphs are processed strictly in order because each finished segment is
persisted into both memories before the next one starts; that is what lets a
later paragraph retrieve its predecessors as few-shot examples within the
same run. A backend failure marks the segment as failed and the run moves on
(documents are long; one bad paragraph should not cost a rerun), while parse
problems only ever produce warnings.

Manual annotation mode replaces the Annotator call with a per-segment table
of human-written annotation lines; everything else behaves identically.
"""

from __future__ import annotations

import time
import uuid
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

from .backends import AgentBackend, GenerationResult
from .codes import AnnotationRecord, format_annotations, parse_annotations_detailed
from .config import PipelineConfig, Role
from .corpus import ParallelSegment
from .costing import UsageLedger, UsageRecord, count_words
from .glossary import Glossary, apply_glossary_to_role_prompt
from .memory import (
    NeighborQuery,
    Origin,
    ProofreadingEntry,
    ProofreadingMemory,
    TranslationEntry,
    TranslationMemory,
    pns_neighbors,
)
from .prompts import (
    build_annotator_prompt,
    build_proofreader_prompt,
    build_translator_prompt,
    load_role_prompt,
)

NONE_ERRORS = "NONE"


class PipelineError(RuntimeError):
    """A segment could not be processed (wraps the phase failure)."""


@dataclass(frozen=True)
class RunLogRecord:
    run_id: str
    doc_id: str
    segment: int
    phase: str
    prompt: str
    response: str
    warnings: tuple[str, ...]
    input_tokens: int
    output_tokens: int
    backend_id: str
    estimated_usage: bool
    example_keys: tuple[tuple[str, int], ...]
    timestamp: float

    def to_dict(self) -> dict:
        data = dict(self.__dict__)
        data["warnings"] = list(self.warnings)
        data["example_keys"] = [list(key) for key in self.example_keys]
        return data


@dataclass(frozen=True)
class SegmentOutcome:
    doc_id: str
    seg_id: int
    status: str  # done | failed
    machine_translation: str | None = None
    annotations: tuple[AnnotationRecord, ...] = ()
    final_translation: str | None = None
    error: str | None = None


@dataclass
class RunResult:
    run_id: str
    entries: list[ProofreadingEntry] = field(default_factory=list)
    outcomes: list[SegmentOutcome] = field(default_factory=list)
    log: list[RunLogRecord] = field(default_factory=list)

    @property
    def failed(self) -> list[SegmentOutcome]:
        return [o for o in self.outcomes if o.status == "failed"]


def _default_role_prompts() -> dict[Role, str]:
    return {role: load_role_prompt(role) for role in Role}


class _Run:
    def __init__(
        self,
        config: PipelineConfig,
        translation_memory: TranslationMemory,
        proofreading_memory: ProofreadingMemory,
        backends: Mapping[str, AgentBackend],
        manual_annotations: Mapping[tuple[str, int], str],
        ledger: UsageLedger | None,
        run_id: str,
        role_prompts: Mapping[Role, str],
        glossary: Glossary | None,
        clock: Callable[[], float],
    ):
        self.config = config
        self.tm = translation_memory
        self.pm = proofreading_memory
        self.backends = backends
        self.manual = manual_annotations
        self.ledger = ledger
        self.run_id = run_id
        self.role_prompts = role_prompts
        self.glossary = glossary
        self.clock = clock
        self.result = RunResult(run_id=run_id)

    def _backend(self, backend_id: str) -> AgentBackend:
        try:
            return self.backends[backend_id]
        except KeyError:
            raise PipelineError(f"no backend registered for {backend_id!r}") from None

    def _log(
        self,
        seg: ParallelSegment,
        phase: str,
        prompt: str,
        result: GenerationResult | None,
        warnings: Sequence[str] = (),
        backend_id: str = "",
        response: str = "",
        example_keys: Sequence[tuple[str, int]] = (),
    ) -> None:
        self.result.log.append(
            RunLogRecord(
                run_id=self.run_id,
                doc_id=seg.doc_id,
                segment=seg.seg_id,
                phase=phase,
                prompt=prompt,
                response=result.text if result else response,
                warnings=tuple(warnings),
                input_tokens=result.input_tokens if result else 0,
                output_tokens=result.output_tokens if result else 0,
                backend_id=result.backend_id if result else backend_id,
                estimated_usage=result.estimated_usage if result else False,
                example_keys=tuple(example_keys),
                timestamp=self.clock(),
            )
        )

    def _record_usage(self, seg: ParallelSegment, role: Role, result: GenerationResult) -> None:
        if self.ledger is None:
            return
        self.ledger.add(
            UsageRecord(
                run_id=self.run_id,
                doc_id=seg.doc_id,
                seg_id=seg.seg_id,
                role=role.value,
                backend_id=result.backend_id,
                input_tokens=result.input_tokens,
                output_tokens=result.output_tokens,
                estimated=result.estimated_usage,
            )
        )

    def _translate(self, seg: ParallelSegment) -> str:
        spec = self.config.translator
        role_prompt = self.role_prompts[Role.TRANSLATOR]
        if self.glossary is not None:
            role_prompt = apply_glossary_to_role_prompt(
                role_prompt, seg.source_text, self.glossary
            )
        examples: list[TranslationEntry] = []
        if spec.shots > 0:
            examples = pns_neighbors(
                self.tm, NeighborQuery(anchor=(seg.doc_id, seg.seg_id), k=spec.shots)
            )
        prompt = build_translator_prompt(
            seg.source_text,
            examples,
            role_prompt,
            self.config.source_lang,
            self.config.target_lang,
        )
        result = self._backend(spec.backend_id).generate(prompt, spec.params)
        mt = result.text.strip()
        self._log(
            seg, "translate", prompt, result, example_keys=[e.key for e in examples]
        )
        self._record_usage(seg, Role.TRANSLATOR, result)
        if not mt:
            raise PipelineError("translator returned an empty translation")
        return mt

    def _annotate(self, seg: ParallelSegment, mt: str) -> tuple[AnnotationRecord, ...]:
        spec = self.config.annotator
        if spec.is_manual:
            raw = self.manual.get((seg.doc_id, seg.seg_id), NONE_ERRORS)
            parsed = parse_annotations_detailed(raw)
            self._log(
                seg,
                "annotate",
                "",
                None,
                warnings=parsed.warnings,
                backend_id="manual",
                response=raw,
            )
            return tuple(parsed.records)
        prompt = build_annotator_prompt(seg.source_text, mt, self.role_prompts[Role.ANNOTATOR])
        result = self._backend(spec.backend_id).generate(prompt, spec.params)
        parsed = parse_annotations_detailed(result.text)
        self._log(seg, "annotate", prompt, result, warnings=parsed.warnings)
        self._record_usage(seg, Role.ANNOTATOR, result)
        return tuple(parsed.records)

    def _proofread(
        self, seg: ParallelSegment, mt: str, annotations: tuple[AnnotationRecord, ...]
    ) -> str:
        spec = self.config.proofreader
        errors_line = format_annotations(list(annotations))
        examples: list[ProofreadingEntry] = []
        if spec.shots > 0:
            examples = pns_neighbors(
                self.pm, NeighborQuery(anchor=(seg.doc_id, seg.seg_id), k=spec.shots)
            )
        prompt = build_proofreader_prompt(
            seg.source_text, mt, errors_line, examples, self.role_prompts[Role.PROOFREADER]
        )
        result = self._backend(spec.backend_id).generate(prompt, spec.params)
        final = result.text.strip()
        self._log(
            seg, "proofread", prompt, result, example_keys=[e.key for e in examples]
        )
        self._record_usage(seg, Role.PROOFREADER, result)
        if not final:
            raise PipelineError("proofreader returned an empty translation")
        return final

    def process(self, seg: ParallelSegment) -> SegmentOutcome:
        mt = self._translate(seg)
        annotations: tuple[AnnotationRecord, ...] = ()
        if self.config.annotator is not None:
            annotations = self._annotate(seg, mt)
        if self.config.proofreader is not None:
            final = self._proofread(seg, mt, annotations)
        else:
            final = mt
        prf_entry = ProofreadingEntry(
            doc_id=seg.doc_id,
            seg_id=seg.seg_id,
            source_text=seg.source_text,
            machine_translation=mt,
            annotated_errors=annotations,
            final_translation=final,
            origin=Origin.PIPELINE,
        )
        tm_entry = TranslationEntry(
            doc_id=seg.doc_id,
            seg_id=seg.seg_id,
            source_text=seg.source_text,
            target_text=final,
            origin=Origin.PIPELINE,
        )
        # validate both before persisting either, so the stores never diverge
        prf_entry.validate()
        tm_entry.validate()
        self.pm.upsert(prf_entry)
        self.tm.upsert(tm_entry)
        self.result.entries.append(prf_entry)
        return SegmentOutcome(
            doc_id=seg.doc_id,
            seg_id=seg.seg_id,
            status="done",
            machine_translation=mt,
            annotations=annotations,
            final_translation=final,
        )


def run_tap(
    doc: Sequence[ParallelSegment],
    config: PipelineConfig,
    translation_memory: TranslationMemory,
    proofreading_memory: ProofreadingMemory,
    backends: Mapping[str, AgentBackend],
    *,
    manual_annotations: Mapping[tuple[str, int], str] | None = None,
    ledger: UsageLedger | None = None,
    run_id: str | None = None,
    role_prompts: Mapping[Role, str] | None = None,
    glossary: Glossary | None = None,
    on_segment: Callable[[SegmentOutcome], None] | None = None,
    clock: Callable[[], float] = time.time,
) -> RunResult:
    """Run the configured agents over a document's segments, in order.

    Each successful segment persists a ProofreadingEntry and the (source,
    final) pair into the memories before the next segment starts. Failed
    segments are recorded and skipped. A translator-only config yields
    entries whose final translation is the machine translation and whose
    annotation list is empty.
    """
    if config.annotator is not None and config.annotator.is_manual:
        if manual_annotations is None:
            manual_annotations = {}
    run = _Run(
        config=config,
        translation_memory=translation_memory,
        proofreading_memory=proofreading_memory,
        backends=backends,
        manual_annotations=manual_annotations or {},
        ledger=ledger,
        run_id=run_id or uuid.uuid4().hex,
        role_prompts=role_prompts or _default_role_prompts(),
        glossary=glossary,
        clock=clock,
    )
    if ledger is not None:
        for doc_id in dict.fromkeys(seg.doc_id for seg in doc):
            words = sum(
                count_words(seg.source_text, config.source_lang)
                for seg in doc
                if seg.doc_id == doc_id
            )
            ledger.set_source_words(doc_id, words)
    for seg in doc:
        try:
            outcome = run.process(seg)
        except Exception as exc:
            outcome = SegmentOutcome(
                doc_id=seg.doc_id,
                seg_id=seg.seg_id,
                status="failed",
                error=f"{type(exc).__name__}: {exc}",
            )
        run.result.outcomes.append(outcome)
        if on_segment is not None:
            on_segment(outcome)
    return run.result
