"""Request/response shapes for the HTTP API."""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, Field


class AnnotationModel(BaseModel):
    code: str
    excerpt: str
    suggestion: str | None = None


class SegmentModel(BaseModel):
    doc_id: str
    seg_id: int
    source: str
    machine_translation: str | None
    annotations: list[AnnotationModel]
    final: str | None
    origin: str
    version: int


class DocumentSummary(BaseModel):
    doc_id: str
    segments: int
    edited: int


class CodeModel(BaseModel):
    code: str
    category: str
    description: str


class EditRequest(BaseModel):
    doc_id: str
    scope: Literal["segment", "replace-all-occurrences"] = "segment"
    seg_id: int | None = None
    edited_translation: str | None = None
    editor_annotations: list[AnnotationModel] | None = None
    base_version: int | None = None
    find: str | None = None
    replace: str | None = None


class ReplaceAllResult(BaseModel):
    doc_id: str
    changed_segments: int
    replacements: int


class RunRequest(BaseModel):
    doc_id: str
    config: dict
    seg_ids: list[int] | None = None
    manual_annotations: dict[int, str] | None = None


class JobModel(BaseModel):
    job_id: str
    doc_id: str
    config_summary: str
    state: Literal["queued", "running", "done", "failed"]
    total: int
    done: int
    failed_segments: int
    error: str | None
    created_at: float


class SystemOutputModel(BaseModel):
    system_id: str
    translations: dict[int, str]


class SheetRequest(BaseModel):
    doc_id: str
    systems: list[SystemOutputModel] = Field(min_length=1)
    seed: int = 0
    sample_size: int | None = None


class SheetRowModel(BaseModel):
    segment_no: int
    sentence_no: int
    source: str
    blinded_id: str
    translation: str


class SheetModel(BaseModel):
    sheet_id: str
    rows: list[SheetRowModel]


class ScoreRowModel(BaseModel):
    segment_no: int
    sentence_no: int
    blinded_id: str
    a: float = Field(ge=0, le=10)
    c: float = Field(ge=0, le=10)
    s: float = Field(ge=0, le=10)


class ScoreRequest(BaseModel):
    rows: list[ScoreRowModel] = Field(min_length=1)
    baseline: str | None = None


class SystemScoreModel(BaseModel):
    system_id: str
    a: float
    c: float
    s: float
    acs: float
    deltas: dict[str, str] | None
