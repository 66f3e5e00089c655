"""HTTP API over the service state.

Document ids contain slashes (court case numbers), so document-scoped routes
take doc_id as a query parameter or in the request body rather than in the
path. The sealed sheet mapping has no route on purpose: scoring is the only
way blinded data resolves back to system identities.
"""

from __future__ import annotations

from fastapi import FastAPI, Query
from fastapi.responses import JSONResponse

from ..codes import AnnotationError, AnnotationRecord, registry
from ..config import ConfigError, config_from_dict
from ..corpus import CorpusError
from ..evaluation import EvaluationError
from .schemas import (
    AnnotationModel,
    CodeModel,
    DocumentSummary,
    EditRequest,
    JobModel,
    ReplaceAllResult,
    RunRequest,
    ScoreRequest,
    SegmentModel,
    SheetModel,
    SheetRequest,
    SheetRowModel,
    SystemScoreModel,
)
from .state import (
    ConflictError,
    InvalidRequestError,
    NotFoundError,
    RunJob,
    SegmentState,
    ServiceState,
)


def _segment_model(seg: SegmentState) -> SegmentModel:
    return SegmentModel(
        doc_id=seg.doc_id,
        seg_id=seg.seg_id,
        source=seg.source,
        machine_translation=seg.machine_translation,
        annotations=[
            AnnotationModel(code=r.code, excerpt=r.excerpt, suggestion=r.suggestion)
            for r in seg.annotations
        ],
        final=seg.final,
        origin=seg.origin,
        version=seg.version,
    )


def _job_model(job: RunJob) -> JobModel:
    return JobModel(**job.to_dict())


def _records(annotations: list[AnnotationModel] | None):
    if annotations is None:
        return None
    return [
        AnnotationRecord(code=a.code, excerpt=a.excerpt, suggestion=a.suggestion)
        for a in annotations
    ]


def create_app(state: ServiceState) -> FastAPI:
    app = FastAPI(title="hmit service")

    @app.exception_handler(NotFoundError)
    async def _not_found(request, exc):
        return JSONResponse(status_code=404, content={"detail": str(exc)})

    @app.exception_handler(ConflictError)
    async def _conflict(request, exc):
        return JSONResponse(status_code=409, content={"detail": str(exc)})

    @app.exception_handler(InvalidRequestError)
    async def _invalid(request, exc):
        return JSONResponse(status_code=422, content={"detail": str(exc)})

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok"}

    @app.get("/codes", response_model=list[CodeModel])
    def codes():
        return [
            CodeModel(code=c.code, category=c.category.value, description=c.description)
            for c in registry()
        ]

    @app.get("/documents", response_model=list[DocumentSummary])
    def documents():
        return [DocumentSummary(**item) for item in state.list_documents()]

    @app.get("/documents/segments", response_model=list[SegmentModel])
    def segments(doc_id: str = Query(...)):
        return [_segment_model(seg) for seg in state.get_segments(doc_id)]

    @app.get("/documents/vetting-bundle")
    def vetting_bundle(doc_id: str = Query(...)):
        return state.vetting_bundle(doc_id)

    @app.post("/documents/edits")
    def edit(request: EditRequest):
        try:
            if request.scope == "segment":
                if request.seg_id is None:
                    raise InvalidRequestError("seg_id is required for segment scope")
                if request.base_version is None:
                    raise InvalidRequestError("base_version is required for segment scope")
                if not request.edited_translation:
                    raise InvalidRequestError("edited_translation must be non-empty")
                seg = state.edit_segment(
                    request.doc_id,
                    request.seg_id,
                    request.edited_translation,
                    request.base_version,
                    editor_annotations=_records(request.editor_annotations),
                )
                return _segment_model(seg)
            if request.find is None or request.replace is None:
                raise InvalidRequestError(
                    "find and replace are required for replace-all scope"
                )
            return ReplaceAllResult(
                **state.replace_all(request.doc_id, request.find, request.replace)
            )
        except AnnotationError as exc:
            raise InvalidRequestError(str(exc)) from exc

    @app.post("/runs", response_model=JobModel, status_code=202)
    def start_run(request: RunRequest):
        try:
            config = config_from_dict(request.config)
        except ConfigError as exc:
            raise InvalidRequestError(str(exc)) from exc
        job = state.start_run(
            request.doc_id,
            config,
            seg_ids=request.seg_ids,
            manual_annotations=request.manual_annotations,
        )
        return _job_model(job)

    @app.get("/runs", response_model=list[JobModel])
    def jobs():
        return [_job_model(job) for job in state.list_jobs()]

    @app.get("/runs/{job_id}", response_model=JobModel)
    def job(job_id: str):
        return _job_model(state.get_job(job_id))

    @app.get("/runs/{job_id}/log")
    def run_log(job_id: str):
        return {"job_id": job_id, "records": state.run_log(job_id)}

    @app.get("/runs/{job_id}/cost")
    def run_cost(job_id: str):
        return state.run_cost(job_id)

    @app.post("/eval/sheets", response_model=SheetModel)
    def create_sheet(request: SheetRequest):
        try:
            sheet_id, rows = state.create_sheet(
                request.doc_id,
                [(s.system_id, s.translations) for s in request.systems],
                seed=request.seed,
                sample_size=request.sample_size,
            )
        except (EvaluationError, CorpusError) as exc:
            raise InvalidRequestError(str(exc)) from exc
        return SheetModel(
            sheet_id=sheet_id, rows=[SheetRowModel(**row) for row in rows]
        )

    @app.post("/eval/sheets/{sheet_id}/scores", response_model=list[SystemScoreModel])
    def score_sheet(sheet_id: str, request: ScoreRequest):
        try:
            results = state.score_sheet(
                sheet_id,
                [row.model_dump() for row in request.rows],
                baseline=request.baseline,
            )
        except EvaluationError as exc:
            raise InvalidRequestError(str(exc)) from exc
        return [SystemScoreModel(**item) for item in results]

    return app
