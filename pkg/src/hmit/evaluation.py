"""Quality evaluation: the weighted ACS score, metric adapters, the shot and
annotator ablation grid, and the blinded human scoring sheet.

ACS combines three expert-judged dimensions (accuracy of legal meaning,
coherence and cohesion, style appropriateness) into one number. Learned
automated metrics stay out of process behind small adapters; a character
n-gram overlap adapter ships built in so the harness runs anywhere.

The human sheet is blinded: rows carry opaque system tokens and the token to
system mapping is sealed into a separate file that scoring reads back later.
"""

from __future__ import annotations

import csv
import json
import random
import re
import statistics
import subprocess
from collections import Counter
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Callable, Mapping, Protocol, Sequence

import httpx

from .config import PipelineConfig, config_from_dict
from .corpus import ParallelSegment
from .memory import ProofreadingMemory, TranslationMemory, seed_translation_memory
from .pipeline import run_tap


class EvaluationError(ValueError):
    """Invalid weights, scores, sheets, or adapter responses."""


@dataclass(frozen=True)
class AcsWeights:
    alpha: float = 0.6
    beta: float = 0.3
    gamma: float = 0.1

    def __post_init__(self) -> None:
        for name in ("alpha", "beta", "gamma"):
            if getattr(self, name) < 0:
                raise EvaluationError(f"{name} must be non-negative")
        total = self.alpha + self.beta + self.gamma
        if abs(total - 1.0) > 1e-9:
            raise EvaluationError(f"weights must sum to 1, got {total}")


DEFAULT_WEIGHTS = AcsWeights()


@dataclass(frozen=True)
class AcsScore:
    a: float
    c: float
    s: float
    i: float
    weights: AcsWeights = DEFAULT_WEIGHTS


def compute_acs(a: float, c: float, s: float, weights: AcsWeights = DEFAULT_WEIGHTS) -> AcsScore:
    """Weighted combination of the three dimension scores, each in [0, 10]."""
    for name, value in (("a", a), ("c", c), ("s", s)):
        if not 0 <= value <= 10:
            raise EvaluationError(f"component {name}={value} outside [0, 10]")
    i = weights.alpha * a + weights.beta * c + weights.gamma * s
    return AcsScore(a=a, c=c, s=s, i=i, weights=weights)


class MetricAdapter(Protocol):
    metric_id: str

    def score(self, src: str, hypothesis: str, reference: str | None = None) -> float: ...


def char_ngram_f(hypothesis: str, reference: str, max_order: int = 4) -> float:
    """Mean character n-gram F-score over orders 1..max_order.

    Orders where neither side yields an n-gram are skipped; if every order is
    skipped the strings are both empty and count as a perfect match.
    """
    scores = []
    for n in range(1, max_order + 1):
        hyp = Counter(hypothesis[i : i + n] for i in range(len(hypothesis) - n + 1))
        ref = Counter(reference[i : i + n] for i in range(len(reference) - n + 1))
        if not hyp and not ref:
            continue
        matches = sum((hyp & ref).values())
        if matches == 0:
            scores.append(0.0)
            continue
        precision = matches / sum(hyp.values())
        recall = matches / sum(ref.values())
        scores.append(2 * precision * recall / (precision + recall))
    if not scores:
        return 1.0
    return sum(scores) / len(scores)


class OverlapAdapter:
    """Reference-based character overlap, a stand-in for learned metrics."""

    metric_id = "char-ngram-f"

    def score(self, src: str, hypothesis: str, reference: str | None = None) -> float:
        if reference is None:
            raise EvaluationError("overlap adapter requires a reference")
        return char_ngram_f(hypothesis, reference)


def builtin_overlap_adapter() -> OverlapAdapter:
    return OverlapAdapter()


def _check_score(metric_id: str, value: object) -> float:
    try:
        score = float(value)  # type: ignore[arg-type]
    except (TypeError, ValueError):
        raise EvaluationError(f"{metric_id}: non-numeric score {value!r}") from None
    if not 0 <= score <= 1:
        raise EvaluationError(f"{metric_id}: score {score} outside [0, 1]")
    return score


class CommandMetricAdapter:
    """Scores via a subprocess: one (src, hyp, ref) record in, one score out."""

    def __init__(self, metric_id: str, argv: Sequence[str]):
        self.metric_id = metric_id
        self.argv = list(argv)

    def score(self, src: str, hypothesis: str, reference: str | None = None) -> float:
        record = json.dumps(
            {"src": src, "hyp": hypothesis, "ref": reference}, ensure_ascii=False
        )
        proc = subprocess.run(
            self.argv, input=record + "\n", capture_output=True, text=True
        )
        if proc.returncode != 0:
            detail = proc.stderr.strip() or f"exit status {proc.returncode}"
            raise EvaluationError(f"{self.metric_id}: {detail}")
        line = proc.stdout.strip().splitlines()
        if not line:
            raise EvaluationError(f"{self.metric_id}: empty output")
        payload = json.loads(line[0])
        if isinstance(payload, dict):
            payload = payload.get("score")
        return _check_score(self.metric_id, payload)


class HttpMetricAdapter:
    """Scores via an HTTP endpoint accepting one (src, hyp, ref) record."""

    def __init__(self, metric_id: str, endpoint: str, client: httpx.Client | None = None):
        self.metric_id = metric_id
        self.endpoint = endpoint
        self._client = client or httpx.Client(timeout=30.0)

    def score(self, src: str, hypothesis: str, reference: str | None = None) -> float:
        response = self._client.post(
            self.endpoint, json={"src": src, "hyp": hypothesis, "ref": reference}
        )
        if response.status_code != 200:
            raise EvaluationError(f"{self.metric_id}: HTTP {response.status_code}")
        return _check_score(self.metric_id, response.json().get("score"))


# --- configuration ablation grid ---


@dataclass(frozen=True)
class ConfigRow:
    label: str
    config: PipelineConfig
    baseline: str | None = None


@dataclass
class MatrixCell:
    mean: float | None = None
    delta: float | None = None
    error: str | None = None

    def render(self) -> str:
        if self.error is not None:
            return "error"
        assert self.mean is not None
        text = f"{self.mean:.4f}"
        if self.delta is not None:
            text += f" ({self.delta:+.4f})"
        return text


@dataclass
class MatrixRow:
    label: str
    t_shots: str
    annotator_mode: str
    p_shots: str
    baseline: str | None
    cells: dict[str, MatrixCell]
    failed_segments: int = 0


@dataclass
class MatrixReport:
    metric_ids: tuple[str, ...]
    rows: list[MatrixRow] = field(default_factory=list)


def load_config_rows(path: str | Path) -> list[ConfigRow]:
    """Read an ablation grid file: a JSON array of {label, baseline, config}."""
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(data, list):
        raise EvaluationError("config grid must be a JSON array")
    rows = []
    for item in data:
        unknown = set(item) - {"label", "baseline", "config"}
        if unknown:
            raise EvaluationError(f"config grid row: unknown keys {sorted(unknown)}")
        rows.append(
            ConfigRow(
                label=str(item["label"]),
                config=config_from_dict(item["config"]),
                baseline=None if item.get("baseline") is None else str(item["baseline"]),
            )
        )
    return rows


def builtin_config_grid() -> list[ConfigRow]:
    """The 11-row shot and annotator ablation grid against mock backends."""
    with resources.as_file(
        resources.files("hmit.assets").joinpath("config_grid.json")
    ) as path:
        return load_config_rows(path)


def _coerce_row(item: ConfigRow | PipelineConfig, index: int) -> ConfigRow:
    if isinstance(item, ConfigRow):
        return item
    return ConfigRow(label=str(index), config=item)


def _shape_columns(config: PipelineConfig) -> tuple[str, str, str]:
    t = str(config.translator.shots)
    if config.annotator is None:
        a = "X"
    elif config.annotator.is_manual:
        a = "Manual"
    else:
        a = "LLM"
    p = "X" if config.proofreader is None else str(config.proofreader.shots)
    return t, a, p


def run_config_matrix(
    configs: Sequence[ConfigRow | PipelineConfig],
    testset: Sequence[ParallelSegment],
    backends: Mapping[str, object],
    adapters: Sequence[MetricAdapter],
    *,
    manual_annotations: Mapping[tuple[str, int], str] | None = None,
) -> MatrixReport:
    """Run every configuration over the testset and score it per adapter.

    Each row runs against fresh memories, with the translation memory
    pre-seeded from the testset pairs so few-shot rows have neighbors from
    the start. Baseline deltas are resolved after all rows are scored. An
    adapter failure marks that row's cell; the other cells still fill in.
    """
    rows = [_coerce_row(item, i + 1) for i, item in enumerate(configs)]
    labels = [row.label for row in rows]
    if len(set(labels)) != len(labels):
        raise EvaluationError("config grid labels must be unique")
    known = set(labels)
    for row in rows:
        if row.baseline is not None and row.baseline not in known:
            raise EvaluationError(
                f"row {row.label}: unknown baseline {row.baseline!r}"
            )
    metric_ids = tuple(adapter.metric_id for adapter in adapters)
    report = MatrixReport(metric_ids=metric_ids)
    refs = {(seg.doc_id, seg.seg_id): seg for seg in testset}
    for row in rows:
        tm = TranslationMemory()
        pm = ProofreadingMemory()
        seed_translation_memory(tm, testset)
        result = run_tap(
            testset,
            row.config,
            tm,
            pm,
            backends,
            manual_annotations=manual_annotations,
            run_id=f"matrix-{row.label}",
        )
        hypotheses = [
            (refs[(e.doc_id, e.seg_id)], e.final_translation) for e in result.entries
        ]
        cells: dict[str, MatrixCell] = {}
        for adapter in adapters:
            try:
                scores = [
                    adapter.score(seg.source_text, hyp, seg.target_text)
                    for seg, hyp in hypotheses
                ]
                if not scores:
                    raise EvaluationError("no segments were scored")
                cells[adapter.metric_id] = MatrixCell(mean=sum(scores) / len(scores))
            except Exception as exc:
                cells[adapter.metric_id] = MatrixCell(error=f"{exc}")
        t, a, p = _shape_columns(row.config)
        report.rows.append(
            MatrixRow(
                label=row.label,
                t_shots=t,
                annotator_mode=a,
                p_shots=p,
                baseline=row.baseline,
                cells=cells,
                failed_segments=len(result.failed),
            )
        )
    by_label = {row.label: row for row in report.rows}
    for row in report.rows:
        if row.baseline is None:
            continue
        base = by_label[row.baseline]
        for metric_id in metric_ids:
            cell = row.cells[metric_id]
            base_cell = base.cells[metric_id]
            if cell.mean is not None and base_cell.mean is not None:
                cell.delta = cell.mean - base_cell.mean
    return report


def matrix_report_text(report: MatrixReport) -> str:
    headers = ["Run", "T", "A", "P", *report.metric_ids]
    table = [headers]
    for row in report.rows:
        table.append(
            [
                row.label,
                row.t_shots,
                row.annotator_mode,
                row.p_shots,
                *(row.cells[m].render() for m in report.metric_ids),
            ]
        )
    widths = [max(len(r[i]) for r in table) for i in range(len(headers))]
    lines = [
        "  ".join(cell.ljust(width) for cell, width in zip(r, widths)).rstrip()
        for r in table
    ]
    return "\n".join(lines)


def matrix_report_records(report: MatrixReport) -> list[dict]:
    records = []
    for row in report.rows:
        records.append(
            {
                "label": row.label,
                "t": row.t_shots,
                "a": row.annotator_mode,
                "p": row.p_shots,
                "baseline": row.baseline,
                "failed_segments": row.failed_segments,
                "metrics": {
                    m: {
                        "mean": row.cells[m].mean,
                        "delta": row.cells[m].delta,
                        "error": row.cells[m].error,
                    }
                    for m in report.metric_ids
                },
            }
        )
    return records


def write_matrix_records(report: MatrixReport, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for record in matrix_report_records(report):
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")


# --- blinded human evaluation sheet ---

_SENTENCE_BOUNDARY = re.compile(r"(?<=[。？！；!?;])|(?<=\.)\s+")


def split_sentences(text: str) -> list[str]:
    """Sentence split on terminal punctuation, keeping the delimiter."""
    parts = [part.strip() for part in _SENTENCE_BOUNDARY.split(text)]
    return [part for part in parts if part]


@dataclass(frozen=True)
class EvalSheetRow:
    segment_no: int
    sentence_no: int
    source_sentence: str
    blinded_system_id: str
    translation: str
    a: float | None = None
    c: float | None = None
    s: float | None = None

    def __post_init__(self) -> None:
        for name in ("a", "c", "s"):
            value = getattr(self, name)
            if value is not None and not 0 <= value <= 10:
                raise EvaluationError(f"score {name}={value} outside [0, 10]")


@dataclass(frozen=True)
class SystemOutput:
    system_id: str
    translations: Mapping[tuple[str, int], str]


def make_eval_sheet(
    segments: Sequence[ParallelSegment],
    systems: Sequence[SystemOutput],
    sentence_splitter: Callable[[str], list[str]] | None = None,
    seed: int = 0,
    *,
    sample_size: int | None = None,
    mapping_path: str | Path | None = None,
) -> tuple[list[EvalSheetRow], dict[str, str]]:
    """Sample segments, split translations into sentences, and blind systems.

    Returns the shuffled rows plus the blinded-id to system mapping; when
    mapping_path is given the mapping is also sealed to that file. The sheet
    rows themselves never carry a real system identifier.
    """
    if not systems:
        raise EvaluationError("at least one system is required")
    ids = [s.system_id for s in systems]
    if len(set(ids)) != len(ids):
        raise EvaluationError("system ids must be unique")
    splitter = sentence_splitter or split_sentences
    rng = random.Random(seed)
    pool = sorted(segments, key=lambda s: (s.doc_id, s.seg_id))
    size = min(10, len(pool)) if sample_size is None else sample_size
    if not 1 <= size <= len(pool):
        raise EvaluationError(f"cannot sample {size} of {len(pool)} segments")
    sampled = sorted(rng.sample(pool, size), key=lambda s: (s.doc_id, s.seg_id))
    tokens = [f"SYS-{i}" for i in range(1, len(systems) + 1)]
    order = list(systems)
    rng.shuffle(order)
    mapping = {token: system.system_id for token, system in zip(tokens, order)}
    rows: list[EvalSheetRow] = []
    for segment_no, seg in enumerate(sampled, start=1):
        source_sentences = splitter(seg.source_text)
        for token, system in zip(tokens, order):
            key = (seg.doc_id, seg.seg_id)
            try:
                translation = system.translations[key]
            except KeyError:
                raise EvaluationError(
                    f"{system.system_id} has no translation for {seg.doc_id} "
                    f"segment {seg.seg_id}"
                ) from None
            sentences = splitter(translation)
            if not sentences:
                raise EvaluationError(
                    f"{seg.doc_id} segment {seg.seg_id} split into zero sentences"
                )
            aligned = len(source_sentences) == len(sentences)
            for sentence_no, sentence in enumerate(sentences, start=1):
                source = source_sentences[sentence_no - 1] if aligned else seg.source_text
                rows.append(
                    EvalSheetRow(
                        segment_no=segment_no,
                        sentence_no=sentence_no,
                        source_sentence=source,
                        blinded_system_id=token,
                        translation=sentence,
                    )
                )
    rng.shuffle(rows)
    if mapping_path is not None:
        write_mapping(mapping, mapping_path)
    return rows, mapping


def write_mapping(mapping: Mapping[str, str], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for blinded_id, system_id in mapping.items():
            fh.write(
                json.dumps(
                    {"blinded_id": blinded_id, "system_id": system_id},
                    ensure_ascii=False,
                )
                + "\n"
            )


def read_mapping(path: str | Path) -> dict[str, str]:
    mapping: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                record = json.loads(line)
                mapping[record["blinded_id"]] = record["system_id"]
    return mapping


_SHEET_COLUMNS = (
    "segment_no",
    "sentence_no",
    "source",
    "blinded_id",
    "translation",
    "A",
    "C",
    "S",
)


def write_eval_sheet(rows: Sequence[EvalSheetRow], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_SHEET_COLUMNS)
        for row in rows:
            writer.writerow(
                [
                    row.segment_no,
                    row.sentence_no,
                    row.source_sentence,
                    row.blinded_system_id,
                    row.translation,
                    "" if row.a is None else row.a,
                    "" if row.c is None else row.c,
                    "" if row.s is None else row.s,
                ]
            )


def read_eval_sheet(path: str | Path) -> list[EvalSheetRow]:
    rows = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if tuple(header or ()) != _SHEET_COLUMNS:
            raise EvaluationError(f"unexpected sheet header: {header}")
        for record in reader:
            if len(record) != len(_SHEET_COLUMNS):
                raise EvaluationError(f"malformed sheet row: {record}")
            seg_no, sent_no, source, blinded, translation, a, c, s = record
            rows.append(
                EvalSheetRow(
                    segment_no=int(seg_no),
                    sentence_no=int(sent_no),
                    source_sentence=source,
                    blinded_system_id=blinded,
                    translation=translation,
                    a=float(a) if a else None,
                    c=float(c) if c else None,
                    s=float(s) if s else None,
                )
            )
    return rows


@dataclass(frozen=True)
class SystemScore:
    system_id: str
    score: AcsScore
    deltas: Mapping[str, str] | None = None


def score_eval_sheet(
    rows: Sequence[EvalSheetRow],
    mapping: Mapping[str, str],
    weights: AcsWeights = DEFAULT_WEIGHTS,
    baseline: str | None = None,
) -> list[SystemScore]:
    """Unblind rows, average each system's three dimensions, compute ACS.

    Percentage deltas are reported against the baseline system (the first
    system in the mapping when not named explicitly).
    """
    if not rows:
        raise EvaluationError("the sheet has no rows")
    grouped: dict[str, list[EvalSheetRow]] = {}
    for row in rows:
        if row.a is None or row.c is None or row.s is None:
            raise EvaluationError(
                f"unscored row: segment {row.segment_no} sentence "
                f"{row.sentence_no} ({row.blinded_system_id})"
            )
        system_id = mapping.get(row.blinded_system_id)
        if system_id is None:
            raise EvaluationError(f"unknown blinded id {row.blinded_system_id!r}")
        grouped.setdefault(system_id, []).append(row)
    ordered = [sid for sid in mapping.values() if sid in grouped]
    if baseline is None:
        baseline = ordered[0]
    if baseline not in grouped:
        raise EvaluationError(f"baseline system {baseline!r} has no rows")
    scores: dict[str, AcsScore] = {}
    for system_id in ordered:
        system_rows = grouped[system_id]
        scores[system_id] = compute_acs(
            statistics.fmean(row.a for row in system_rows),
            statistics.fmean(row.c for row in system_rows),
            statistics.fmean(row.s for row in system_rows),
            weights,
        )
    base = scores[baseline]
    results = []
    for system_id in ordered:
        score = scores[system_id]
        if system_id == baseline:
            results.append(SystemScore(system_id=system_id, score=score))
            continue
        deltas = {}
        for name, value, base_value in (
            ("a", score.a, base.a),
            ("c", score.c, base.c),
            ("s", score.s, base.s),
            ("acs", score.i, base.i),
        ):
            if base_value == 0:
                raise EvaluationError(f"baseline {name} score is zero")
            deltas[name] = f"{(value - base_value) / base_value * 100:+.2f}%"
        results.append(SystemScore(system_id=system_id, score=score, deltas=deltas))
    return results


def render_eval_table(results: Sequence[SystemScore]) -> str:
    headers = ["System", "A", "C", "S", "ACS"]
    table = [headers]
    for item in results:
        cells = [item.system_id]
        for name, value in (
            ("a", item.score.a),
            ("c", item.score.c),
            ("s", item.score.s),
            ("acs", item.score.i),
        ):
            text = f"{value:.2f}"
            if item.deltas is not None:
                text += f" {item.deltas[name]}"
            cells.append(text)
        table.append(cells)
    widths = [max(len(r[i]) for r in table) for i in range(len(headers))]
    return "\n".join(
        "  ".join(cell.ljust(width) for cell, width in zip(r, widths)).rstrip()
        for r in table
    )
