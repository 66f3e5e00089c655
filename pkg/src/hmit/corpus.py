"""Paragraph-level bilingual corpus: loading, statistics, segmentation, alignment.

The on-disk corpus format is newline-delimited JSON, one aligned paragraph
pair per line, with exactly the keys ``doc_id``, ``seg_id``, ``en`` and
``zh-HK``. Loading cleans and validates every record; the resulting
:class:`ParallelSegment` list is what memories and pipelines are built from.

Character counting uses Unicode scalar values (``len`` on str): not bytes,
not grapheme clusters. Year attribution defaults to the trailing "/YYYY"
convention of Hong Kong case numbers, with an explicit override mapping for
documents that do not follow it.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping

SOURCE_KEY = "en"
TARGET_KEY = "zh-HK"
_RECORD_KEYS = {"doc_id", "seg_id", SOURCE_KEY, TARGET_KEY}


class CorpusError(ValueError):
    """A corpus file or segment violates the record format or an invariant."""


@dataclass(frozen=True)
class ParallelSegment:
    """One aligned paragraph pair of a bilingual judgment."""

    doc_id: str
    seg_id: int
    source_text: str
    target_text: str
    source_lang: str = "en"
    target_lang: str = "zh-HK"


def clean_text(raw: str) -> str:
    """Normalize a paragraph: no tabs, no CR, no blank lines, no edge whitespace."""
    lines = raw.replace("\r\n", "\n").replace("\r", "\n").replace("\t", " ").split("\n")
    kept = [line.strip() for line in lines]
    return "\n".join(line for line in kept if line)


def _validate_contiguity(segments: list[ParallelSegment]) -> None:
    by_doc: dict[str, list[int]] = {}
    for seg in segments:
        by_doc.setdefault(seg.doc_id, []).append(seg.seg_id)
    for doc_id, seg_ids in by_doc.items():
        seg_ids.sort()
        expected = list(range(1, len(seg_ids) + 1))
        if seg_ids != expected:
            raise CorpusError(
                f"document {doc_id!r}: seg_id values {seg_ids} are not a "
                f"contiguous run starting at 1"
            )


def load_corpus(path: str | Path) -> list[ParallelSegment]:
    """Load, clean and validate a corpus record file.

    Returns segments ordered by (doc_id, seg_id). Raises CorpusError naming
    the offending line for malformed records, duplicate keys, empty texts
    after cleaning, or non-contiguous seg_id runs.
    """
    path = Path(path)
    segments: list[ParallelSegment] = []
    seen: set[tuple[str, int]] = set()
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"{path.name}:{lineno}: invalid JSON ({exc.msg})") from exc
            if not isinstance(record, dict) or set(record) != _RECORD_KEYS:
                raise CorpusError(
                    f"{path.name}:{lineno}: record must have exactly the keys "
                    f"doc_id, seg_id, {SOURCE_KEY}, {TARGET_KEY}"
                )
            doc_id = record["doc_id"]
            seg_id = record["seg_id"]
            if not isinstance(doc_id, str) or not doc_id:
                raise CorpusError(f"{path.name}:{lineno}: doc_id must be a non-empty string")
            if not isinstance(seg_id, int) or isinstance(seg_id, bool) or seg_id < 0:
                raise CorpusError(f"{path.name}:{lineno}: seg_id must be a non-negative integer")
            if not isinstance(record[SOURCE_KEY], str) or not isinstance(record[TARGET_KEY], str):
                raise CorpusError(f"{path.name}:{lineno}: text fields must be strings")
            key = (doc_id, seg_id)
            if key in seen:
                raise CorpusError(f"{path.name}:{lineno}: duplicate segment {key}")
            seen.add(key)
            source = clean_text(record[SOURCE_KEY])
            target = clean_text(record[TARGET_KEY])
            if not source or not target:
                side = SOURCE_KEY if not source else TARGET_KEY
                raise CorpusError(
                    f"{path.name}:{lineno}: segment {key} has an empty {side!r} "
                    f"text after cleaning"
                )
            segments.append(ParallelSegment(doc_id, seg_id, source, target))
    _validate_contiguity(segments)
    segments.sort(key=lambda seg: (seg.doc_id, seg.seg_id))
    return segments


def save_corpus(segments: Iterable[ParallelSegment], path: str | Path) -> None:
    """Write segments in the corpus record format (one JSON object per line)."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for seg in segments:
            record = {
                "doc_id": seg.doc_id,
                "seg_id": seg.seg_id,
                SOURCE_KEY: seg.source_text,
                TARGET_KEY: seg.target_text,
            }
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")


_YEAR_SUFFIX = re.compile(r"/(\d{4})$")


def year_from_doc_id(doc_id: str, overrides: Mapping[str, int] | None = None) -> int:
    """Year a document belongs to: override mapping first, then trailing /YYYY."""
    if overrides and doc_id in overrides:
        return overrides[doc_id]
    match = _YEAR_SUFFIX.search(doc_id)
    if match is None:
        raise CorpusError(f"cannot determine year for document {doc_id!r}")
    return int(match.group(1))


@dataclass(frozen=True)
class YearStats:
    year: int
    document_count: int
    character_count: int


@dataclass(frozen=True)
class CorpusStats:
    document_count: int
    segment_count: int
    total_characters: int
    source_characters: int
    target_characters: int
    per_year: tuple[YearStats, ...]


def corpus_stats(
    segments: Iterable[ParallelSegment],
    year_of: Mapping[str, int] | None = None,
) -> CorpusStats:
    """Counts over both language sides, broken down by document year.

    ``year_of`` overrides/extends the doc-id year convention; every document
    must resolve to a year. Characters are Unicode scalar values; the
    combined total counts both sides (per-side totals are also reported
    because published corpus totals rarely say which convention they use).
    """
    docs: dict[str, int] = {}
    segment_count = 0
    source_chars = 0
    target_chars = 0
    doc_chars: dict[str, int] = {}
    for seg in segments:
        segment_count += 1
        source_chars += len(seg.source_text)
        target_chars += len(seg.target_text)
        doc_chars[seg.doc_id] = doc_chars.get(seg.doc_id, 0) + len(seg.source_text) + len(
            seg.target_text
        )
        if seg.doc_id not in docs:
            docs[seg.doc_id] = year_from_doc_id(seg.doc_id, year_of)
    per_year: dict[int, list[int]] = {}
    for doc_id, year in docs.items():
        counts = per_year.setdefault(year, [0, 0])
        counts[0] += 1
        counts[1] += doc_chars[doc_id]
    years = tuple(
        YearStats(year, docs_n, chars_n)
        for year, (docs_n, chars_n) in sorted(per_year.items())
    )
    return CorpusStats(
        document_count=len(docs),
        segment_count=segment_count,
        total_characters=source_chars + target_chars,
        source_characters=source_chars,
        target_characters=target_chars,
        per_year=years,
    )


def render_stats_table(stats: CorpusStats) -> str:
    """Plain-text table for terminal display of a stats report."""
    lines = [
        f"{'year':>6}  {'documents':>9}  {'characters':>12}",
        f"{'-' * 6}  {'-' * 9}  {'-' * 12}",
    ]
    for row in stats.per_year:
        lines.append(f"{row.year:>6}  {row.document_count:>9}  {row.character_count:>12,}")
    lines.append(f"{'-' * 6}  {'-' * 9}  {'-' * 12}")
    lines.append(f"{'total':>6}  {stats.document_count:>9}  {stats.total_characters:>12,}")
    lines.append(
        f"segments: {stats.segment_count}  "
        f"source characters: {stats.source_characters:,}  "
        f"target characters: {stats.target_characters:,}"
    )
    return "\n".join(lines)


def stats_to_records(stats: CorpusStats) -> list[dict]:
    """Machine-readable stats rows (one object per year plus a totals object)."""
    records = [
        {
            "year": row.year,
            "document_count": row.document_count,
            "character_count": row.character_count,
        }
        for row in stats.per_year
    ]
    records.append(
        {
            "year": None,
            "document_count": stats.document_count,
            "character_count": stats.total_characters,
            "segment_count": stats.segment_count,
            "source_characters": stats.source_characters,
            "target_characters": stats.target_characters,
        }
    )
    return records


@dataclass(frozen=True)
class SegmentationRules:
    """Ordered boundary rules for paragraph splitting.

    Each rule is a regex matched against the start of a line; a match opens a
    new paragraph. ``detach`` rules additionally close their own paragraph at
    the end of the line (section headings). The canonical separator joins
    paragraphs such that re-splitting is a fixed point.
    """

    separator: str
    boundaries: tuple[tuple[re.Pattern[str], bool], ...]


def load_rules(path: str | Path) -> SegmentationRules:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    boundaries = tuple(
        (re.compile(rule["pattern"]), bool(rule.get("detach", False)))
        for rule in data["boundaries"]
    )
    return SegmentationRules(separator=data["separator"], boundaries=boundaries)


def default_rules() -> SegmentationRules:
    ref = resources.files("hmit").joinpath("assets/segmentation_rules.json")
    with resources.as_file(ref) as path:
        return load_rules(path)


def segment_text(raw: str, rules: SegmentationRules | None = None) -> list[str]:
    """Split extracted plain text into paragraphs.

    Boundaries are blank lines and the rule set's line-start patterns. Each
    output element is a single cleaned line (internal line breaks collapse to
    one space); no element is empty.
    """
    if rules is None:
        rules = default_rules()
    lines = raw.replace("\r\n", "\n").replace("\r", "\n").replace("\t", " ").split("\n")
    paragraphs: list[list[str]] = []
    open_para = False
    for line in lines:
        line = line.strip()
        if not line:
            open_para = False
            continue
        matched = next(
            (detach for pattern, detach in rules.boundaries if pattern.match(line)), None
        )
        if matched is not None or not open_para:
            paragraphs.append([line])
            open_para = matched is not True
        else:
            paragraphs[-1].append(line)
    return [" ".join(para) for para in paragraphs]


@dataclass(frozen=True)
class AlignmentReport:
    """Length mismatch surfaced for manual repair, never auto-resolved."""

    source_len: int
    target_len: int
    first_divergence: int
    source_context: tuple[str, ...] = field(default=())
    target_context: tuple[str, ...] = field(default=())


_LEADING_NUMBER = re.compile(r"^\s*(\d{1,4})[\.．]")


def _para_number(text: str) -> int | None:
    match = _LEADING_NUMBER.match(text)
    return int(match.group(1)) if match else None


def align_documents(
    source_paras: list[str], target_paras: list[str]
) -> list[tuple[str, str]] | AlignmentReport:
    """Pair paragraphs by index; on length mismatch return a divergence report.

    Divergence is located by the leading paragraph-number convention when
    present, else at the end of the shorter list.
    """
    if not source_paras or not target_paras:
        raise ValueError("both paragraph lists must be non-empty")
    if len(source_paras) == len(target_paras):
        return list(zip(source_paras, target_paras))
    divergence = min(len(source_paras), len(target_paras))
    for i in range(divergence):
        src_n = _para_number(source_paras[i])
        tar_n = _para_number(target_paras[i])
        if src_n is not None and tar_n is not None and src_n != tar_n:
            divergence = i
            break
    lo, hi = max(0, divergence - 1), divergence + 2
    return AlignmentReport(
        source_len=len(source_paras),
        target_len=len(target_paras),
        first_divergence=divergence,
        source_context=tuple(source_paras[lo:hi]),
        target_context=tuple(target_paras[lo:hi]),
    )
