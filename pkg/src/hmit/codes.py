"""Proofread-code taxonomy and the one-line annotation wire format.

The registry below is the fixed 31-code error taxonomy (10 accuracy, 12
grammar, 9 usage-and-style codes) that annotations are drawn from. The
canonical one-line rendering defined here is exchanged between the annotator
and proofreader prompts, stored in memory files, and carried over the service
API, so it must stay byte-stable across versions:

    [CODE] "excerpt" -> "suggestion"; [CODE] "excerpt"

An empty annotation list renders as ``NONE``. Parsing is strict for the
canonical form and falls back to a lenient best-effort extraction for drifty
model output; lenient parsing never raises.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum


class ErrorCategory(str, Enum):
    ACCURACY = "Accuracy"
    GRAMMAR = "Grammar"
    USAGE_AND_STYLE = "UsageAndStyle"


@dataclass(frozen=True)
class ErrorCode:
    code: str
    category: ErrorCategory
    description: str


_A = ErrorCategory.ACCURACY
_G = ErrorCategory.GRAMMAR
_U = ErrorCategory.USAGE_AND_STYLE

# Fixed registry, in table order. Casing is part of the code identity
# (Art, Det and Prep are mixed-case).
_REGISTRY: tuple[ErrorCode, ...] = (
    ErrorCode("CW", _A, "Choice of word. The word or expression is not a good choice."),
    ErrorCode("IF", _A, "Information structure not preserved."),
    ErrorCode(
        "MC",
        _A,
        "Meaning has been changed because of inappropriate restructuring, "
        "e.g., changing the passive to active or vice versa.",
    ),
    ErrorCode(
        "MT",
        _A,
        "Mistranslation due to inadequate comprehension or misinterpretation "
        "of the source text.",
    ),
    ErrorCode("NA", _A, "The translation conveys a different meaning from that of the source text."),
    ErrorCode(
        "NC",
        _A,
        "Meaning not clear, e.g., because of ambiguity, vagueness or syntactic problems.",
    ),
    ErrorCode("OM", _A, "Omission. Part of the original has been left untranslated."),
    ErrorCode("OT", _A, "Over-translation. Too much has been read into the source text."),
    ErrorCode("TL", _A, "Too literal, affecting comprehensibility."),
    ErrorCode("UT", _A, "Under-translation. Meaning is not adequately captured in translation."),
    ErrorCode("Art", _G, "Article."),
    ErrorCode("Det", _G, "Determiner."),
    ErrorCode("MD", _G, "Modality."),
    ErrorCode("NB", _G, "Number."),
    ErrorCode("PN", _G, "Punctuation."),
    ErrorCode("Prep", _G, "Wrong preposition."),
    ErrorCode("PS", _G, "Part of speech."),
    ErrorCode("SP", _G, "Spelling or wrong character."),
    ErrorCode("ST", _G, "The sentence or part of the sentence is ill-formed or ambiguous."),
    ErrorCode("SV", _G, "Subject verb agreement."),
    ErrorCode("TN", _G, "Tense problem."),
    ErrorCode("WO", _G, "Word order."),
    ErrorCode("CL", _U, "Collocation problem."),
    ErrorCode("CN", _U, "The word or expression has connotation not appropriate in the context."),
    ErrorCode("CO", _U, "Connective problem, e.g., inappropriate connectives."),
    ErrorCode(
        "IC",
        _U,
        "Inconsistent use of a word; or incoherence between clauses or sentences.",
    ),
    ErrorCode("ID", _U, "Idiomaticity, i.e., unidiomatic expression."),
    ErrorCode("RF", _U, "Reference problem, e.g., ambiguous use of a pronoun."),
    ErrorCode("RN", _U, "Redundancy: the word or expression should be deleted."),
    ErrorCode(
        "SL",
        _U,
        "Stylistic problems, e.g., the word or expression is not of an appropriate style.",
    ),
    ErrorCode("TS", _U, "Transition problems: sentences not well connected; bad language flow."),
)

_BY_CODE = {entry.code: entry for entry in _REGISTRY}

NONE_LINE = "NONE"


def registry() -> tuple[ErrorCode, ...]:
    """The full fixed code registry, in stable table order."""
    return _REGISTRY


def lookup(code: str) -> ErrorCode | None:
    """Find a code entry; None when the code is not in the registry."""
    return _BY_CODE.get(code)


class AnnotationError(ValueError):
    """An annotation record violates the taxonomy (unknown code, empty excerpt)."""


@dataclass(frozen=True)
class AnnotationRecord:
    """One identified translation error: code, offending span, optional fix.

    ``note`` is local diagnostic context (e.g. attached by a reviewer); it is
    not part of the canonical wire form and is not persisted.
    """

    code: str
    excerpt: str
    suggestion: str | None = None
    note: str | None = None

    def __post_init__(self) -> None:
        if lookup(self.code) is None:
            raise AnnotationError(f"unknown proofread code {self.code!r}")
        if not self.excerpt:
            raise AnnotationError(f"annotation [{self.code}] has an empty excerpt")


@dataclass
class ParseResult:
    records: list[AnnotationRecord] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)


_ESCAPES = {"\\": "\\\\", '"': '\\"', "\n": "\\n", "\r": "\\r", "\t": "\\t"}
_UNESCAPES = {"\\": "\\", '"': '"', "n": "\n", "r": "\r", "t": "\t"}


def _escape(text: str) -> str:
    return "".join(_ESCAPES.get(ch, ch) for ch in text)


def format_annotations(records: list[AnnotationRecord]) -> str:
    """Render records in the canonical one-line form; empty list is ``NONE``.

    The output never contains a newline: excerpts and suggestions are
    backslash-escaped.
    """
    if not records:
        return NONE_LINE
    parts = []
    for record in records:
        # frozen dataclass validates on construction; guard anyway for
        # records deserialized through other paths
        if lookup(record.code) is None or not record.excerpt:
            raise AnnotationError(f"invalid annotation record {record!r}")
        rendered = f'[{record.code}] "{_escape(record.excerpt)}"'
        if record.suggestion is not None:
            rendered += f' -> "{_escape(record.suggestion)}"'
        parts.append(rendered)
    return "; ".join(parts)


class _StrictScanner:
    """Recursive-descent scanner for the canonical form; None on any deviation."""

    def __init__(self, line: str):
        self.line = line
        self.pos = 0

    def eof(self) -> bool:
        return self.pos >= len(self.line)

    def take(self, literal: str) -> bool:
        if self.line.startswith(literal, self.pos):
            self.pos += len(literal)
            return True
        return False

    def quoted(self) -> str | None:
        if not self.take('"'):
            return None
        out: list[str] = []
        while not self.eof():
            ch = self.line[self.pos]
            self.pos += 1
            if ch == '"':
                return "".join(out)
            if ch == "\\":
                if self.eof():
                    return None
                esc = self.line[self.pos]
                self.pos += 1
                if esc not in _UNESCAPES:
                    return None
                out.append(_UNESCAPES[esc])
            else:
                out.append(ch)
        return None  # unterminated

    def record(self) -> AnnotationRecord | None:
        if not self.take("["):
            return None
        end = self.line.find("]", self.pos)
        if end < 0:
            return None
        code = self.line[self.pos : end]
        if lookup(code) is None:
            return None
        self.pos = end + 1
        if not self.take(" "):
            return None
        excerpt = self.quoted()
        if not excerpt:
            return None
        suggestion = None
        if self.take(" -> "):
            suggestion = self.quoted()
            if suggestion is None:
                return None
        return AnnotationRecord(code, excerpt, suggestion)


def _parse_strict(line: str) -> list[AnnotationRecord] | None:
    if line == NONE_LINE:
        return []
    scanner = _StrictScanner(line)
    records = []
    while True:
        record = scanner.record()
        if record is None:
            return None
        records.append(record)
        if scanner.eof():
            return records
        if not scanner.take("; "):
            return None


# Lenient extraction: candidate code positions are bracketed alpha tokens
# (known or not) and bare registry codes directly followed by ':' or a quote.
_KNOWN_ALT = "|".join(sorted((re.escape(c.code) for c in _REGISTRY), key=len, reverse=True))
_CANDIDATE = re.compile(rf"\[\s*([A-Za-z]{{1,6}})\s*\]|\b({_KNOWN_ALT})(?=\s*[:\"“])")
_QUOTED_SPAN = re.compile(r'"([^"]+)"|“([^”]+)”|「([^」]+)」')
_SUGGESTION_MARKERS = (" -> ", "->", "→", " should be ", "應為", "应为", "改為", "改为")
_LABEL_PREFIX = re.compile(r"^\s*(annotated\s+errors\s*:)\s*", re.IGNORECASE)


def _spans(text: str) -> list[str]:
    return [next(g for g in match.groups() if g is not None) for match in _QUOTED_SPAN.finditer(text)]


def _unwrap(text: str) -> str:
    text = text.strip().strip(",;").strip()
    for open_q, close_q in (('"', '"'), ("“", "”"), ("「", "」")):
        if len(text) >= 2 and text.startswith(open_q) and text.endswith(close_q):
            return text[1:-1]
    return text


def _lenient_body(body: str) -> tuple[str, str | None]:
    """Best-effort (excerpt, suggestion) from the free text following a code."""
    body = body.strip().strip(",;").strip()
    spans = _spans(body)
    if len(spans) >= 2:
        return spans[0], spans[1]
    for marker in _SUGGESTION_MARKERS:
        if marker in body:
            left, right = body.split(marker, 1)
            excerpt = _unwrap(left)
            suggestion = _unwrap(right)
            # "X should be Y" style often leads with prose; keep the last
            # quoted span on the left if one exists
            left_spans = _spans(left)
            if left_spans:
                excerpt = left_spans[-1]
            return excerpt, (suggestion or None)
    if len(spans) == 1:
        return spans[0], None
    return _unwrap(body), None


def parse_annotations_detailed(line: str) -> ParseResult:
    """Parse an annotation line; strict first, lenient fallback. Never raises."""
    if line is None:
        return ParseResult()
    text = line.strip()
    text = _LABEL_PREFIX.sub("", text)
    if not text or text.strip(" .").lower() == "none":
        return ParseResult()

    strict = _parse_strict(text)
    if strict is not None:
        return ParseResult(records=strict)

    result = ParseResult()
    matches = list(_CANDIDATE.finditer(text))
    if not matches:
        result.warnings.append(f"no recognizable annotation records in {text!r}")
        return result
    for i, match in enumerate(matches):
        code = match.group(1) or match.group(2)
        body_start = match.end()
        body_end = matches[i + 1].start() if i + 1 < len(matches) else len(text)
        body = text[body_start:body_end].lstrip(":：").strip()
        if lookup(code) is None:
            result.warnings.append(f"unknown code {code!r} (skipped: {body[:40]!r})")
            continue
        excerpt, suggestion = _lenient_body(body)
        if not excerpt:
            result.warnings.append(f"code [{code}] without an excerpt (skipped)")
            continue
        result.records.append(AnnotationRecord(code, excerpt, suggestion))
    return result


def parse_annotations(line: str) -> list[AnnotationRecord]:
    """Records parsed from a line; warnings dropped (see parse_annotations_detailed)."""
    return parse_annotations_detailed(line).records
