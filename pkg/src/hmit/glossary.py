"""Bilingual term glossary with longest-match, non-overlapping lookup.

Glossary files are either tab-separated (term<TAB>translation per line) or
object-per-line JSON with "term" and "translation" keys. Matching is
case-insensitive for ASCII terms and respects word boundaries for terms that
start or end with a word character, so "appeal" never fires inside
"appealed"; CJK terms match anywhere.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path


class GlossaryError(ValueError):
    """A glossary file is malformed."""


@dataclass(frozen=True)
class Glossary:
    glossary_id: str
    terms: tuple[tuple[str, str], ...]

    def __len__(self) -> int:
        return len(self.terms)


def load_glossary(path: str | Path, glossary_id: str | None = None) -> Glossary:
    path = Path(path)
    terms: list[tuple[str, str]] = []
    seen: set[str] = set()
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            where = f"{path.name}:{lineno}"
            if line.lstrip().startswith("{"):
                try:
                    record = json.loads(line)
                    term, translation = record["term"], record["translation"]
                except (json.JSONDecodeError, KeyError) as exc:
                    raise GlossaryError(f"{where}: bad glossary record ({exc})") from exc
            elif "\t" in line:
                term, _, translation = line.partition("\t")
            else:
                raise GlossaryError(f"{where}: expected TERM<TAB>TRANSLATION or a JSON object")
            term, translation = term.strip(), translation.strip()
            if not term or not translation:
                raise GlossaryError(f"{where}: empty term or translation")
            if term in seen:
                raise GlossaryError(f"{where}: duplicate term {term!r}")
            seen.add(term)
            terms.append((term, translation))
    return Glossary(glossary_id=glossary_id or path.stem, terms=tuple(terms))


def _pattern_for(term: str) -> re.Pattern[str]:
    escaped = re.escape(term)
    prefix = r"\b" if term[0].isascii() and (term[0].isalnum() or term[0] == "_") else ""
    suffix = r"\b" if term[-1].isascii() and (term[-1].isalnum() or term[-1] == "_") else ""
    flags = re.IGNORECASE if term.isascii() else 0
    return re.compile(prefix + escaped + suffix, flags)


def glossary_inject(src: str, glossary: Glossary) -> list[tuple[str, str]]:
    """Glossary terms occurring in src: longest match wins, matches never overlap.

    Returns (term, preferred_translation) pairs ordered by first occurrence,
    each term at most once.
    """
    matches: list[tuple[int, int, str, str]] = []
    for term, translation in glossary.terms:
        for m in _pattern_for(term).finditer(src):
            matches.append((m.start(), m.end(), term, translation))
    # longest first at each position; earlier position first among accepted
    matches.sort(key=lambda m: (m[0], -(m[1] - m[0])))
    taken_until = -1
    found: list[tuple[str, str]] = []
    seen: set[str] = set()
    for start, end, term, translation in matches:
        if start <= taken_until:
            continue
        taken_until = end - 1
        if term not in seen:
            seen.add(term)
            found.append((term, translation))
    return found


def glossary_constraint_block(pairs: list[tuple[str, str]]) -> str:
    """Constraint lines for appending to a translator role prompt."""
    if not pairs:
        return ""
    lines = ["Use these glossary translations:"]
    lines.extend(f"{term} -> {translation}" for term, translation in pairs)
    return "\n".join(lines)


def apply_glossary_to_role_prompt(role_prompt: str, src: str, glossary: Glossary) -> str:
    """Role prompt plus constraint lines for the glossary terms found in src."""
    block = glossary_constraint_block(glossary_inject(src, glossary))
    if not block:
        return role_prompt
    return f"{role_prompt}\n\n{block}"
