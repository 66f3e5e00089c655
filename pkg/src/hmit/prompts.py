"""The five prompt shapes used by the translate/annotate/proofread agents.

Every builder is a pure function whose output is pinned byte-for-byte by
golden files, so treat any change here as a format change. The shapes differ
in small but deliberate ways: the zero-shot translator separates its task
lines with a blank line while the few-shot one keeps them adjacent, and the
few-shot proofreader ends on a bare "Final translation:" cue without the
one-line output instruction that the zero-shot variant carries.

Role prompts are editable text assets; loading strips trailing newlines so a
trailing-newline edit cannot silently shift every prompt.
"""

from __future__ import annotations

from importlib import resources
from typing import Sequence

from .codes import format_annotations
from .config import Role
from .memory import ProofreadingEntry, TranslationEntry

# labels for the prompt's language slots; tags without an entry render as-is
LANGUAGE_LABELS = {
    "en": "English",
    "zh-HK": "Traditional Chinese",
    "zh-CN": "Simplified Chinese",
}

ONE_LINE_INSTRUCTION = "(Do not output in separate lines; output only in one line.)"

_ROLE_ASSETS = {
    Role.TRANSLATOR: "translator.txt",
    Role.ANNOTATOR: "annotator.txt",
    Role.PROOFREADER: "proofreader.txt",
}


def language_label(tag: str) -> str:
    return LANGUAGE_LABELS.get(tag, tag)


def load_role_prompt(role: Role) -> str:
    ref = resources.files("hmit").joinpath(f"assets/role_prompts/{_ROLE_ASSETS[role]}")
    return ref.read_text(encoding="utf-8").rstrip("\n")


def _require(value: str, name: str) -> None:
    if not value:
        raise ValueError(f"{name} must be non-empty")


def build_translator_prompt(
    src: str,
    examples: Sequence[TranslationEntry],
    role_prompt: str,
    source_lang: str = "en",
    target_lang: str = "zh-HK",
) -> str:
    """Zero-shot (no examples) or few-shot translator prompt.

    Examples render in the given order; callers pass them already ranked.
    """
    _require(src, "src")
    _require(role_prompt, "role_prompt")
    src_label = language_label(source_lang)
    tar_label = language_label(target_lang)
    parts = [role_prompt]
    if examples:
        for ex in examples:
            parts.append(
                f"{src_label} text: {ex.source_text}\n"
                f"Translate to {tar_label} text: {ex.target_text}"
            )
        parts.append(f"{src_label} text: {src}\nTranslate to {tar_label} text:")
    else:
        parts.append(f"{src_label} text: {src}")
        parts.append(f"Translate to {tar_label} text:")
    return "\n\n".join(parts)


def build_annotator_prompt(src: str, mt: str, role_prompt: str) -> str:
    _require(src, "src")
    _require(mt, "mt")
    _require(role_prompt, "role_prompt")
    return "\n\n".join(
        [
            role_prompt,
            f"Source text: {src}",
            f"machine translation: {mt}",
            f"Annotated errors: {ONE_LINE_INSTRUCTION}",
        ]
    )


def build_proofreader_prompt(
    src: str,
    mt: str,
    errors_line: str,
    examples: Sequence[ProofreadingEntry],
    role_prompt: str,
) -> str:
    """Zero-shot or few-shot proofreader prompt.

    errors_line must already be in the canonical one-line annotation format
    ("NONE" when there are no annotations).
    """
    _require(src, "src")
    _require(mt, "mt")
    _require(errors_line, "errors_line")
    _require(role_prompt, "role_prompt")
    if not examples:
        return "\n\n".join(
            [
                role_prompt,
                f"Source text: {src}",
                f"machine translation: {mt}",
                f"Annotated errors: {errors_line}",
                f"Final translation: {ONE_LINE_INSTRUCTION}",
            ]
        )
    parts = [role_prompt]
    for ex in examples:
        parts.append(
            f"Source text: {ex.source_text}\n"
            f"machine translation: {ex.machine_translation}\n"
            f"Annotated errors: {format_annotations(list(ex.annotated_errors))}\n"
            f"Final translation: {ex.final_translation}"
        )
    parts.append(
        f"Source text: {src}\n"
        f"machine translation: {mt}\n"
        f"Annotated errors: {errors_line}\n"
        f"Final translation:"
    )
    return "\n\n".join(parts)
