"""Pipeline configuration: agent specs, generation parameters, config files.

A pipeline always has a Translator and may add an Annotator and Proofreader.
Annotations exist to be consumed, so an Annotator without a Proofreader is a
configuration error. The Annotator may also be the literal backend "manual",
meaning annotations come from a human-supplied per-segment table instead of a
model call.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

MANUAL_BACKEND = "manual"


class Role(str, Enum):
    TRANSLATOR = "Translator"
    ANNOTATOR = "Annotator"
    PROOFREADER = "Proofreader"


class ConfigError(ValueError):
    """A pipeline configuration violates an invariant."""


@dataclass(frozen=True)
class GenerationParams:
    temperature: float = 0.0
    max_tokens: int = 4096
    frequency_penalty: float = 0.0
    presence_penalty: float = 0.0

    def __post_init__(self) -> None:
        if self.max_tokens < 1:
            raise ConfigError("max_tokens must be positive")


@dataclass(frozen=True)
class AgentSpec:
    role: Role
    backend_id: str = "mock"
    shots: int = 0
    params: GenerationParams = field(default_factory=GenerationParams)

    def __post_init__(self) -> None:
        if self.shots < 0:
            raise ConfigError("shots must be non-negative")
        # the annotator prompt has no example slots; record its shots as 0
        if self.role is Role.ANNOTATOR and self.shots != 0:
            object.__setattr__(self, "shots", 0)
        if not self.backend_id:
            raise ConfigError("backend_id must be non-empty")

    @property
    def is_manual(self) -> bool:
        return self.backend_id == MANUAL_BACKEND


@dataclass(frozen=True)
class PipelineConfig:
    translator: AgentSpec
    annotator: AgentSpec | None = None
    proofreader: AgentSpec | None = None
    source_lang: str = "en"
    target_lang: str = "zh-HK"
    glossary_id: str = "doj-combined"
    memory_ids: tuple[str, str] = ("translation", "proofreading")

    def __post_init__(self) -> None:
        if self.translator.role is not Role.TRANSLATOR:
            raise ConfigError("translator slot must hold a Translator spec")
        if self.annotator is not None and self.annotator.role is not Role.ANNOTATOR:
            raise ConfigError("annotator slot must hold an Annotator spec")
        if self.proofreader is not None and self.proofreader.role is not Role.PROOFREADER:
            raise ConfigError("proofreader slot must hold a Proofreader spec")
        if self.annotator is not None and self.proofreader is None:
            raise ConfigError("an annotator requires a proofreader to consume its annotations")

    def describe(self) -> str:
        """Short T/A/P summary, e.g. "T5 A(llm) P5" or "T0"."""
        parts = [f"T{self.translator.shots}"]
        if self.annotator is not None:
            kind = "manual" if self.annotator.is_manual else "llm"
            parts.append(f"A({kind})")
        if self.proofreader is not None:
            parts.append(f"P{self.proofreader.shots}")
        return " ".join(parts)


def _params_from_dict(data: dict) -> GenerationParams:
    known = {"temperature", "max_tokens", "frequency_penalty", "presence_penalty"}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown generation parameters: {sorted(unknown)}")
    return GenerationParams(**data)


def _agent_from_dict(role: Role, data: dict) -> AgentSpec:
    known = {"backend", "shots", "params"}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"{role.value}: unknown keys {sorted(unknown)}")
    return AgentSpec(
        role=role,
        backend_id=data.get("backend", "mock"),
        shots=int(data.get("shots", 0)),
        params=_params_from_dict(data.get("params", {})),
    )


def config_from_dict(data: dict) -> PipelineConfig:
    if "translator" not in data:
        raise ConfigError("config must define a translator")
    known = {
        "translator",
        "annotator",
        "proofreader",
        "source_lang",
        "target_lang",
        "glossary_id",
        "memory_ids",
    }
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    kwargs = {}
    for key in ("source_lang", "target_lang", "glossary_id"):
        if key in data:
            kwargs[key] = data[key]
    if "memory_ids" in data:
        memory_ids = data["memory_ids"]
        if not isinstance(memory_ids, (list, tuple)) or len(memory_ids) != 2:
            raise ConfigError("memory_ids must be a [translation, proofreading] pair")
        kwargs["memory_ids"] = tuple(memory_ids)
    return PipelineConfig(
        translator=_agent_from_dict(Role.TRANSLATOR, data["translator"]),
        annotator=(
            _agent_from_dict(Role.ANNOTATOR, data["annotator"])
            if data.get("annotator") is not None
            else None
        ),
        proofreader=(
            _agent_from_dict(Role.PROOFREADER, data["proofreader"])
            if data.get("proofreader") is not None
            else None
        ),
        **kwargs,
    )


def load_pipeline_config(path: str | Path) -> PipelineConfig:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(data, dict):
        raise ConfigError(f"{Path(path).name}: config must be a JSON object")
    return config_from_dict(data)
