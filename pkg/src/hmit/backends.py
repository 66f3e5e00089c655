"""Agent backends: a text-in/text-out generation call plus token usage.

The mock backend is fully deterministic and understands the five prompt
shapes by their final cue line, which lets the whole pipeline, every parser,
and the memory feedback loop run offline in tests. The remote backend speaks
a minimal JSON wire contract (endpoint, model id and credential come from
environment configuration) and retries transient failures with exponential
backoff.
"""

from __future__ import annotations

import hashlib
import re
import time
from dataclasses import dataclass
from typing import Mapping, Protocol

import httpx

from .codes import AnnotationRecord, format_annotations, parse_annotations, registry
from .config import MANUAL_BACKEND, GenerationParams, PipelineConfig
from .costing import estimate_tokens

ENV_ENDPOINT = "HMIT_BACKEND_URL"
ENV_API_KEY = "HMIT_BACKEND_KEY"


class BackendError(RuntimeError):
    """A backend call failed after exhausting its retry budget."""


@dataclass(frozen=True)
class GenerationResult:
    text: str
    input_tokens: int
    output_tokens: int
    backend_id: str
    estimated_usage: bool = False


class AgentBackend(Protocol):
    backend_id: str

    def generate(self, prompt: str, params: GenerationParams) -> GenerationResult: ...


_LABELED_LINE = re.compile(r"^[A-Za-z][^\n:]{0,40} text: ", re.MULTILINE)


def _last_labeled_value(prompt: str, label: str) -> str:
    """Value of the last "{label} {value}" line (the task block's)."""
    idx = prompt.rfind(f"\n{label}")
    if idx < 0:
        raise ValueError(f"prompt has no {label!r} line")
    rest = prompt[idx + 1 + len(label) :]
    return rest.split("\n", 1)[0]


def _task_source(prompt: str) -> str:
    """Source text of the final task block of a translator prompt.

    The source may span lines; it runs from the last "... text:" label line
    to the cue line.
    """
    body, _, _cue = prompt.rpartition("\n")
    body = body.rstrip("\n")
    matches = list(_LABELED_LINE.finditer(body))
    if not matches:
        raise ValueError("prompt has no source-text line")
    last = matches[-1]
    return body[last.end() :]


class MockBackend:
    """Deterministic stand-in for a model, keyed off the prompt's cue line.

    Translator: wraps the task source in <mt> tags. Annotator: emits a
    canonical annotation line derived from a hash of the inputs (sometimes
    NONE), whose excerpts are real substrings of the machine translation.
    Proofreader: applies each annotated suggestion to the machine
    translation.
    """

    def __init__(self, backend_id: str = "mock"):
        self.backend_id = backend_id

    def generate(self, prompt: str, params: GenerationParams) -> GenerationResult:
        last_line = prompt.rsplit("\n", 1)[-1]
        if last_line.startswith("Translate to ") and last_line.endswith(" text:"):
            text = self._translate(prompt)
        elif last_line.startswith("Annotated errors:"):
            text = self._annotate(prompt)
        elif last_line.startswith("Final translation:"):
            text = self._proofread(prompt)
        else:
            raise ValueError(f"mock backend cannot infer a role from {last_line!r}")
        return GenerationResult(
            text=text,
            input_tokens=estimate_tokens(prompt),
            output_tokens=estimate_tokens(text),
            backend_id=self.backend_id,
            estimated_usage=True,
        )

    def _translate(self, prompt: str) -> str:
        return f"<mt>{_task_source(prompt)}</mt>"

    def _annotate(self, prompt: str) -> str:
        src = _last_labeled_value(prompt, "Source text: ")
        mt = _last_labeled_value(prompt, "machine translation: ")
        digest = hashlib.sha256(f"{src}\x00{mt}".encode("utf-8")).digest()
        if digest[0] % 4 == 0:
            return "NONE"
        record_count = 1 + digest[1] % 2
        records: list[AnnotationRecord] = []
        taken: set[str] = set()
        for i in range(record_count):
            code = registry()[digest[2 + i] % len(registry())].code
            width = min(3, len(mt))
            start = digest[4 + i] % (len(mt) - width + 1)
            excerpt = mt[start : start + width]
            if excerpt in taken:
                continue
            taken.add(excerpt)
            records.append(AnnotationRecord(code, excerpt, excerpt + "改"))
        return format_annotations(records)

    def _proofread(self, prompt: str) -> str:
        mt = _last_labeled_value(prompt, "machine translation: ")
        errors_line = _last_labeled_value(prompt, "Annotated errors: ")
        final = mt
        for record in parse_annotations(errors_line):
            if record.suggestion:
                final = final.replace(record.excerpt, record.suggestion)
        return final


class RemoteBackend:
    """Minimal JSON generation client with bounded retries.

    POSTs {model, prompt, temperature, max_tokens, frequency_penalty,
    presence_penalty} and expects {"text": ...} back, with optional
    {"usage": {"input_tokens", "output_tokens"}}. 5xx and transport errors
    are retried with exponential backoff; other HTTP errors fail fast.
    """

    def __init__(
        self,
        backend_id: str,
        endpoint: str,
        api_key: str | None = None,
        client: httpx.Client | None = None,
        max_attempts: int = 3,
        backoff_base: float = 0.5,
        sleep=time.sleep,
    ):
        self.backend_id = backend_id
        self._endpoint = endpoint
        self._api_key = api_key
        self._client = client or httpx.Client(timeout=60.0)
        self._max_attempts = max_attempts
        self._backoff_base = backoff_base
        self._sleep = sleep

    def generate(self, prompt: str, params: GenerationParams) -> GenerationResult:
        payload = {
            "model": self.backend_id,
            "prompt": prompt,
            "temperature": params.temperature,
            "max_tokens": params.max_tokens,
            "frequency_penalty": params.frequency_penalty,
            "presence_penalty": params.presence_penalty,
        }
        headers = {}
        if self._api_key:
            headers["Authorization"] = f"Bearer {self._api_key}"
        last_error: Exception | None = None
        for attempt in range(self._max_attempts):
            try:
                response = self._client.post(self._endpoint, json=payload, headers=headers)
                if response.status_code >= 500:
                    raise httpx.HTTPStatusError(
                        f"server error {response.status_code}",
                        request=response.request,
                        response=response,
                    )
                response.raise_for_status()
                data = response.json()
                return self._result(data)
            except (httpx.TransportError, httpx.HTTPStatusError) as exc:
                if (
                    isinstance(exc, httpx.HTTPStatusError)
                    and exc.response.status_code < 500
                ):
                    raise BackendError(
                        f"{self.backend_id}: request rejected "
                        f"({exc.response.status_code})"
                    ) from exc
                last_error = exc
                if attempt + 1 < self._max_attempts:
                    self._sleep(self._backoff_base * (2**attempt))
        raise BackendError(
            f"{self.backend_id}: {self._max_attempts} attempts failed ({last_error})"
        ) from last_error

    def _result(self, data: dict) -> GenerationResult:
        text = data["text"]
        usage = data.get("usage")
        if usage and "input_tokens" in usage and "output_tokens" in usage:
            return GenerationResult(
                text=text,
                input_tokens=int(usage["input_tokens"]),
                output_tokens=int(usage["output_tokens"]),
                backend_id=self.backend_id,
            )
        return GenerationResult(
            text=text,
            input_tokens=0,
            output_tokens=estimate_tokens(text),
            backend_id=self.backend_id,
            estimated_usage=True,
        )


def make_backend(backend_id: str, env: Mapping[str, str]) -> AgentBackend:
    """Resolve a backend id: "mock" locally, anything else via the remote API."""
    if backend_id == MANUAL_BACKEND:
        raise ValueError("manual annotation is handled by the pipeline, not a backend")
    if backend_id == "mock" or backend_id.startswith("mock-"):
        return MockBackend(backend_id)
    endpoint = env.get(ENV_ENDPOINT)
    if not endpoint:
        raise BackendError(
            f"backend {backend_id!r} needs {ENV_ENDPOINT} set to a generation endpoint"
        )
    return RemoteBackend(backend_id, endpoint, api_key=env.get(ENV_API_KEY))


def backends_for_config(
    config: PipelineConfig, env: Mapping[str, str]
) -> dict[str, AgentBackend]:
    """Backend mapping covering every model-backed agent of a config."""
    backends: dict[str, AgentBackend] = {}
    for spec in (config.translator, config.annotator, config.proofreader):
        if spec is None or spec.is_manual:
            continue
        if spec.backend_id not in backends:
            backends[spec.backend_id] = make_backend(spec.backend_id, env)
    return backends
