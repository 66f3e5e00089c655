"""Deterministic mock backend and the remote client's retry behavior."""

import httpx
import pytest

from hmit.backends import (
    BackendError,
    MockBackend,
    RemoteBackend,
    backends_for_config,
    make_backend,
)
from hmit.codes import format_annotations, parse_annotations
from hmit.config import AgentSpec, GenerationParams, PipelineConfig, Role
from hmit.memory import Origin, TranslationEntry
from hmit.prompts import (
    build_annotator_prompt,
    build_proofreader_prompt,
    build_translator_prompt,
)

PARAMS = GenerationParams()
ROLE = "ROLE PROMPT"


class TestMockTranslator:
    def test_zero_shot_extraction(self):
        prompt = build_translator_prompt("The appeal is allowed.", [], ROLE)
        result = MockBackend().generate(prompt, PARAMS)
        assert result.text == "<mt>The appeal is allowed.</mt>"

    def test_few_shot_extraction(self):
        examples = [
            TranslationEntry("D", i, f"source {i}.", f"目標 {i}。", Origin.CORPUS)
            for i in range(1, 4)
        ]
        prompt = build_translator_prompt("The appeal is allowed.", examples, ROLE)
        result = MockBackend().generate(prompt, PARAMS)
        assert result.text == "<mt>The appeal is allowed.</mt>"

    def test_usage_reported_as_estimated(self):
        prompt = build_translator_prompt("Hello world.", [], ROLE)
        result = MockBackend().generate(prompt, PARAMS)
        assert result.estimated_usage
        assert result.input_tokens > 0 and result.output_tokens > 0


class TestMockAnnotator:
    def test_output_is_canonical_single_line(self):
        prompt = build_annotator_prompt("Source one.", "機譯文字一。", ROLE)
        line = MockBackend().generate(prompt, PARAMS).text
        assert "\n" not in line
        records = parse_annotations(line)
        assert format_annotations(records) == line

    def test_excerpts_are_substrings_of_mt(self):
        mt = "上訴法庭頒下判案書。"
        prompt = build_annotator_prompt("The court handed down.", mt, ROLE)
        for record in parse_annotations(MockBackend().generate(prompt, PARAMS).text):
            assert record.excerpt in mt
            assert record.suggestion

    def test_sometimes_none_sometimes_records(self):
        outputs = set()
        for i in range(40):
            prompt = build_annotator_prompt(f"Source {i}.", f"譯文{i}號。", ROLE)
            line = MockBackend().generate(prompt, PARAMS).text
            outputs.add(line == "NONE")
        assert outputs == {True, False}

    def test_deterministic(self):
        prompt = build_annotator_prompt("Same input.", "相同譯文。", ROLE)
        first = MockBackend().generate(prompt, PARAMS).text
        assert MockBackend().generate(prompt, PARAMS).text == first


class TestMockProofreader:
    def test_applies_suggestions(self):
        prompt = build_proofreader_prompt(
            "src", "本院頒下判案書。", '[CW] "判案書" -> "判決書"', [], ROLE
        )
        assert MockBackend().generate(prompt, PARAMS).text == "本院頒下判決書。"

    def test_none_leaves_mt_unchanged(self):
        prompt = build_proofreader_prompt("src", "本院頒下判案書。", "NONE", [], ROLE)
        assert MockBackend().generate(prompt, PARAMS).text == "本院頒下判案書。"

    def test_excerpt_without_suggestion_unchanged(self):
        prompt = build_proofreader_prompt("src", "本院頒下判案書。", '[OM] "本院"', [], ROLE)
        assert MockBackend().generate(prompt, PARAMS).text == "本院頒下判案書。"

    def test_chain_consistency(self):
        mock = MockBackend()
        mt = mock.generate(build_translator_prompt("The appeal.", [], ROLE), PARAMS).text
        errors = mock.generate(build_annotator_prompt("The appeal.", mt, ROLE), PARAMS).text
        final = mock.generate(
            build_proofreader_prompt("The appeal.", mt, errors, [], ROLE), PARAMS
        ).text
        for record in parse_annotations(errors):
            if record.suggestion:
                assert record.suggestion in final

    def test_unknown_cue_rejected(self):
        with pytest.raises(ValueError):
            MockBackend().generate("just some text", PARAMS)


def transport_returning(responses):
    calls = []

    def handler(request):
        calls.append(request)
        status, body = responses[min(len(calls) - 1, len(responses) - 1)]
        return httpx.Response(status, json=body)

    return httpx.MockTransport(handler), calls


def remote(transport, sleeps=None, **kwargs):
    return RemoteBackend(
        "test-model",
        "http://backend.test/generate",
        client=httpx.Client(transport=transport),
        sleep=(sleeps.append if sleeps is not None else lambda s: None),
        **kwargs,
    )


class TestRemoteBackend:
    def test_success_with_reported_usage(self):
        transport, calls = transport_returning(
            [(200, {"text": "譯文", "usage": {"input_tokens": 12, "output_tokens": 3}})]
        )
        result = remote(transport).generate("prompt", PARAMS)
        assert result.text == "譯文"
        assert (result.input_tokens, result.output_tokens) == (12, 3)
        assert not result.estimated_usage
        sent = calls[0].read().decode()
        assert '"temperature":0.0' in sent and '"max_tokens":4096' in sent

    def test_missing_usage_estimated(self):
        transport, _ = transport_returning([(200, {"text": "abcd"})])
        result = remote(transport).generate("prompt", PARAMS)
        assert result.estimated_usage and result.output_tokens == 1

    def test_retries_transient_then_succeeds(self):
        transport, calls = transport_returning(
            [(500, {}), (503, {}), (200, {"text": "ok"})]
        )
        sleeps = []
        result = remote(transport, sleeps=sleeps).generate("prompt", PARAMS)
        assert result.text == "ok"
        assert len(calls) == 3
        assert sleeps == [0.5, 1.0]

    def test_gives_up_after_three_attempts(self):
        transport, calls = transport_returning([(500, {})])
        with pytest.raises(BackendError, match="3 attempts"):
            remote(transport, sleeps=[]).generate("prompt", PARAMS)
        assert len(calls) == 3

    def test_client_error_fails_fast(self):
        transport, calls = transport_returning([(401, {})])
        with pytest.raises(BackendError, match="401"):
            remote(transport).generate("prompt", PARAMS)
        assert len(calls) == 1


class TestResolution:
    def test_mock_ids(self):
        assert isinstance(make_backend("mock", {}), MockBackend)
        assert isinstance(make_backend("mock-alt", {}), MockBackend)

    def test_remote_requires_endpoint(self):
        with pytest.raises(BackendError, match="HMIT_BACKEND_URL"):
            make_backend("some-model", {})

    def test_remote_from_env(self):
        backend = make_backend("some-model", {"HMIT_BACKEND_URL": "http://x/y"})
        assert isinstance(backend, RemoteBackend)

    def test_manual_is_not_a_backend(self):
        with pytest.raises(ValueError):
            make_backend("manual", {})

    def test_backends_for_config_skips_manual(self):
        config = PipelineConfig(
            translator=AgentSpec(Role.TRANSLATOR, "mock", shots=5),
            annotator=AgentSpec(Role.ANNOTATOR, "manual"),
            proofreader=AgentSpec(Role.PROOFREADER, "mock"),
        )
        backends = backends_for_config(config, {})
        assert set(backends) == {"mock"}
