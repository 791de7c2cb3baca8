import json

import httpx
import pytest

from cop.backends import (
    ANCHOR_PREAMBLE,
    CompletionRequest,
    OpenAICompatibleBackend,
    OracleBackend,
    StubBackend,
    detect_stage,
    oracle_respond,
)
from cop.errors import AuthError, BackendError
from cop.logicform import LogicTriple, fact_as_rule, parse_premise
from cop.prompts import PromptSet

from fixtures import appendix


def _backend(handler, **kwargs):
    transport = httpx.MockTransport(handler)
    sleeps = []
    return (
        OpenAICompatibleBackend(
            model="test-model",
            base_url="https://mock.local/v1",
            api_key="key",
            transport=transport,
            sleeper=sleeps.append,
            **kwargs,
        ),
        sleeps,
    )


def _ok_response(text="hello", prompt_tokens=2004, completion_tokens=436):
    return httpx.Response(
        200,
        json={
            "choices": [{"message": {"role": "assistant", "content": text}}],
            "usage": {"prompt_tokens": prompt_tokens, "completion_tokens": completion_tokens},
            "model": "test-model",
        },
    )


def test_deterministic_stub_server_identical_texts():
    def handler(request):
        payload = json.loads(request.content)
        assert payload["temperature"] == 0
        return _ok_response(text="echo: " + payload["messages"][-1]["content"][:10])

    backend, _ = _backend(handler)
    request = CompletionRequest(user="The bear is green.")
    first = backend.complete(request)
    second = backend.complete(request)
    assert first.text == second.text


def test_retry_contract_429_then_success():
    attempts = {"n": 0}

    def handler(request):
        attempts["n"] += 1
        if attempts["n"] <= 2:
            return httpx.Response(429, text="slow down")
        return _ok_response()

    backend, sleeps = _backend(handler)
    result = backend.complete(CompletionRequest(user="hi"))
    assert attempts["n"] == 3
    assert result.text == "hello"
    assert sleeps == [1.0, 2.0]  # exponential backoff base 1s, factor 2


def test_usage_accounting_totals():
    backend, _ = _backend(lambda request: _ok_response())
    result = backend.complete(CompletionRequest(user="hi"))
    assert (result.prompt_tokens, result.completion_tokens) == (2004, 436)
    assert result.total_tokens == 2440


def test_auth_error_no_retry():
    calls = {"n": 0}

    def handler(request):
        calls["n"] += 1
        return httpx.Response(401, text="bad key")

    backend, _ = _backend(handler)
    with pytest.raises(AuthError):
        backend.complete(CompletionRequest(user="hi"))
    assert calls["n"] == 1


def test_backend_error_after_exhausted_retries():
    backend, sleeps = _backend(lambda request: httpx.Response(503, text="down"), max_attempts=3)
    with pytest.raises(BackendError) as excinfo:
        backend.complete(CompletionRequest(user="hi"))
    assert excinfo.value.status == 503
    assert len(sleeps) == 2


def test_request_temperature_validation():
    with pytest.raises(ValueError):
        CompletionRequest(user="x", temperature=-1)
    with pytest.raises(ValueError):
        CompletionRequest(user="")


# --- oracle backend -------------------------------------------------------


def test_detect_stage_on_rendered_prompts():
    prompts = PromptSet.default()
    assert detect_stage(prompts.render("digsm", "capture", premises="A.")) == "capture"
    assert detect_stage(prompts.render("folio", "capture", premises="A.")) == "capture"
    assert detect_stage(prompts.render("digsm", "mindmap", premises="A.", question="Q?")) == "mindmap"
    assert detect_stage(prompts.render("proofwriter", "cot", premises="A.", question="Q?")) == "reason_logic"
    assert detect_stage(prompts.render("digsm", "cot", premises="A.", question="Q?")) == "reason_math"


def test_oracle_capture_lines_from_gold():
    record = {
        "id": "digsm-x",
        "premises": appendix.CAPTURE_CONTEXT[:4],
        "question": "How much will Mary pay?",
        "task_kind": "math_numeric",
        "answer": 1.0,
        "irrelevant": ["p1", "p4"],
        "original_order": ["p3", "p2"],
    }
    backend = OracleBackend([record])
    prompt = PromptSet.default().render("digsm", "capture", premises="\n".join(record["premises"]))
    text = backend.complete(CompletionRequest(user=prompt)).text
    lines = text.splitlines()
    assert f"{record['premises'][2]} -> {record['premises'][1]}" in lines
    assert f"{record['premises'][0]} -> None." in lines
    assert f"{record['premises'][3]} -> None." in lines


def test_oracle_reasoning_unknown_maps_to_option_c():
    forms = {
        "s1": fact_as_rule(parse_premise("The bear is green.")),
    }
    text = oracle_respond(
        "reason_logic",
        {"forms": forms, "stated": LogicTriple("bear", "is", "cold"), "texts": {}},
    )
    assert text.endswith("The correct option is: C")


def test_oracle_anchor_listing_order():
    record = {
        "id": "digsm-y",
        "premises": ["B happens second.", "A happens first.", "Noise here now."],
        "question": "What happens?",
        "task_kind": "math_numeric",
        "answer": 2.0,
        "irrelevant": ["p3"],
        "original_order": ["p2", "p1"],
    }
    backend = OracleBackend([record])
    prompt = PromptSet.default().render(
        "digsm", "mindmap", premises="irrelevant context", question=record["question"]
    )
    text = backend.complete(CompletionRequest(user=prompt)).text
    assert text.startswith(ANCHOR_PREAMBLE)
    assert "A happens first. -> B happens second." in text


def test_stub_backend_cycles_and_counts():
    stub = StubBackend(["one", "two"])
    assert stub.complete(CompletionRequest(user="x")).text == "one"
    assert stub.complete(CompletionRequest(user="x")).text == "two"
    assert stub.complete(CompletionRequest(user="x")).text == "two"
    assert stub.calls == 3
