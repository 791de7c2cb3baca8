import json

from cop.backends import OracleBackend, StubBackend
from cop.chaining import closure_from_forms
from cop.capture import parse_logic_forms
from cop.datasets import context_from_record, generate_synthetic, record_from_context
from cop.errors import BackendError
from cop.logicform import parse_unified_logic
from cop.pipeline import answer_with_cop

from fixtures import appendix
from helpers import make_context


class FailingBackend:
    model = "failing"

    def complete(self, request):
        raise BackendError("boom", status=500)


def test_first_certain_submap_skips_the_rest():
    context = make_context(
        [
            "If someone is nice then they are young.",
            "If someone is cold then they are young.",
            "Alex is nice.",
            "Alex is cold.",
        ],
        question="Alex is young.",
    )
    backend = OracleBackend()
    verdict, trace = answer_with_cop(context, backend)
    assert verdict.label == "True"
    # two submaps existed, only the first was prompted
    assert len(trace.mindmap["roots"]) == 2
    assert trace.call_count == 1
    assert len(trace.contexts) == 1


def test_uncertain_first_submap_falls_through_to_second():
    # first anchor's chain is broken (no fact); second proves the statement
    replies = [
        "Reasoning unclear.\n\nThe correct option is: C",
        "Alex is cold. If someone is cold then they are young.\n\nThe correct option is: A",
    ]
    context = make_context(
        [
            "If someone is nice then they are young.",
            "If someone is cold then they are young.",
            "Alex is cold.",
        ],
        question="Alex is young.",
    )
    backend = StubBackend(replies)
    verdict, trace = answer_with_cop(context, backend)
    assert verdict.label == "True"
    assert trace.call_count == 2


def test_all_uncertain_returns_unknown_for_logic():
    context = make_context(
        ["If someone is nice then they are young.", "Alex is young."],
        question="Alex is nice.",
    )
    backend = StubBackend(["The correct option is: C"])
    verdict, trace = answer_with_cop(context, backend)
    assert verdict.label == "Unknown"
    assert not verdict.certain


def test_no_anchors_returns_unknown_without_calls():
    context = make_context(
        ["The bear is green.", "The dog is big."], question="The cat is small."
    )
    backend = OracleBackend()
    verdict, trace = answer_with_cop(context, backend)
    assert verdict.label == "Unknown"
    assert trace.call_count == 0
    assert trace.failure == "no anchors"


def test_capture_failure_falls_back_to_identity_order():
    record = {
        "id": "m1",
        "premises": ["Mary has 3 apples.", "Mary buys 2 more apples."],
        "question": "How many apples does Mary have?",
        "task_kind": "math_numeric",
        "answer": 5,
    }
    context = context_from_record(record)
    backend = StubBackend(["gibberish", "more gibberish", "The answer is 5."])
    verdict, trace = answer_with_cop(context, backend)
    assert verdict.value == 5
    assert trace.contexts[0].source == "identity"
    assert trace.contexts[0].premise_order == ("p1", "p2")
    assert trace.failure == "capture produced no parseable lines"


def test_backend_error_marks_trace_failed():
    context = make_context(
        ["Mary has 3 apples.", "Mary buys 2 more."],
        question="How many?",
        task_kind="math_numeric",
    )
    verdict, trace = answer_with_cop(context, FailingBackend())
    assert trace.failed
    assert verdict.label == "Unknown"


def test_oracle_verdict_equals_closure_verdict():
    context = generate_synthetic(depth=3, n_distractors=6, seed=123)
    backend = OracleBackend([record_from_context(context)])
    verdict, _ = answer_with_cop(context, backend)
    forms = parse_logic_forms(context)
    stated, _ = parse_unified_logic(context.question.text, "question")
    assert verdict.label == closure_from_forms(forms).verdict_for(stated)


def test_call_budget_single_submap():
    context = generate_synthetic(depth=4, n_distractors=8, seed=5, label="True")
    backend = OracleBackend([record_from_context(context)])
    _, trace = answer_with_cop(context, backend)
    assert trace.call_count <= 3


def test_trace_persistence_round_trip(tmp_path):
    context = generate_synthetic(depth=2, n_distractors=3, seed=9, label="False")
    backend = OracleBackend([record_from_context(context)])
    verdict, trace = answer_with_cop(context, backend)
    path = trace.save(tmp_path)
    assert path.name == f"{context.id}.trace.json"
    data = json.loads(path.read_text())
    assert data["call_count"] == len(data["stages"]) == trace.call_count
    assert data["verdict"]["label"] == verdict.label
    assert data["mindmap"]["D"] == 6


def test_natural_language_logic_takes_semantic_path():
    # premises outside the triple grammar: capture and anchoring go through the backend
    context = make_context(list(appendix.FOLIO_CONTEXT), question="Sea eel is a paper.")
    replies = [
        "\n".join(appendix.FOLIO_LINES),
        "A thing is either a plant or animal. -> All animals breathe. -> Nothing that breathes is paper.",
        "Therefore a sea eel is an animal and not paper.\n\nThe correct option is: B",
    ]
    backend = StubBackend(replies)
    verdict, trace = answer_with_cop(context, backend)
    assert verdict.label == "False"
    assert trace.call_count == 3
    assert [s.stage for s in trace.stages] == ["capture", "mindmap", "reason"]
    assert trace.contexts[0].premise_order == ("p1", "p2", "p4", "p5")


def test_math_pipeline_case2_order_restored():
    record = {
        "id": "case2",
        "context": appendix.CASE2_CONTEXT,
        "task_kind": "math_numeric",
        "answer": 45,
        "irrelevant": ["p4", "p5"],
        "original_order": ["p6", "p2", "p1", "p3"],
    }
    context = context_from_record(record)
    assert len(context.premises) == appendix.CASE2_N_PREMISES
    backend = OracleBackend([{**record, "premises": [p.text for p in context.premises],
                              "question": context.question.text}])
    verdict, trace = answer_with_cop(context, backend)
    assert verdict.value == 45
    final = trace.contexts[-1]
    assert final.premise_order == ("p6", "p2", "p1", "p3")
    assert "Fern" not in final.text and "Grandpa" not in final.text
