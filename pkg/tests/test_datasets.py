import json

import pytest

from cop.capture import parse_logic_forms
from cop.chaining import closure_from_forms
from cop.datasets import (
    build_digsm,
    context_from_record,
    generate_logic_dataset,
    generate_synthetic,
    load_gsm8k,
    make_distractor_pool,
    record_from_context,
    save_jsonl,
)
from cop.errors import EmptyPool
from cop.logicform import parse_unified_logic

GSM_FIXTURE = [
    {
        "question": (
            "Annabelle is saving for a phone that costs $400. She already has $80 in her savings. "
            "Her first job, where she earns $10 per hour, pays her for 20 hours of work. "
            "She is also paid for 15 hours of work at her second job, where she earns $5 an hour. "
            "In dollars, how much money does Annabelle still need to save?"
        ),
        "answer": "Total 355.\n#### 45",
    },
    {
        "question": (
            "Mr. Manuel is a campsite manager. On a particular day, he counted 100 tents in the "
            "northernmost part of the campsite and twice that number on the east side. "
            "The number of tents at the center was four times the number in the north. "
            "He also counted 200 tents in the south. "
            "What is the total number of tents in the recreation area?"
        ),
        "answer": "900 tents.\n#### 900",
    },
    {
        "question": "Too short. Only two sentences here. What is 1 + 1?",
        "answer": "#### 2",
    },
]

POOL = [
    "Fern is checking IDs to get into an R-rated movie.",
    "Grandpa Lou enjoys watching movies on the Hallmark channel, where every movie lasts 90 minutes.",
    "There are 5 houses on a street, and each of the first four houses has 3 gnomes in the garden.",
    "Hans booked a room in a hotel.",
    "Jessica paid $1000 for rent each month.",
]


def test_gsm8k_loader_parses_final_answers(tmp_path):
    path = tmp_path / "gsm.jsonl"
    save_jsonl(GSM_FIXTURE, path)
    records = load_gsm8k(path)
    assert [r["answer"] for r in records] == [45.0, 900.0, 2.0]


def test_build_digsm_filters_and_annotates():
    records = build_digsm(load_gsm8k_fixture(), POOL, seed=3)
    assert len(records) == 2  # the two-sentence problem is dropped
    for record in records:
        assert 2 <= len(record["irrelevant"]) <= 3
        assert len(record["original_order"]) >= 4  # 5 sentences counting the question
        assert record["question"].endswith("?")
        n = len(record["premises"])
        assert set(record["irrelevant"]) | set(record["original_order"]) == {
            f"p{i + 1}" for i in range(n)
        }


def load_gsm8k_fixture():
    return [
        {"question": r["question"], "answer": float(r["answer"].split("####")[1])}
        for r in GSM_FIXTURE
    ]


def test_build_digsm_seeded_determinism(tmp_path):
    first = build_digsm(load_gsm8k_fixture(), POOL, seed=11)
    second = build_digsm(load_gsm8k_fixture(), POOL, seed=11)
    a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    save_jsonl(first, a)
    save_jsonl(second, b)
    assert a.read_bytes() == b.read_bytes()
    different = build_digsm(load_gsm8k_fixture(), POOL, seed=12)
    assert different != first


def test_build_digsm_never_alters_texts():
    gsm = load_gsm8k_fixture()
    records = build_digsm(gsm, POOL, seed=5)
    for record, source in zip(records, [gsm[0], gsm[1]]):
        from cop.segment import split_sentences

        original = split_sentences(source["question"])[:-1]
        kept = [t for t in record["premises"] if t in original]
        assert sorted(kept) == sorted(original)
        distractor_texts = [t for t in record["premises"] if t not in original]
        assert all(t in POOL for t in distractor_texts)


def test_build_digsm_empty_pool():
    with pytest.raises(EmptyPool):
        build_digsm(load_gsm8k_fixture(), [], seed=1)


def test_distractor_pool_from_other_problems():
    pool = make_distractor_pool(load_gsm8k_fixture())
    assert "Annabelle is saving for a phone that costs $400." in pool


# --- synthetic logic ------------------------------------------------------


def test_depth_zero_instances():
    context = generate_synthetic(depth=0, n_distractors=0, seed=21, label="True")
    assert len(context.premises) == 1
    stated, negated = parse_unified_logic(context.question.text, "question")
    forms = parse_logic_forms(context)
    assert closure_from_forms(forms).verdict_for(stated) == "True"


def test_depth_five_sixteen_premises():
    context = generate_synthetic(depth=5, n_distractors=10, seed=8, label="False")
    assert len(context.premises) == 16
    assert context.gold.answer == "False"
    assert len(context.gold.proof_order) == 6


def test_gold_and_distractors_disjoint():
    for seed in range(20):
        context = generate_synthetic(depth=3, n_distractors=5, seed=seed)
        if context.gold.proof_order:
            assert not (set(context.gold.proof_order) & context.gold.irrelevant_ids)


def test_labels_verified_against_closure():
    for seed in range(30):
        context = generate_synthetic(depth=seed % 6, n_distractors=4, seed=seed)
        stated, _ = parse_unified_logic(context.question.text, "question")
        forms = parse_logic_forms(context)
        assert closure_from_forms(forms).verdict_for(stated) == context.gold.answer


def test_dataset_generation_cycles_depths():
    records = generate_logic_dataset(n=12, depths=[0, 1, 2], n_distractors=2, seed=4)
    assert len(records) == 12
    assert all(r["task_kind"] == "logic_tfu" for r in records)
    labels = {r["answer"] for r in records}
    assert labels <= {"True", "False", "Unknown"}
    assert len(labels) >= 2


def test_record_context_round_trip():
    context = generate_synthetic(depth=2, n_distractors=3, seed=77)
    record = record_from_context(context)
    rebuilt = context_from_record(json.loads(json.dumps(record)))
    assert rebuilt.texts() == context.texts()
    assert rebuilt.question == context.question
    assert rebuilt.gold == context.gold


def test_proofwriter_meta_loader(tmp_path):
    from cop.datasets import load_proofwriter

    meta = {
        "id": "AttNoneg-D5-1",
        "theory": "The bear is green. If something is green then it is kind.",
        "questions": {
            "Q1": {"question": "The bear is kind.", "answer": True},
            "Q2": {"question": "The bear is red.", "answer": "Unknown"},
        },
    }
    path = tmp_path / "meta.jsonl"
    save_jsonl([meta], path)
    records = load_proofwriter(path)
    assert len(records) == 2
    assert records[0]["premises"] == ["The bear is green.", "If something is green then it is kind."]
    assert records[0]["answer"] == "True"
    assert records[1]["answer"] == "Unknown"
    contexts = [context_from_record(r) for r in records]
    assert contexts[0].task_kind == "logic_tfu"
