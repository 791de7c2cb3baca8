"""Dataset records, loaders, the DI-GSM builder, and synthetic logic instances.

The on-disk format is JSON Lines, one object per example: ``id``, ``premises``
(array) or ``context`` (raw string), ``question``, ``task_kind``, ``answer``,
plus optional ``gold_proof``, ``irrelevant``, and ``original_order`` arrays of
premise ids.
"""

from __future__ import annotations

import json
import random
import re
from pathlib import Path
from typing import Iterable, Sequence

from .chaining import closure_from_forms
from .errors import CopError, EmptyPool, UnparsableSentence
from .logicform import LogicTriple, fact_as_rule, parse_premise, parse_unified_logic
from .model import GoldAnnotation, Premise, Question, ReasoningContext
from .segment import segment_context, split_sentences


def load_jsonl(path: str | Path) -> list[dict]:
    records = []
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if line:
                records.append(json.loads(line))
    return records


def save_jsonl(records: Iterable[dict], path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as handle:
        for record in records:
            handle.write(json.dumps(record, ensure_ascii=False) + "\n")


def _classify_kind(text: str, task_kind: str) -> str:
    if not task_kind.startswith("logic"):
        return "narrative"
    try:
        parsed = parse_premise(text)
    except UnparsableSentence:
        return "narrative"
    return "fact" if isinstance(parsed, LogicTriple) else "rule"


def context_from_record(record: dict) -> ReasoningContext:
    task_kind = record.get("task_kind", "logic_tfu")
    question_text = record.get("question", "")
    if "premises" in record and record["premises"]:
        texts = [t.strip() for t in record["premises"]]
    elif "context" in record and record["context"]:
        premises, routed_question = segment_context(record["context"])
        texts = [p.text for p in premises]
        if routed_question and not question_text:
            question_text = routed_question
    else:
        raise CopError(f"record {record.get('id')!r} has neither premises nor context")
    if not question_text:
        raise CopError(f"record {record.get('id')!r} has no question")

    premises = tuple(
        Premise(id=f"p{i + 1}", text=text, index=i, kind=_classify_kind(text, task_kind))
        for i, text in enumerate(texts)
    )
    gold = None
    if any(k in record for k in ("answer", "gold_proof", "irrelevant", "original_order")):
        gold = GoldAnnotation(
            answer=record.get("answer"),
            proof_order=tuple(record["gold_proof"]) if record.get("gold_proof") else None,
            irrelevant_ids=frozenset(record.get("irrelevant") or ()),
            original_order=tuple(record["original_order"]) if record.get("original_order") else None,
        )
    return ReasoningContext(
        premises=premises,
        question=Question(question_text),
        task_kind=task_kind,
        gold=gold,
        id=str(record.get("id", "")),
    )


def record_from_context(context: ReasoningContext) -> dict:
    record: dict = {
        "id": context.id,
        "premises": list(context.texts()),
        "question": context.question.text,
        "task_kind": context.task_kind,
    }
    if context.gold is not None:
        record["answer"] = context.gold.answer
        if context.gold.proof_order:
            record["gold_proof"] = list(context.gold.proof_order)
        if context.gold.irrelevant_ids:
            record["irrelevant"] = sorted(context.gold.irrelevant_ids, key=_premise_sort_key)
        if context.gold.original_order:
            record["original_order"] = list(context.gold.original_order)
    return record


def _premise_sort_key(pid: str):
    m = re.match(r"p(\d+)$", pid)
    return (0, int(m.group(1))) if m else (1, pid)


def load_dataset(path: str | Path) -> list[ReasoningContext]:
    return [context_from_record(r) for r in load_jsonl(path)]


# ---------------------------------------------------------------------------
# GSM8K and DI-GSM


_GSM_ANSWER_RE = re.compile(r"####\s*([-+]?[\d,]+(?:\.\d+)?)")


def load_gsm8k(path: str | Path) -> list[dict]:
    """GSM8K-format records: ``question`` text and ``answer`` ending '#### N'."""
    records = []
    for raw in load_jsonl(path):
        match = _GSM_ANSWER_RE.search(str(raw.get("answer", "")))
        if not match:
            continue
        records.append(
            {
                "question": str(raw["question"]).strip(),
                "answer": float(match.group(1).replace(",", "")),
            }
        )
    return records


def make_distractor_pool(gsm8k_records: Sequence[dict]) -> list[str]:
    """Opening sentences of problems, the style the distractors imitate."""
    pool = []
    for record in gsm8k_records:
        sentences = split_sentences(record["question"])
        if sentences and not sentences[0].endswith("?"):
            pool.append(sentences[0])
    return pool


def build_digsm(
    gsm8k_records: Sequence[dict],
    distractor_pool: Sequence[str] | None,
    seed: int,
    min_sentences: int = 5,
) -> list[dict]:
    """Construct the disordered-and-irrelevant math dataset.

    Keeps problems whose statement splits into at least ``min_sentences``
    sentences (question included), shuffles the non-question sentences with
    the seeded RNG, and inserts 2 or 3 distractor sentences at seeded
    positions. The question sentence stays last; texts are never altered.
    """
    rng = random.Random(seed)
    if distractor_pool is None:
        distractor_pool = make_distractor_pool(gsm8k_records)
    pool = [s for s in distractor_pool if s.strip()]
    if not pool:
        raise EmptyPool("no distractor sentences available")

    out: list[dict] = []
    for number, record in enumerate(gsm8k_records):
        sentences = split_sentences(record["question"])
        if len(sentences) < min_sentences or not sentences[-1].endswith("?"):
            continue
        question = sentences[-1]
        body = sentences[:-1]
        original = list(body)

        shuffled = list(body)
        rng.shuffle(shuffled)

        own_opening = original[0]
        candidates = [s for s in pool if s != own_opening and s not in original]
        if not candidates:
            raise EmptyPool("distractor pool only contains this problem's own sentences")
        k = rng.choice((2, 3))
        k = min(k, len(candidates))
        distractors = rng.sample(candidates, k)
        for sentence in distractors:
            position = rng.randrange(len(shuffled) + 1)
            shuffled.insert(position, sentence)

        ids = [f"p{i + 1}" for i in range(len(shuffled))]
        remaining = set(range(len(shuffled)))

        def take_id(text: str) -> str:
            for i in sorted(remaining):
                if shuffled[i] == text:
                    remaining.discard(i)
                    return ids[i]
            raise CopError("sentence lost during DI-GSM assembly")

        original_order = [take_id(text) for text in original]
        irrelevant = [take_id(text) for text in distractors]

        out.append(
            {
                "id": f"digsm-{number + 1}",
                "premises": shuffled,
                "question": question,
                "task_kind": "math_numeric",
                "answer": record["answer"],
                "irrelevant": sorted(irrelevant, key=_premise_sort_key),
                "original_order": original_order,
            }
        )
    return out


# ---------------------------------------------------------------------------
# Synthetic logic instances


_GOLD_ENTITIES = ("bear", "cat", "dog", "mouse", "tiger", "rabbit", "squirrel", "lion", "cow", "eagle")
_GOLD_ATTRS = (
    "green", "kind", "round", "cold", "rough", "nice", "young", "big", "red", "blue",
    "quiet", "furry", "smart", "happy", "strong", "brave",
)
_NOISE_ENTITIES = ("fox", "wolf", "owl", "frog", "duck", "goat", "pig", "hen", "bat", "seal")
_NOISE_ATTRS = (
    "purple", "orange", "sleepy", "noisy", "tiny", "huge", "fast", "slow", "shiny", "dull",
    "wild", "tame", "old", "new", "soft", "hard", "light", "dark", "calm", "loud",
    "warm", "cool", "plain", "fancy",
)

LABELS = ("True", "False", "Unknown")


def generate_synthetic(
    depth: int,
    n_distractors: int,
    seed: int | None = None,
    label: str | None = None,
    rng: random.Random | None = None,
    example_id: str = "syn-1",
) -> ReasoningContext:
    """One shuffled fact-plus-rule-chain instance with gold annotations.

    The chain entails the question triple, its negation, or neither (the
    Unknown case either asks about a fresh attribute or breaks the chain).
    The recorded answer is verified against the forward-chaining closure.
    """
    if depth < 0:
        raise ValueError("depth must be >= 0")
    rng = rng or random.Random(seed)
    label = label or rng.choice(LABELS)
    if label not in LABELS:
        raise ValueError(f"unknown label {label!r}")

    entity = rng.choice(_GOLD_ENTITIES)
    attrs = rng.sample(_GOLD_ATTRS, depth + 2)
    chain_attrs, spare_attr = attrs[: depth + 1], attrs[depth + 1]

    chain = [f"The {entity} is {chain_attrs[0]}."]
    chain += [
        f"If something is {chain_attrs[i]} then it is {chain_attrs[i + 1]}." for i in range(depth)
    ]

    broken_gap: int | None = None
    if label == "True":
        question = f"The {entity} is {chain_attrs[-1]}."
    elif label == "False":
        question = f"The {entity} is not {chain_attrs[-1]}."
    else:
        if depth >= 2 and rng.random() < 0.5:
            broken_gap = rng.randrange(1, depth)  # drop one middle rule
            question = f"The {entity} is {chain_attrs[-1]}."
        else:
            question = f"The {entity} is {spare_attr}."
    if broken_gap is not None:
        chain = chain[:broken_gap] + chain[broken_gap + 1 :]

    noise_entity_pool = list(_NOISE_ENTITIES)
    noise_attr_pool = list(_NOISE_ATTRS)
    rng.shuffle(noise_entity_pool)
    rng.shuffle(noise_attr_pool)
    distractors: list[str] = []
    for i in range(n_distractors):
        a = noise_attr_pool[i % len(noise_attr_pool)]
        b = noise_attr_pool[(i + 1) % len(noise_attr_pool)]
        if i % 2 == 0:
            distractors.append(f"The {noise_entity_pool[i % len(noise_entity_pool)]} is {a}.")
        else:
            distractors.append(f"If something is {a} then it is {b}.")

    sentences = chain + distractors
    order = list(range(len(sentences)))
    rng.shuffle(order)
    shuffled = [sentences[i] for i in order]
    id_at = {original: f"p{shuffled_pos + 1}" for shuffled_pos, original in enumerate(order)}

    chain_ids = [id_at[i] for i in range(len(chain))]
    distractor_ids = [id_at[len(chain) + i] for i in range(len(distractors))]

    record = {
        "id": example_id,
        "premises": shuffled,
        "question": question,
        "task_kind": "logic_tfu",
        "answer": label,
        "irrelevant": sorted(distractor_ids, key=_premise_sort_key),
    }
    if label in ("True", "False") and broken_gap is None:
        record["gold_proof"] = chain_ids

    context = context_from_record(record)
    _verify_label(context, label)
    return context


def _verify_label(context: ReasoningContext, label: str) -> None:
    forms = {}
    for premise in context.premises:
        parsed = parse_premise(premise.text)
        forms[premise.id] = fact_as_rule(parsed) if isinstance(parsed, LogicTriple) else parsed
    stated, _ = parse_unified_logic(context.question.text, "question")
    verdict = closure_from_forms(forms).verdict_for(stated)
    if verdict != label:
        raise CopError(f"constructed label {label} disagrees with closure verdict {verdict}")


def generate_logic_dataset(
    n: int, depths: Sequence[int], n_distractors: int, seed: int
) -> list[dict]:
    """``n`` synthetic instances cycling through ``depths``, as records."""
    rng = random.Random(seed)
    records = []
    for i in range(n):
        depth = depths[i % len(depths)]
        context = generate_synthetic(
            depth=depth, n_distractors=n_distractors, rng=rng, example_id=f"logic-{i + 1}"
        )
        records.append(record_from_context(context))
    return records


# ---------------------------------------------------------------------------
# ProofWriter meta format


def load_proofwriter(path: str | Path, limit: int | None = None) -> list[dict]:
    """Flatten ProofWriter meta-* JSONL into the package record format."""
    out: list[dict] = []
    for raw in load_jsonl(path):
        theory = raw.get("theory") or ""
        premises = split_sentences(theory) if theory else []
        questions = raw.get("questions") or {}
        items = questions.items() if isinstance(questions, dict) else enumerate(questions)
        for key, q in items:
            answer = q.get("answer")
            if isinstance(answer, bool):
                answer = "True" if answer else "False"
            out.append(
                {
                    "id": f"{raw.get('id', 'pw')}-{key}",
                    "premises": premises,
                    "question": q.get("question", ""),
                    "task_kind": "logic_tfu",
                    "answer": str(answer),
                }
            )
            if limit is not None and len(out) >= limit:
                return out
    return out
