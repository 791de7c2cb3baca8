"""Shared builders and independent oracles for the test suite."""

from __future__ import annotations

import random

from cop.flow import FlowStep, SaliencyRecord, SentenceInfo
from cop.logicform import LogicRule, LogicTriple
from cop.model import Premise, Question, ReasoningContext


def make_context(texts, question="Is it so?", task_kind="logic_tfu", gold=None, example_id="ex"):
    premises = tuple(Premise(id=f"p{i + 1}", text=t, index=i) for i, t in enumerate(texts))
    return ReasoningContext(
        premises=premises, question=Question(question), task_kind=task_kind, gold=gold, id=example_id
    )


def union_find_components(nodes, edge_pairs):
    """Independent union-find oracle for weak connectivity."""
    parent = {n: n for n in nodes}

    def find(x):
        while parent[x] != x:
            x = parent[x]
        return x

    for a, b in edge_pairs:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb
    groups = {}
    for n in nodes:
        groups.setdefault(find(n), set()).add(n)
    return sorted(groups.values(), key=lambda s: min(nodes.index(m) for m in s))


def brute_force_tau(order_a, order_b):
    """O(n^2) pair counting."""
    pos_a = {e: i for i, e in enumerate(order_a)}
    pos_b = {e: i for i, e in enumerate(order_b)}
    elements = list(order_a)
    concordant = discordant = 0
    for i in range(len(elements)):
        for j in range(i + 1, len(elements)):
            x, y = elements[i], elements[j]
            da = pos_a[x] - pos_a[y]
            db = pos_b[x] - pos_b[y]
            if da * db > 0:
                concordant += 1
            else:
                discordant += 1
    total = len(elements) * (len(elements) - 1) // 2
    return (concordant - discordant) / total


def brute_force_closure(facts: list[LogicTriple], rules: list[LogicRule]) -> set[LogicTriple]:
    """Exhaustive BFS over all rule applications, no indexing, no proofs."""
    derived = set(facts)
    while True:
        new_triples = set()
        entities = {t.subject for t in derived}
        for rule in rules:
            uses_var = any(c.subject == "X" for c in rule.conditions)
            if any(c.subject == "X" for c in rule.consequents) and not uses_var:
                continue
            candidates = entities if uses_var else {None}
            for entity in candidates:
                ok = True
                for condition in rule.conditions:
                    want = condition if condition.subject != "X" else LogicTriple(
                        entity, condition.predicate, condition.object
                    )
                    if want not in derived:
                        ok = False
                        break
                if not ok:
                    continue
                for consequent in rule.consequents:
                    got = consequent if consequent.subject != "X" else LogicTriple(
                        entity, consequent.predicate, consequent.object
                    )
                    if got not in derived:
                        new_triples.add(got)
        if not new_triples:
            return derived
        derived |= new_triples


def random_logic_instance(rng: random.Random, max_premises: int = 12):
    """Random overlapping facts and rules over a small vocabulary."""
    entities = ["bear", "cat", "dog", "mouse"]
    attrs = ["red", "green", "blue", "cold", "kind", "big"]
    facts, rules = [], []
    n = rng.randint(2, max_premises)
    for _ in range(n):
        if rng.random() < 0.5:
            facts.append(LogicTriple(rng.choice(entities), "is", rng.choice(attrs)))
        else:
            uses_var = rng.random() < 0.7
            subjects = ["X" if uses_var else rng.choice(entities)]
            if rng.random() < 0.4:  # second condition, possibly ground
                subjects.append(rng.choice(entities) if rng.random() < 0.5 or not uses_var else "X")
            conditions = tuple(LogicTriple(s, "is", rng.choice(attrs)) for s in subjects)
            consequent_subject = "X" if uses_var else rng.choice(entities)
            rules.append(
                LogicRule(conditions, (LogicTriple(consequent_subject, "is", rng.choice(attrs)),))
            )
    return facts, rules


def make_flow_record(
    rng: random.Random,
    example_id: str,
    n_inputs: int = 5,
    n_generated: int = 4,
    layer_sets=("shallow", "deep"),
    group: str | None = None,
) -> SaliencyRecord:
    """Random positive flow record with labeled entrance and irrelevant set."""
    input_ids = [f"s{i + 1}" for i in range(n_inputs)]
    generated_ids = [f"g{k + 1}" for k in range(n_generated)]
    sentences = [SentenceInfo(sid, "premise", f"input {sid}") for sid in input_ids[:-1]]
    sentences.append(SentenceInfo(input_ids[-1], "question", "the question"))
    sentences += [SentenceInfo(gid, "generated", f"step {gid}") for gid in generated_ids]

    entrance = rng.choice(input_ids[:-1])
    others = [sid for sid in input_ids[:-1] if sid != entrance]
    irrelevant = set(rng.sample(others, rng.randint(1, max(1, len(others) - 1))))
    relevant = {sid for sid in input_ids if sid not in irrelevant}

    ordered = input_ids + generated_ids
    steps = []
    for k, gid in enumerate(generated_ids):
        preceding = ordered[: n_inputs + k]
        flows = {}
        for name in layer_sets:
            flows[name] = {sid: rng.uniform(0.05, 3.0) for sid in preceding}
        steps.append(FlowStep(target=gid, flows=flows))

    return SaliencyRecord(
        example_id=example_id,
        sentences=tuple(sentences),
        entrance=entrance,
        relevant=frozenset(relevant),
        irrelevant=frozenset(irrelevant),
        layer_sets={name: tuple(range(5)) for name in layer_sets},
        steps=tuple(steps),
        group=group,
    )
