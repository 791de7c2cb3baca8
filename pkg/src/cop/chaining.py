"""Deterministic forward-chaining reasoner over unified logic forms.

Provides ground-truth semantics for ProofWriter-style data: iterate rule
applications to a fixed point, track one shortest proof per derived triple,
and grade question triples closed-world (True when the stated form derives,
False when its negation derives, Unknown otherwise).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

from .logicform import VARIABLE, LogicRule, LogicTriple, substitute, unifies

DEFAULT_MAX_HOPS = 25


@dataclass(frozen=True)
class Closure:
    derived: frozenset[LogicTriple]
    proofs: Mapping[LogicTriple, tuple[str, ...]]
    rounds: int
    budget_exceeded: bool

    def verdict_for(self, stated: LogicTriple) -> str:
        if stated in self.derived:
            return "True"
        if stated.negated() in self.derived:
            return "False"
        return "Unknown"


def _merge_proof(parts: Sequence[tuple[str, ...]], rule_id: str) -> tuple[str, ...]:
    seen: set[str] = set()
    merged: list[str] = []
    for part in parts:
        for pid in part:
            if pid not in seen:
                seen.add(pid)
                merged.append(pid)
    merged.append(rule_id)
    return tuple(merged)


def _better(candidate: tuple[str, ...], incumbent: tuple[str, ...] | None) -> bool:
    if incumbent is None:
        return True
    return (len(candidate), candidate) < (len(incumbent), incumbent)


def forward_chain_closure(
    facts: Sequence[LogicTriple],
    rules: Sequence[LogicRule],
    max_hops: int = DEFAULT_MAX_HOPS,
    fact_ids: Sequence[str] | None = None,
    rule_ids: Sequence[str] | None = None,
) -> Closure:
    """Apply rules until fixed point (or the hop budget), proofs included.

    The variable X instantiates consistently within one rule application,
    ranging over entities the derived triples mention. Rules whose
    consequents use X without X appearing in any condition cannot be
    grounded and are skipped. Exceeding ``max_hops`` only flags the closure.
    """
    fact_ids = list(fact_ids) if fact_ids is not None else [f"f{i + 1}" for i in range(len(facts))]
    rule_ids = list(rule_ids) if rule_ids is not None else [f"r{i + 1}" for i in range(len(rules))]
    if len(fact_ids) != len(facts) or len(rule_ids) != len(rules):
        raise ValueError("id sequences must parallel facts and rules")

    proofs: dict[LogicTriple, tuple[str, ...]] = {}
    for triple, fid in zip(facts, fact_ids):
        candidate = (fid,)
        if _better(candidate, proofs.get(triple)):
            proofs[triple] = candidate

    rounds = 0
    changed = True
    while changed and rounds < max_hops:
        changed = False
        rounds += 1
        entities = {t.subject for t in proofs if t.subject != VARIABLE}
        snapshot = list(proofs.items())
        for rule, rid in zip(rules, rule_ids):
            has_var_condition = any(c.subject == VARIABLE for c in rule.conditions)
            has_var_consequent = any(c.subject == VARIABLE for c in rule.consequents)
            if has_var_consequent and not has_var_condition:
                continue
            bindings: list[str | None] = sorted(entities) if has_var_condition else [None]
            for binding in bindings:
                support: list[tuple[str, ...]] = []
                satisfied = True
                for condition in rule.conditions:
                    goal = substitute(condition, binding)
                    matches = [
                        proof
                        for triple, proof in snapshot
                        if unifies(triple, goal) and triple.subject != VARIABLE
                    ]
                    if not matches:
                        satisfied = False
                        break
                    support.append(min(matches, key=lambda p: (len(p), p)))
                if not satisfied:
                    continue
                for consequent in rule.consequents:
                    derived = substitute(consequent, binding)
                    if derived.subject == VARIABLE:
                        continue
                    candidate = _merge_proof(support, rid)
                    if _better(candidate, proofs.get(derived)):
                        proofs[derived] = candidate
                        changed = True
    return Closure(
        derived=frozenset(proofs),
        proofs=dict(proofs),
        rounds=rounds,
        budget_exceeded=changed,
    )


def closure_from_forms(
    forms: Mapping[str, LogicRule], max_hops: int = DEFAULT_MAX_HOPS
) -> Closure:
    """Closure over rule-normalized premises keyed by premise id."""
    facts: list[LogicTriple] = []
    fact_ids: list[str] = []
    rules: list[LogicRule] = []
    rule_ids: list[str] = []
    for pid, form in forms.items():
        if form.conditions:
            rules.append(form)
            rule_ids.append(pid)
        else:
            for consequent in form.consequents:
                facts.append(consequent)
                fact_ids.append(pid)
    return forward_chain_closure(facts, rules, max_hops, fact_ids, rule_ids)
