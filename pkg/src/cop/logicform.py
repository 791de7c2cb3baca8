"""Unified logic form: triples, rules, and their sentence parsers/renderers.

Facts render as ``subject(predicate, object)``. Rules carry condition and
consequent triple lists. Pronoun and indefinite subjects (it, they, someone,
something, ...) always map to the variable ``X``; negation stays inside the
predicate string (``is not``, ``not see``).
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass

from .errors import UnparsableSentence

VARIABLE = "X"

_PRONOUNS = frozenset(
    {"someone", "something", "somebody", "anyone", "anything", "they", "it", "he", "she", "sb", "sth"}
)
_COPULAS = frozenset({"is", "are", "was", "were"})
_ARTICLES = frozenset({"the", "a", "an"})


@dataclass(frozen=True)
class LogicTriple:
    subject: str
    predicate: str
    object: str

    def render(self) -> str:
        return f"{self.subject}({self.predicate}, {self.object})"

    def negated(self) -> "LogicTriple":
        if self.predicate == "is":
            pred = "is not"
        elif self.predicate == "is not":
            pred = "is"
        elif self.predicate.startswith("not "):
            pred = self.predicate[4:]
        else:
            pred = f"not {self.predicate}"
        return LogicTriple(self.subject, pred, self.object)


@dataclass(frozen=True)
class LogicRule:
    conditions: tuple[LogicTriple, ...]
    consequents: tuple[LogicTriple, ...]

    def __post_init__(self):
        if not self.conditions and not self.consequents:
            raise ValueError("rule needs at least one condition or consequent")
        if not self.consequents:
            raise ValueError("rule needs at least one consequent")


def fact_as_rule(triple: LogicTriple) -> LogicRule:
    """A fact behaves like a rule with no conditions and one consequent."""
    return LogicRule(conditions=(), consequents=(triple,))


def unifies(consequent: LogicTriple, condition: LogicTriple) -> bool:
    """Variable X matches any entity; entities match only themselves or X.

    Predicates and objects must match literally, negation included.
    """
    if consequent.predicate != condition.predicate or consequent.object != condition.object:
        return False
    return (
        consequent.subject == condition.subject
        or consequent.subject == VARIABLE
        or condition.subject == VARIABLE
    )


def substitute(triple: LogicTriple, binding: str | None) -> LogicTriple:
    """Instantiate the variable subject with ``binding`` when given."""
    if binding is not None and triple.subject == VARIABLE:
        return LogicTriple(binding, triple.predicate, triple.object)
    return triple


_TRIPLE_RE = re.compile(r"^\s*(?P<subj>[^()]+?)\((?P<inner>.+)\)\s*$")


def parse_triple(text: str) -> LogicTriple:
    """Parse the rendered form ``subject(predicate, object)``."""
    m = _TRIPLE_RE.match(text)
    if not m:
        raise UnparsableSentence(text, "not a rendered triple")
    inner = m.group("inner")
    if ", " not in inner:
        raise UnparsableSentence(text, "missing comma-space separator")
    predicate, obj = inner.split(", ", 1)
    return LogicTriple(m.group("subj"), predicate, obj)


def _strip_article(tokens: list[str]) -> list[str]:
    if tokens and tokens[0].lower() in _ARTICLES:
        return tokens[1:]
    return tokens


def _lemmatize(verb: str) -> str:
    # third-person singular -> base form; corpora verbs are all simple -s forms
    if verb.endswith("s") and len(verb) > 2:
        return verb[:-1]
    return verb


# Repairs occasional missing spaces in source data, e.g. "isyoung".
_GLUED_IS_RE = re.compile(r"\bis(?P<rest>(?:not)?[a-z]{2,})\b")


def _repair_spacing(text: str) -> str:
    def fix(m: re.Match) -> str:
        rest = m.group("rest")
        if rest.startswith("not") and len(rest) > 3:
            return f"is not {rest[3:]}"
        return f"is {rest}"

    return _GLUED_IS_RE.sub(fix, text, count=1)


def _parse_clause(text: str, prev: LogicTriple | None = None) -> LogicTriple:
    tokens = [t for t in text.replace(",", " ").split() if t]
    tokens = [t.rstrip(".!?") for t in tokens]
    tokens = [t for t in tokens if t]
    if not tokens:
        raise UnparsableSentence(text, "empty clause")
    body = _strip_article(tokens)
    verb_at = None
    for i in range(1, len(body)):
        tok = body[i].lower()
        if tok in _COPULAS or tok in ("does", "do"):
            verb_at = i
            break
        # plain verbs take an article-marked object: "sees the cat", "see the cow"
        if i + 1 < len(body) and body[i + 1].lower() in _ARTICLES:
            verb_at = i
            break
    if verb_at is None:
        # bare continuation like the "cold" in "green and cold"
        if prev is not None and len(body) <= 2:
            negated = body[0].lower() == "not"
            obj = " ".join(body[1:] if negated else body)
            if obj:
                return LogicTriple(prev.subject, "is not" if negated else "is", obj)
        raise UnparsableSentence(text, "no verb found")

    subject_tokens = body[:verb_at]
    verb = body[verb_at].lower()
    rest = body[verb_at + 1 :]
    subject = " ".join(subject_tokens)
    if len(subject_tokens) == 1 and subject_tokens[0].lower() in _PRONOUNS:
        subject = VARIABLE

    if verb in _COPULAS:
        negated = bool(rest) and rest[0].lower() == "not"
        if negated:
            rest = rest[1:]
        rest = _strip_article(rest)
        if not rest:
            raise UnparsableSentence(text, "copula without object")
        return LogicTriple(subject, "is not" if negated else "is", " ".join(rest))
    if verb in ("does", "do"):
        if len(rest) < 2 or rest[0].lower() != "not":
            raise UnparsableSentence(text, "expected 'does not <verb>'")
        base = rest[1].lower()
        obj = _strip_article(rest[2:])
        if not obj:
            raise UnparsableSentence(text, "negated verb without object")
        return LogicTriple(subject, f"not {base}", " ".join(obj))
    obj = _strip_article(rest)
    if not obj:
        raise UnparsableSentence(text, "verb without object")
    return LogicTriple(subject, _lemmatize(verb), " ".join(obj))


def _parse_clause_list(text: str) -> list[LogicTriple]:
    triples: list[LogicTriple] = []
    for part in re.split(r"\s+and\s+", text):
        prev = triples[-1] if triples else None
        triples.append(_parse_clause(part, prev))
    return triples


_PLURAL_RULE_RE = re.compile(
    r"^(?:all\s+)?(?P<adjs>.+?)\s+(?:people|things)\s+(?:are|is)\s+(?P<neg>not\s+)?(?P<obj>.+?)[.!?]?$",
    re.IGNORECASE,
)
_EVERY_RULE_RE = re.compile(
    r"^(?:every|each)\s+(?P<noun>\w+)\s+is\s+(?P<neg>not\s+)?(?:a\s+|an\s+)?(?P<obj>.+?)[.!?]?$",
    re.IGNORECASE,
)


def _parse_fact(text: str) -> LogicTriple:
    try:
        return _parse_clause(text)
    except UnparsableSentence:
        repaired = _repair_spacing(text)
        if repaired != text:
            return _parse_clause(repaired)
        raise


def _parse_rule(text: str) -> LogicRule:
    stripped = text.strip()
    m = re.match(r"^if\s+(?P<cond>.+?)\s+then\s+(?P<cons>.+)$", stripped, re.IGNORECASE)
    if m:
        conditions = _parse_clause_list(m.group("cond"))
        consequents = _parse_clause_list(m.group("cons"))
        return LogicRule(tuple(conditions), tuple(consequents))
    m = _PLURAL_RULE_RE.match(stripped)
    if m:
        adjs = [a.strip() for a in re.split(r",|\s+and\s+", m.group("adjs")) if a.strip()]
        conditions = tuple(LogicTriple(VARIABLE, "is", a.lower()) for a in adjs)
        predicate = "is not" if m.group("neg") else "is"
        consequents = (LogicTriple(VARIABLE, predicate, m.group("obj").strip()),)
        if conditions:
            return LogicRule(conditions, consequents)
    m = _EVERY_RULE_RE.match(stripped)
    if m:
        predicate = "is not" if m.group("neg") else "is"
        return LogicRule(
            (LogicTriple(VARIABLE, "is", m.group("noun").lower()),),
            (LogicTriple(VARIABLE, predicate, m.group("obj").strip()),),
        )
    raise UnparsableSentence(text, "not a rule form")


def looks_like_rule(text: str) -> bool:
    stripped = text.strip()
    return bool(
        re.match(r"^if\s", stripped, re.IGNORECASE)
        or _PLURAL_RULE_RE.match(stripped)
        or _EVERY_RULE_RE.match(stripped)
    )


def parse_unified_logic(text: str, mode: str):
    """Parse one ProofWriter/PrOntoQA-style sentence.

    ``fact`` returns a LogicTriple, ``rule`` a LogicRule, and ``question`` the
    pair (triple as stated, its negation).
    """
    if mode == "fact":
        return _parse_fact(text)
    if mode == "rule":
        return _parse_rule(text)
    if mode == "question":
        stated = _parse_fact(text)
        return (stated, stated.negated())
    raise ValueError(f"unknown parse mode {mode!r}")


def parse_premise(text: str) -> LogicTriple | LogicRule:
    """Parse a premise as a rule when it looks conditional, else as a fact."""
    if looks_like_rule(text):
        return _parse_rule(text)
    return _parse_fact(text)


def rule_to_output(rule: LogicRule) -> dict:
    return {
        "conditions": [t.render() for t in rule.conditions],
        "consequents": [t.render() for t in rule.consequents],
    }


def render_rules_output(rules: list[LogicRule]) -> str:
    """Rules block in the unified output format: a single JSON object."""
    return json.dumps({f"Rule{i + 1}": rule_to_output(r) for i, r in enumerate(rules)})


def render_facts_output(triples: list[LogicTriple]) -> str:
    """Facts block in the unified output format (no enclosing braces)."""
    return ", ".join(f'"Fact{i + 1}": ["{t.render()}"]' for i, t in enumerate(triples))


def render_question_output(pair: tuple[LogicTriple, LogicTriple]) -> str:
    return json.dumps([pair[0].render(), pair[1].render()])
