"""Parsing of "A -> B" relation lines and fuzzy matching back to premises."""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .errors import NoParsableLines
from .model import Premise, PremiseGraph, ReasoningContext, RelationEdge

_TOKEN_RE = re.compile(r"[a-z0-9]+")
_NONE_RE = re.compile(r"^none[.!]?$", re.IGNORECASE)

DEFAULT_MATCH_THRESHOLD = 0.6


def text_tokens(text: str) -> frozenset[str]:
    return frozenset(_TOKEN_RE.findall(text.lower()))


def token_f1(a: frozenset[str], b: frozenset[str]) -> float:
    if not a or not b:
        return 0.0
    return 2.0 * len(a & b) / (len(a) + len(b))


def best_match(
    segment: str, premises: tuple[Premise, ...], threshold: float
) -> tuple[Premise | None, float]:
    """Best-scoring premise by token-set F1; ties resolve to the lower index.

    Segments carrying a list preamble ("... are: <sentence>") are also scored
    on the text after the final colon.
    """
    candidates = [segment]
    if ":" in segment:
        tail = segment.rsplit(":", 1)[1].strip()
        if tail:
            candidates.append(tail)
    best: Premise | None = None
    best_score = 0.0
    for premise in premises:
        ptokens = text_tokens(premise.text)
        score = max(token_f1(text_tokens(c), ptokens) for c in candidates)
        if score > best_score:
            best, best_score = premise, score
    if best is not None and best_score >= threshold:
        return best, best_score
    return None, best_score


@dataclass
class RelationParse:
    """Edges recovered from a stage completion plus match diagnostics."""

    edges: list[RelationEdge] = field(default_factory=list)
    diagnostics: list[dict] = field(default_factory=list)
    lines_parsed: int = 0
    matched_sequence: list[str] = field(default_factory=list)


def parse_relation_lines(
    llm_output: str,
    context: ReasoningContext,
    match_threshold: float = DEFAULT_MATCH_THRESHOLD,
    origin: str = "llm",
) -> RelationParse:
    """Extract premise edges from completion lines of the form ``A -> B``.

    Chains (``A -> B -> C``) yield one edge per consecutive matched pair;
    ``-> None`` ends a chain without an edge. Sides that match no premise at
    or above the threshold are dropped and reported, never fabricated.
    Raises NoParsableLines when no line contains the arrow grammar at all.
    """
    result = RelationParse()
    seen_pairs: set[tuple[str, str]] = set()
    for line_no, raw_line in enumerate(llm_output.splitlines(), start=1):
        line = raw_line.strip()
        if "->" not in line:
            continue
        result.lines_parsed += 1
        segments = [s.strip() for s in line.split("->")]
        previous: str | None = None
        for segment in segments:
            if not segment or _NONE_RE.match(segment):
                previous = None
                continue
            premise, score = best_match(segment, context.premises, match_threshold)
            if premise is None:
                result.diagnostics.append(
                    {"line": line_no, "segment": segment, "best_score": round(score, 4)}
                )
                previous = None
                continue
            result.matched_sequence.append(premise.id)
            if previous is not None and previous != premise.id:
                pair = (previous, premise.id)
                if pair not in seen_pairs:
                    seen_pairs.add(pair)
                    result.edges.append(RelationEdge(previous, premise.id, origin=origin))
            previous = premise.id
    if result.lines_parsed == 0:
        raise NoParsableLines("completion contained no 'A -> B' lines")
    return result


def graph_from_parse(parse: RelationParse, context: ReasoningContext) -> PremiseGraph:
    """Graph over all context premises with the parsed edges."""
    return PremiseGraph(
        nodes=tuple(p.id for p in context.premises),
        edges=tuple(parse.edges),
    )


def render_relation_lines(graph: PremiseGraph, context: ReasoningContext) -> list[str]:
    """Inverse of ``parse_relation_lines`` for scripted completions.

    One line per premise in presentation order; premises without outgoing
    edges render as ``<text> -> None.``
    """
    by_id = context.by_id
    lines = []
    for premise in context.premises:
        targets = graph.targets_from(premise.id)
        if not targets:
            lines.append(f"{premise.text} -> None.")
        else:
            for target in targets:
                lines.append(f"{premise.text} -> {by_id[target].text}")
    return lines
