"""Stage 1: build the premise graph and integrate it into fragments.

Logical corpora link deterministically (a premise points at every premise
whose conditions one of its consequents satisfies); narrative corpora link by
prompting a completion backend and parsing the returned "A -> B" lines.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import NoParsableLines, UnparsableSentence, UnparsedPremise
from .logicform import LogicRule, LogicTriple, fact_as_rule, parse_premise, unifies
from .model import PremiseGraph, ReasoningContext, RelationEdge
from .relations import RelationParse, graph_from_parse, parse_relation_lines


@dataclass(frozen=True)
class Fragment:
    """One weakly-connected component of the premise graph."""

    id: str
    member_ids: tuple[str, ...]
    edges: tuple[RelationEdge, ...]


def parse_logic_forms(context: ReasoningContext) -> dict[str, LogicRule]:
    """Parse every premise to rule-normalized logic form.

    Facts become rules with zero conditions and one consequent. Raises
    UnparsedPremise listing the ids that failed.
    """
    forms: dict[str, LogicRule] = {}
    failures: list[str] = []
    for premise in context.premises:
        try:
            parsed = parse_premise(premise.text)
        except UnparsableSentence:
            failures.append(premise.id)
            continue
        forms[premise.id] = fact_as_rule(parsed) if isinstance(parsed, LogicTriple) else parsed
    if failures:
        raise UnparsedPremise(failures)
    return forms


def link_logical(context: ReasoningContext) -> PremiseGraph:
    """Deterministic modus-ponens linking: edge u -> v when a consequent of u
    unifies with a condition of v. Facts have no conditions, so they never
    receive edges."""
    forms = parse_logic_forms(context)
    edges: list[RelationEdge] = []
    for u in context.premises:
        u_form = forms[u.id]
        for v in context.premises:
            if u.id == v.id:
                continue
            v_form = forms[v.id]
            if not v_form.conditions:
                continue
            if any(unifies(c, cond) for c in u_form.consequents for cond in v_form.conditions):
                edges.append(RelationEdge(u.id, v.id, origin="deterministic"))
    return PremiseGraph(nodes=tuple(p.id for p in context.premises), edges=tuple(edges))


def link_semantic(
    context: ReasoningContext,
    backend,
    prompts,
    family: str = "digsm",
    match_threshold: float = 0.6,
    recorder=None,
    retries: int = 1,
) -> tuple[PremiseGraph, RelationParse]:
    """LLM-prompted linking for narrative corpora.

    Issues a single capture prompt listing all premises; retries once when the
    completion has no parseable lines, then raises NoParsableLines so the
    caller can fall back to the identity reconstruction.
    """
    from .backends import CompletionRequest  # local import to keep layering thin

    prompt = prompts.render(family, "capture", premises="\n".join(context.texts()))
    last_error: NoParsableLines | None = None
    for _ in range(retries + 1):
        result = backend.complete(CompletionRequest(user=prompt))
        if recorder is not None:
            recorder("capture", prompt, result)
        try:
            parse = parse_relation_lines(result.text, context, match_threshold)
        except NoParsableLines as exc:
            last_error = exc
            continue
        return graph_from_parse(parse, context), parse
    raise last_error if last_error is not None else NoParsableLines("capture produced no lines")


def integrate_fragments(graph: PremiseGraph) -> list[Fragment]:
    """Weakly-connected components, ordered by their smallest original index.

    Every node lands in exactly one fragment; members are listed in ascending
    original order.
    """
    position = {node: i for i, node in enumerate(graph.nodes)}
    parent = {node: node for node in graph.nodes}

    def find(x: str) -> str:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(a: str, b: str) -> None:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[rb] = ra

    for edge in graph.edges:
        union(edge.source, edge.target)

    components: dict[str, list[str]] = {}
    for node in graph.nodes:
        components.setdefault(find(node), []).append(node)

    ordered = sorted(components.values(), key=lambda members: min(position[m] for m in members))
    fragments = []
    for i, members in enumerate(ordered):
        member_set = set(members)
        fragment_edges = tuple(e for e in graph.edges if e.source in member_set)
        fragments.append(
            Fragment(
                id=f"f{i + 1}",
                member_ids=tuple(sorted(members, key=position.__getitem__)),
                edges=fragment_edges,
            )
        )
    return fragments


def fragment_for(fragments: list[Fragment], premise_id: str) -> Fragment:
    for fragment in fragments:
        if premise_id in fragment.member_ids:
            return fragment
    raise KeyError(premise_id)


def fragment_text(fragment: Fragment, context: ReasoningContext) -> str:
    """Render a fragment's sentences in edge (topological) order for prompts.

    Falls back to ascending original order for members left by cycles.
    """
    by_id = context.by_id
    incoming: dict[str, int] = {m: 0 for m in fragment.member_ids}
    targets: dict[str, list[str]] = {m: [] for m in fragment.member_ids}
    for edge in fragment.edges:
        if edge.target in incoming:
            incoming[edge.target] += 1
            targets[edge.source].append(edge.target)
    position = {m: i for i, m in enumerate(fragment.member_ids)}
    ready = sorted((m for m, deg in incoming.items() if deg == 0), key=position.__getitem__)
    order: list[str] = []
    while ready:
        node = ready.pop(0)
        order.append(node)
        for nxt in sorted(targets[node], key=position.__getitem__):
            incoming[nxt] -= 1
            if incoming[nxt] == 0:
                ready.append(nxt)
        ready.sort(key=position.__getitem__)
    for member in fragment.member_ids:
        if member not in order:
            order.append(member)
    return " ".join(by_id[m].text for m in order)
