"""Stage 2: question-anchored mind-map construction and segmentation.

Anchors sit at the question end of the graph, so the depth-bounded search
walks edges against their forward direction, gathering prerequisites. When
parsed logic forms are available the walk is goal-directed: a prerequisite is
admitted only if one of its consequents supports the instantiated condition
it is meant to establish, which is what keeps reconstructed contexts minimal.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

from .capture import Fragment, fragment_text
from .errors import NoAnchors
from .logicform import VARIABLE, LogicRule, LogicTriple, parse_unified_logic, substitute, unifies
from .model import PremiseGraph, Question, ReasoningContext
from .relations import best_match

DEFAULT_MAX_DEPTH = 6


@dataclass(frozen=True)
class Anchor:
    """A fragment relevant to the question, entered at a specific premise."""

    fragment_id: str
    entry_id: str
    goal: LogicTriple | None = None


@dataclass(frozen=True)
class MindMap:
    question: Question
    roots: tuple[str, ...]
    children: Mapping[str, tuple[str, ...]]
    max_depth: int
    root_goals: Mapping[str, LogicTriple | None] = field(default_factory=dict)

    def node_ids(self) -> set[str]:
        nodes = set(self.roots)
        for parent, kids in self.children.items():
            nodes.add(parent)
            nodes.update(kids)
        return nodes

    def to_dict(self) -> dict:
        return {
            "roots": list(self.roots),
            "children": {k: list(v) for k, v in self.children.items() if v},
            "D": self.max_depth,
        }


@dataclass(frozen=True)
class SubMindMap:
    """One independent root branch of a mind map, self-contained."""

    root: str
    children: Mapping[str, tuple[str, ...]]
    max_depth: int

    def node_ids(self) -> set[str]:
        nodes = {self.root}
        for parent, kids in self.children.items():
            nodes.add(parent)
            nodes.update(kids)
        return nodes


def find_anchor_fragments(
    question: Question,
    fragments: list[Fragment],
    mode: str,
    context: ReasoningContext,
    logic_forms: Mapping[str, LogicRule] | None = None,
    backend=None,
    prompts=None,
    family: str = "digsm",
    match_threshold: float = 0.6,
    recorder=None,
) -> list[Anchor]:
    """Locate the fragments the question connects to, with entry premises.

    Logical mode anchors every premise whose triple or rule consequent
    unifies with either polarity of the question, in ascending fragment
    order. LLM mode prompts with the mind-map template and maps the listed
    sentences back to fragments; the entry is the listing's last member of
    each fragment (the premise nearest the answer). Raises NoAnchors when
    nothing matches, a valid outcome.
    """
    if mode == "logical":
        if logic_forms is None:
            raise ValueError("logical anchor mode needs parsed logic forms")
        variants = parse_unified_logic(question.text, "question")
        anchors: list[Anchor] = []
        for fragment in fragments:
            for pid in fragment.member_ids:
                form = logic_forms.get(pid)
                if form is None:
                    continue
                goal = next(
                    (v for v in variants if any(unifies(c, v) for c in form.consequents)), None
                )
                if goal is not None:
                    anchors.append(Anchor(fragment.id, pid, goal))
        if not anchors:
            raise NoAnchors(f"no fragment is relevant to {question.text!r}")
        return anchors

    if mode == "llm":
        from .backends import CompletionRequest

        lines = "\n".join(fragment_text(f, context) for f in fragments)
        prompt = prompts.render(family, "mindmap", premises=lines, question=question.text)
        result = backend.complete(CompletionRequest(user=prompt))
        if recorder is not None:
            recorder("mindmap", prompt, result)
        listed: list[str] = []
        for line in result.text.splitlines():
            if not line.strip():
                continue
            for segment in line.split("->"):
                segment = segment.strip()
                if not segment or segment.rstrip(".").strip().lower() == "none":
                    continue
                premise, _ = best_match(segment, context.premises, match_threshold)
                if premise is not None and premise.id not in listed:
                    listed.append(premise.id)
        if not listed:
            raise NoAnchors("mind-map completion listed no known premises")
        owner = {pid: f.id for f in fragments for pid in f.member_ids}
        fragment_order: list[str] = []
        last_member: dict[str, str] = {}
        for pid in listed:
            fid = owner[pid]
            if fid not in fragment_order:
                fragment_order.append(fid)
            last_member[fid] = pid
        return [Anchor(fid, last_member[fid], None) for fid in fragment_order]

    raise ValueError(f"unknown anchor mode {mode!r}")


def _admissible_children(
    node: str,
    goal: LogicTriple | None,
    graph: PremiseGraph,
    logic_forms: Mapping[str, LogicRule] | None,
    position: Mapping[str, int],
) -> list[tuple[str, LogicTriple | None]]:
    sources = sorted(graph.sources_into(node), key=position.__getitem__)
    if logic_forms is None or goal is None:
        return [(s, None) for s in sources]
    node_form = logic_forms.get(node)
    if node_form is None:
        return [(s, None) for s in sources]
    binding = None
    for consequent in node_form.consequents:
        if unifies(consequent, goal):
            if consequent.subject == VARIABLE and goal.subject != VARIABLE:
                binding = goal.subject
            break
    subgoals = [substitute(cond, binding) for cond in node_form.conditions]
    children: list[tuple[str, LogicTriple | None]] = []
    for source in sources:
        source_form = logic_forms.get(source)
        if source_form is None:
            continue
        for subgoal in subgoals:
            if any(unifies(c, subgoal) for c in source_form.consequents):
                children.append((source, subgoal))
                break
    return children


def build_mindmap(
    question: Question,
    graph: PremiseGraph,
    anchors: list[Anchor],
    max_depth: int = DEFAULT_MAX_DEPTH,
    logic_forms: Mapping[str, LogicRule] | None = None,
) -> MindMap:
    """Depth-bounded prerequisite search from each anchor entry.

    A node never reappears on its own root-to-leaf path, so cycles terminate
    instead of erroring. Siblings order by ascending original index; premises
    unreachable from every anchor are excluded.
    """
    if not anchors:
        raise NoAnchors("cannot build a mind map without anchors")
    position = {node: i for i, node in enumerate(graph.nodes)}
    children_map: dict[str, list[str]] = {}
    best_depth: dict[str, int] = {}

    def expand(node: str, goal: LogicTriple | None, depth: int, path: frozenset[str]) -> None:
        if depth >= max_depth:
            return
        for child, child_goal in _admissible_children(node, goal, graph, logic_forms, position):
            if child in path:
                continue
            kids = children_map.setdefault(node, [])
            if child not in kids:
                kids.append(child)
                kids.sort(key=position.__getitem__)
            if best_depth.get(child, max_depth + 1) <= depth + 1:
                continue
            best_depth[child] = depth + 1
            expand(child, child_goal, depth + 1, path | {child})

    roots: list[str] = []
    root_goals: dict[str, LogicTriple | None] = {}
    for anchor in anchors:
        if anchor.entry_id not in roots:
            roots.append(anchor.entry_id)
            root_goals[anchor.entry_id] = anchor.goal
        best_depth[anchor.entry_id] = 0
        expand(anchor.entry_id, anchor.goal, 0, frozenset({anchor.entry_id}))

    return MindMap(
        question=question,
        roots=tuple(roots),
        children={k: tuple(v) for k, v in children_map.items()},
        max_depth=max_depth,
        root_goals=root_goals,
    )


def _restrict(children: Mapping[str, tuple[str, ...]], root: str) -> dict[str, tuple[str, ...]]:
    out: dict[str, tuple[str, ...]] = {}
    done: set[str] = set()

    def walk(node: str, path: frozenset[str]) -> None:
        if node in done:
            return
        done.add(node)
        kids = tuple(c for c in children.get(node, ()) if c not in path)
        if kids:
            out[node] = kids
        for child in kids:
            walk(child, path | {child})

    walk(root, frozenset({root}))
    return out


def segment_submaps(mindmap: MindMap) -> list[SubMindMap]:
    """One self-contained submap per root, in root order.

    Descendants shared between roots are duplicated into each subtree.
    """
    return [
        SubMindMap(root=root, children=_restrict(mindmap.children, root), max_depth=mindmap.max_depth)
        for root in mindmap.roots
    ]
