"""Core data types: premises, questions, reasoning contexts, and relation graphs.

All types are immutable after construction so they can be shared freely
between worker threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field

TASK_KINDS = ("logic_tfu", "logic_tf", "math_numeric")
PREMISE_KINDS = ("fact", "rule", "narrative")
EDGE_ORIGINS = ("deterministic", "llm", "gold")


@dataclass(frozen=True)
class Premise:
    """One sentence of the problem context."""

    id: str
    text: str
    index: int
    kind: str = "narrative"

    def __post_init__(self):
        if not self.text.strip():
            raise ValueError(f"premise {self.id} has empty text")
        if self.kind not in PREMISE_KINDS:
            raise ValueError(f"unknown premise kind {self.kind!r}")
        if self.index < 0:
            raise ValueError("premise index must be >= 0")


@dataclass(frozen=True)
class Question:
    """The query the pipeline must answer."""

    text: str

    def __post_init__(self):
        if not self.text.strip():
            raise ValueError("question text is empty")


@dataclass(frozen=True)
class GoldAnnotation:
    """Ground-truth label plus optional proof order and irrelevant-premise set."""

    answer: str | float | None = None
    proof_order: tuple[str, ...] | None = None
    irrelevant_ids: frozenset[str] = frozenset()
    original_order: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.proof_order is not None:
            overlap = set(self.proof_order) & set(self.irrelevant_ids)
            if overlap:
                raise ValueError(f"proof_order and irrelevant_ids overlap: {sorted(overlap)}")

    @property
    def reference_order(self) -> tuple[str, ...] | None:
        """Order used to score organization: the proof when given, else the original order."""
        return self.proof_order if self.proof_order else self.original_order


@dataclass(frozen=True)
class ReasoningContext:
    """An ordered premise collection plus the question to answer."""

    premises: tuple[Premise, ...]
    question: Question
    task_kind: str
    gold: GoldAnnotation | None = None
    id: str = ""

    def __post_init__(self):
        if self.task_kind not in TASK_KINDS:
            raise ValueError(f"unknown task kind {self.task_kind!r}")
        ids = [p.id for p in self.premises]
        if len(set(ids)) != len(ids):
            raise ValueError("premise ids must be unique")
        indices = sorted(p.index for p in self.premises)
        if indices != list(range(len(self.premises))):
            raise ValueError("premise indices must be contiguous from 0")
        if self.gold is not None:
            known = set(ids)
            for pid in self.gold.proof_order or ():
                if pid not in known:
                    raise ValueError(f"gold proof references unknown premise {pid}")
            for pid in self.gold.irrelevant_ids:
                if pid not in known:
                    raise ValueError(f"gold irrelevant set references unknown premise {pid}")

    def premise(self, premise_id: str) -> Premise:
        for p in self.premises:
            if p.id == premise_id:
                return p
        raise KeyError(premise_id)

    @property
    def by_id(self) -> dict[str, Premise]:
        return {p.id: p for p in self.premises}

    def texts(self) -> list[str]:
        return [p.text for p in self.premises]


@dataclass(frozen=True)
class RelationEdge:
    """A directed used-after link between two premises."""

    source: str
    target: str
    origin: str = "deterministic"

    def __post_init__(self):
        if self.source == self.target:
            raise ValueError("self edges are not allowed")
        if self.origin not in EDGE_ORIGINS:
            raise ValueError(f"unknown edge origin {self.origin!r}")


@dataclass(frozen=True)
class PremiseGraph:
    """Directed graph over premise ids; ``nodes`` keeps original premise order."""

    nodes: tuple[str, ...]
    edges: tuple[RelationEdge, ...]
    _incoming: dict[str, tuple[str, ...]] = field(init=False, repr=False, compare=False)
    _outgoing: dict[str, tuple[str, ...]] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if len(set(self.nodes)) != len(self.nodes):
            raise ValueError("duplicate graph nodes")
        known = set(self.nodes)
        seen_pairs = set()
        incoming: dict[str, list[str]] = {n: [] for n in self.nodes}
        outgoing: dict[str, list[str]] = {n: [] for n in self.nodes}
        for edge in self.edges:
            if edge.source not in known or edge.target not in known:
                raise ValueError(f"edge {edge.source}->{edge.target} leaves the node set")
            pair = (edge.source, edge.target)
            if pair in seen_pairs:
                raise ValueError(f"duplicate edge {edge.source}->{edge.target}")
            seen_pairs.add(pair)
            incoming[edge.target].append(edge.source)
            outgoing[edge.source].append(edge.target)
        order = {n: i for i, n in enumerate(self.nodes)}
        object.__setattr__(
            self, "_incoming", {n: tuple(sorted(v, key=order.__getitem__)) for n, v in incoming.items()}
        )
        object.__setattr__(
            self, "_outgoing", {n: tuple(sorted(v, key=order.__getitem__)) for n, v in outgoing.items()}
        )

    def sources_into(self, node: str) -> tuple[str, ...]:
        return self._incoming[node]

    def targets_from(self, node: str) -> tuple[str, ...]:
        return self._outgoing[node]

    def node_position(self, node: str) -> int:
        return self.nodes.index(node)

    def to_dict(self) -> dict:
        return {
            "nodes": list(self.nodes),
            "edges": [{"source": e.source, "target": e.target, "origin": e.origin} for e in self.edges],
        }
