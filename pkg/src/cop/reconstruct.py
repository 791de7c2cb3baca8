"""Stage 3: depth-first linearization of mind maps and answer extraction.

Reconstruction emits premises in post-order — deepest prerequisites first,
the anchor last — so the linear order matches the progression the
intermediate reasoning steps need. A premise shared by several branches is
emitted only on its first visit.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Iterable, Mapping

from .errors import MissingGold
from .mindmap import MindMap, SubMindMap
from .model import ReasoningContext

RECONSTRUCTION_SOURCES = ("cop", "gold", "identity")


@dataclass(frozen=True)
class ReconstructedContext:
    premise_order: tuple[str, ...]
    text: str
    source: str

    def __post_init__(self):
        if self.source not in RECONSTRUCTION_SOURCES:
            raise ValueError(f"unknown reconstruction source {self.source!r}")
        if len(set(self.premise_order)) != len(self.premise_order):
            raise ValueError("reconstructed order contains duplicates")


@dataclass(frozen=True)
class Verdict:
    """The extracted final answer of one reasoning completion."""

    label: str  # "True" | "False" | "Unknown" | "numeric"
    certain: bool
    raw: str = ""
    value: float | None = None

    def __post_init__(self):
        if self.label == "numeric" and (self.value is None or not math.isfinite(self.value)):
            raise ValueError("numeric verdict needs a finite value")


def postorder_ids(
    children: Mapping[str, tuple[str, ...]], roots: Iterable[str]
) -> list[str]:
    """Post-order premise ids over one or more roots, deduplicated on revisit."""
    out: list[str] = []
    visited: set[str] = set()

    def walk(node: str, path: frozenset[str]) -> None:
        if node in visited:
            return
        visited.add(node)
        for child in children.get(node, ()):
            if child not in path:
                walk(child, path | {child})
        out.append(node)

    for root in roots:
        walk(root, frozenset({root}))
    return out


def _render(ids: list[str], context: ReasoningContext, source: str) -> ReconstructedContext:
    by_id = context.by_id
    return ReconstructedContext(
        premise_order=tuple(ids),
        text=" ".join(by_id[i].text for i in ids),
        source=source,
    )


def reconstruct_context(
    submap: SubMindMap | MindMap, context: ReasoningContext
) -> ReconstructedContext:
    """Linearize a (sub-)mind map into an ordered context string."""
    if isinstance(submap, MindMap):
        ids = postorder_ids(submap.children, submap.roots)
    else:
        ids = postorder_ids(submap.children, [submap.root])
    return _render(ids, context, "cop")


def identity_context(context: ReasoningContext) -> ReconstructedContext:
    """Original premise order; the fallback when a stage fails."""
    return _render([p.id for p in context.premises], context, "identity")


def gold_reconstruct(context: ReasoningContext) -> ReconstructedContext:
    """Context rebuilt from the annotated proof order (confirmatory mode)."""
    if context.gold is None or not context.gold.proof_order:
        raise MissingGold(f"example {context.id!r} carries no gold proof")
    return _render(list(context.gold.proof_order), context, "gold")


_OPTION_RE = re.compile(r"the correct option is:?\s*\(?([A-Ca-c])\b", re.IGNORECASE)
_KEYWORD_RE = re.compile(r"\b(true|false|unknown|uncertain)\b", re.IGNORECASE)
_ANSWER_IS_RE = re.compile(r"the answer is[^0-9+\-]*([-+]?\$?\d[\d,]*(?:\.\d+)?)", re.IGNORECASE)
_NUMBER_RE = re.compile(r"[-+]?\$?\d[\d,]*(?:\.\d+)?")

_OPTION_LABELS = {"A": "True", "B": "False", "C": "Unknown"}
_KEYWORD_LABELS = {"true": "True", "false": "False", "unknown": "Unknown", "uncertain": "Unknown"}


def _to_number(text: str) -> float:
    return float(text.replace("$", "").replace(",", ""))


def extract_answer(completion: str, task_kind: str) -> Verdict:
    """Pull the final answer out of a reasoning completion.

    Logic tasks read the last "The correct option is: X" line (A/B/C mapping
    to True/False/Unknown); the keyword fallback and the no-answer case are
    marked uncertain. Math tasks read the last number after "The answer is",
    stripped of commas and currency symbols, falling back to the last number
    anywhere.
    """
    if task_kind in ("logic_tfu", "logic_tf"):
        options = _OPTION_RE.findall(completion)
        if options:
            label = _OPTION_LABELS[options[-1].upper()]
            return Verdict(label=label, certain=label != "Unknown", raw=completion)
        keywords = _KEYWORD_RE.findall(completion)
        if keywords:
            return Verdict(label=_KEYWORD_LABELS[keywords[-1].lower()], certain=False, raw=completion)
        return Verdict(label="Unknown", certain=False, raw=completion)
    if task_kind == "math_numeric":
        stated = _ANSWER_IS_RE.findall(completion)
        if stated:
            return Verdict(label="numeric", certain=True, raw=completion, value=_to_number(stated[-1]))
        numbers = _NUMBER_RE.findall(completion)
        if numbers:
            return Verdict(label="numeric", certain=False, raw=completion, value=_to_number(numbers[-1]))
        return Verdict(label="Unknown", certain=False, raw=completion)
    raise ValueError(f"unknown task kind {task_kind!r}")
