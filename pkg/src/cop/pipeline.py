"""The end-to-end answer loop: capture, mind map, reconstruct, reason.

One pipeline run is sequential (stages feed each other); independent examples
can run concurrently because every function here is pure apart from the
backend call, and each trace has a single owner.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .backends import CompletionRequest, CompletionResult
from .capture import integrate_fragments, link_logical, link_semantic, parse_logic_forms
from .errors import BackendError, NoAnchors, NoParsableLines, UnparsedPremise
from .mindmap import build_mindmap, find_anchor_fragments, segment_submaps
from .model import ReasoningContext
from .prompts import PromptSet, capture_family, default_family, wrap_question
from .reconstruct import (
    ReconstructedContext,
    Verdict,
    extract_answer,
    identity_context,
    reconstruct_context,
)

DEFAULT_MAX_DEPTH = 6
DEFAULT_MATCH_THRESHOLD = 0.6


@dataclass
class PipelineConfig:
    max_depth: int = DEFAULT_MAX_DEPTH
    match_threshold: float = DEFAULT_MATCH_THRESHOLD
    max_tokens: int = 1024
    stage_retries: int = 1
    family: str | None = None  # derived from task kind when unset


@dataclass
class StageCall:
    stage: str
    prompt: str
    completion: str
    prompt_tokens: int
    completion_tokens: int
    total_tokens: int
    model: str
    latency: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class ReasoningTrace:
    """Full record of one example's run: prompts, structures, usage, verdict."""

    example_id: str
    method: str = "cop"
    stages: list[StageCall] = field(default_factory=list)
    graph: dict | None = None
    fragments: list[list[str]] | None = None
    mindmap: dict | None = None
    contexts: list[ReconstructedContext] = field(default_factory=list)
    verdict: Verdict | None = None
    failed: bool = False
    failure: str | None = None

    @property
    def call_count(self) -> int:
        return len(self.stages)

    @property
    def prompt_tokens(self) -> int:
        return sum(s.prompt_tokens for s in self.stages)

    @property
    def total_tokens(self) -> int:
        return sum(s.total_tokens for s in self.stages)

    def record(self, stage: str, prompt: str, result: CompletionResult) -> None:
        self.stages.append(
            StageCall(
                stage=stage,
                prompt=prompt,
                completion=result.text,
                prompt_tokens=result.prompt_tokens,
                completion_tokens=result.completion_tokens,
                total_tokens=result.total_tokens,
                model=result.model,
                latency=result.latency,
            )
        )

    def to_dict(self) -> dict:
        verdict = None
        if self.verdict is not None:
            verdict = {
                "label": self.verdict.label,
                "value": self.verdict.value,
                "certain": self.verdict.certain,
            }
        return {
            "example_id": self.example_id,
            "method": self.method,
            "stages": [s.to_dict() for s in self.stages],
            "graph": self.graph,
            "fragments": self.fragments,
            "mindmap": self.mindmap,
            "contexts": [
                {"premise_order": list(c.premise_order), "text": c.text, "source": c.source}
                for c in self.contexts
            ],
            "call_count": self.call_count,
            "prompt_tokens": self.prompt_tokens,
            "total_tokens": self.total_tokens,
            "verdict": verdict,
            "failed": self.failed,
            "failure": self.failure,
        }

    def save(self, directory: str | Path) -> Path:
        path = Path(directory) / f"{self.example_id}.trace.json"
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.to_dict(), indent=2), encoding="utf-8")
        return path


def _reason(
    context: ReasoningContext,
    reconstructed: ReconstructedContext,
    backend,
    prompts: PromptSet,
    config: PipelineConfig,
    family: str,
    trace: ReasoningTrace,
) -> Verdict:
    trace.contexts.append(reconstructed)
    prompt = prompts.render(
        family,
        "cot",
        premises=reconstructed.text,
        question=wrap_question(family, context.question.text),
    )
    result = backend.complete(CompletionRequest(user=prompt, max_tokens=config.max_tokens))
    trace.record("reason", prompt, result)
    return extract_answer(result.text, context.task_kind)


def _fallback_identity(context, backend, prompts, config, family, trace, reason: str) -> Verdict:
    trace.failure = reason
    verdict = _reason(context, identity_context(context), backend, prompts, config, family, trace)
    trace.verdict = verdict
    return verdict


def answer_with_cop(
    context: ReasoningContext,
    backend,
    prompts: PromptSet | None = None,
    config: PipelineConfig | None = None,
) -> tuple[Verdict, ReasoningTrace]:
    """Run the three-stage pipeline and the iterative answer loop.

    Sub-mind-maps are reconstructed and prompted in order until a certain
    verdict appears; remaining submaps are skipped. When every submap stays
    uncertain the answer is Unknown for logic tasks and the last numeric
    verdict for math. Stage failures fall back to the original premise order
    so a benchmark always gets something to score.
    """
    prompts = prompts or PromptSet.default()
    config = config or PipelineConfig()
    family = config.family or default_family(context.task_kind)
    trace = ReasoningTrace(example_id=context.id or "example", method="cop")
    is_logic = context.task_kind in ("logic_tfu", "logic_tf")

    try:
        logic_forms = None
        graph = None
        if is_logic:
            try:
                logic_forms = parse_logic_forms(context)
                graph = link_logical(context)
            except UnparsedPremise:
                logic_forms = None
        if graph is None:
            try:
                graph, _ = link_semantic(
                    context,
                    backend,
                    prompts,
                    family=capture_family(family),
                    match_threshold=config.match_threshold,
                    recorder=trace.record,
                    retries=config.stage_retries,
                )
            except NoParsableLines:
                verdict = _fallback_identity(
                    context, backend, prompts, config, family, trace, "capture produced no parseable lines"
                )
                return verdict, trace
        trace.graph = graph.to_dict()

        fragments = integrate_fragments(graph)
        trace.fragments = [list(f.member_ids) for f in fragments]

        try:
            if logic_forms is not None:
                anchors = find_anchor_fragments(
                    context.question, fragments, "logical", context, logic_forms=logic_forms
                )
            else:
                anchors = find_anchor_fragments(
                    context.question,
                    fragments,
                    "llm",
                    context,
                    backend=backend,
                    prompts=prompts,
                    family=capture_family(family),
                    match_threshold=config.match_threshold,
                    recorder=trace.record,
                )
        except NoAnchors:
            if is_logic:
                verdict = Verdict(label="Unknown", certain=False, raw="")
                trace.verdict = verdict
                trace.failure = "no anchors"
                return verdict, trace
            verdict = _fallback_identity(
                context, backend, prompts, config, family, trace, "no anchors"
            )
            return verdict, trace

        mindmap = build_mindmap(
            context.question, graph, anchors, max_depth=config.max_depth, logic_forms=logic_forms
        )
        trace.mindmap = mindmap.to_dict()

        last_verdict: Verdict | None = None
        for submap in segment_submaps(mindmap):
            reconstructed = reconstruct_context(submap, context)
            verdict = _reason(context, reconstructed, backend, prompts, config, family, trace)
            last_verdict = verdict
            if verdict.certain:
                trace.verdict = verdict
                return verdict, trace
        if context.task_kind == "math_numeric" and last_verdict is not None and last_verdict.label == "numeric":
            trace.verdict = last_verdict
            return last_verdict, trace
        verdict = Verdict(label="Unknown", certain=False, raw=last_verdict.raw if last_verdict else "")
        trace.verdict = verdict
        return verdict, trace
    except BackendError as exc:
        trace.failed = True
        trace.failure = str(exc)
        verdict = Verdict(label="Unknown", certain=False, raw="")
        trace.verdict = verdict
        return verdict, trace
