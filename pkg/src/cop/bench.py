"""Benchmark execution, grading, rank correlation, and perception metrics."""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

from .backends import CompletionRequest
from .errors import MismatchedElements, MissingGold
from .model import ReasoningContext
from .pipeline import PipelineConfig, ReasoningTrace, answer_with_cop
from .prompts import PromptSet, default_family, wrap_question
from .reconstruct import ReconstructedContext, Verdict, extract_answer, gold_reconstruct, identity_context

METHODS = ("standard", "cot", "cop", "gold")

NUMERIC_RTOL = 1e-6


def kendall_tau(order_a: Sequence, order_b: Sequence) -> float:
    """(concordant - discordant) / (n*(n-1)/2) over all element pairs.

    Computed by merge-sort inversion counting, exact in integer arithmetic.
    Both arguments must rank the same set of at least two distinct elements.
    """
    if len(order_a) != len(order_b) or set(order_a) != set(order_b):
        raise MismatchedElements("orders must rank the same elements")
    n = len(order_a)
    if n < 2:
        raise MismatchedElements("need at least two elements")
    if len(set(order_a)) != n:
        raise MismatchedElements("elements must be distinct")

    rank_in_b = {element: i for i, element in enumerate(order_b)}
    sequence = [rank_in_b[element] for element in order_a]

    def count_inversions(values: list[int]) -> tuple[list[int], int]:
        if len(values) <= 1:
            return values, 0
        mid = len(values) // 2
        left, inv_left = count_inversions(values[:mid])
        right, inv_right = count_inversions(values[mid:])
        merged: list[int] = []
        inversions = inv_left + inv_right
        i = j = 0
        while i < len(left) and j < len(right):
            if left[i] <= right[j]:
                merged.append(left[i])
                i += 1
            else:
                merged.append(right[j])
                j += 1
                inversions += len(left) - i
        merged.extend(left[i:])
        merged.extend(right[j:])
        return merged, inversions

    _, inversions = count_inversions(sequence)
    total = n * (n - 1) // 2
    return (total - 2 * inversions) / total


def grade(verdict: Verdict, context: ReasoningContext) -> bool:
    """Exact label match for logic; relative tolerance 1e-6 for math."""
    if context.gold is None or context.gold.answer is None:
        raise MissingGold(f"example {context.id!r} has no gold answer")
    answer = context.gold.answer
    if context.task_kind == "math_numeric":
        if verdict.value is None:
            return False
        gold_value = float(answer)
        return abs(verdict.value - gold_value) <= NUMERIC_RTOL * max(1.0, abs(gold_value))
    return verdict.label == _normalize_label(str(answer))


def _normalize_label(label: str) -> str:
    lowered = label.strip().lower()
    if lowered in ("true", "yes"):
        return "True"
    if lowered in ("false", "no"):
        return "False"
    if lowered in ("unknown", "uncertain"):
        return "Unknown"
    return label.strip()


@dataclass
class BenchmarkReport:
    dataset: str
    method: str
    model: str
    n_examples: int
    accuracy: float
    avg_calls: float
    avg_prompt_tokens: float
    avg_total_tokens: float
    seed: int | None = None
    per_example: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "dataset": self.dataset,
            "method": self.method,
            "model": self.model,
            "n_examples": self.n_examples,
            "accuracy": self.accuracy,
            "avg_calls": self.avg_calls,
            "avg_prompt_tokens": self.avg_prompt_tokens,
            "avg_total_tokens": self.avg_total_tokens,
            "seed": self.seed,
            "per_example": self.per_example,
        }

    def save(self, path: str | Path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.to_dict(), indent=2), encoding="utf-8")


def _single_prompt_method(
    method: str, context: ReasoningContext, backend, prompts: PromptSet, config: PipelineConfig
) -> tuple[Verdict, ReasoningTrace]:
    family = config.family or default_family(context.task_kind)
    trace = ReasoningTrace(example_id=context.id, method=method)
    if method == "gold":
        reconstructed = gold_reconstruct(context)
        stage_template = "cot"
    else:
        reconstructed = identity_context(context)
        stage_template = "cot" if method == "cot" else "standard"
    trace.contexts.append(reconstructed)
    prompt = prompts.render(
        family,
        stage_template,
        premises=reconstructed.text,
        question=wrap_question(family, context.question.text),
    )
    result = backend.complete(CompletionRequest(user=prompt, max_tokens=config.max_tokens))
    trace.record("reason", prompt, result)
    verdict = extract_answer(result.text, context.task_kind)
    trace.verdict = verdict
    return verdict, trace


def run_example(
    method: str, context: ReasoningContext, backend, prompts: PromptSet, config: PipelineConfig
) -> tuple[Verdict, ReasoningTrace]:
    if method == "cop":
        return answer_with_cop(context, backend, prompts, config)
    if method in ("standard", "cot", "gold"):
        return _single_prompt_method(method, context, backend, prompts, config)
    raise ValueError(f"unknown method {method!r}")


def run_benchmark(
    dataset: Sequence[ReasoningContext],
    method: str,
    backend,
    prompts: PromptSet | None = None,
    config: PipelineConfig | None = None,
    dataset_id: str = "dataset",
    seed: int | None = None,
    concurrency: int = 1,
    trace_dir: str | Path | None = None,
) -> BenchmarkReport:
    """Score one method over a dataset; per-example failures never abort.

    Averages are computed over non-failed traces; failed examples count as
    incorrect. Results merge in dataset order, so a fixed dataset plus the
    oracle or stub backend reproduces the report bit for bit.
    """
    prompts = prompts or PromptSet.default()
    config = config or PipelineConfig()

    def work(context: ReasoningContext) -> tuple[Verdict, ReasoningTrace]:
        try:
            return run_example(method, context, backend, prompts, config)
        except Exception as exc:  # noqa: BLE001 - recorded, never raised
            trace = ReasoningTrace(example_id=context.id, method=method)
            trace.failed = True
            trace.failure = f"{type(exc).__name__}: {exc}"
            trace.verdict = Verdict(label="Unknown", certain=False, raw="")
            return trace.verdict, trace

    if concurrency > 1:
        with ThreadPoolExecutor(max_workers=concurrency) as pool:
            outcomes = list(pool.map(work, dataset))
    else:
        outcomes = [work(context) for context in dataset]

    per_example = []
    n_correct = 0
    usable = []
    for context, (verdict, trace) in zip(dataset, outcomes):
        correct = False
        if not trace.failed:
            try:
                correct = grade(verdict, context)
            except MissingGold:
                correct = False
        n_correct += int(correct)
        if not trace.failed:
            usable.append(trace)
        if trace_dir is not None:
            trace.save(trace_dir)
        per_example.append(
            {
                "id": context.id,
                "predicted": verdict.value if verdict.label == "numeric" else verdict.label,
                "gold": context.gold.answer if context.gold else None,
                "correct": correct,
                "calls": trace.call_count,
                "prompt_tokens": trace.prompt_tokens,
                "total_tokens": trace.total_tokens,
                "failed": trace.failed,
            }
        )

    n = len(dataset)
    divisor = max(1, len(usable))
    return BenchmarkReport(
        dataset=dataset_id,
        method=method,
        model=getattr(backend, "model", "unknown"),
        n_examples=n,
        accuracy=n_correct / n if n else 0.0,
        avg_calls=sum(t.call_count for t in usable) / divisor,
        avg_prompt_tokens=sum(t.prompt_tokens for t in usable) / divisor,
        avg_total_tokens=sum(t.total_tokens for t in usable) / divisor,
        seed=seed,
        per_example=per_example,
    )


def _trace_retained_order(trace: ReasoningTrace | Mapping) -> list[str]:
    """Premise ids shown to the reasoner, in first-appearance order."""
    if isinstance(trace, ReasoningTrace):
        contexts: Sequence = trace.contexts
    else:
        contexts = trace.get("contexts", [])
    seen: set[str] = set()
    order: list[str] = []
    for rc in contexts:
        ids = rc.premise_order if isinstance(rc, ReconstructedContext) else rc.get("premise_order", [])
        for pid in ids:
            if pid not in seen:
                seen.add(pid)
                order.append(pid)
    return order


def _trace_id(trace: ReasoningTrace | Mapping) -> str:
    return trace.example_id if isinstance(trace, ReasoningTrace) else str(trace.get("example_id", ""))


def perception_metrics(
    traces: Sequence[ReasoningTrace | Mapping], dataset: Sequence[ReasoningContext]
) -> dict:
    """How concise and how organized the reconstructions were.

    removal_rate: fraction of annotated distractors absent from the contexts
    the reasoner saw. mean_tau: Kendall tau between reconstructed order and
    the reference order (gold proof, else original order), restricted to
    relevant retained sentences; relevant sentences the pipeline dropped are
    excluded from tau and counted separately. mean_tau_before scores the
    presented (shuffled) order the same way for comparison.
    """
    by_id = {context.id: context for context in dataset}
    total_distractors = 0
    removed_distractors = 0
    dropped_relevant = 0
    taus: list[float] = []
    taus_before: list[float] = []

    for trace in traces:
        context = by_id.get(_trace_id(trace))
        if context is None or context.gold is None:
            continue
        gold = context.gold
        retained = _trace_retained_order(trace)
        retained_set = set(retained)

        if gold.irrelevant_ids:
            total_distractors += len(gold.irrelevant_ids)
            removed_distractors += len(gold.irrelevant_ids - retained_set)

        reference = gold.reference_order
        if not reference:
            continue
        relevant = [pid for pid in reference if pid not in gold.irrelevant_ids]
        dropped_relevant += sum(1 for pid in relevant if pid not in retained_set)

        common = [pid for pid in retained if pid in relevant]
        if len(common) >= 2:
            reference_common = [pid for pid in reference if pid in common]
            taus.append(kendall_tau(common, reference_common))
        presented = [p.id for p in context.premises if p.id in relevant]
        if len(presented) >= 2:
            reference_presented = [pid for pid in reference if pid in presented]
            taus_before.append(kendall_tau(presented, reference_presented))

    return {
        "removal_rate": (removed_distractors / total_distractors) if total_distractors else None,
        "mean_tau": (sum(taus) / len(taus)) if taus else None,
        "mean_tau_before": (sum(taus_before) / len(taus_before)) if taus_before else None,
        "dropped_relevant": dropped_relevant,
        "distractors_total": total_distractors,
        "distractors_removed": removed_distractors,
        "tau_samples": len(taus),
        "per_example_tau": taus,
    }
