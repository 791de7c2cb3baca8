"""Sentence-level information-flow metrics and group statistics.

Raw per-step flow vectors are normalized to unit mass per generation step,
then aggregated into four quantities: entrance flow into the first generated
sentence (A1), how often the entrance is the strict argmax among inputs (A2),
flow from the previous two steps into the current one (A3), and the
irrelevant-over-relevant flow share (A4 = r / (r + 1)).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from scipy import stats as scipy_stats

from .errors import AllZeroFlows, InsufficientSamples, MissingLabels

METRIC_NAMES = ("A1", "A2", "A3", "A4")


@dataclass(frozen=True)
class SentenceInfo:
    id: str
    kind: str  # premise | question | generated
    text: str = ""


@dataclass(frozen=True)
class FlowStep:
    target: str
    flows: Mapping[str, Mapping[str, float]]  # layer-set name -> source id -> value


@dataclass(frozen=True)
class SaliencyRecord:
    example_id: str
    sentences: tuple[SentenceInfo, ...]
    entrance: str | None
    relevant: frozenset[str]
    irrelevant: frozenset[str]
    layer_sets: Mapping[str, tuple[int, ...]]
    steps: tuple[FlowStep, ...]
    group: str | None = None

    def __post_init__(self):
        if self.entrance is not None and self.entrance not in self.relevant:
            raise ValueError(f"entrance {self.entrance!r} must be in the relevant set")
        if self.relevant & self.irrelevant:
            raise ValueError("relevant and irrelevant sets overlap")

    @property
    def input_ids(self) -> list[str]:
        return [s.id for s in self.sentences if s.kind != "generated"]

    @property
    def generated_ids(self) -> list[str]:
        return [s.id for s in self.sentences if s.kind == "generated"]

    def validate(self) -> None:
        """Check step coverage and non-negativity (the wire-format contract)."""
        order = [s.id for s in self.sentences]
        position = {sid: i for i, sid in enumerate(order)}
        for step in self.steps:
            if step.target not in position:
                raise ValueError(f"step target {step.target!r} is not a sentence")
            preceding = {sid for sid in order if position[sid] < position[step.target]}
            for layer_set, flows in step.flows.items():
                if layer_set not in self.layer_sets:
                    raise ValueError(f"step uses unknown layer set {layer_set!r}")
                if set(flows) != preceding:
                    raise ValueError(
                        f"step {step.target} flows must cover exactly the preceding sentences"
                    )
                for value in flows.values():
                    if value < 0:
                        raise ValueError("flow values must be >= 0")

    @classmethod
    def from_dict(cls, data: dict) -> "SaliencyRecord":
        labels = data.get("labels") or {}
        return cls(
            example_id=str(data.get("id", data.get("example_id", ""))),
            sentences=tuple(
                SentenceInfo(id=s["id"], kind=s["kind"], text=s.get("text", ""))
                for s in data["sentences"]
            ),
            entrance=labels.get("entrance"),
            relevant=frozenset(labels.get("relevant") or ()),
            irrelevant=frozenset(labels.get("irrelevant") or ()),
            layer_sets={name: tuple(v) for name, v in (data.get("layer_sets") or {}).items()},
            steps=tuple(
                FlowStep(
                    target=s["target"],
                    flows={name: dict(v) for name, v in s["flows"].items()},
                )
                for s in data["steps"]
            ),
            group=data.get("group"),
        )

    def to_dict(self) -> dict:
        return {
            "id": self.example_id,
            "sentences": [{"id": s.id, "kind": s.kind, "text": s.text} for s in self.sentences],
            "labels": {
                "entrance": self.entrance,
                "relevant": sorted(self.relevant),
                "irrelevant": sorted(self.irrelevant),
            },
            "layer_sets": {name: list(v) for name, v in self.layer_sets.items()},
            "steps": [
                {"target": s.target, "flows": {name: dict(v) for name, v in s.flows.items()}}
                for s in self.steps
            ],
            **({"group": self.group} if self.group else {}),
        }


def load_records(path: str | Path) -> list[SaliencyRecord]:
    records = []
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if line:
                records.append(SaliencyRecord.from_dict(json.loads(line)))
    return records


def normalize_step(flows: Mapping[str, float]) -> dict[str, float]:
    """Divide a step's flow vector by its sum; the result sums to one."""
    total = sum(flows.values())
    if total <= 0:
        raise AllZeroFlows("flow vector has no positive mass")
    return {source: value / total for source, value in flows.items()}


def _normalized_steps(record: SaliencyRecord, layer_set: str) -> list[tuple[str, dict[str, float]]]:
    out = []
    for step in record.steps:
        if layer_set not in step.flows:
            raise MissingLabels(f"layer set {layer_set}", record.example_id)
        out.append((step.target, normalize_step(step.flows[layer_set])))
    return out


@dataclass(frozen=True)
class FlowMetrics:
    a1: float | None
    a2: float | None
    a3: float | None
    a4: float | None
    n: int
    layer_set: str

    def to_dict(self) -> dict:
        return {"A1": self.a1, "A2": self.a2, "A3": self.a3, "A4": self.a4,
                "n": self.n, "layer_set": self.layer_set}


def record_metric_values(record: SaliencyRecord, layer_set: str) -> dict[str, float]:
    """Per-sample contributions to each metric (also used for group stats).

    A3 averages the available previous-step terms over steps k >= 2; A4's
    per-sample ratio averages each source class over all steps first.
    """
    steps = _normalized_steps(record, layer_set)
    values: dict[str, float] = {}
    if not steps:
        return values
    _, first_flows = steps[0]

    if record.entrance is not None and record.entrance in first_flows:
        values["A1"] = first_flows[record.entrance]
        entrance_value = first_flows[record.entrance]
        best_other = max(
            (first_flows[s] for s in record.input_ids if s != record.entrance and s in first_flows),
            default=float("-inf"),
        )
        values["A2"] = 1.0 if entrance_value > best_other else 0.0

    a3_terms: list[float] = []
    for k in range(1, len(steps)):  # 0-based step index; terms exist from the 2nd step on
        _, flows = steps[k]
        term = 0.0
        prev_target = steps[k - 1][0]
        if prev_target in flows:
            term += flows[prev_target]
        if k >= 2:
            prev2_target = steps[k - 2][0]
            if prev2_target in flows:
                term += flows[prev2_target]
        a3_terms.append(term)
    if a3_terms:
        values["A3"] = sum(a3_terms) / len(a3_terms)

    if record.irrelevant and record.relevant:
        irrelevant_values = []
        relevant_values = []
        for _, flows in steps:
            irrelevant_values.extend(flows[s] for s in record.irrelevant if s in flows)
            relevant_values.extend(flows[s] for s in record.relevant if s in flows)
        if relevant_values and irrelevant_values:
            denominator = sum(relevant_values) / len(relevant_values)
            if denominator <= 0:
                raise AllZeroFlows(f"record {record.example_id} has zero relevant flow")
            ratio = (sum(irrelevant_values) / len(irrelevant_values)) / denominator
            values["A4"] = ratio / (ratio + 1.0)
            values["A4_ratio"] = ratio
    return values


def compute_flow_metrics(
    records: Sequence[SaliencyRecord],
    layer_set: str,
    metrics: Iterable[str] | None = None,
) -> FlowMetrics:
    """Aggregate A1-A4 over records sharing a layer set.

    With ``metrics`` given, a record missing the labels a requested metric
    needs raises MissingLabels; by default A4 is included only when every
    record carries an irrelevant set.
    """
    requested = tuple(metrics) if metrics is not None else None
    per_record = [record_metric_values(r, layer_set) for r in records]

    if requested is not None:
        for record, values in zip(records, per_record):
            for name in requested:
                if name not in values:
                    raise MissingLabels(name, record.example_id)

    def aggregate(name: str) -> float | None:
        # fsum keeps the aggregation exactly order-invariant
        if requested is not None and name not in requested:
            return None
        if name == "A4":
            ratios = [v["A4_ratio"] for v in per_record if "A4_ratio" in v]
            if not ratios or (requested is None and len(ratios) != len(per_record)):
                return None
            mean_ratio = math.fsum(ratios) / len(ratios)
            return mean_ratio / (mean_ratio + 1.0)
        collected = [v[name] for v in per_record if name in v]
        if not collected:
            return None
        return math.fsum(collected) / len(collected)

    return FlowMetrics(
        a1=aggregate("A1"),
        a2=aggregate("A2"),
        a3=aggregate("A3"),
        a4=aggregate("A4"),
        n=len(records),
        layer_set=layer_set,
    )


@dataclass(frozen=True)
class GroupStats:
    mean: float
    std: float
    ci_low: float
    ci_high: float
    p_value: float
    n: int

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def _welch_p(a: Sequence[float], b: Sequence[float]) -> float:
    var_a = _variance(a)
    var_b = _variance(b)
    if var_a == 0.0 and var_b == 0.0:
        return 1.0 if _mean(a) == _mean(b) else 0.0
    return float(scipy_stats.ttest_ind(list(a), list(b), equal_var=False).pvalue)


def _mean(values: Sequence[float]) -> float:
    return sum(values) / len(values)


def _variance(values: Sequence[float]) -> float:
    m = _mean(values)
    return sum((v - m) ** 2 for v in values) / (len(values) - 1)


def summarize_groups(
    values: Mapping[str, Sequence[float]], base: str = "Base"
) -> dict[str, GroupStats]:
    """Mean, sample std, 95% normal-approximation CI, and Welch p vs Base."""
    for name, group in values.items():
        if len(group) < 2:
            raise InsufficientSamples(f"group {name!r} has fewer than two values")
    base_values = values.get(base)
    out: dict[str, GroupStats] = {}
    for name, group in values.items():
        mean = _mean(group)
        std = math.sqrt(_variance(group))
        half_width = 1.96 * std / math.sqrt(len(group))
        if name == base or base_values is None:
            p_value = 1.0
        else:
            p_value = _welch_p(group, base_values)
        out[name] = GroupStats(
            mean=mean,
            std=std,
            ci_low=mean - half_width,
            ci_high=mean + half_width,
            p_value=p_value,
            n=len(group),
        )
    return out
