"""Per-generation-step saliency extraction, aggregated to sentence level.

For each generated sentence: run the model over the prefix ending at that
sentence, backpropagate the cross-entropy of the sentence's tokens, and score
every layer's attention by the elementwise |A * dL/dA| summed over heads.
Token-pair scores average into sentence-to-sentence flows per named layer
set; values stay unnormalized (the consumer normalizes per step).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import torch

from .model import ModelLoadError, load_model
from .segment import split_sentences


class SequenceTooLong(RuntimeError):
    pass


@dataclass
class ExtractionConfig:
    model_id: str = "tiny:2-2-32"
    layer_sets: tuple[str, ...] = ("shallow", "deep")
    max_steps: int = 8
    max_new_tokens: int = 64
    device: str = "cpu"
    seed: int = 0

    def resolve_layers(self, n_layers: int) -> dict[str, list[int]]:
        """First five / last five layers, clamped to the model depth."""
        width = min(5, n_layers)
        sets = {"shallow": list(range(width)), "deep": list(range(n_layers - width, n_layers))}
        unknown = [name for name in self.layer_sets if name not in sets]
        if unknown:
            raise ValueError(f"unknown layer sets: {unknown}")
        return {name: sets[name] for name in self.layer_sets}


@dataclass
class _Sentence:
    id: str
    kind: str
    text: str
    start: int = 0
    end: int = 0
    positions: list[int] = field(default_factory=list)


def _assemble(record: dict, model, config: ExtractionConfig) -> list[_Sentence]:
    premises = [t.strip() for t in record["premises"]]
    question = record.get("question", "").strip()
    sentences = [
        _Sentence(id=f"p{i + 1}", kind="premise", text=text) for i, text in enumerate(premises)
    ]
    if question:
        sentences.append(_Sentence(id="q", kind="question", text=question))

    generated_text = record.get("generated", "")
    if not generated_text:
        prefix = " ".join(s.text for s in sentences)
        torch.manual_seed(config.seed)
        generated_text = model.greedy_continue(prefix + " ", config.max_new_tokens)
    generated = split_sentences(generated_text) or []
    for k, text in enumerate(generated[: config.max_steps]):
        sentences.append(_Sentence(id=f"g{k + 1}", kind="generated", text=text))

    offset = 0
    full_text = " ".join(s.text for s in sentences)
    for sentence in sentences:
        sentence.start = offset
        sentence.end = offset + len(sentence.text)
        sentence.positions = model.char_span_to_positions(full_text, sentence.start, sentence.end)
        offset = sentence.end + 1
    return sentences


def _labels(record: dict, sentences: list[_Sentence]) -> dict:
    premise_ids = [s.id for s in sentences if s.kind == "premise"]
    irrelevant = [pid for pid in (record.get("irrelevant") or []) if pid in premise_ids]
    proof = [pid for pid in (record.get("gold_proof") or []) if pid in premise_ids]
    relevant = proof or [pid for pid in premise_ids if pid not in set(irrelevant)]
    entrance = record.get("entrance") or (proof[0] if proof else None)
    if entrance is not None and entrance not in relevant:
        relevant = [entrance] + relevant
    return {
        "entrance": entrance,
        "relevant": sorted(set(relevant)),
        "irrelevant": sorted(set(irrelevant)),
    }


def extract_saliency(record: dict, config: ExtractionConfig, model=None) -> dict:
    """One SaliencyRecord-shaped dict for one dataset record."""
    if model is None:
        model = load_model(config.model_id, device=config.device)
    n_layers = getattr(model, "n_layers", None) or len(getattr(model, "blocks", []))
    layer_sets = config.resolve_layers(n_layers)

    sentences = _assemble(record, model, config)
    generated = [s for s in sentences if s.kind == "generated"]
    full_text = " ".join(s.text for s in sentences)

    steps = []
    for step_index, target in enumerate(generated):
        prefix_text = full_text[: target.end]
        ids = model.encode(prefix_text)
        target_positions = [p for p in target.positions if 0 < p < len(ids)]
        if not target_positions:
            continue
        result = model.forward_with_attentions(ids)
        logit_rows = torch.stack([result.logits[p - 1] for p in target_positions])
        labels = torch.stack([ids[p] for p in target_positions])
        loss = torch.nn.functional.cross_entropy(logit_rows, labels)
        for attn in result.attentions:
            if attn.grad is not None:
                attn.grad = None
        loss.backward()

        saliency_per_layer = []
        for attn in result.attentions:
            grad = attn.grad
            if grad is None:
                raise ModelLoadError("attention gradients unavailable; need eager attention")
            saliency_per_layer.append((attn.detach() * grad).abs().sum(dim=0))

        preceding = [s for s in sentences if s.end < target.start]
        flows: dict[str, dict[str, float]] = {}
        for name, layers in layer_sets.items():
            per_source: dict[str, float] = {}
            for source in preceding:
                source_positions = [p for p in source.positions if p < len(ids)]
                if not source_positions:
                    per_source[source.id] = 0.0
                    continue
                values = []
                for layer in layers:
                    block = saliency_per_layer[layer][target_positions, :][:, source_positions]
                    values.append(block.mean())
                per_source[source.id] = float(torch.stack(values).mean())
            flows[name] = per_source
        steps.append({"target": target.id, "flows": flows})

    return {
        "id": str(record.get("id", "example")),
        "sentences": [{"id": s.id, "kind": s.kind, "text": s.text} for s in sentences],
        "labels": _labels(record, sentences),
        "layer_sets": layer_sets,
        "steps": steps,
        **({"group": record["group"]} if record.get("group") else {}),
    }


def extract_dataset(
    dataset_path: str | Path, out_path: str | Path, config: ExtractionConfig
) -> int:
    """Sequentially extract every record; one in-flight model."""
    model = load_model(config.model_id, device=config.device)
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    n = 0
    with open(dataset_path, encoding="utf-8") as src, open(out_path, "w", encoding="utf-8") as dst:
        for line in src:
            line = line.strip()
            if not line:
                continue
            record = json.loads(line)
            dst.write(json.dumps(extract_saliency(record, config, model)) + "\n")
            n += 1
    return n
