"""Causal LMs with inspectable attention: a tiny byte-level transformer for
offline runs, plus an optional Hugging Face adapter.

Both paths expose the same minimal surface: encode text to token ids, map a
character range to token positions, and run a forward pass that returns
logits together with one attention-probability tensor per layer, each kept
in the autograd graph so its gradient can be read after backward.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import torch
from torch import nn


class ModelLoadError(RuntimeError):
    pass


@dataclass
class ForwardResult:
    logits: torch.Tensor  # (T, vocab)
    attentions: list[torch.Tensor]  # per layer, (heads, T, T), grads retained


class _Block(nn.Module):
    def __init__(self, d_model: int, n_heads: int):
        super().__init__()
        self.n_heads = n_heads
        self.d_head = d_model // n_heads
        self.norm1 = nn.LayerNorm(d_model)
        self.norm2 = nn.LayerNorm(d_model)
        self.qkv = nn.Linear(d_model, 3 * d_model)
        self.proj = nn.Linear(d_model, d_model)
        self.mlp = nn.Sequential(
            nn.Linear(d_model, 4 * d_model), nn.GELU(), nn.Linear(4 * d_model, d_model)
        )

    def forward(self, x: torch.Tensor, mask: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        t = x.shape[0]
        q, k, v = self.qkv(self.norm1(x)).split(x.shape[1], dim=1)
        q = q.view(t, self.n_heads, self.d_head).transpose(0, 1)
        k = k.view(t, self.n_heads, self.d_head).transpose(0, 1)
        v = v.view(t, self.n_heads, self.d_head).transpose(0, 1)
        scores = (q @ k.transpose(-2, -1)) / math.sqrt(self.d_head)
        scores = scores.masked_fill(mask[:t, :t] == 0, float("-inf"))
        attn = torch.softmax(scores, dim=-1)  # (heads, T, T), rows = queries
        if attn.requires_grad:
            attn.retain_grad()
        out = (attn @ v).transpose(0, 1).reshape(t, -1)
        x = x + self.proj(out)
        x = x + self.mlp(self.norm2(x))
        return x, attn


class TinyCausalLM(nn.Module):
    """Byte-level causal transformer with seeded random weights.

    Small enough to run forward+backward per generation step on a laptop CPU;
    the attention tensors of every layer are returned with gradients retained.
    """

    VOCAB = 256

    def __init__(self, n_layers: int = 2, n_heads: int = 2, d_model: int = 32,
                 max_len: int = 2048, seed: int = 0):
        super().__init__()
        torch.manual_seed(seed)
        self.n_layers = n_layers
        self.max_len = max_len
        self.tok_emb = nn.Embedding(self.VOCAB, d_model)
        self.pos_emb = nn.Embedding(max_len, d_model)
        self.blocks = nn.ModuleList(_Block(d_model, n_heads) for _ in range(n_layers))
        self.norm = nn.LayerNorm(d_model)
        self.head = nn.Linear(d_model, self.VOCAB)
        mask = torch.tril(torch.ones(max_len, max_len, dtype=torch.bool))
        self.register_buffer("mask", mask)
        self.eval()

    def encode(self, text: str) -> torch.Tensor:
        return torch.tensor([min(b, self.VOCAB - 1) for b in text.encode("utf-8", "replace")],
                            dtype=torch.long)

    def decode(self, ids: torch.Tensor) -> str:
        return bytes(int(i) for i in ids).decode("utf-8", "replace")

    def char_span_to_positions(self, text: str, start: int, end: int) -> list[int]:
        # byte-level tokens: positions are byte offsets of the char range
        prefix = len(text[:start].encode("utf-8", "replace"))
        length = len(text[start:end].encode("utf-8", "replace"))
        return list(range(prefix, prefix + length))

    def forward_with_attentions(self, ids: torch.Tensor) -> ForwardResult:
        if len(ids) > self.max_len:
            raise ModelLoadError(f"sequence of {len(ids)} tokens exceeds max length {self.max_len}")
        positions = torch.arange(len(ids))
        x = self.tok_emb(ids) + self.pos_emb(positions)
        attentions = []
        for block in self.blocks:
            x, attn = block(x, self.mask)
            attentions.append(attn)
        logits = self.head(self.norm(x))
        return ForwardResult(logits=logits, attentions=attentions)

    @torch.no_grad()
    def greedy_continue(self, text: str, max_new_tokens: int) -> str:
        ids = self.encode(text)
        for _ in range(max_new_tokens):
            if len(ids) >= self.max_len:
                break
            logits = self.forward_with_attentions(ids).logits
            ids = torch.cat([ids, logits[-1].argmax().view(1)])
        return self.decode(ids[len(self.encode(text)):])


class HuggingFaceLM:
    """Adapter for transformer models loaded by name (eager attention)."""

    def __init__(self, model_id: str, device: str = "cpu"):
        try:
            from transformers import AutoModelForCausalLM, AutoTokenizer
        except ImportError as exc:  # pragma: no cover - optional dependency
            raise ModelLoadError("transformers is not installed") from exc
        try:
            self.tokenizer = AutoTokenizer.from_pretrained(model_id)
            self.model = AutoModelForCausalLM.from_pretrained(
                model_id, attn_implementation="eager"
            ).to(device)
        except Exception as exc:  # pragma: no cover - depends on local cache
            raise ModelLoadError(f"cannot load {model_id!r}: {exc}") from exc
        self.model.eval()
        self.device = device
        self.n_layers = self.model.config.num_hidden_layers
        self._offsets: list[tuple[int, int]] = []

    def encode(self, text: str) -> torch.Tensor:
        enc = self.tokenizer(text, return_offsets_mapping=True, return_tensors="pt")
        self._offsets = [tuple(pair) for pair in enc["offset_mapping"][0].tolist()]
        return enc["input_ids"][0].to(self.device)

    def char_span_to_positions(self, text: str, start: int, end: int) -> list[int]:
        return [
            i
            for i, (a, b) in enumerate(self._offsets)
            if a < end and b > start and b > a
        ]

    def forward_with_attentions(self, ids: torch.Tensor) -> ForwardResult:
        outputs = self.model(ids.unsqueeze(0), output_attentions=True)
        attentions = []
        for attn in outputs.attentions:
            attn.retain_grad()
            attentions.append(attn[0])
        return ForwardResult(logits=outputs.logits[0], attentions=attentions)

    @torch.no_grad()
    def greedy_continue(self, text: str, max_new_tokens: int) -> str:
        ids = self.encode(text).unsqueeze(0)
        out = self.model.generate(ids, max_new_tokens=max_new_tokens, do_sample=False)
        return self.tokenizer.decode(out[0][ids.shape[1]:], skip_special_tokens=True)


_TINY_RE = re.compile(r"^tiny:(?P<layers>\d+)-(?P<heads>\d+)-(?P<dim>\d+)(?:-(?P<seed>\d+))?$")


def load_model(model_id: str, device: str = "cpu"):
    """``tiny:<layers>-<heads>-<dim>[-<seed>]`` builds the seeded toy model;
    anything else is treated as a Hugging Face identifier."""
    m = _TINY_RE.match(model_id)
    if m:
        model = TinyCausalLM(
            n_layers=int(m.group("layers")),
            n_heads=int(m.group("heads")),
            d_model=int(m.group("dim")),
            seed=int(m.group("seed") or 0),
        )
        return model.to(device)
    return HuggingFaceLM(model_id, device=device)
