"""Sentence segmentation for raw problem statements.

Splits at sentence-final punctuation followed by whitespace, protecting
decimal numbers, currency amounts, and a small abbreviation list. A trailing
interrogative sentence is routed to the question slot rather than becoming a
premise.
"""

from __future__ import annotations

from .errors import EmptyInput
from .model import Premise

# Covers the GSM8K-style corpora; deliberately not a general NLP splitter.
ABBREVIATIONS = frozenset({"mr", "mrs", "dr", "st", "e.g", "i.e"})

_TERMINALS = ".!?"


def _is_protected_period(text: str, i: int) -> bool:
    """True when the period at ``text[i]`` must not end a sentence."""
    if i + 1 < len(text) and text[i + 1].isdigit():
        return True  # decimal or currency digits continue
    if i > 0 and i + 2 < len(text) and text[i - 1].isdigit() and text[i + 2].isdigit():
        return True
    start = text.rfind(" ", 0, i) + 1
    token = text[start:i].lower().lstrip("(\"'")
    return token in ABBREVIATIONS


def split_sentences(raw: str) -> list[str]:
    """Split whitespace-normalized text into sentences.

    Joining the result with single spaces reproduces the normalized input,
    and splitting the rejoined output again yields the same list.
    """
    if not raw or not raw.strip():
        raise EmptyInput("cannot segment blank text")
    text = " ".join(raw.split())
    sentences: list[str] = []
    start = 0
    i = 0
    while i < len(text):
        ch = text[i]
        if ch in _TERMINALS and (i + 1 == len(text) or text[i + 1] == " "):
            if ch == "." and _is_protected_period(text, i):
                i += 1
                continue
            sentences.append(text[start : i + 1])
            start = i + 2
            i += 2
            continue
        i += 1
    if start < len(text):
        sentences.append(text[start:])
    return sentences


def segment_context(raw: str) -> tuple[list[Premise], str | None]:
    """Segment a raw context into premises plus an optional trailing question.

    The final sentence is treated as the question when it ends with ``?``;
    DI-GSM raw problems mix the question into the statement this way.
    """
    sentences = split_sentences(raw)
    question: str | None = None
    if sentences and sentences[-1].endswith("?"):
        question = sentences[-1]
        sentences = sentences[:-1]
    premises = [Premise(id=f"p{i + 1}", text=s, index=i) for i, s in enumerate(sentences)]
    return premises, question
