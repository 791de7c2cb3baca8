"""Sentence splitting with the same boundary rules the consumer pipeline uses.

Kept local: this package talks to the pipeline only through the record file
formats, never through imports.
"""

from __future__ import annotations

ABBREVIATIONS = frozenset({"mr", "mrs", "dr", "st", "e.g", "i.e"})

_TERMINALS = ".!?"


def _protected(text: str, i: int) -> bool:
    if i + 1 < len(text) and text[i + 1].isdigit():
        return True
    if i > 0 and i + 2 < len(text) and text[i - 1].isdigit() and text[i + 2].isdigit():
        return True
    start = text.rfind(" ", 0, i) + 1
    return text[start:i].lower().lstrip("(\"'") in ABBREVIATIONS


def split_sentences(raw: str) -> list[str]:
    text = " ".join(raw.split())
    if not text:
        return []
    sentences: list[str] = []
    start = 0
    i = 0
    while i < len(text):
        ch = text[i]
        if ch in _TERMINALS and (i + 1 == len(text) or text[i + 1] == " "):
            if ch == "." and _protected(text, i):
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
