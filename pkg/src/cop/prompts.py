"""Prompt templates, one plain-text file per stage per corpus family.

Templates carry ``[[PREMISES]]`` and ``[[QUESTION]]`` placeholders. The
packaged defaults can be overridden by pointing a PromptSet at a directory
with the same ``<family>/<stage>.txt`` layout.
"""

from __future__ import annotations

from importlib import resources
from pathlib import Path

from .errors import CopError

FAMILIES = ("digsm", "folio", "proofwriter")

# Question wrapper used by the logic reasoning templates.
_QUESTION_WRAPPERS = {
    "proofwriter": "Based on the above information, is the following statement true, false, or unknown? {statement}",
    "folio": "Based on the above information, is the following statement true, false, or uncertain? {statement}",
}


class PromptSet:
    def __init__(self, templates: dict[str, str]):
        self._templates = dict(templates)

    @classmethod
    def load(cls, directory: str | Path) -> "PromptSet":
        root = Path(directory)
        templates: dict[str, str] = {}
        for path in sorted(root.glob("*/*.txt")):
            templates[f"{path.parent.name}/{path.stem}"] = path.read_text(encoding="utf-8")
        if not templates:
            raise CopError(f"no prompt templates under {root}")
        return cls(templates)

    @classmethod
    def default(cls) -> "PromptSet":
        templates: dict[str, str] = {}
        base = resources.files("cop") / "prompts"
        for family_dir in base.iterdir():
            if not family_dir.is_dir():
                continue
            for entry in family_dir.iterdir():
                if entry.name.endswith(".txt"):
                    key = f"{family_dir.name}/{entry.name[:-4]}"
                    templates[key] = entry.read_text(encoding="utf-8")
        return cls(templates)

    def has(self, family: str, stage: str) -> bool:
        return f"{family}/{stage}" in self._templates

    def template(self, family: str, stage: str) -> str:
        key = f"{family}/{stage}"
        if key not in self._templates:
            raise CopError(f"no prompt template for {key!r}")
        return self._templates[key]

    def render(self, family: str, stage: str, premises: str = "", question: str = "") -> str:
        text = self.template(family, stage)
        return text.replace("[[PREMISES]]", premises).replace("[[QUESTION]]", question)


def wrap_question(family: str, statement: str) -> str:
    """Fill the reasoning template's question slot in the family's phrasing."""
    wrapper = _QUESTION_WRAPPERS.get(family)
    if wrapper is None or "is the following statement" in statement:
        return statement
    return wrapper.format(statement=statement)


def default_family(task_kind: str) -> str:
    return "digsm" if task_kind == "math_numeric" else "proofwriter"


def capture_family(family: str) -> str:
    """Semantic-capture templates exist for the narrative families only;
    logical corpora falling back to LLM capture borrow the folio ones."""
    return family if family in ("digsm", "folio") else "folio"
