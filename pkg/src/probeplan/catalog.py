"""The 14-object experimental vocabulary and its ground-truth properties."""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Optional

from .core import PhysicalProperty


@dataclass(frozen=True)
class CatalogEntry:
    number: int
    name: str
    property: PhysicalProperty


@dataclass(frozen=True)
class Catalog:
    entries: tuple[CatalogEntry, ...]
    probe_accuracy: dict[str, dict[str, float]]
    note: str = ""

    @property
    def names(self) -> list[str]:
        return [e.name for e in self.entries]

    @property
    def truth(self) -> dict[str, PhysicalProperty]:
        return {e.name: e.property for e in self.entries}

    def number(self, name: str) -> int:
        for e in self.entries:
            if e.name == name:
                return e.number
        raise KeyError(name)

    def by_number(self, number: int) -> CatalogEntry:
        for e in self.entries:
            if e.number == number:
                return e
        raise KeyError(number)

    def preset(self, name: str) -> dict[str, float]:
        """Per-object probing accuracy preset: ``robot`` or ``robot_tree``."""
        key = name.lower().replace("+", "_").replace("-", "_")
        return dict(self.probe_accuracy[key])


def data_path(name: str) -> Path:
    return Path(str(resources.files("probeplan") / "data" / name))


@lru_cache(maxsize=None)
def load_catalog(variant: Optional[str] = None) -> Catalog:
    """``variant=None`` gives the default table, ``"alt"`` the swapped 1D lines."""
    fname = "objects.json" if variant in (None, "", "default") else f"objects_{variant}.json"
    doc = json.loads(data_path(fname).read_text(encoding="utf-8"))
    entries = tuple(CatalogEntry(e["number"], e["name"], PhysicalProperty.parse(e["property"])) for e in doc["objects"])
    return Catalog(entries, doc["probe_accuracy"], doc.get("note", ""))


def ground_truth(variant: Optional[str] = None) -> dict[str, PhysicalProperty]:
    return load_catalog(variant).truth
