"""Per-agent belief bases.

A base holds ground extensional propositions with acquisition time and
source.  World-state entries persist by inertia until superseded by a
fresh perception or a told correction; supersession is recorded rather
than silently overwritten.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import formulas as F
from .formulas import Formula
from .transform import canonical

PERCEIVED = "Perceived"
TOLD = "Told"
COMMON_KNOWLEDGE = "CommonKnowledge"
INERTIA = "Inertia"

_SOURCES = (PERCEIVED, TOLD, COMMON_KNOWLEDGE, INERTIA)


@dataclass(frozen=True)
class Entry:
    formula: Formula
    acquired_at: int
    source: str

    def __post_init__(self):
        if self.source not in _SOURCES:
            raise ValueError(f"unknown belief source: {self.source}")


@dataclass
class BeliefBase:
    owner: str
    entries: dict[str, Entry] = field(default_factory=dict)
    superseded: list[tuple[Entry, Entry]] = field(default_factory=list)

    def add(self, formula: Formula, at: int, source: str) -> None:
        key = canonical(formula)
        neg_key = canonical(_negate(formula))
        old = self.entries.pop(neg_key, None)
        entry = Entry(formula, at, source)
        if old is not None:
            self.superseded.append((old, entry))
        self.entries[key] = entry

    def drop(self, formula: Formula) -> None:
        self.entries.pop(canonical(formula), None)

    def holds(self, formula: Formula) -> bool:
        return canonical(formula) in self.entries

    def formulas(self) -> list[Formula]:
        return [self.entries[k].formula for k in sorted(self.entries)]

    def items(self) -> list[Entry]:
        return [self.entries[k] for k in sorted(self.entries)]

    def copy(self) -> "BeliefBase":
        clone = BeliefBase(self.owner)
        clone.entries = dict(self.entries)
        clone.superseded = list(self.superseded)
        return clone


def _negate(f: Formula) -> Formula:
    return f.body if isinstance(f, F.Not) else F.Not(f)
