"""Label normalization, taxonomy tiers, and prediction-vs-truth matching.

A taxonomy is a flat config of canonical labels with a granularity tier
(1 = average person, 2 = passing knowledge, 3 = expert-only) and an optional
parent, plus a synonym map. The config format is INI-style::

    [labels]
    cat = 1
    siamese = 2, cat

    [synonyms]
    siamese cat = siamese

Unknown labels normalize fine (casefold, trim, collapse whitespace, strip
trailing punctuation) but stay unmapped.
"""

from __future__ import annotations

import configparser
import io
import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Dict, Iterator, Optional

from .errors import EmptyLabelError, NotInTaxonomyError
from .labels import ParsedLabel

_WS = re.compile(r"\s+")
_TRAILING_PUNCT = ".,;:!?"


@dataclass(frozen=True)
class CanonicalLabel:
    canonical: str
    tier: int
    parent: Optional[str] = None


class MatchPolicy(str, Enum):
    EXACT = "exact"
    BASE_CLASS = "base"
    HIERARCHICAL = "hier"


class MatchedOn(str, Enum):
    FINE = "Fine"
    BASE = "Base"
    ANCESTOR = "Ancestor"


@dataclass(frozen=True)
class MatchResult:
    matched: bool
    matched_on: Optional[MatchedOn] = None

    def __post_init__(self):
        if self.matched and self.matched_on is None:
            raise ValueError("matched results must say what matched")


def basic_normalize(raw: str) -> str:
    text = _WS.sub(" ", raw.strip().casefold())
    text = text.rstrip(_TRAILING_PUNCT).strip()
    return text


@dataclass
class Taxonomy:
    """Immutable after construction; all lookups are pure."""

    entries: Dict[str, CanonicalLabel] = field(default_factory=dict)
    synonyms: Dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        self._validate()

    def _validate(self) -> None:
        for name, entry in self.entries.items():
            if entry.tier not in (1, 2, 3):
                raise ValueError(f"tier of {name!r} must be 1, 2, or 3")
            if entry.parent is not None:
                parent = self.entries.get(entry.parent)
                if parent is None:
                    raise ValueError(f"parent {entry.parent!r} of {name!r} not in taxonomy")
                if parent.tier > entry.tier:
                    raise ValueError(
                        f"parent {entry.parent!r} (tier {parent.tier}) coarser than "
                        f"child {name!r} (tier {entry.tier}) expected"
                    )
        for name in self.entries:
            seen = set()
            for ancestor in self._walk_up(name):
                if ancestor in seen:
                    raise ValueError(f"parent cycle through {ancestor!r}")
                seen.add(ancestor)
        for alias, target in self.synonyms.items():
            if target not in self.entries:
                raise ValueError(f"synonym target {target!r} not in taxonomy")
            if alias in self.entries:
                raise ValueError(f"synonym alias {alias!r} shadows a canonical label")

    def _walk_up(self, canonical: str) -> Iterator[str]:
        current = self.entries.get(canonical)
        while current is not None and current.parent is not None:
            yield current.parent
            current = self.entries.get(current.parent)

    def ancestors(self, canonical: str) -> list:
        return list(self._walk_up(canonical))

    @classmethod
    def parse(cls, text: str) -> "Taxonomy":
        parser = configparser.ConfigParser(delimiters=("=",), comment_prefixes=("#",), interpolation=None)
        parser.read_file(io.StringIO(text))
        entries: Dict[str, CanonicalLabel] = {}
        synonyms: Dict[str, str] = {}
        if parser.has_section("labels"):
            for name, value in parser.items("labels"):
                parts = [p.strip() for p in value.split(",")]
                tier = int(parts[0])
                parent = basic_normalize(parts[1]) if len(parts) > 1 and parts[1] else None
                canonical = basic_normalize(name)
                entries[canonical] = CanonicalLabel(canonical, tier, parent)
        if parser.has_section("synonyms"):
            for alias, target in parser.items("synonyms"):
                synonyms[basic_normalize(alias)] = basic_normalize(target)
        return cls(entries=entries, synonyms=synonyms)

    @classmethod
    def load(cls, path) -> "Taxonomy":
        return cls.parse(Path(path).read_text(encoding="utf-8"))

    def to_text(self) -> str:
        lines = ["[labels]"]
        for name in sorted(self.entries):
            entry = self.entries[name]
            value = str(entry.tier) if entry.parent is None else f"{entry.tier}, {entry.parent}"
            lines.append(f"{name} = {value}")
        lines.append("")
        lines.append("[synonyms]")
        for alias in sorted(self.synonyms):
            lines.append(f"{alias} = {self.synonyms[alias]}")
        lines.append("")
        return "\n".join(lines)


EMPTY_TAXONOMY = Taxonomy()


def normalize(raw: str, taxonomy: Taxonomy) -> str:
    """Normalize free text and resolve synonyms.

    Casefold, trim, collapse internal whitespace, strip trailing punctuation,
    then one synonym lookup. Idempotent: synonym targets are already
    canonical and aliases may not shadow canonicals.

    Raises:
        EmptyLabelError: nothing left after normalization.
    """
    text = basic_normalize(raw or "")
    if not text:
        raise EmptyLabelError("label is blank after normalization")
    return taxonomy.synonyms.get(text, text)


def assign_tier(canonical: str, taxonomy: Taxonomy) -> int:
    """Tier of a label's taxonomy entry.

    Raises:
        NotInTaxonomyError: no entry for the normalized label.
    """
    name = normalize(canonical, taxonomy)
    entry = taxonomy.entries.get(name)
    if entry is None:
        raise NotInTaxonomyError(f"{name!r} is not in the taxonomy")
    return entry.tier


def match(pred: ParsedLabel, truth: str, policy: MatchPolicy, taxonomy: Taxonomy) -> MatchResult:
    """Score a predicted label against a ground-truth class.

    exact: the fine label must equal the truth.
    base:  the parenthesized base equals truth; else the fine label's parent
           chain reaches truth; else the fine label itself equals truth.
    hier:  truth is the fine label or any ancestor of it.

    All comparisons happen post-normalization.
    """
    truth_n = normalize(truth, taxonomy)
    fine_n = normalize(pred.fine, taxonomy)

    if policy is MatchPolicy.EXACT:
        if fine_n == truth_n:
            return MatchResult(True, MatchedOn.FINE)
        return MatchResult(False)

    if policy is MatchPolicy.BASE_CLASS:
        if pred.base is not None and normalize(pred.base, taxonomy) == truth_n:
            return MatchResult(True, MatchedOn.BASE)
        if truth_n in taxonomy.ancestors(fine_n):
            return MatchResult(True, MatchedOn.ANCESTOR)
        if fine_n == truth_n:
            return MatchResult(True, MatchedOn.FINE)
        return MatchResult(False)

    if policy is MatchPolicy.HIERARCHICAL:
        if fine_n == truth_n:
            return MatchResult(True, MatchedOn.FINE)
        if truth_n in taxonomy.ancestors(fine_n):
            return MatchResult(True, MatchedOn.ANCESTOR)
        return MatchResult(False)

    raise ValueError(f"unknown policy: {policy}")


def predicted_class(pred: ParsedLabel, policy: MatchPolicy, taxonomy: Taxonomy) -> str:
    """The class a prediction counts as under a policy (for confusion matrices).

    exact/hier use the fine label; base prefers the parenthesized base, then
    the fine label's immediate parent, then the fine label itself.
    """
    fine_n = normalize(pred.fine, taxonomy)
    if policy is MatchPolicy.BASE_CLASS:
        if pred.base is not None:
            return normalize(pred.base, taxonomy)
        entry = taxonomy.entries.get(fine_n)
        if entry is not None and entry.parent is not None:
            return entry.parent
    return fine_n
