"""Parsing of provider label text into structured labels.

Provider replies are free text. The common shape is a fine-grained name with
the coarse class in a trailing parenthesized group, e.g. "Dachshund (Dog)".
Replies without such a group are kept whole as the fine label.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional

from .errors import EmptyLabelError

# fine label, then one trailing paren group holding the base class
_FINE_BASE = re.compile(r"^(?P<fine>.*\S)\s*\(\s*(?P<base>[^()]*?)\s*\)$")


@dataclass(frozen=True)
class ParsedLabel:
    """A provider reply decomposed into fine label and optional base class.

    ``raw`` keeps the verbatim provider text for audit; ``fine``/``base``
    are the trimmed components used everywhere else.
    """

    raw: str
    fine: str
    base: Optional[str] = None

    def __post_init__(self):
        if not self.fine:
            raise ValueError("fine label must be non-empty")
        if self.base is not None:
            if not self.base:
                raise ValueError("base, when present, must be non-empty")
            if "(" in self.base or ")" in self.base:
                raise ValueError("base must be paren-free")

    def to_dict(self) -> dict:
        return {"raw": self.raw, "fine": self.fine, "base": self.base}

    @classmethod
    def from_dict(cls, data: dict) -> "ParsedLabel":
        return cls(raw=data["raw"], fine=data["fine"], base=data.get("base"))


def parse_label_text(raw: str) -> ParsedLabel:
    """Parse raw provider text into a :class:`ParsedLabel`.

    Multi-line replies are parsed from their first non-blank content line;
    the full raw text is preserved verbatim. A single trailing
    ``(Base)`` group becomes the base class; otherwise the whole trimmed
    text is the fine label.

    Raises:
        EmptyLabelError: raw is blank after trimming.
    """
    if raw is None or not raw.strip():
        raise EmptyLabelError("label text is blank")
    first_line = next(line for line in raw.splitlines() if line.strip())
    text = first_line.strip()
    m = _FINE_BASE.match(text)
    if m and m.group("base"):
        return ParsedLabel(raw=raw, fine=m.group("fine").strip(), base=m.group("base"))
    return ParsedLabel(raw=raw, fine=text)
