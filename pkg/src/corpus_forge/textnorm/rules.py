"""Literal replacement rules and the rule-table file format.

Rule files are UTF-8 text, one rule per line::

    <literal-original>\t<replacement>\t<category>

Blank lines and lines starting with ``#`` are ignored.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .numbers import cardinal_to_words

CATEGORIES = frozenset({
    "roman", "ordinal", "cardinal", "decimal", "fraction", "year", "year_range",
    "currency", "abbreviation", "name", "censorship", "symbol",
})
ALLOWED_PUNCTUATION = ".?!,:"

_REPLACEMENT_OK = re.compile(r"[^\W\d_]|[ .?!,:]")


class RuleFileError(ValueError):
    pass


@dataclass(frozen=True)
class NormalizationRule:
    pattern: str
    replacement: str
    category: str

    def __post_init__(self) -> None:
        if self.category not in CATEGORIES:
            raise RuleFileError(f"unknown category {self.category!r} for {self.pattern!r}")
        if not self.pattern:
            raise RuleFileError("empty rule pattern")
        bad = [ch for ch in self.replacement if not _REPLACEMENT_OK.fullmatch(ch)]
        if bad:
            raise RuleFileError(f"replacement {self.replacement!r} contains {''.join(bad)!r}")


def parse_rules(text: str, origin: str = "<string>") -> list[NormalizationRule]:
    rules = []
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise RuleFileError(f"{origin}:{lineno}: expected 3 tab-separated fields, got {len(parts)}")
        try:
            rules.append(NormalizationRule(parts[0], parts[1], parts[2].strip()))
        except RuleFileError as exc:
            raise RuleFileError(f"{origin}:{lineno}: {exc}") from None
    return rules


def load_rules(path: str | Path) -> list[NormalizationRule]:
    path = Path(path)
    return parse_rules(path.read_text(encoding="utf-8"), str(path))


def _data_text(name: str) -> str:
    return resources.files(__package__).joinpath("data", name).read_text(encoding="utf-8")


def default_abbreviations() -> list[NormalizationRule]:
    return parse_rules(_data_text("abbreviations.tsv"), "abbreviations.tsv")


def default_symbols() -> list[NormalizationRule]:
    return parse_rules(_data_text("symbols.tsv"), "symbols.tsv")


def example_overrides() -> list[NormalizationRule]:
    return parse_rules(_data_text("overrides_example.tsv"), "overrides_example.tsv")


def load_currencies(text: str | None = None) -> dict[str, tuple[str, str]]:
    """token -> (unit name, gender)."""
    table = {}
    for line in (text if text is not None else _data_text("currencies.tsv")).splitlines():
        if not line.strip() or line.startswith("#"):
            continue
        token, unit, gender = line.split("\t")
        table[token] = (unit, gender.strip())
    return table


_CURRENCIES = load_currencies()


class UnknownCurrency(KeyError):
    pass


def currency_to_words(amount_int: int, amount_frac: int, unit: str,
                      table: dict[str, tuple[str, str]] | None = None) -> str:
    """``4, 40, "Mk."`` -> "vier Mark vierzig"; the fraction is omitted when zero."""
    table = _CURRENCIES if table is None else table
    try:
        name, gender = table[unit]
    except KeyError:
        raise UnknownCurrency(f"unknown currency token {unit!r}") from None
    if not 0 <= amount_frac <= 99:
        raise ValueError(f"currency fraction {amount_frac} outside 0..99")
    if amount_int == 1:
        head = "eine" if gender == "f" else "ein"
    else:
        head = cardinal_to_words(amount_int)
    words = f"{head} {name}"
    if amount_frac:
        words += " " + cardinal_to_words(amount_frac)
    return words


class LiteralMatcher:
    """Longest-match-first literal replacement that respects word edges."""

    def __init__(self, rules: list[NormalizationRule]):
        self.rules = {}
        for rule in rules:
            self.rules.setdefault(rule.pattern, rule)
        parts = []
        for literal in sorted(self.rules, key=lambda s: (-len(s), s)):
            piece = re.escape(literal)
            if literal[0].isalnum():
                piece = r"(?<!\w)" + piece
            if literal[-1].isalnum():
                piece += r"(?!\w)"
            parts.append(piece)
        self.regex = re.compile("|".join(parts)) if parts else None

    def sub(self, text: str, on_match) -> str:
        """Replace every literal; ``on_match(rule, match)`` returns the replacement."""
        if self.regex is None:
            return text
        return self.regex.sub(lambda m: on_match(self.rules[m.group(0)], m), text)
