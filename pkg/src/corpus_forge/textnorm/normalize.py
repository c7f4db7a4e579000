"""Rewrite raw German book text into a speakable, digit-free transcript source."""

from __future__ import annotations

import re
from collections import Counter
from collections.abc import Iterable
from dataclasses import dataclass, field
from pathlib import Path

from . import numbers as num
from .rules import (
    LiteralMatcher,
    NormalizationRule,
    currency_to_words,
    default_abbreviations,
    default_symbols,
    load_currencies,
    load_rules,
)

_ARTICLES_TE = {"der", "die", "das"}
_ARTICLES_TEN = {"den", "dem", "des", "am", "im", "vom", "zum", "zur", "beim", "einem",
                 "einen", "eines", "einer", "seinem", "seinen", "ihrem", "ihren"}
_CONTEXT = 30


class NormalizationError(ValueError):
    """A digit survived every rule; add an override entry for the quoted context."""


@dataclass
class NormalizedText:
    text: str
    applied_rules: Counter = field(default_factory=Counter)


@dataclass(frozen=True)
class FootnoteConfig:
    """How one reader handled footnotes.

    mode: ``omit`` drops references and bodies; ``end_of_page`` reads the
    reference number and leaves the body where it stands; ``inline`` reads the
    body in place of the reference.
    """

    mode: str = "omit"
    reference: str = r"\[(\d+)\]"
    spoken_marker: str | None = None  # e.g. "Fussnote"

    def __post_init__(self) -> None:
        if self.mode not in ("omit", "end_of_page", "inline"):
            raise ValueError(f"unknown footnote mode {self.mode!r}")


@dataclass(frozen=True)
class CommentConfig:
    """Round-bracket comments: ``read`` keeps them, ``omit`` drops them."""

    mode: str = "read"
    spoken_markers: bool = False  # "Kommentar Anfang" ... "Kommentar Ende"

    def __post_init__(self) -> None:
        if self.mode not in ("read", "omit"):
            raise ValueError(f"unknown comment mode {self.mode!r}")


def _is_sentence_start(text: str, pos: int) -> bool:
    i = pos - 1
    while i >= 0 and (text[i].isspace() or text[i] in "\"'»«„“”‚‘’()[]"):
        i -= 1
    return i < 0 or text[i] in ".!?"


def _previous_word(text: str, pos: int) -> str:
    m = re.search(r"(\w+)\W*$", text[:pos])
    return m.group(1) if m else ""


def _next_is_capitalized(text: str, pos: int) -> bool:
    m = re.match(r"\s+(\w)", text[pos:])
    return bool(m) and m.group(1).isupper()


def _strongest_mark(m: re.Match) -> str:
    """A run of marks collapses to its first sentence end, else its first mark."""
    run = m.group(0)
    ends = [ch for ch in run if ch in ".?!"]
    return ends[0] if ends else run[0]


class Normalizer:
    """Ordered rule passes over one book's text.

    Pass order: footnotes/comments, book overrides, abbreviations, roman
    numerals, currency, year ranges, years, ordinals, decimals, fractions,
    cardinals, symbols, punctuation restriction, whitespace.
    """

    def __init__(self, overrides: Iterable[NormalizationRule] = (),
                 abbreviations: Iterable[NormalizationRule] | None = None,
                 symbols: Iterable[NormalizationRule] | None = None,
                 currencies: dict[str, tuple[str, str]] | None = None,
                 footnotes: FootnoteConfig | None = None,
                 comments: CommentConfig | None = None):
        self.overrides = LiteralMatcher(list(overrides))
        self.abbreviations = LiteralMatcher(
            list(default_abbreviations() if abbreviations is None else abbreviations))
        self.symbols = LiteralMatcher(list(default_symbols() if symbols is None else symbols))
        self.currencies = load_currencies() if currencies is None else currencies
        self.footnotes = footnotes or FootnoteConfig()
        self.comments = comments or CommentConfig()

        tokens = "|".join(re.escape(t) for t in sorted(self.currencies, key=lambda s: (-len(s), s)))
        self._currency_re = re.compile(
            rf"(?<![\d.,])(\d{{1,6}})(?:,(\d\d|-|\u2014))?\s*({tokens})(?!\w)") if tokens else None

    # -- helpers -------------------------------------------------------------

    def _emit(self, counts: Counter, category: str, words: str, text: str, pos: int) -> str:
        counts[category] += 1
        if words and _is_sentence_start(text, pos):
            words = words[0].upper() + words[1:]
        return words

    # -- structural passes -----------------------------------------------------

    def _footnotes(self, text: str, counts: Counter) -> str:
        cfg = self.footnotes
        body_re = re.compile(r"^[ \t]*" + cfg.reference + r"[ \t]*(.+?)[ \t]*$", re.MULTILINE)
        bodies = {m.group(1): m.group(2) for m in body_re.finditer(text)}
        marker = f"{cfg.spoken_marker} " if cfg.spoken_marker else ""

        if cfg.mode == "omit":
            text = body_re.sub("", text)
            text = re.sub(cfg.reference, "", text)
        elif cfg.mode == "end_of_page":
            text = body_re.sub(
                lambda m: f"{marker}{num.cardinal_to_words(int(m.group(1)))}: {m.group(2)}", text)
            text = re.sub(cfg.reference,
                          lambda m: f" {marker}{num.cardinal_to_words(int(m.group(1)))}", text)
        else:
            text = body_re.sub("", text)
            text = re.sub(cfg.reference,
                          lambda m: f", {marker}{bodies.get(m.group(1), '').rstrip('.')},", text)
        if bodies:
            counts["footnote"] += len(bodies)
        return text

    def _comments(self, text: str, counts: Counter) -> str:
        cfg = self.comments
        if cfg.mode == "read" and not cfg.spoken_markers:
            return text

        def repl(m: re.Match) -> str:
            counts["comment"] += 1
            if cfg.mode == "omit":
                return ""
            return f", Kommentar Anfang, {m.group(1)}, Kommentar Ende,"

        return re.sub(r"\(([^()]*)\)", repl, text)

    # -- token passes -------------------------------------------------------------

    def _literal_pass(self, matcher: LiteralMatcher, text: str, counts: Counter,
                      capitalize: bool) -> str:
        def repl(rule: NormalizationRule, m: re.Match) -> str:
            if capitalize:
                return self._emit(counts, rule.category, rule.replacement, m.string, m.start())
            counts[rule.category] += 1
            return rule.replacement
        return matcher.sub(text, repl)

    def _roman(self, text: str, counts: Counter) -> str:
        def repl(m: re.Match) -> str:
            token, dot = m.group(1), m.group(2)
            if len(token) == 1 and token not in "IVX":
                return m.group(0)
            try:
                value = num.roman_to_int(token)
            except ValueError:
                return m.group(0)
            if dot:
                if value > 9999:
                    return m.group(0)
                prev = _previous_word(m.string, m.start()).lower()
                if prev in _ARTICLES_TE:
                    words = num.ordinal_to_words(value, "generic_te")
                elif prev in _ARTICLES_TEN:
                    words = num.ordinal_to_words(value, "generic_ten")
                else:
                    words = num.ordinal_to_words(value, "nominative_m")
            else:
                words = num.cardinal_to_words(value)
            return self._emit(counts, "roman", words, m.string, m.start())
        return re.sub(r"(?<![\w.])([IVXLCDM]+)(\.)?(?!\w)", repl, text)

    def _currency(self, text: str, counts: Counter) -> str:
        if self._currency_re is None:
            return text

        def repl(m: re.Match) -> str:
            frac = m.group(2)
            cents = int(frac) if frac and frac.isdigit() else 0
            words = currency_to_words(int(m.group(1)), cents, m.group(3), self.currencies)
            return self._emit(counts, "currency", words, m.string, m.start())
        return self._currency_re.sub(repl, text)

    def _year_ranges(self, text: str, counts: Counter) -> str:
        def repl(m: re.Match) -> str:
            try:
                words = num.year_range_to_words(int(m.group(1)), m.group(2))
            except ValueError as exc:
                lo = max(0, m.start() - _CONTEXT)
                raise NormalizationError(
                    f"{exc} near {m.string[lo:m.end() + _CONTEXT]!r}; add an override rule") from None
            return self._emit(counts, "year_range", words, m.string, m.start())
        return re.sub(r"(?<![\d.,/])(1[1-9]\d\d|20\d\d)/(\d\d)(?![\d/])", repl, text)

    def _years(self, text: str, counts: Counter) -> str:
        def repl(m: re.Match) -> str:
            words = num.year_to_words(int(m.group(1)))
            return self._emit(counts, "year", words, m.string, m.start())
        return re.sub(r"(?<![\d.,/])(?<!\d[ .  ])(1[1-9]\d\d|20\d\d)(?![\d/]|[.,]\d|\s\d{3}(?!\d))",
                      repl, text)

    def _ordinals(self, text: str, counts: Counter) -> str:
        def dotted(m: re.Match) -> str:
            value = int(m.group(1))
            if not 1 <= value <= 9999:
                return m.group(0)
            s = m.string
            prev = _previous_word(s, m.start()).lower()
            if _next_is_capitalized(s, m.end()) and prev in _ARTICLES_TE:
                form = "generic_te"
            else:
                form = "dative"
            return self._emit(counts, "ordinal", num.ordinal_to_words(value, form), s, m.start())

        def suffixed(m: re.Match) -> str:
            value = int(m.group(1))
            if not 1 <= value <= 9999:
                return m.group(0)
            words = num.ordinal_stem(value) + m.group(2)[1:]
            return self._emit(counts, "ordinal", words, m.string, m.start())

        text = re.sub(r"(?<![\d.,])(\d{1,4})\.(?=\s|$)(?!\s+\d)", dotted, text)
        return re.sub(r"(?<![\d.,])(\d{1,4})(te|ten|ter|tes|tem)(?!\w)", suffixed, text)

    def _decimals(self, text: str, counts: Counter) -> str:
        def repl(m: re.Match) -> str:
            value = int(m.group(1))
            if value > 999_999:
                return m.group(0)
            words = num.decimal_to_words(value, m.group(2))
            return self._emit(counts, "decimal", words, m.string, m.start())
        return re.sub(r"(?<![\d.,])(\d+),(\d+)(?![\d,])", repl, text)

    def _fractions(self, text: str, counts: Counter) -> str:
        def vulgar(m: re.Match) -> str:
            words = num.vulgar_fraction_to_words(m.group(2))
            if m.group(1):
                words = f"{num.cardinal_to_words(int(m.group(1)))} {words}"
            return self._emit(counts, "fraction", words, m.string, m.start())

        def slashed(m: re.Match) -> str:
            numerator, denominator = int(m.group(1)), int(m.group(2))
            if not 2 <= denominator <= 100 or numerator < 1:
                return m.group(0)
            words = num.fraction_to_words(numerator, denominator)
            return self._emit(counts, "fraction", words, m.string, m.start())

        text = re.sub(rf"(?<![\d.,])(\d{{1,6}})?\s?([{num.VULGAR_FRACTIONS}])", vulgar, text)
        return re.sub(r"(?<![\d/.,])(\d{1,2})/(\d{1,3})(?![\d/])", slashed, text)

    def _cardinals(self, text: str, counts: Counter) -> str:
        def repl(m: re.Match) -> str:
            value = int(re.sub(r"\D", "", m.group(0)))
            if value > 999_999:
                return m.group(0)
            final = not (value % 100 == 1 and _next_is_capitalized(m.string, m.end()))
            words = num.cardinal_to_words(value, final=final)
            return self._emit(counts, "cardinal", words, m.string, m.start())
        return re.sub(r"(?<![\d.,])\d{1,3}(?:[ .  ]\d{3})+(?![\d,]|\.\d)|\d+", repl, text)

    # -- cleanup ------------------------------------------------------------------

    @staticmethod
    def restrict_punctuation(text: str) -> str:
        text = re.sub(r"(?:\.{2,}|…)(?=\s+[a-zäöüß])", ",", text)
        text = re.sub(r"\.{2,}|…", ".", text)
        text = text.replace(";", ",")
        text = re.sub(r"\s[-‐‑‒–\u2014]+\s|\s[-‐‑‒–\u2014]+$|^[-‐‑‒–\u2014]+\s", " , ", text)
        text = re.sub(r"[-‐‑‒–\u2014/]", " ", text)
        text = re.sub(r"[^\w\s.?!,:]|[\d_]", "", text)
        text = re.sub(r"\s+", " ", text).strip()
        text = re.sub(r"\s+([.?!,:])", r"\1", text)
        text = re.sub(r"[.?!,:]{2,}", _strongest_mark, text)
        text = re.sub(r"^[.?!,:\s]+", "", text)
        text = re.sub(r"([.?!,:])(?=\w)", r"\1 ", text)
        return text

    # -- entry point ----------------------------------------------------------------

    def __call__(self, raw: str) -> NormalizedText:
        counts: Counter = Counter()
        text = self._footnotes(raw, counts)
        text = self._comments(text, counts)
        text = self._literal_pass(self.overrides, text, counts, capitalize=False)
        text = self._literal_pass(self.abbreviations, text, counts, capitalize=False)
        text = self._roman(text, counts)
        text = self._currency(text, counts)
        text = self._year_ranges(text, counts)
        text = self._years(text, counts)
        text = self._ordinals(text, counts)
        text = self._decimals(text, counts)
        text = self._fractions(text, counts)
        text = self._cardinals(text, counts)
        text = self._literal_pass(self.symbols, text, counts, capitalize=True)

        leftover = re.search(r"\d", text)
        if leftover:
            lo = max(0, leftover.start() - _CONTEXT)
            hi = leftover.start() + _CONTEXT
            raise NormalizationError(
                f"digit left after normalisation near {text[lo:hi]!r}; add an override rule")
        text = self.restrict_punctuation(text)
        return NormalizedText(text, counts)


def normalize_text(raw: str, overrides: str | Path | Iterable[NormalizationRule] | None = None,
                   **options) -> NormalizedText:
    """Normalise ``raw`` with the default tables plus optional book overrides.

    ``overrides`` is a path to a rule file or an iterable of rules; further
    keyword options go to :class:`Normalizer`.
    """
    if overrides is None:
        rules: list[NormalizationRule] = []
    elif isinstance(overrides, (str, Path)):
        rules = load_rules(overrides)
    else:
        rules = list(overrides)
    return Normalizer(rules, **options)(raw)
