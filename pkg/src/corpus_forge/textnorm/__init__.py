"""German text normalisation for read-speech transcripts."""

from .normalize import (
    CommentConfig,
    FootnoteConfig,
    NormalizationError,
    NormalizedText,
    Normalizer,
    normalize_text,
)
from .numbers import (
    cardinal_to_words,
    decimal_to_words,
    ordinal_to_words,
    roman_to_int,
    year_range_to_words,
    year_to_words,
)
from .rules import (
    NormalizationRule,
    UnknownCurrency,
    currency_to_words,
    example_overrides,
    load_rules,
    parse_rules,
)

__all__ = [
    "CommentConfig", "FootnoteConfig", "NormalizationError", "NormalizedText", "Normalizer",
    "normalize_text", "cardinal_to_words", "decimal_to_words", "ordinal_to_words",
    "roman_to_int", "year_range_to_words", "year_to_words", "NormalizationRule",
    "UnknownCurrency", "currency_to_words", "example_overrides", "load_rules", "parse_rules",
]
