"""German number words: cardinals, ordinals, years, decimals, fractions, roman numerals."""

from __future__ import annotations

import re

_ONES = [
    "null", "eins", "zwei", "drei", "vier", "fünf", "sechs", "sieben", "acht", "neun",
    "zehn", "elf", "zwölf", "dreizehn", "vierzehn", "fünfzehn", "sechzehn", "siebzehn",
    "achtzehn", "neunzehn",
]
_TENS = {2: "zwanzig", 3: "dreißig", 4: "vierzig", 5: "fünfzig", 6: "sechzig",
         7: "siebzig", 8: "achtzig", 9: "neunzig"}
DIGITS = ["null", "eins", "zwei", "drei", "vier", "fünf", "sechs", "sieben", "acht", "neun"]

# ordinal stems that are not simply cardinal + "t"
_IRREGULAR_STEMS = {1: "erst", 3: "dritt", 7: "siebt", 8: "acht"}

ORDINAL_FORMS = ("nominative_m", "dative", "generic_te", "generic_ten")

_ROMAN_RE = re.compile(r"M{0,3}(CM|CD|D?C{0,3})(XC|XL|L?X{0,3})(IX|IV|V?I{0,3})")
_ROMAN_VALUES = {"I": 1, "V": 5, "X": 10, "L": 50, "C": 100, "D": 500, "M": 1000}


class NumberRangeError(ValueError):
    pass


def _below_100(n: int, final: bool) -> str:
    if n < 20:
        return "ein" if n == 1 and not final else _ONES[n]
    tens, unit = divmod(n, 10)
    if unit == 0:
        return _TENS[tens]
    return ("ein" if unit == 1 else _ONES[unit]) + "und" + _TENS[tens]


def _below_1000(n: int, final: bool) -> str:
    hundreds, rest = divmod(n, 100)
    out = ""
    if hundreds:
        out = ("ein" if hundreds == 1 else _ONES[hundreds]) + "hundert"
    if rest:
        out += _below_100(rest, final)
    return out


def cardinal_to_words(n: int, final: bool = True) -> str:
    """German cardinal for 0..999999 written as one compound word.

    ``final=False`` gives the attributive form ("ein" instead of "eins").
    """
    if not 0 <= n <= 999_999:
        raise NumberRangeError(f"cardinal {n} outside 0..999999")
    if n == 0:
        return "null"
    thousands, rest = divmod(n, 1000)
    out = ""
    if thousands:
        out = _below_1000(thousands, final=False) + "tausend"
    if rest:
        out += _below_1000(rest, final)
    return out


def ordinal_stem(n: int) -> str:
    """Stem to which ordinal endings attach: 3 -> "dritt", 20 -> "zwanzigst"."""
    if n <= 0:
        raise NumberRangeError(f"no ordinal for {n}")
    rest = n % 100
    if 0 < rest < 20:
        head = cardinal_to_words(n - rest, final=False) if n - rest else ""
        return head + _IRREGULAR_STEMS.get(rest, _ONES[rest] + "t")
    return cardinal_to_words(n, final=True) + "st"


def ordinal_to_words(n: int, case_form: str = "dative") -> str:
    """Inflected ordinal for 1..9999.

    ``nominative_m`` -> "der dritte"; ``dative``/``generic_ten`` -> "dritten";
    ``generic_te`` -> "dritte".
    """
    if not 1 <= n <= 9999:
        raise NumberRangeError(f"ordinal {n} outside 1..9999")
    stem = ordinal_stem(n)
    if case_form == "nominative_m":
        return "der " + stem + "e"
    if case_form == "generic_te":
        return stem + "e"
    if case_form in ("dative", "generic_ten"):
        return stem + "en"
    raise ValueError(f"unknown ordinal case form {case_form!r}")


def year_to_words(y: int) -> str:
    if 1100 <= y <= 1999:
        century, rest = divmod(y, 100)
        return _ONES[century] + "hundert" + (_below_100(rest, final=True) if rest else "")
    if 2000 <= y <= 2099:
        return cardinal_to_words(y)
    raise NumberRangeError(f"year {y} outside 1100..2099")


def year_range_to_words(y1: int, suffix: str) -> str:
    """``1885/86`` -> "achtzehnhundertfünfundachtzig bis sechsundachtzig"."""
    if len(suffix) != 2 or not suffix.isdigit():
        raise ValueError(f"year suffix must be two digits, got {suffix!r}")
    following = int(suffix)
    if y1 % 100 == 99 or following != (y1 + 1) % 100:
        raise ValueError(f"{y1}/{suffix} is not a consecutive year range within one century")
    return f"{year_to_words(y1)} bis {cardinal_to_words(following)}"


def decimal_to_words(int_part: int, frac_digits: str) -> str:
    if not frac_digits or not frac_digits.isdigit():
        raise ValueError(f"bad fractional digits {frac_digits!r}")
    spoken = " ".join(DIGITS[int(d)] for d in frac_digits)
    return f"{cardinal_to_words(int_part)} komma {spoken}"


def roman_to_int(s: str) -> int:
    """Strict subtractive-notation roman numeral (I..MMMCMXCIX)."""
    if not s or not _ROMAN_RE.fullmatch(s):
        raise ValueError(f"malformed roman numeral {s!r}")
    total = 0
    for ch, nxt in zip(s, s[1:] + " "):
        value = _ROMAN_VALUES[ch]
        total += -value if nxt != " " and _ROMAN_VALUES[nxt] > value else value
    return total


_VULGAR = {
    "½": (1, 2), "⅓": (1, 3), "⅔": (2, 3), "¼": (1, 4), "¾": (3, 4), "⅕": (1, 5),
    "⅖": (2, 5), "⅗": (3, 5), "⅘": (4, 5), "⅙": (1, 6), "⅚": (5, 6), "⅛": (1, 8),
    "⅜": (3, 8), "⅝": (5, 8), "⅞": (7, 8),
}
VULGAR_FRACTIONS = "".join(_VULGAR)


def fraction_to_words(numerator: int, denominator: int, compact: bool = False) -> str:
    """3/4 -> "drei viertel"; ``compact`` joins the words ("dreiviertel")."""
    if denominator < 2 or numerator < 1:
        raise ValueError(f"unsupported fraction {numerator}/{denominator}")
    if denominator == 2:
        unit = "halb" if numerator == 1 else "halbe"
    else:
        unit = ordinal_stem(denominator) + "el"
    head = cardinal_to_words(numerator, final=False)
    return head + unit if compact else f"{head} {unit}"


def vulgar_fraction_to_words(symbol: str) -> str:
    num, den = _VULGAR[symbol]
    return fraction_to_words(num, den, compact=True)
