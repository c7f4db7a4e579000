"""Synthetic audiobooks for hermetic end-to-end runs.

A fixture book is a directory that :class:`corpus_forge.ingest.FixtureClient`
can serve: a catalog JSON, chapter WAVs, a two-page HTML e-text and a
``transcripts.json`` map for the mock recogniser. Sentences are rendered as
voice-like harmonic bursts separated by 0.6 s pauses, so segmentation yields
one snippet per sentence and the mock transcript of each snippet is known.

Run ``python -m corpus_forge.fixtures <dir>`` to write the default desk book.
"""

from __future__ import annotations

import argparse
import html
import json
import random
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import alphabet
from .audio import AudioClip, write_wav
from .ingest import DEFAULT_CATALOG_URL

RATE = 44100
FLOOR_DB = -75.0
PAUSE_S = 0.6
WORD_GAP_S = 0.12
SECONDS_PER_CHAR = 0.065

_WORDS = (
    "und der die das ein eine nicht mit auf dem den sich des von zu war er sie es "
    "auch noch nach wie aus bei nur so dann wenn schon über unter wieder immer "
    "langsam still leise hell dunkel weit nahe kalt warm alte junge kleine große "
    "ging kam sah stand fand hörte sagte dachte wusste blieb lag trug rief lachte"
).split()
_NOUNS = (
    "Haus Garten Weg Fenster Abend Morgen Wald Fluss Stadt Mutter Vater Kind Brief "
    "Tür Himmel Wagen Pferd Feld Dorf Kirche Straße Licht Stimme Hand Zimmer Tisch"
).split()

# (raw text fragment, what a reader says for it)
_NUMBER_SENTENCES = [
    ("Im Jahre 1793 kam er mit 12 Pferden nach St. Anna",
     "im jahre siebzehnhundertdreiundneunzig kam er mit zwölf pferden nach sankt anna"),
    ("Das Zimmer kostete 4,40 Mk. für die Nacht",
     "das zimmer kostete vier mark vierzig für die nacht"),
    ("Am 30. Mai schrieb Prof. Dr. Weber den langen Brief",
     "am dreißigsten mai schrieb professor doktor weber den langen brief"),
    ("Friedrich III. regierte im Winter 1885/86 nur kurz",
     "friedrich der dritte regierte im winter achtzehnhundertfünfundachtzig bis sechsundachtzig nur kurz"),
    ("Er wanderte 5½ Stunden durch den Wald",
     "er wanderte fünf einhalb stunden durch den wald"),
    ("Die Kirche hatte 50 000 Steine und XIV Fenster",
     "die kirche hatte fünfzigtausend steine und vierzehn fenster"),
]

CHAPTER_TITLES = ["Erstes Kapitel", "Zweites Kapitel", "Drittes Kapitel", "Viertes Kapitel"]


@dataclass
class FixtureSentence:
    raw: str  # as printed in the book
    spoken: str  # projected words the reader says
    noisy: bool = False


def _filler(rng: random.Random, n: int) -> list[str]:
    out = []
    for _ in range(n):
        out.append(rng.choice(_NOUNS) if rng.random() < 0.25 else rng.choice(_WORDS))
    return out


def _sentence(rng: random.Random, min_chars: int, max_chars: int,
              head: tuple[str, str] | None = None) -> FixtureSentence:
    raw_words: list[str] = head[0].split() if head else []
    spoken_words: list[str] = head[1].split() if head else []
    if raw_words:
        raw_words.append("und")
        spoken_words.append("und")
    while len(" ".join(spoken_words)) < min_chars:
        word = _filler(rng, 1)[0]
        if len(" ".join(spoken_words + [word])) > max_chars:
            break
        raw_words.append(word)
        spoken_words.append(alphabet.project(word))
    raw_words[0] = raw_words[0][0].upper() + raw_words[0][1:]
    if len(raw_words) > 8:
        raw_words[len(raw_words) // 2] += ","
    raw = " ".join(raw_words) + rng.choice([".", ".", ".", "!", "?"])
    return FixtureSentence(raw, " ".join(spoken_words))


def _voice(rng: np.random.Generator, spoken: str, noisy: bool) -> np.ndarray:
    """Harmonic bursts, one per word, with short gaps at the noise floor."""
    parts = []
    gap = int(WORD_GAP_S * RATE)
    for i, word in enumerate(spoken.split()):
        n = int((SECONDS_PER_CHAR * len(word) + 0.08) * RATE)
        t = np.arange(n) / RATE
        f0 = rng.uniform(110, 210)
        glide = f0 * (1 + 0.08 * np.sin(np.pi * t / t[-1]))
        phase = 2 * np.pi * np.cumsum(glide) / RATE
        tone = sum(np.sin(k * phase) / k for k in range(1, 9))
        env = np.sin(np.pi * np.arange(n) / n) ** 0.5
        parts.append(rng.uniform(0.08, 0.16) * env * tone / 2.0)
        if i < len(spoken.split()) - 1:
            parts.append(np.zeros(gap))
    x = np.concatenate(parts)
    if noisy:
        x = x + rng.normal(0, 10 ** (-38 / 20), len(x))
    return x


def _chapter_audio(rng: np.random.Generator, sentences: list[FixtureSentence]) -> np.ndarray:
    half = np.zeros(int(PAUSE_S / 2 * RATE))
    pieces = []
    for s in sentences:
        pieces += [half, _voice(rng, s.spoken, s.noisy), half]
    x = np.concatenate(pieces)
    x = x + rng.normal(0, 10 ** (FLOOR_DB / 20), len(x))
    return np.clip(x, -1.0, 1.0)


def _corrupt(rng: random.Random, text: str, rate: float) -> str:
    letters = "abcdefghijklmnopqrstuvwxyzäöü"
    chars = list(text)
    for _ in range(round(rate * len(text))):
        idx = [i for i, c in enumerate(chars) if c != " "]
        i = rng.choice(idx)
        chars[i] = rng.choice(letters)
    return "".join(chars)


def _html_page(title: str, chapters: list[tuple[str, list[FixtureSentence]]], next_href: str | None,
               heading: str | None) -> str:
    body = ['<nav><a href="index.html">Inhalt</a> | <a href="autoren.html">Autoren</a></nav>',
            '<header>Projekt Textarchiv</header>']
    if heading:
        body.append(f"<h1>{html.escape(heading)}</h1>")
    for chapter_title, sentences in chapters:
        body.append(f"<h2>{html.escape(chapter_title)}</h2>")
        for i in range(0, len(sentences), 3):
            para = " ".join(html.escape(s.raw) for s in sentences[i:i + 3])
            body.append(f"<p>{para}</p>")
    if next_href:
        body.append(f'<a rel="next" href="{next_href}">weiter</a>')
    body.append('<footer>Impressum und Lizenz</footer>')
    return (f"<!DOCTYPE html><html><head><meta charset=\"utf-8\"><title>{html.escape(title)}</title>"
            f"</head><body>\n" + "\n".join(body) + "\n</body></html>\n")


def build_book(directory: str | Path, book_id: str = "desk01", reader: str = "Anna Beispiel",
               title: str = "Ein Tag am Fluss", n_chapters: int = 2, sentences_per_chapter: int = 18,
               seed: int = 1, corrupt_rate: float = 0.03, noisy_every: int = 7,
               bad_transcripts: tuple[int, ...] = (11,), shuffle_text: bool = False) -> dict:
    """Write one fixture book into ``directory`` (merged with any existing fixture files).

    Sentence k of the book becomes snippet k; ``bad_transcripts`` get a 35 %
    character-error transcript, every ``noisy_every``-th sentence carries a
    hiss floor, and ``shuffle_text`` publishes a word-shuffled e-text instead
    of the real one. Returns a summary dict.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    rng = random.Random(seed)
    nrng = np.random.default_rng(seed)

    chapters: list[tuple[str, list[FixtureSentence]]] = []
    specials = list(_NUMBER_SENTENCES)
    rng.shuffle(specials)
    counter = 0
    for c in range(n_chapters):
        sentences = []
        for k in range(sentences_per_chapter):
            head = specials.pop() if specials and rng.random() < 0.35 else None
            s = _sentence(rng, 80, 150, head)
            s.noisy = noisy_every > 0 and counter % noisy_every == noisy_every - 1
            sentences.append(s)
            counter += 1
        # the reader announces the chapter title with the first sentence
        title_words = CHAPTER_TITLES[c % len(CHAPTER_TITLES)]
        sentences[0].spoken = alphabet.project(title_words) + " " + sentences[0].spoken
        chapters.append((title_words, sentences))

    routes: dict[str, str] = {}
    urls_path = directory / "urls.json"
    if urls_path.exists():
        routes = json.loads(urls_path.read_text(encoding="utf-8"))

    transcripts: dict[str, str] = {}
    tx_path = directory / "transcripts.json"
    if tx_path.exists():
        transcripts = json.loads(tx_path.read_text(encoding="utf-8"))

    sections = []
    index = 0
    for c, (_, sentences) in enumerate(chapters, 1):
        audio = _chapter_audio(nrng, sentences)
        name = f"{book_id}_ch{c:02d}.wav"
        write_wav(AudioClip(audio, RATE), directory / name)
        url = f"https://audio.fixture.test/{book_id}/{c:02d}.wav"
        routes[url] = name
        sections.append({"listen_url": url})
        for k, s in enumerate(sentences):
            said = s.spoken
            rate = 0.35 if index in bad_transcripts else corrupt_rate
            transcripts[f"{book_id}_{c:02d}_f{k:06d}"] = _corrupt(rng, said, rate)
            index += 1

    half = (len(chapters) + 1) // 2
    pages = [chapters[:half], chapters[half:]]
    if shuffle_text:
        words = [w for _, ss in chapters for s in ss for w in s.raw.split()]
        rng.shuffle(words)
        shuffled = [FixtureSentence(" ".join(words[i:i + 15]), "") for i in range(0, len(words), 15)]
        cut = len(shuffled) // 2
        pages = [[("Erstes Kapitel", shuffled[:cut])], [("Zweites Kapitel", shuffled[cut:])]]
    page_urls = [f"https://text.fixture.test/{book_id}/seite{p + 1}.html" for p in range(len(pages))]
    for p, chapter_group in enumerate(pages):
        nxt = f"seite{p + 2}.html" if p + 1 < len(pages) else None
        page = _html_page(title, chapter_group, nxt, title if p == 0 else None)
        name = f"{book_id}_seite{p + 1}.html"
        (directory / name).write_text(page, encoding="utf-8")
        routes[page_urls[p]] = name

    catalog_name = "catalog.json"
    catalog_path = directory / catalog_name
    books = json.loads(catalog_path.read_text(encoding="utf-8"))["books"] if catalog_path.exists() else []
    books = [b for b in books if b["id"] != book_id]
    books.append({"id": book_id, "title": title, "language": "German",
                  "readers": [{"display_name": reader}], "sample_rate": RATE,
                  "url_text_source": page_urls[0], "sections": sections})
    books.sort(key=lambda b: b["id"])
    catalog_path.write_text(json.dumps({"books": books}, ensure_ascii=False, indent=1), encoding="utf-8")
    routes[DEFAULT_CATALOG_URL] = catalog_name

    urls_path.write_text(json.dumps(routes, indent=1, sort_keys=True), encoding="utf-8")
    tx_path.write_text(json.dumps(transcripts, ensure_ascii=False, indent=1, sort_keys=True), encoding="utf-8")

    total_s = sum(len(s.spoken) for _, ss in chapters for s in ss)
    return {"book_id": book_id, "sentences": index, "spoken_chars": total_s,
            "sentence_texts": [s.raw for _, ss in chapters for s in ss]}


def build_desk_fixture(directory: str | Path) -> dict:
    """The default roughly five-minute, two-chapter book."""
    return build_book(directory)


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description="Write a synthetic fixture audiobook.")
    parser.add_argument("directory")
    parser.add_argument("--book-id", default="desk01")
    parser.add_argument("--reader", default="Anna Beispiel")
    parser.add_argument("--seed", type=int, default=1)
    parser.add_argument("--sentences", type=int, default=18, help="sentences per chapter")
    parser.add_argument("--shuffle-text", action="store_true")
    args = parser.parse_args(argv)
    info = build_book(args.directory, args.book_id, args.reader, seed=args.seed,
                      sentences_per_chapter=args.sentences, shuffle_text=args.shuffle_text)
    print(f"wrote {info['book_id']} with {info['sentences']} sentences to {args.directory}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
