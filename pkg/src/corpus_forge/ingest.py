"""Audiobook catalog lookup, chapter download and e-text extraction.

Every network access goes through a client object with a single
``get(url) -> bytes`` method, so tests and hermetic runs can substitute
:class:`FixtureClient`, which serves recorded payloads from a directory.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import re
import shutil
import subprocess
import tempfile
import threading
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from urllib.parse import urljoin, urlparse

log = logging.getLogger(__name__)

DEFAULT_CATALOG_URL = "https://librivox.org/api/feed/audiobooks?format=json&extended=1"
DEFAULT_CONVERTER = ("ffmpeg", "-nostdin", "-loglevel", "error", "-y", "-i", "{input}",
                     "-ac", "1", "-ar", "44100", "-c:a", "pcm_s16le", "{output}")
MANIFEST = "manifest.json"
TEXT_FILE = "text.txt"

_LANGUAGE_NAMES = {
    "de": {"de", "deu", "ger", "german", "deutsch"},
    "en": {"en", "eng", "english", "englisch"},
    "fr": {"fr", "fra", "fre", "french", "französisch"},
}


class FetchError(Exception):
    def __init__(self, url: str, reason: str):
        super().__init__(f"{url}: {reason}")
        self.url = url
        self.reason = reason


class CatalogError(Exception):
    pass


class ConverterMissing(Exception):
    pass


class TextExtractionError(Exception):
    pass


# -- clients ------------------------------------------------------------------

class HttpClient:
    def __init__(self, timeout: float = 60.0):
        import httpx

        self._client = httpx.Client(timeout=timeout, follow_redirects=True)
        self._error = httpx.HTTPError

    def get(self, url: str) -> bytes:
        try:
            resp = self._client.get(url)
        except self._error as exc:
            raise FetchError(url, str(exc)) from exc
        if resp.status_code != 200:
            raise FetchError(url, f"HTTP {resp.status_code}")
        return resp.content


class FixtureClient:
    """Serves ``urls.json`` (url -> file relative to the fixture directory).

    Unknown URLs behave like a 404. Every request is recorded in ``fetched``.
    """

    def __init__(self, directory: str | Path):
        self.directory = Path(directory)
        with open(self.directory / "urls.json", encoding="utf-8") as fh:
            self.routes: dict[str, str] = json.load(fh)
        self.fetched: list[str] = []
        self._lock = threading.Lock()

    def get(self, url: str) -> bytes:
        with self._lock:
            self.fetched.append(url)
        name = self.routes.get(url)
        if name is None:
            raise FetchError(url, "HTTP 404")
        try:
            return (self.directory / name).read_bytes()
        except OSError as exc:
            raise FetchError(url, str(exc)) from exc


# -- catalog ------------------------------------------------------------------

@dataclass(frozen=True)
class BookRecord:
    book_id: str
    title: str
    language: str
    reader_name: str
    chapter_audio_urls: tuple[str, ...]
    text_url: str
    native_sample_rate: int


@dataclass
class RawBookBundle:
    book: BookRecord
    audio_paths: list[Path]
    text_raw: str
    failed_urls: list[str] = field(default_factory=list)


def language_matches(tag: str, advertised: str) -> bool:
    tag = tag.strip().lower()
    names = _LANGUAGE_NAMES.get(tag, {tag})
    return advertised.strip().lower() in names


def _record(item: dict) -> BookRecord:
    readers = item.get("readers") or []
    reader = item.get("reader") or (readers[0].get("display_name", "") if readers else "")
    urls = tuple(s["listen_url"] for s in item.get("sections", []))
    return BookRecord(
        book_id=str(item["id"]),
        title=str(item.get("title", "")),
        language=str(item["language"]),
        reader_name=str(reader),
        chapter_audio_urls=urls,
        text_url=str(item.get("url_text_source", "")),
        native_sample_rate=int(item["sample_rate"]),
    )


def fetch_catalog(client, language: str, min_sample_rate: int = 44100,
                  catalog_url: str = DEFAULT_CATALOG_URL) -> list[BookRecord]:
    """Catalog entries in ``language`` advertised at ``min_sample_rate`` or more, sorted by id.

    Entries without chapter audio are not ingestible and are left out.
    """
    payload = client.get(catalog_url)
    try:
        data = json.loads(payload.decode("utf-8"))
        items = data["books"] if isinstance(data, dict) else data
        records = [_record(item) for item in items]
    except (ValueError, KeyError, TypeError, AttributeError) as exc:
        raise CatalogError(f"{catalog_url}: malformed catalog payload ({exc!r})") from exc
    keep = [r for r in records
            if language_matches(language, r.language)
            and r.native_sample_rate >= min_sample_rate
            and r.chapter_audio_urls]
    return sorted(keep, key=lambda r: r.book_id)


# -- download -----------------------------------------------------------------

def _sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _file_ok(path: Path, entry: dict | None) -> bool:
    if entry is None or not path.is_file() or path.stat().st_size != entry["size"]:
        return False
    return _sha256(path.read_bytes()) == entry["sha256"]


def _atomic_write(path: Path, data: bytes) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".part")
    with os.fdopen(fd, "wb") as fh:
        fh.write(data)
    os.replace(tmp, path)


class DownloadError(Exception):
    def __init__(self, failed: dict[str, str], bundle: RawBookBundle):
        lines = "\n".join(f"  {url}: {reason}" for url, reason in failed.items())
        super().__init__(f"{bundle.book.book_id}: {len(failed)} download(s) failed\n{lines}")
        self.failed = failed
        self.bundle = bundle


class _Manifest:
    def __init__(self, path: Path):
        self.path = path
        self.lock = threading.Lock()
        try:
            self.entries: dict[str, dict] = json.loads(path.read_text(encoding="utf-8"))
        except FileNotFoundError:
            self.entries = {}

    def get(self, name: str) -> dict | None:
        with self.lock:
            return self.entries.get(name)

    def record(self, name: str, url: str, data: bytes) -> None:
        with self.lock:
            self.entries[name] = {"url": url, "size": len(data), "sha256": _sha256(data)}
            body = json.dumps(self.entries, indent=1, sort_keys=True).encode("utf-8")
            _atomic_write(self.path, body)


def _convert(data: bytes, suffix: str, target: Path, template: Sequence[str]) -> bytes:
    if not template or shutil.which(template[0]) is None:
        raise ConverterMissing(f"audio converter {template[0] if template else '<unset>'!r} not found")
    with tempfile.TemporaryDirectory(prefix="conv-") as tmp:
        src = Path(tmp) / f"input{suffix}"
        out = Path(tmp) / "output.wav"
        src.write_bytes(data)
        cmd = [part.replace("{input}", str(src)).replace("{output}", str(out)) for part in template]
        proc = subprocess.run(cmd, capture_output=True, check=False)
        if proc.returncode != 0 or not out.is_file():
            err = proc.stderr.decode("utf-8", "replace").strip()[:300]
            raise FetchError(str(target), f"converter failed ({proc.returncode}): {err}")
        return out.read_bytes()


def download_book(record: BookRecord, workdir: str | Path, client,
                  converter: Sequence[str] | None = DEFAULT_CONVERTER, max_workers: int = 4,
                  selectors: dict | None = None) -> RawBookBundle:
    """Fetch every chapter (converted to WAV) and the e-text into ``workdir/<book_id>/``.

    Files already listed in the sidecar manifest with matching size and SHA-256
    are reused without touching the network. Failed URLs are collected and
    raised together in a :class:`DownloadError` carrying the partial bundle.
    """
    if not record.chapter_audio_urls:
        raise ValueError(f"{record.book_id}: no chapter audio")
    book_dir = Path(workdir) / record.book_id
    book_dir.mkdir(parents=True, exist_ok=True)
    manifest = _Manifest(book_dir / MANIFEST)
    failed: dict[str, str] = {}
    converter_missing: list[ConverterMissing] = []

    def chapter(index: int, url: str) -> Path | None:
        name = f"chapter_{index:02d}.wav"
        path = book_dir / name
        if _file_ok(path, manifest.get(name)):
            log.info("cache hit %s", path)
            return path
        try:
            data = client.get(url)
            if data[:4] != b"RIFF" or data[8:12] != b"WAVE":
                suffix = Path(urlparse(url).path).suffix or ".bin"
                data = _convert(data, suffix, path, converter or ())
        except FetchError as exc:
            failed[url] = exc.reason
            return None
        except ConverterMissing as exc:
            converter_missing.append(exc)
            return None
        _atomic_write(path, data)
        manifest.record(name, url, data)
        return path

    with ThreadPoolExecutor(max_workers=max(1, max_workers)) as pool:
        paths = list(pool.map(lambda pair: chapter(*pair), enumerate(record.chapter_audio_urls, 1)))
    if converter_missing:
        raise converter_missing[0]

    text = ""
    text_path = book_dir / TEXT_FILE
    if _file_ok(text_path, manifest.get(TEXT_FILE)):
        text = text_path.read_text(encoding="utf-8")
    else:
        try:
            text = fetch_text(record, client, selectors)
        except FetchError as exc:
            failed[exc.url] = exc.reason
        else:
            data = text.encode("utf-8")
            _atomic_write(text_path, data)
            manifest.record(TEXT_FILE, record.text_url, data)

    bundle = RawBookBundle(record, [p for p in paths if p is not None], text, sorted(failed))
    if failed:
        raise DownloadError(failed, bundle)
    return bundle


# -- text extraction ------------------------------------------------------------

def load_selectors(path: str | Path | None = None) -> dict:
    if path is None:
        raw = resources.files("corpus_forge").joinpath("data", "text_selectors.json").read_text("utf-8")
    else:
        raw = Path(path).read_text(encoding="utf-8")
    return json.loads(raw)


def _host_config(selectors: dict, url: str) -> dict:
    config = dict(selectors.get("default", {}))
    config.update(selectors.get("hosts", {}).get(urlparse(url).netloc, {}))
    return config


_PG_START = re.compile(r"^\*\*\* ?START OF (THE|THIS) PROJECT GUTENBERG.*$", re.MULTILINE | re.IGNORECASE)
_PG_END = re.compile(r"^\*\*\* ?END OF (THE|THIS) PROJECT GUTENBERG.*$", re.MULTILINE | re.IGNORECASE)


def _plain_text(raw: str) -> str:
    start = _PG_START.search(raw)
    if start:
        raw = raw[start.end():]
    end = _PG_END.search(raw)
    if end:
        raw = raw[:end.start()]
    paragraphs = re.split(r"\n\s*\n", raw.replace("\r\n", "\n"))
    return "\n".join(" ".join(p.split()) for p in paragraphs if p.strip())


def _html_page(html: str, config: dict) -> tuple[list[str], str | None]:
    from bs4 import BeautifulSoup

    soup = BeautifulSoup(html, "html.parser")
    next_href = None
    if config.get("next"):
        link = soup.select_one(config["next"])
        if link is not None and link.get("href"):
            next_href = link["href"]
    root = None
    for selector in config.get("content") or ["body"]:
        root = soup.select_one(selector)
        if root is not None:
            break
    root = root or soup
    for selector in config.get("drop", []):
        for node in root.select(selector):
            node.decompose()
    nodes = root.select(config.get("paragraphs") or "p")
    if nodes:
        ids = {id(node) for node in nodes}
        texts = [" ".join(node.get_text().split()) for node in nodes
                 if node.find_parent(lambda t: id(t) in ids) is None]
    else:
        texts = [" ".join(line.split()) for line in root.get_text("\n").splitlines()]
    return [t for t in texts if t], next_href


def fetch_text(record: BookRecord, client, selectors: dict | None = None,
               max_pages: int = 500) -> str:
    """Plain text of the book, one paragraph per line, following "next page" links."""
    if not record.text_url:
        raise TextExtractionError(f"{record.book_id}: no text URL")
    selectors = load_selectors() if selectors is None else selectors
    url: str | None = record.text_url
    seen: set[str] = set()
    paragraphs: list[str] = []
    while url and url not in seen and len(seen) < max_pages:
        seen.add(url)
        raw = client.get(url).decode("utf-8", "replace")
        if url.lower().endswith(".txt") or "<" not in raw[:2000]:
            paragraphs.append(_plain_text(raw))
            break
        page, href = _html_page(raw, _host_config(selectors, url))
        paragraphs.extend(page)
        url = urljoin(url, href) if href else None
    text = "\n".join(p for p in paragraphs if p)
    if not text.strip():
        raise TextExtractionError(f"{record.text_url}: no text extracted")
    return text
