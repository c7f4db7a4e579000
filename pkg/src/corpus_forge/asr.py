"""Contract with an external speech recogniser, plus a content-addressed transcript cache.

The recogniser itself is not part of this package. An engine receives a 16 kHz
mono 16-bit WAV and returns UTF-8 text, either as a subprocess
(``<cmd> <wav-path>`` printing the transcript) or as an HTTP endpoint that
accepts the WAV bytes in a POST body.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import shlex
import subprocess
import tempfile
import threading
from collections.abc import Mapping, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from . import alphabet
from .audio import AudioClip, resample, wav_bytes

log = logging.getLogger(__name__)

ENGINE_RATE = 16000


class EngineError(Exception):
    """One failed recognition attempt; may succeed on retry."""


class TranscriptionFailed(Exception):
    def __init__(self, snippet_id: str, cause: Exception):
        super().__init__(f"{snippet_id}: transcription failed after retries: {cause}")
        self.snippet_id = snippet_id
        self.cause = cause


@dataclass(frozen=True)
class AsrTranscript:
    snippet_id: str
    text: str
    engine_tag: str


def post_filter(text: str) -> str:
    """Lowercase, keep German letters only, single spaces. Digits are dropped too."""
    return alphabet.project(text)


# -- engines ----------------------------------------------------------------

class SubprocessEngine:
    def __init__(self, command: str | Sequence[str], tag: str, timeout: float = 300.0):
        self.command = shlex.split(command) if isinstance(command, str) else list(command)
        self.tag = tag
        self.timeout = timeout

    def recognize(self, wav: bytes, snippet_id: str) -> str:
        with tempfile.TemporaryDirectory(prefix="asr-") as tmp:
            path = Path(tmp) / f"{snippet_id}.wav"
            path.write_bytes(wav)
            try:
                proc = subprocess.run([*self.command, str(path)], capture_output=True,
                                      timeout=self.timeout, check=False)
            except (OSError, subprocess.TimeoutExpired) as exc:
                raise EngineError(str(exc)) from exc
        if proc.returncode != 0:
            err = proc.stderr.decode("utf-8", "replace").strip()
            raise EngineError(f"engine exited with {proc.returncode}: {err[:200]}")
        return proc.stdout.decode("utf-8")


class HttpEngine:
    def __init__(self, url: str, tag: str, client=None, timeout: float = 300.0):
        self.url = url
        self.tag = tag
        self.timeout = timeout
        self._client = client

    def recognize(self, wav: bytes, snippet_id: str) -> str:
        import httpx

        client = self._client or httpx
        try:
            resp = client.post(self.url, content=wav, timeout=self.timeout,
                               headers={"Content-Type": "audio/wav", "X-Snippet-Id": snippet_id})
        except httpx.HTTPError as exc:
            raise EngineError(f"{self.url}: {exc}") from exc
        if resp.status_code != 200:
            raise EngineError(f"{self.url}: HTTP {resp.status_code}")
        return resp.content.decode("utf-8")


class MockEngine:
    """Looks transcripts up by snippet id; ``failures`` makes the first n calls for an id fail."""

    def __init__(self, transcripts: Mapping[str, str], tag: str = "mock-1",
                 failures: Mapping[str, int] | None = None):
        self.transcripts = dict(transcripts)
        self.tag = tag
        self._failures = dict(failures or {})
        self._lock = threading.Lock()
        self.calls: list[str] = []

    @classmethod
    def from_file(cls, path: str | Path, tag: str = "mock-1") -> MockEngine:
        with open(path, encoding="utf-8") as fh:
            return cls(json.load(fh), tag)

    def recognize(self, wav: bytes, snippet_id: str) -> str:
        with self._lock:
            self.calls.append(snippet_id)
            if self._failures.get(snippet_id, 0) > 0:
                self._failures[snippet_id] -= 1
                raise EngineError(f"scripted failure for {snippet_id}")
        if snippet_id not in self.transcripts:
            raise EngineError(f"no mock transcript for {snippet_id}")
        return self.transcripts[snippet_id]


# -- cache --------------------------------------------------------------------

class TranscriptCache:
    """One small JSON file per (audio content, engine tag)."""

    def __init__(self, directory: str | Path):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)

    @staticmethod
    def key(content_hash: str, engine_tag: str) -> str:
        return hashlib.sha256(f"{content_hash}\0{engine_tag}".encode()).hexdigest()

    def _path(self, key: str) -> Path:
        return self.directory / f"{key}.json"

    def get(self, key: str) -> str | None:
        try:
            with open(self._path(key), encoding="utf-8") as fh:
                return json.load(fh)["text"]
        except FileNotFoundError:
            return None

    def put(self, key: str, text: str, engine_tag: str) -> None:
        fd, tmp = tempfile.mkstemp(dir=self.directory, suffix=".tmp")
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            json.dump({"engine_tag": engine_tag, "text": text}, fh, ensure_ascii=False)
        os.replace(tmp, self._path(key))


# -- adapter ----------------------------------------------------------------------

class AsrAdapter:
    def __init__(self, engine, cache_dir: str | Path | None = None, retries: int = 2,
                 max_in_flight: int = 4):
        self.engine = engine
        self.cache = TranscriptCache(cache_dir) if cache_dir is not None else None
        self.retries = retries
        self.max_in_flight = max(1, max_in_flight)

    @property
    def engine_tag(self) -> str:
        return self.engine.tag

    def transcribe(self, clip: AudioClip, snippet_id: str) -> AsrTranscript:
        tag = self.engine.tag
        key = TranscriptCache.key(clip.content_hash(), tag)
        if self.cache is not None:
            hit = self.cache.get(key)
            if hit is not None:
                return AsrTranscript(snippet_id, hit, tag)
        wav = wav_bytes(resample(clip, ENGINE_RATE))
        last: Exception | None = None
        for attempt in range(self.retries + 1):
            try:
                raw = self.engine.recognize(wav, snippet_id)
                break
            except EngineError as exc:
                last = exc
                log.warning("%s: attempt %d failed: %s", snippet_id, attempt + 1, exc)
        else:
            raise TranscriptionFailed(snippet_id, last)
        text = post_filter(raw)
        if self.cache is not None:
            self.cache.put(key, text, tag)
        return AsrTranscript(snippet_id, text, tag)

    def transcribe_many(self, items: Sequence[tuple[str, AudioClip]]
                        ) -> tuple[list[AsrTranscript], list[str]]:
        """Transcribe (snippet_id, clip) pairs concurrently.

        Returns transcripts in input order, skipping failures, and the ids that
        stayed untranscribed.
        """
        def one(item):
            sid, clip = item
            try:
                return self.transcribe(clip, sid)
            except TranscriptionFailed as exc:
                log.error("%s", exc)
                return None

        with ThreadPoolExecutor(max_workers=self.max_in_flight) as pool:
            results = list(pool.map(one, items))
        done = [r for r in results if r is not None]
        failed = [sid for (sid, _), r in zip(items, results) if r is None]
        return done, failed
