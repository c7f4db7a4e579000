"""Stage orchestration: acquire, split, loudness, transcribe, text, align, stats, emit.

Each stage writes its outputs to ``workdir/<stage>/<book_id>/`` together with
a ``stamp.json`` holding a hash of the stage inputs and parameters. A stage
whose stamp matches is skipped, so re-runs only redo what changed.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import logging
import os
import re
import shlex
import shutil
import threading
import wave
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from . import __version__
from .aligner import align_book, gate_matches, write_alignment_report
from .asr import AsrAdapter, HttpEngine, MockEngine, SubprocessEngine
from .audio import AudioClip, read_wav, resample, write_wav
from .config import ConfigError, PipelineConfig
from .ingest import FixtureClient, HttpClient, download_book, fetch_catalog
from .loudness import LoudnessError, apply_fade, normalize_loudness
from .segmentation import NoSplitFound, adaptive_split
from .stats import (
    BIN_WIDTHS,
    SnippetStats,
    clean_filter,
    dataset_stats,
    histogram,
    snippet_stats,
    write_histogram,
)
from .textnorm import CommentConfig, FootnoteConfig, NormalizationError, Normalizer, load_rules

log = logging.getLogger(__name__)

CORPUS_RATE = 44100
FIXTURE_ENV = "CORPUS_FORGE_FIXTURES"
SUBSETS = ("full", "clean")


@dataclass(frozen=True)
class CorpusEntry:
    snippet_id: str
    speaker: str
    wav_path: str  # relative to the corpus root
    transcript: str
    duration_s: float
    subset: str


@dataclass
class RunResult:
    exit_code: int
    summary: dict
    events: list[tuple[str, str, str]]


def snippet_id(book_id: str, chapter: int, ordinal: int) -> str:
    return f"{book_id}_{chapter:02d}_f{ordinal:06d}"


def speaker_dir(name: str) -> str:
    return re.sub(r"[^\w-]+", "_", name).strip("_") or "unknown"


def _hash(*parts) -> str:
    return hashlib.sha256(json.dumps(parts, sort_keys=True, default=str).encode()).hexdigest()


def _file_hash(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _write_jsonl(path: Path, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for row in rows:
            fh.write(json.dumps(row, ensure_ascii=False, sort_keys=True) + "\n")


def _read_jsonl(path: Path) -> list[dict]:
    if not path.is_file():
        return []
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


class BookFailed(Exception):
    pass


class Pipeline:
    def __init__(self, config: PipelineConfig, client=None, engine=None):
        self.config = config
        self.workdir = Path(config.workdir)
        fixtures = config.fixtures or os.environ.get(FIXTURE_ENV, "")
        self.fixtures = Path(fixtures) if fixtures else None
        if client is None:
            client = FixtureClient(self.fixtures) if self.fixtures else HttpClient()
        self.client = client
        self._engine = engine
        self._lock = threading.Lock()
        self.events: list[tuple[str, str, str]] = []

    # -- plumbing -------------------------------------------------------------

    def engine(self):
        if self._engine is not None:
            return self._engine
        cfg = self.config
        if self.fixtures:
            self._engine = MockEngine.from_file(self.fixtures / "transcripts.json", tag="fixture-mock")
        elif cfg.engine_command:
            self._engine = SubprocessEngine(cfg.engine_command, cfg.engine_tag or f"cmd:{cfg.engine_command}")
        elif cfg.engine_url:
            self._engine = HttpEngine(cfg.engine_url, cfg.engine_tag or f"url:{cfg.engine_url}")
        else:
            raise ConfigError("no speech engine configured (engine_command or engine_url)")
        return self._engine

    def _event(self, stage: str, book_id: str, what: str) -> None:
        with self._lock:
            self.events.append((stage, book_id, what))
            log.info("%-10s %-12s %s", stage, book_id, what)

    def _stage(self, name: str, book_id: str, key: str, build) -> Path:
        out = self.workdir / name / book_id
        stamp = out / "stamp.json"
        if stamp.is_file() and json.loads(stamp.read_text(encoding="utf-8")).get("key") == key:
            self._event(name, book_id, "cache hit")
            return out
        if out.exists():
            shutil.rmtree(out)
        out.mkdir(parents=True)
        build(out)
        stamp.write_text(json.dumps({"key": key}), encoding="utf-8")
        self._event(name, book_id, "ran")
        return out

    def _params(self, *names: str) -> dict:
        return {n: getattr(self.config, n) for n in names}

    # -- stages ---------------------------------------------------------------

    def _acquire(self, record) -> tuple[str, str, list[Path], str]:
        root = self.workdir / "acquire"
        manifest = root / record.book_id / "manifest.json"
        before = manifest.read_bytes() if manifest.is_file() else None
        bundle = download_book(record, root, self.client, shlex.split(self.config.converter),
                               self.config.download_jobs)
        after = manifest.read_bytes()
        self._event("acquire", record.book_id, "cache hit" if before == after else "ran")
        entries = json.loads(after)
        audio = {k: v["sha256"] for k, v in entries.items() if k != "text.txt"}
        audio_key = _hash("acquire-audio", audio, record.reader_name)
        text_key = _hash("acquire-text", entries.get("text.txt", {}).get("sha256"))
        return audio_key, text_key, bundle.audio_paths, bundle.text_raw

    def _split(self, book_id: str, chapters: list[Path], upstream: str) -> tuple[str, Path]:
        cfg = self.config
        key = _hash("split", upstream, __version__, self._params(
            "min_len_s", "max_len_s", "min_silence_s", "split_start_db", "split_step_db", "split_ceiling_db"))

        def build(out: Path) -> None:
            rows, rejected = [], []
            for path in chapters:
                chapter = int(re.search(r"(\d+)", path.stem).group(1))
                source_id = f"{book_id}_{chapter:02d}"
                clip = read_wav(path, source_id)
                if clip.sample_rate != CORPUS_RATE:
                    clip = resample(clip, CORPUS_RATE)
                try:
                    segments = adaptive_split(clip, cfg.min_len_s, cfg.max_len_s, cfg.min_silence_s,
                                              cfg.split_start_db, cfg.split_step_db, cfg.split_ceiling_db)
                except (NoSplitFound, ValueError) as exc:
                    rejected.append({"chapter": chapter, "reason": "no_split", "detail": str(exc)})
                    continue
                for seg in segments:
                    name = f"{source_id}_{seg.ordinal:05d}.wav"
                    write_wav(clip.slice(seg.start_sample, seg.end_sample), out / name)
                    rows.append({"snippet_id": snippet_id(book_id, chapter, seg.ordinal), "file": name,
                                 "chapter": chapter, "ordinal": seg.ordinal, "start": seg.start_sample,
                                 "end": seg.end_sample, "flag": seg.flag, "threshold_db": seg.threshold_db})
            _write_jsonl(out / "segments.jsonl", rows)
            _write_jsonl(out / "rejections.jsonl", rejected)

        return key, self._stage("split", book_id, key, build)

    def _loudness(self, book_id: str, split_dir: Path, upstream: str) -> tuple[str, Path]:
        cfg = self.config
        key = _hash("loudness", upstream, __version__, self._params("target_lufs", "fade_s"))

        def build(out: Path) -> None:
            rows, rejected = [], []
            for seg in _read_jsonl(split_dir / "segments.jsonl"):
                clip = read_wav(split_dir / seg["file"], seg["snippet_id"])
                try:
                    normed, report = normalize_loudness(clip, cfg.target_lufs)
                    faded = apply_fade(normed, cfg.fade_s)
                except (LoudnessError, ValueError) as exc:
                    rejected.append({"snippet_id": seg["snippet_id"], "reason": "loudness", "detail": str(exc)})
                    continue
                write_wav(faded, out / f"{seg['snippet_id']}.wav")
                rows.append({**seg, "file": f"{seg['snippet_id']}.wav", **dataclasses.asdict(report)})
            _write_jsonl(out / "snippets.jsonl", rows)
            _write_jsonl(out / "rejections.jsonl", rejected)

        return key, self._stage("loudness", book_id, key, build)

    def _transcribe(self, book_id: str, loud_dir: Path, upstream: str) -> tuple[str, Path]:
        engine = self.engine()
        key = _hash("transcribe", upstream, engine.tag)

        def build(out: Path) -> None:
            adapter = AsrAdapter(engine, self.workdir / "transcribe" / "_cache",
                                 self.config.asr_retries, self.config.asr_jobs)
            rows = _read_jsonl(loud_dir / "snippets.jsonl")
            items = [(r["snippet_id"], read_wav(loud_dir / r["file"], r["snippet_id"])) for r in rows]
            done, failed = adapter.transcribe_many(items)
            _write_jsonl(out / "transcripts.jsonl", [dataclasses.asdict(t) for t in done])
            _write_jsonl(out / "untranscribed.jsonl", [{"snippet_id": s, "reason": "untranscribed"} for s in failed])

        return key, self._stage("transcribe", book_id, key, build)

    def _textnorm(self, book_id: str, text_raw: str, upstream: str) -> tuple[str, Path]:
        cfg = self.config
        override_path = Path(cfg.overrides_dir) / f"{book_id}.tsv" if cfg.overrides_dir else None
        if override_path is not None and not override_path.is_file():
            override_path = None
        override_hash = _file_hash(override_path) if override_path else None
        key = _hash("textnorm", upstream, __version__, override_hash, self._params(
            "footnote_mode", "footnote_marker", "comment_mode", "comment_markers"))

        def build(out: Path) -> None:
            normalizer = Normalizer(
                load_rules(override_path) if override_path else [],
                footnotes=FootnoteConfig(cfg.footnote_mode, spoken_marker=cfg.footnote_marker or None),
                comments=CommentConfig(cfg.comment_mode, cfg.comment_markers))
            try:
                result = normalizer(text_raw)
            except NormalizationError as exc:
                raise BookFailed(f"text normalisation: {exc}") from exc
            (out / "text.txt").write_text(result.text, encoding="utf-8", newline="\n")
            (out / "audit.json").write_text(json.dumps(dict(sorted(result.applied_rules.items()))),
                                            encoding="utf-8")

        return key, self._stage("textnorm", book_id, key, build)

    def _align(self, book_id: str, tx_dir: Path, text_dir: Path, upstream: str) -> tuple[str, Path]:
        cfg = self.config
        key = _hash("align", upstream, __version__, self._params("gate", "window_factor", "window_slack"))

        def build(out: Path) -> None:
            source = (text_dir / "text.txt").read_text(encoding="utf-8")
            transcripts = [(r["snippet_id"], r["text"]) for r in _read_jsonl(tx_dir / "transcripts.jsonl")]
            matches = align_book(transcripts, source, cfg.window_factor, cfg.window_slack)
            gated = gate_matches(matches, cfg.gate, source)
            write_alignment_report(out / "alignment.jsonl", matches, gated)

        return key, self._stage("align", book_id, key, build)

    def _stats(self, book_id: str, align_dir: Path, loud_dir: Path, upstream: str) -> tuple[str, Path]:
        cfg = self.config
        key = _hash("stats", upstream, __version__, self._params(
            "silence_threshold_db", "clean_min_volume_db", "clean_silence_low", "clean_silence_high",
            "min_len_s", "max_len_s"))

        def build(out: Path) -> None:
            rows = []
            for rec in read_alignment(align_dir):
                if not rec["accepted"]:
                    continue
                sid = rec["snippet_id"]
                clip = read_wav(loud_dir / f"{sid}.wav", sid)
                st = snippet_stats(clip, sid, cfg.silence_threshold_db)
                in_bounds = cfg.min_len_s <= st.duration_s <= cfg.max_len_s
                clean = clean_filter(st, cfg.clean_min_volume_db, cfg.clean_silence_low, cfg.clean_silence_high)
                rows.append({**dataclasses.asdict(st), "transcript": rec["transcript"].strip(),
                             "duration_ok": in_bounds, "clean": clean})
            _write_jsonl(out / "stats.jsonl", rows)

        return key, self._stage("stats", book_id, key, build)

    # -- per book ---------------------------------------------------------------

    def process_book(self, record) -> None:
        book_id = record.book_id
        audio_key, text_key, chapters, text_raw = self._acquire(record)
        split_key, split_dir = self._split(book_id, chapters, audio_key)
        loud_key, loud_dir = self._loudness(book_id, split_dir, split_key)
        tx_key, tx_dir = self._transcribe(book_id, loud_dir, loud_key)
        text_key, text_dir = self._textnorm(book_id, text_raw, text_key)
        align_key, align_dir = self._align(book_id, tx_dir, text_dir, _hash(tx_key, text_key))
        self._stats(book_id, align_dir, loud_dir, _hash(align_key, loud_key))
        meta = self.workdir / "stats" / book_id / "book.json"
        meta.write_text(json.dumps({"book_id": book_id, "speaker": record.reader_name,
                                    "title": record.title}, ensure_ascii=False, sort_keys=True),
                        encoding="utf-8")

    def book_summary(self, book_id: str) -> dict:
        w = self.workdir
        segments = _read_jsonl(w / "split" / book_id / "segments.jsonl")
        alignment = read_alignment(w / "align" / book_id)
        stats_rows = _read_jsonl(w / "stats" / book_id / "stats.jsonl")
        gate = Counter(r["reject_reason"] for r in alignment if not r["accepted"])
        full = [r for r in stats_rows if r["duration_ok"]]
        clean = [r for r in full if r["clean"]]
        n_seg = len(segments)
        summary = {
            "segments": n_seg,
            "no_split_chapters": len(_read_jsonl(w / "split" / book_id / "rejections.jsonl")),
            "loudness_rejected": len(_read_jsonl(w / "loudness" / book_id / "rejections.jsonl")),
            "untranscribed": len(_read_jsonl(w / "transcribe" / book_id / "untranscribed.jsonl")),
            "gate_rejected": dict(sorted(gate.items())),
            "duration_rejected": len(stats_rows) - len(full),
            "accepted_full": len(full),
            "clean_rejected": len(full) - len(clean),
            "accepted_clean": len(clean),
        }
        rate = 1.0 - len(full) / n_seg if n_seg else 1.0
        summary["rejection_rate"] = round(rate, 6)
        summary["misaligned"] = bool(alignment) and (sum(gate.values()) / len(alignment)) >= self.config.misalignment_rate
        return summary

    # -- emit -------------------------------------------------------------------

    def emit(self) -> list[CorpusEntry]:
        """Rebuild ``workdir/corpus`` from every book with finished stats."""
        corpus = self.workdir / "corpus"
        if corpus.exists():
            shutil.rmtree(corpus)
        corpus.mkdir(parents=True)
        subsets = ("clean",) if self.config.clean_only else SUBSETS
        entries: list[CorpusEntry] = []
        records: list[dict] = []
        stats_root = self.workdir / "stats"
        book_dirs = sorted(p for p in stats_root.iterdir() if (p / "book.json").is_file()) if stats_root.is_dir() else []
        for book_dir in book_dirs:
            book = json.loads((book_dir / "book.json").read_text(encoding="utf-8"))
            speaker = speaker_dir(book["speaker"])
            for row in _read_jsonl(book_dir / "stats.jsonl"):
                if not row["duration_ok"]:
                    continue
                for subset in subsets:
                    if subset == "clean" and not row["clean"]:
                        continue
                    sid = row["snippet_id"]
                    rel = f"{subset}/{speaker}/wavs/{sid}.wav"
                    target = corpus / rel
                    target.parent.mkdir(parents=True, exist_ok=True)
                    shutil.copyfile(self.workdir / "loudness" / book["book_id"] / f"{sid}.wav", target)
                    entry = CorpusEntry(sid, book["speaker"], rel, row["transcript"], row["duration_s"], subset)
                    entries.append(entry)
                    records.append({**dataclasses.asdict(entry), "min_volume_db": row["min_volume_db"],
                                    "silence_proportion": row["silence_proportion"],
                                    "avg_frequency_hz": row["avg_frequency_hz"]})
        by_dir: dict[Path, list[CorpusEntry]] = {}
        for e in entries:
            by_dir.setdefault(corpus / e.subset / speaker_dir(e.speaker), []).append(e)
        for directory, group in sorted(by_dir.items()):
            lines = "".join(f"{e.snippet_id}|{e.transcript}\n" for e in sorted(group, key=lambda e: e.snippet_id))
            (directory / "metadata.csv").write_bytes(lines.encode("utf-8"))
        records.sort(key=lambda r: (r["subset"], r["snippet_id"]))
        _write_jsonl(corpus / "entries.jsonl", records)
        return entries

    # -- run ----------------------------------------------------------------------

    def run(self, book_ids: list[str] | None = None) -> RunResult:
        book_ids = list(book_ids if book_ids is not None else self.config.book_ids)
        self.workdir.mkdir(parents=True, exist_ok=True)
        catalog = fetch_catalog(self.client, self.config.language, self.config.min_sample_rate,
                                self.config.catalog_url)
        by_id = {r.book_id: r for r in catalog}
        if not book_ids:
            book_ids = sorted(by_id)
        results: dict[str, dict] = {}

        def one(book_id: str) -> tuple[str, dict]:
            record = by_id.get(book_id)
            if record is None:
                return book_id, {"status": "failed", "error": "not in the filtered catalog"}
            try:
                self.process_book(record)
            except ConfigError:
                raise
            except Exception as exc:  # isolate per-book failures
                log.error("%s failed: %s", book_id, exc)
                return book_id, {"status": "failed", "error": f"{type(exc).__name__}: {exc}"}
            return book_id, {"status": "ok", "speaker": record.reader_name, **self.book_summary(book_id)}

        with ThreadPoolExecutor(max_workers=self.config.jobs) as pool:
            for book_id, result in pool.map(one, book_ids):
                results[book_id] = result
        self.emit()
        failed = sorted(b for b, r in results.items() if r["status"] != "ok")
        summary = {"books": dict(sorted(results.items())), "failed": failed,
                   "flagged": sorted(b for b, r in results.items() if r.get("misaligned"))}
        (self.workdir / "run_summary.json").write_text(
            json.dumps(summary, ensure_ascii=False, indent=1, sort_keys=True) + "\n", encoding="utf-8")
        return RunResult(1 if failed else 0, summary, list(self.events))


def read_alignment(align_dir: Path) -> list[dict]:
    return _read_jsonl(Path(align_dir) / "alignment.jsonl")


# -- report ------------------------------------------------------------------------

class NoData(Exception):
    pass


HIST_RANGES = {
    "duration_s": (0.0, 45.0),
    "min_volume_db": (-100.0, 0.0),
    "silence_percent": (0.0, 102.5),
    "avg_frequency_hz": (0.0, 5000.0),
}

REPORT_COLUMNS = ("speaker", "speakers", "hours", "count", "mva_mean", "mva_std",
                  "spa_mean", "spa_std", "uw1", "uw5")


def report(workdir: str | Path) -> dict[str, dict]:
    """Per-speaker and total statistics for each subset, written under ``workdir/report``."""
    workdir = Path(workdir)
    rows = _read_jsonl(workdir / "corpus" / "entries.jsonl")
    if not rows:
        raise NoData(f"no data: {workdir / 'corpus'} holds no corpus entries")
    out_dir = workdir / "report"
    if out_dir.exists():
        shutil.rmtree(out_dir)
    out_dir.mkdir(parents=True)
    result: dict[str, dict] = {}
    for subset in SUBSETS:
        subset_rows = [r for r in rows if r["subset"] == subset]
        if not subset_rows:
            continue
        entries = [(SnippetStats(r["snippet_id"], r["duration_s"], r["min_volume_db"],
                                 r["silence_proportion"], r["avg_frequency_hz"]), r["transcript"], r["speaker"])
                   for r in subset_rows]
        table = dataset_stats(entries)
        result[subset] = table
        lines = ["\t".join(REPORT_COLUMNS)]
        for speaker, ds in table.items():
            values = dataclasses.asdict(ds)
            lines.append("\t".join([speaker] + [repr(values[c]) for c in REPORT_COLUMNS[1:]]))
        (out_dir / f"subset_{subset}.tsv").write_text("\n".join(lines) + "\n", encoding="utf-8")
        metrics = {
            "duration_s": [r["duration_s"] for r in subset_rows],
            "min_volume_db": [r["min_volume_db"] for r in subset_rows],
            "silence_percent": [100.0 * r["silence_proportion"] for r in subset_rows],
            "avg_frequency_hz": [r["avg_frequency_hz"] for r in subset_rows],
        }
        for metric, values in metrics.items():
            lo, hi = HIST_RANGES[metric]
            write_histogram(out_dir / f"hist_{subset}_{metric}.tsv", histogram(values, BIN_WIDTHS[metric], lo, hi))
    return result


def validate_corpus(workdir: str | Path, min_len_s: float = 5.0, max_len_s: float = 40.0) -> list[str]:
    """Re-check every emitted entry; returns a list of problems (empty when sound)."""
    corpus = Path(workdir) / "corpus"
    problems = []
    for row in _read_jsonl(corpus / "entries.jsonl"):
        sid, path = row["snippet_id"], corpus / row["wav_path"]
        if not path.is_file():
            problems.append(f"{sid}: missing {row['wav_path']}")
            continue
        with wave.open(str(path), "rb") as fh:
            fmt = (fh.getframerate(), fh.getsampwidth(), fh.getnchannels())
            duration = fh.getnframes() / fh.getframerate()
        if fmt != (CORPUS_RATE, 2, 1):
            problems.append(f"{sid}: wav format {fmt}")
        if not min_len_s <= duration <= max_len_s:
            problems.append(f"{sid}: duration {duration:.3f} s out of bounds")
        text = row["transcript"]
        if not text.strip() or re.search(r"\d", text) or text != text.strip():
            problems.append(f"{sid}: transcript {text!r} is not normalised")
    return problems
