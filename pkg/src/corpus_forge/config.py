"""Pipeline configuration: a flat ``key = value`` file with command-line overrides."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

from .ingest import DEFAULT_CATALOG_URL, DEFAULT_CONVERTER


class ConfigError(ValueError):
    pass


@dataclass
class PipelineConfig:
    workdir: Path = Path("work")
    language: str = "de"
    min_sample_rate: int = 44100
    catalog_url: str = DEFAULT_CATALOG_URL
    fixtures: str = ""  # fixture directory; switches ingest and ASR to recorded payloads
    converter: str = " ".join(DEFAULT_CONVERTER)
    download_jobs: int = 4

    min_len_s: float = 5.0
    max_len_s: float = 40.0
    min_silence_s: float = 0.2
    split_start_db: float = -70.0
    split_step_db: float = 2.0
    split_ceiling_db: float = -20.0

    target_lufs: float = -20.0
    fade_s: float = 0.1

    engine_command: str = ""
    engine_url: str = ""
    engine_tag: str = ""
    asr_retries: int = 2
    asr_jobs: int = 4

    overrides_dir: str = ""  # holds <book_id>.tsv override rule files
    footnote_mode: str = "omit"
    footnote_marker: str = ""
    comment_mode: str = "read"
    comment_markers: bool = False

    gate: float = 0.2
    window_factor: float = 3.0
    window_slack: int = 200
    misalignment_rate: float = 0.5  # flag a book when this share of snippets is rejected

    silence_threshold_db: float = -45.0
    clean_min_volume_db: float = -50.0
    clean_silence_low: float = 0.10
    clean_silence_high: float = 0.45

    jobs: int = 1
    clean_only: bool = False
    book_ids: list[str] = field(default_factory=list)

    def validate(self) -> PipelineConfig:
        positive = ["min_sample_rate", "download_jobs", "min_len_s", "max_len_s", "min_silence_s",
                    "split_step_db", "window_factor", "asr_jobs", "jobs"]
        for name in positive:
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)!r}")
        for name in ("fade_s", "asr_retries", "window_slack"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must not be negative")
        if not 0 < self.gate < 1:
            raise ConfigError(f"gate must lie in (0, 1), got {self.gate}")
        if self.min_len_s >= self.max_len_s:
            raise ConfigError("min_len_s must be below max_len_s")
        if self.split_start_db > self.split_ceiling_db:
            raise ConfigError("split_start_db must not exceed split_ceiling_db")
        if not 0 <= self.clean_silence_low < self.clean_silence_high <= 1:
            raise ConfigError("clean silence bounds must satisfy 0 <= low < high <= 1")
        if self.footnote_mode not in ("omit", "end_of_page", "inline"):
            raise ConfigError(f"unknown footnote_mode {self.footnote_mode!r}")
        if self.comment_mode not in ("read", "omit"):
            raise ConfigError(f"unknown comment_mode {self.comment_mode!r}")
        return self


_FIELDS = {f.name: f for f in dataclasses.fields(PipelineConfig)}


def _coerce(name: str, raw: str):
    kind = _FIELDS[name].type
    raw = raw.strip()
    try:
        if kind == "bool":
            low = raw.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        if kind == "Path":
            return Path(raw)
        if kind == "list[str]":
            return [part for part in raw.replace(",", " ").split() if part]
    except ValueError:
        raise ConfigError(f"{name}: cannot read {raw!r} as {kind}") from None
    return raw


def parse_config(text: str, origin: str = "<config>", base: Path | None = None) -> dict:
    values: dict = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"{origin}:{lineno}: expected 'key = value'")
        key, value = (part.strip() for part in stripped.split("=", 1))
        key = key.replace("-", "_")
        if key not in _FIELDS:
            raise ConfigError(f"{origin}:{lineno}: unknown key {key!r}")
        values[key] = _coerce(key, value)
    if base is not None:
        # relative paths in a config file are relative to that file
        for key in ("workdir", "fixtures", "overrides_dir"):
            if key in values and values[key] and not Path(values[key]).is_absolute():
                values[key] = type(values[key])(base / values[key])
    return values


def load_config(path: str | Path | None = None, overrides: dict | None = None) -> PipelineConfig:
    """Defaults, then the file, then ``overrides`` (flags); later sources win."""
    values: dict = {}
    if path is not None:
        path = Path(path)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        values.update(parse_config(text, str(path), path.parent))
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key not in _FIELDS:
            raise ConfigError(f"unknown option {key!r}")
        values[key] = _coerce(key, value) if isinstance(value, str) and _FIELDS[key].type != "str" else value
    return PipelineConfig(**values).validate()
