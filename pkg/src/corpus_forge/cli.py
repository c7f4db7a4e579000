"""Command-line entry point: ``corpus-forge run|report|normalize-text|ingest|make-fixture``."""

from __future__ import annotations

import argparse
import json
import logging
import os
import shlex
import sys
from pathlib import Path

from .config import ConfigError, load_config
from .ingest import (
    DEFAULT_CATALOG_URL,
    DEFAULT_CONVERTER,
    CatalogError,
    ConverterMissing,
    DownloadError,
    FetchError,
    FixtureClient,
    HttpClient,
    download_book,
    fetch_catalog,
)
from .pipeline import FIXTURE_ENV, NoData, Pipeline, report
from .textnorm import CommentConfig, FootnoteConfig, NormalizationError, normalize_text

EXIT_OK, EXIT_PARTIAL, EXIT_CONFIG = 0, 1, 2

log = logging.getLogger("corpus_forge")


def _cmd_run(args) -> int:
    overrides = {"book_ids": args.book_id or None, "jobs": args.jobs, "workdir": args.workdir,
                 "fixtures": args.fixtures, "clean_only": True if args.clean_only else None}
    for item in args.set or ():
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        overrides[key.strip().replace("-", "_")] = value
    config = load_config(args.config, overrides)
    try:
        result = Pipeline(config).run()
    except (CatalogError, FetchError) as exc:
        print(f"error: catalog unavailable: {exc}", file=sys.stderr)
        return EXIT_PARTIAL
    books = result.summary["books"]
    for book_id, info in books.items():
        if info["status"] == "ok":
            flag = "  MISALIGNED" if info["misaligned"] else ""
            print(f"{book_id}: {info['accepted_full']} full, {info['accepted_clean']} clean, "
                  f"{info['segments']} segments{flag}")
        else:
            print(f"{book_id}: FAILED {info['error']}")
    return result.exit_code


def _cmd_report(args) -> int:
    try:
        tables = report(args.workdir)
    except NoData as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_PARTIAL
    for subset, rows in tables.items():
        print(f"[{subset}]")
        for speaker, ds in rows.items():
            print(f"{speaker}\t{ds.count} snippets\t{ds.hours:.3f} h\tMVA {ds.mva_mean:.1f}\t"
                  f"SPA {ds.spa_mean:.1f} %\tUW1 {ds.uw1}\tUW5 {ds.uw5}")
    print(f"written to {Path(args.workdir) / 'report'}")
    return EXIT_OK


def _cmd_normalize(args) -> int:
    raw = sys.stdin.read() if args.file == "-" else Path(args.file).read_text(encoding="utf-8")
    try:
        result = normalize_text(raw, args.overrides,
                                footnotes=FootnoteConfig(args.footnotes, spoken_marker=args.footnote_marker),
                                comments=CommentConfig(args.comments, args.comment_markers))
    except NormalizationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARTIAL
    sys.stdout.write(result.text + "\n")
    if args.audit:
        print(json.dumps(dict(sorted(result.applied_rules.items())), ensure_ascii=False), file=sys.stderr)
    return EXIT_OK


def _cmd_ingest(args) -> int:
    fixtures = args.fixtures or os.environ.get(FIXTURE_ENV)
    client = FixtureClient(fixtures) if fixtures else HttpClient()
    try:
        catalog = fetch_catalog(client, args.language, args.min_rate, args.catalog_url)
    except (CatalogError, FetchError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARTIAL
    wanted = args.book_id or [r.book_id for r in catalog]
    by_id = {r.book_id: r for r in catalog}
    status = EXIT_OK
    for book_id in wanted:
        record = by_id.get(book_id)
        if record is None:
            print(f"{book_id}: not in catalog for {args.language} at >= {args.min_rate} Hz", file=sys.stderr)
            status = EXIT_PARTIAL
            continue
        try:
            bundle = download_book(record, Path(args.workdir) / "acquire", client,
                                   shlex.split(args.converter), args.jobs)
        except DownloadError as exc:
            print(f"{book_id}: {len(exc.failed)} downloads failed", file=sys.stderr)
            status = EXIT_PARTIAL
            continue
        except ConverterMissing as exc:
            print(f"{book_id}: {exc}", file=sys.stderr)
            status = EXIT_PARTIAL
            continue
        print(f"{book_id}: {len(bundle.audio_paths)} chapters, {len(bundle.text_raw)} characters of text")
    return status


def _cmd_fixture(args) -> int:
    from .fixtures import build_book

    info = build_book(args.directory, args.book_id, args.reader, n_chapters=args.chapters,
                      seed=args.seed, shuffle_text=args.shuffle_text)
    print(f"{info['book_id']}: {info['sentences']} sentences in {args.directory}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="corpus-forge", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true", help="log stage progress")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run the full pipeline")
    p.add_argument("--config", help="flat key = value config file")
    p.add_argument("--book-id", action="append", help="restrict to this book (repeatable)")
    p.add_argument("--clean-only", action="store_true", help="emit only the clean subset")
    p.add_argument("--jobs", type=int, help="books processed in parallel")
    p.add_argument("--workdir")
    p.add_argument("--fixtures", help=f"fixture directory (also ${FIXTURE_ENV})")
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override any config key")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("report", help="per-speaker statistics and histograms")
    p.add_argument("--workdir", required=True)
    p.set_defaults(func=_cmd_report)

    p = sub.add_parser("normalize-text", help="normalise a German text file to stdout")
    p.add_argument("file", help="input file, or - for stdin")
    p.add_argument("--overrides", help="override rule file (tsv)")
    p.add_argument("--footnotes", choices=("omit", "end_of_page", "inline"), default="omit")
    p.add_argument("--footnote-marker")
    p.add_argument("--comments", choices=("read", "omit"), default="read")
    p.add_argument("--comment-markers", action="store_true")
    p.add_argument("--audit", action="store_true", help="print rule counts to stderr")
    p.set_defaults(func=_cmd_normalize)

    p = sub.add_parser("ingest", help="download audio and text for catalog books")
    p.add_argument("--language", default="de")
    p.add_argument("--min-rate", type=int, default=44100)
    p.add_argument("--book-id", action="append")
    p.add_argument("--workdir", required=True)
    p.add_argument("--fixtures")
    p.add_argument("--catalog-url", default=DEFAULT_CATALOG_URL)
    p.add_argument("--converter", default=" ".join(DEFAULT_CONVERTER))
    p.add_argument("--jobs", type=int, default=4)
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("make-fixture", help="write a synthetic fixture book")
    p.add_argument("directory")
    p.add_argument("--book-id", default="desk01")
    p.add_argument("--reader", default="Anna Beispiel")
    p.add_argument("--chapters", type=int, default=2)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--shuffle-text", action="store_true")
    p.set_defaults(func=_cmd_fixture)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
