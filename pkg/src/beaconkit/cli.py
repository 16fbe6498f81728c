"""Command line front end.

Subcommands mirror the pipeline stages: ``crawl`` and ``ingest`` build a
corpus directory, ``report`` prints its descriptive summary, ``featurize``
turns it into the feature CSV, and ``experiment`` runs the balanced
resampling classification.  Exit codes: 0 success (even with per-item fetch
failures), 1 usage or configuration problems, 2 corrupt input data.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
from pathlib import Path
from typing import Optional

from . import classifier, crawler, features, report
from .corpus import CorruptCorpus, Corpus
from .filter_engine import load_filter_file

OUT_DIR_ENV = "BEACONKIT_OUT"


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # noqa: A003
        raise _UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="beaconkit", description=__doc__)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--mode", choices=["naive", "psl"], default="naive",
                        help="second-level-domain extraction rule")
    parser.add_argument("--filter-list", metavar="FILE",
                        help="filter rules for the blocked-URL feature")
    parser.add_argument("--depth", type=int, default=None)
    parser.add_argument("--timeout", type=float, default=None)
    parser.add_argument("--passes", type=int, default=None)
    sub = parser.add_subparsers(dest="command", required=True)

    p_crawl = sub.add_parser("crawl", help="fetch sites and build a corpus")
    p_crawl.add_argument("--config", metavar="JSON")
    p_crawl.add_argument("--domains", metavar="CSV",
                         help="domain list: one `domain,category` row per site")
    p_crawl.add_argument("--out", metavar="DIR",
                         default=os.environ.get(OUT_DIR_ENV))

    p_ingest = sub.add_parser("ingest", help="build a corpus from DOM snapshots")
    p_ingest.add_argument("snapshots", metavar="DIR")
    p_ingest.add_argument("--config", metavar="JSON")
    p_ingest.add_argument("--out", metavar="DIR",
                          default=os.environ.get(OUT_DIR_ENV))

    p_report = sub.add_parser("report", help="summarize a corpus directory")
    p_report.add_argument("corpus", metavar="DIR")
    p_report.add_argument("--csv", metavar="FILE", help="also write CSV rows")

    p_feat = sub.add_parser("featurize", help="compute the feature matrix")
    p_feat.add_argument("corpus", metavar="DIR")
    p_feat.add_argument("--out", metavar="CSV", required=True)
    p_feat.add_argument("--digit-count", choices=["digits", "tokens"],
                        default="digits")

    p_exp = sub.add_parser("experiment", help="balanced resampling CV run")
    p_exp.add_argument("matrix", metavar="CSV")
    p_exp.add_argument("--resamples", type=int, default=250)
    p_exp.add_argument("--k", type=int, default=10)
    p_exp.add_argument("--panel", choices=["all", "blck_dtop", "both"],
                       default="all")
    p_exp.add_argument("--aggregate", choices=["pooled", "per_resample"],
                       default="pooled")
    p_exp.add_argument("--out", metavar="JSON")
    return parser


def _load_domains_csv(path: str) -> list[tuple[str, Optional[str]]]:
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.reader(fh):
            if not row or row[0].startswith("#"):
                continue
            domain = row[0].strip()
            if domain.lower() == "domain":  # optional header row
                continue
            category = row[1].strip() if len(row) > 1 and row[1].strip() else None
            rows.append((domain, category))
    return rows


def _resolver_from_map(mapping: dict[str, str]) -> crawler.Resolver:
    exact = {}
    suffixes = []
    for pattern, target in mapping.items():
        host, _, port = target.partition(":")
        address = (host, int(port) if port else 80)
        if pattern.startswith("*."):
            suffixes.append((pattern[1:], address))  # keep the leading dot
        else:
            exact[pattern.lower()] = address

    def resolve(host: str) -> Optional[tuple[str, int]]:
        if host in exact:
            return exact[host]
        for suffix, address in suffixes:
            if host.endswith(suffix) or host == suffix[1:]:
                return address
        return None

    return resolve


def _crawl_config(args: argparse.Namespace) -> crawler.CrawlConfig:
    settings: dict = {}
    if args.config:
        try:
            settings = json.loads(Path(args.config).read_text("utf-8"))
        except OSError as exc:
            raise _UsageError(f"cannot read config: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise _UsageError(f"config is not valid JSON: {exc}") from exc
    domains: list[tuple[str, Optional[str]]] = []
    try:
        if args.command == "crawl" and args.domains:
            domains = _load_domains_csv(args.domains)
        elif "domains_csv" in settings:
            domains = _load_domains_csv(settings["domains_csv"])
    except OSError as exc:
        raise _UsageError(f"cannot read domain list: {exc}") from exc
    if not domains and "domains" in settings:
        for entry in settings["domains"]:
            if isinstance(entry, str):
                domains.append((entry, None))
            elif isinstance(entry, dict):
                domains.append((entry["domain"], entry.get("category")))
            else:
                domains.append((entry[0], entry[1] if len(entry) > 1 else None))

    kwargs: dict = {"domain_list": tuple(domains), "domain_mode": args.mode}
    for key in ("timeout_seconds", "passes", "depth", "per_host_parallelism",
                "user_agent", "scheme", "politeness_delay", "respect_robots",
                "site_parallelism", "max_pages_per_site", "max_redirects"):
        if key in settings:
            kwargs[key] = settings[key]
    if args.timeout is not None:
        kwargs["timeout_seconds"] = args.timeout
    if args.passes is not None:
        kwargs["passes"] = args.passes
    if args.depth is not None:
        kwargs["depth"] = args.depth
    if "resolve" in settings:
        kwargs["resolve"] = _resolver_from_map(settings["resolve"])
    try:
        return crawler.CrawlConfig(**kwargs)
    except (ValueError, TypeError) as exc:
        raise _UsageError(f"bad crawl configuration: {exc}") from exc


def _write_corpus(corpus: Corpus, blobs: dict[bytes, bytes], out: Optional[str]) -> Path:
    if not out:
        raise _UsageError(f"no output directory (use --out or ${OUT_DIR_ENV})")
    out_dir = Path(out)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        probe = out_dir / ".write-probe"
        probe.write_bytes(b"")
        probe.unlink()
    except OSError as exc:
        raise _UsageError(f"output directory not writable: {exc}") from exc
    corpus.save(out_dir, blobs)
    return out_dir


def _corpus_digest(corpus_dir: Path) -> str:
    digest = hashlib.sha256()
    for name in ("pages.jsonl", "images.jsonl"):
        digest.update((corpus_dir / name).read_bytes())
    return digest.hexdigest()


def _cmd_crawl(args: argparse.Namespace) -> int:
    config = _crawl_config(args)
    corpus, blobs = crawler.run(config)
    out_dir = _write_corpus(corpus, blobs, args.out)
    summary = report.summarize(corpus, mode=args.mode)
    print(report.render_text(summary))
    print(f"corpus written to {out_dir}")
    return 0


def _cmd_ingest(args: argparse.Namespace) -> int:
    config = _crawl_config(args)
    try:
        corpus, blobs = crawler.ingest_snapshots(args.snapshots, config)
    except (OSError, json.JSONDecodeError) as exc:
        raise _UsageError(f"cannot read snapshots: {exc}") from exc
    out_dir = _write_corpus(corpus, blobs, args.out)
    summary = report.summarize(corpus, mode=args.mode)
    print(report.render_text(summary))
    print(f"corpus written to {out_dir}")
    return 0


def _cmd_report(args: argparse.Namespace) -> int:
    corpus = Corpus.load(args.corpus)
    summary = report.summarize(corpus, mode=args.mode)
    print(report.render_text(summary))
    if args.csv:
        Path(args.csv).write_text(report.render_csv(summary), encoding="utf-8")
    return 0


def _cmd_featurize(args: argparse.Namespace) -> int:
    if not args.filter_list:
        raise _UsageError("featurize needs --filter-list")
    try:
        filters = load_filter_file(args.filter_list)
    except OSError as exc:
        raise _UsageError(f"cannot read filter list: {exc}") from exc
    corpus = Corpus.load(args.corpus)
    vectors, top = features.featurize_corpus(
        corpus, filters, mode=args.mode, digit_count=args.digit_count)
    manifest = {
        "filter_digest": filters.source_digest,
        "corpus_digest": _corpus_digest(Path(args.corpus)),
        "domain_mode": args.mode,
        "digit_count": args.digit_count,
        "top_domains": list(top.domains),
        "top_domain_counts": list(top.counts),
        "rows": len(vectors),
    }
    features.write_feature_csv(vectors, args.out, manifest=manifest)
    print(f"{len(vectors)} feature rows -> {args.out}")
    print(f"top referenced domains: {', '.join(top.domains) or '(none)'}")
    return 0


def _cmd_experiment(args: argparse.Namespace) -> int:
    try:
        X, y, names = features.read_feature_csv(args.matrix)
    except OSError as exc:
        raise _UsageError(f"cannot read matrix: {exc}") from exc
    except ValueError as exc:
        print(f"corrupt feature matrix: {exc}", file=sys.stderr)
        return 2
    dataset = classifier.Dataset(X, y, tuple(names))

    extras = {}
    manifest_path = Path(args.matrix + ".manifest.json")
    if manifest_path.exists():
        sidecar = json.loads(manifest_path.read_text("utf-8"))
        extras = {k: sidecar[k] for k in ("filter_digest", "corpus_digest")
                  if k in sidecar}

    panels = {"all": [None], "blck_dtop": [list(_BLCK_DTOP)],
              "both": [None, list(_BLCK_DTOP)]}[args.panel]
    reports = {}
    for subset in panels:
        name = "all_features" if subset is None else "blck_dtop_only"
        try:
            result = classifier.experiment(
                dataset, resamples=args.resamples, k=args.k, seed=args.seed,
                feature_subset=subset, aggregate=args.aggregate, extras=extras)
        except classifier.SingleClass as exc:
            print(f"cannot run experiment: {exc}", file=sys.stderr)
            return 1
        reports[name] = result
        title = ("All features" if subset is None else "BLCK and DTOP only")
        print(result.to_text(title=title))
    if args.out:
        payload = {name: json.loads(r.to_json()) for name, r in reports.items()}
        Path(args.out).write_text(
            json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8")
        print(f"report written to {args.out}")
    return 0


_BLCK_DTOP = ("blck", "dtop_1", "dtop_2", "dtop_3", "dtop_4", "dtop_5")

_COMMANDS = {
    "crawl": _cmd_crawl,
    "ingest": _cmd_ingest,
    "report": _cmd_report,
    "featurize": _cmd_featurize,
    "experiment": _cmd_experiment,
}


def main(argv: Optional[list[str]] = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    try:
        return _COMMANDS[args.command](args)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except CorruptCorpus as exc:
        print(f"corrupt corpus: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
