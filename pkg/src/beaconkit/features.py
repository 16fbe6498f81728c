"""Per-image feature vectors for beacon classification.

Each collected image becomes one row: four URL-shape features (query
presence, referencing-domain-in-query, digit count, cross-origin), the
filter-list verdict, two tag-attribute flags, four caching-header features,
five MIME dummies and five top-referenced-domain dummies, plus the label
(invisible and cross-domain).  The CSV column order is part of the contract
and is frozen in ``FEATURE_COLUMNS``.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence
from urllib.parse import unquote

import numpy as np

from .corpus import (
    Corpus,
    HttpResponseMeta,
    ImageRecord,
    PageRecord,
    ParsedUrl,
    second_level_domain,
)
from .filter_engine import FilterSet, blck_feature

__all__ = [
    "FeatureVector",
    "TopDomains",
    "CorpusTooSmall",
    "FEATURE_COLUMNS",
    "MIME_DUMMY_CLASSES",
    "qurl",
    "qdom",
    "unum",
    "header_features",
    "top_referenced_domains",
    "featurize",
    "featurize_corpus",
    "write_feature_csv",
    "read_feature_csv",
]

MIME_DUMMY_CLASSES = ("gif", "jpeg", "png", "svg", "other")

FEATURE_COLUMNS = (
    "qurl", "qdom", "unum", "corg", "blck", "aalt", "asty",
    "etag", "cook", "noch", "mage",
    "mime_gif", "mime_jpeg", "mime_png", "mime_svg", "mime_other",
    "dtop_1", "dtop_2", "dtop_3", "dtop_4", "dtop_5",
)

CSV_HEADER = FEATURE_COLUMNS + ("label",)


class CorpusTooSmall(Exception):
    """Fewer distinct referenced domains than the requested top-k."""


@dataclass(frozen=True)
class FeatureVector:
    qurl: bool
    qdom: bool
    unum: int
    corg: bool
    blck: bool
    aalt: bool
    asty: bool
    etag: bool
    cook: bool
    noch: bool
    mage: int
    mime_dummies: tuple[bool, bool, bool, bool, bool]
    dtop_dummies: tuple[bool, bool, bool, bool, bool]
    label: bool

    def __post_init__(self) -> None:
        if sum(self.mime_dummies) != 1:
            raise ValueError("exactly one MIME dummy must be set")
        if self.qdom and not self.qurl:
            raise ValueError("qdom requires qurl")
        if self.mage < -1:
            raise ValueError("mage below the absent sentinel")

    def as_row(self) -> list[int]:
        row = [
            int(self.qurl), int(self.qdom), self.unum, int(self.corg),
            int(self.blck), int(self.aalt), int(self.asty), int(self.etag),
            int(self.cook), int(self.noch), self.mage,
        ]
        row.extend(int(b) for b in self.mime_dummies)
        row.extend(int(b) for b in self.dtop_dummies)
        row.append(int(self.label))
        return row


@dataclass(frozen=True)
class TopDomains:
    """Most-referenced second-level domains, busiest first; ties fall back to
    lexicographic order so the ranking is reproducible."""

    domains: tuple[str, ...]
    counts: tuple[int, ...]


def qurl(url: ParsedUrl) -> bool:
    """Query component present and non-empty (a bare ``?`` does not count)."""
    return bool(url.query)


def qdom(url: ParsedUrl, referencing_slds: Iterable[str],
         decode: bool = True) -> bool:
    """Does any sampled site's domain appear inside the query string?

    The query is percent-decoded once (pass ``decode=False`` for a raw scan)
    and searched case-insensitively for each referencing second-level domain
    as a substring.  Callers choose the domain granularity by what they pass:
    site SLDs by default, full hostnames if they prefer the stricter scan.
    """
    if not qurl(url):
        return False
    query = url.query or ""
    haystack = (unquote(query) if decode else query).lower()
    return any(sld.lower() in haystack for sld in referencing_slds)


def unum(url: ParsedUrl, count: str = "digits") -> int:
    """How many decimal digits the serialized URL carries.

    ``count="digits"`` tallies digit characters; ``count="tokens"`` tallies
    maximal digit runs instead (so ``id=2024`` is 4 versus 1).
    """
    text = str(url)
    if count == "digits":
        return sum(ch.isdigit() for ch in text)
    if count == "tokens":
        in_run = False
        runs = 0
        for ch in text:
            if ch.isdigit():
                if not in_run:
                    runs += 1
                in_run = True
            else:
                in_run = False
        return runs
    raise ValueError(f"unknown digit-count mode {count!r}")


def header_features(meta: HttpResponseMeta) -> tuple[bool, bool, bool, int]:
    """(etag, cook, noch, mage) from an image response.

    noch is true when the Cache-Control directive list names no-cache,
    no-store or must-revalidate.  mage is the max-age value in seconds, -1
    when absent or unparseable (negative values count as unparseable).
    """
    noch = False
    mage = -1
    if meta.cache_control:
        for directive in meta.cache_control.split(","):
            name, _, value = directive.strip().partition("=")
            name = name.strip().lower()
            if name in ("no-cache", "no-store", "must-revalidate"):
                noch = True
            elif name == "max-age":
                try:
                    parsed = int(value.strip().strip('"'))
                except ValueError:
                    continue
                if parsed >= 0:
                    mage = parsed
    return meta.etag_present, meta.set_cookie_present, noch, mage


def top_referenced_domains(corpus: Corpus, k: int = 5,
                           scope: str = "cross_domain_1x1",
                           mode: str = "naive") -> TopDomains:
    """Rank the second-level domains that images are loaded from.

    ``scope="cross_domain_1x1"`` restricts the tally to invisible
    cross-domain images (the beacon population); ``"all_images"`` counts
    everything.  Raises :class:`CorpusTooSmall` when fewer than ``k``
    distinct domains exist in scope.
    """
    ranked = _rank_referenced(corpus, scope, mode)
    if len(ranked) < k:
        raise CorpusTooSmall(f"{len(ranked)} referenced domains in scope, need {k}")
    ranked = ranked[:k]
    return TopDomains(
        domains=tuple(d for d, _ in ranked),
        counts=tuple(c for _, c in ranked),
    )


def _rank_referenced(corpus: Corpus, scope: str, mode: str) -> list[tuple[str, int]]:
    if scope not in ("cross_domain_1x1", "all_images"):
        raise ValueError(f"unknown scope {scope!r}")
    counts: dict[str, int] = {}
    for rec in corpus.images:
        if scope == "cross_domain_1x1" and not (rec.is_invisible and rec.is_cross_domain):
            continue
        sld = second_level_domain(rec.resolved_url.host, mode)
        counts[sld] = counts.get(sld, 0) + 1
    return sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))


def featurize(image: ImageRecord, page: PageRecord, filters: FilterSet,
              top: TopDomains, referencing_slds: Sequence[str],
              mode: str = "naive", digit_count: str = "digits") -> FeatureVector:
    """Assemble the full feature vector for one inspected image."""
    url = image.resolved_url
    etag, cook, noch, mage = header_features(image.response_meta)
    mime = image.mime if image.mime in MIME_DUMMY_CLASSES else "other"
    image_sld = second_level_domain(url.host, mode)
    has_query = qurl(url)
    return FeatureVector(
        qurl=has_query,
        qdom=qdom(url, referencing_slds),
        unum=unum(url, digit_count),
        corg=image.is_cross_origin,
        blck=blck_feature(filters, image, page, mode),
        aalt=image.tag.alt_present,
        asty=image.tag.style_value is not None,
        etag=etag,
        cook=cook,
        noch=noch,
        mage=mage,
        mime_dummies=tuple(mime == cls for cls in MIME_DUMMY_CLASSES),
        dtop_dummies=tuple(
            i < len(top.domains) and image_sld == top.domains[i] for i in range(5)
        ),
        label=image.is_invisible and image.is_cross_domain,
    )


def featurize_corpus(corpus: Corpus, filters: FilterSet, mode: str = "naive",
                     digit_count: str = "digits", k: int = 5,
                     scope: str = "cross_domain_1x1") -> tuple[list[FeatureVector], TopDomains]:
    """Feature vectors for every image in the corpus, in corpus order.

    The top-domain table is computed from this corpus and frozen into the
    returned value so downstream runs can pin it.  When the corpus holds
    fewer than ``k`` domains in scope, the table is shortened rather than
    failing the whole run; unused dummies just stay false.
    """
    referencing = sorted({second_level_domain(d, mode) for d in corpus.site_domains()})
    try:
        top = top_referenced_domains(corpus, k=k, scope=scope, mode=mode)
    except CorpusTooSmall:
        ranked = _rank_referenced(corpus, scope, mode)
        top = TopDomains(tuple(d for d, _ in ranked), tuple(c for _, c in ranked))
    vectors = [
        featurize(rec, corpus.page_for(rec), filters, top, referencing,
                  mode=mode, digit_count=digit_count)
        for rec in corpus.images
    ]
    return vectors, top


def write_feature_csv(vectors: Iterable[FeatureVector], path: str | Path,
                      manifest: Optional[dict] = None) -> None:
    """Write the matrix with the fixed header; booleans become 0/1.

    When ``manifest`` is given it is stored next to the CSV as
    ``<name>.manifest.json`` (filter digest, corpus digest, top domains...).
    """
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for vec in vectors:
            writer.writerow(vec.as_row())
    if manifest is not None:
        manifest_path = path.with_name(path.name + ".manifest.json")
        manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n",
                                 encoding="utf-8")


def read_feature_csv(path: str | Path) -> tuple[np.ndarray, np.ndarray, list[str]]:
    """Load a feature CSV into (X, y, feature_names)."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != CSV_HEADER:
            raise ValueError(f"unexpected feature header in {path}")
        rows = [[float(cell) for cell in row] for row in reader if row]
    matrix = np.asarray(rows, dtype=np.float64)
    if matrix.size == 0:
        raise ValueError(f"no feature rows in {path}")
    return matrix[:, :-1], matrix[:, -1].astype(bool), list(header[:-1])
