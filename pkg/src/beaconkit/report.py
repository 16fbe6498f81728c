"""Descriptive summaries of a collected corpus.

Counts (sites sampled, images, cross-domain and 1x1 subsets), the MIME
breakdown, per-category rollups when the domain list carried categories, and
the top referencing / referenced domain tables for the invisible
cross-domain population.  Rendered as fixed-width text for eyeballs and CSV
rows for diffing.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

from .corpus import Corpus, FetchStatus, second_level_domain
from .features import MIME_DUMMY_CLASSES

__all__ = ["SampleSummary", "summarize", "render_text", "render_csv"]


@dataclass
class SampleSummary:
    domains_sampled_ok: int
    images_total: int
    cross_domain_images: int
    one_by_one_images: int
    one_by_one_cross_domain: int
    parse_failures: int
    mime_rows: list[tuple[str, int, int]] = field(default_factory=list)
    category_rows: list[tuple[str, int, int, int]] = field(default_factory=list)
    top_referencing: list[tuple[str, int]] = field(default_factory=list)
    top_referenced: list[tuple[str, int]] = field(default_factory=list)
    skip_tally: dict[str, int] = field(default_factory=dict)

    def check(self) -> None:
        if not (self.one_by_one_cross_domain <= self.one_by_one_images <= self.images_total):
            raise ValueError("1x1 counts out of order")
        if not self.cross_domain_images <= self.images_total:
            raise ValueError("cross-domain count exceeds total")


def summarize(corpus: Corpus, mode: str = "naive", top_n: int = 15) -> SampleSummary:
    """Compute the corpus summary; raises nothing on empty corpora."""
    ok_domains = {
        p.site_domain for p in corpus.pages if p.fetch_status is FetchStatus.OK
    }

    images = corpus.images
    invisible = [r for r in images if r.is_invisible]
    cross = [r for r in images if r.is_cross_domain]
    inv_cross = [r for r in invisible if r.is_cross_domain]
    failures = sum(1 for r in images if r.parse_error is not None)

    mime_rows = []
    for cls in MIME_DUMMY_CLASSES:
        def in_class(rec, cls=cls):
            mime = rec.mime if rec.mime in MIME_DUMMY_CLASSES else "other"
            return mime == cls
        mime_rows.append((
            cls,
            sum(1 for r in images if in_class(r)),
            sum(1 for r in inv_cross if in_class(r)),
        ))

    category_rows = []
    if corpus.site_categories:
        by_cat: dict[str, list[int]] = {}
        for rec in images:
            cat = corpus.site_categories.get(rec.site_domain, "uncategorized")
            row = by_cat.setdefault(cat, [0, 0, 0])
            row[0] += 1
            if rec.is_invisible:
                row[1] += 1
                if rec.is_cross_domain:
                    row[2] += 1
        category_rows = [(cat, *counts) for cat, counts in sorted(by_cat.items())]

    referencing: dict[str, int] = {}
    referenced: dict[str, int] = {}
    for rec in inv_cross:
        referencing[rec.site_domain] = referencing.get(rec.site_domain, 0) + 1
        sld = second_level_domain(rec.resolved_url.host, mode)
        referenced[sld] = referenced.get(sld, 0) + 1
    rank = lambda d: sorted(d.items(), key=lambda kv: (-kv[1], kv[0]))[:top_n]

    summary = SampleSummary(
        domains_sampled_ok=len(ok_domains),
        images_total=len(images),
        cross_domain_images=len(cross),
        one_by_one_images=len(invisible),
        one_by_one_cross_domain=len(inv_cross),
        parse_failures=failures,
        mime_rows=mime_rows,
        category_rows=category_rows,
        top_referencing=rank(referencing),
        top_referenced=rank(referenced),
        skip_tally=dict(corpus.skip_tally),
    )
    summary.check()
    return summary


def _pct(part: int, whole: int) -> str:
    return f"{100.0 * part / whole:.1f}%" if whole else "-"


def render_text(s: SampleSummary) -> str:
    out = io.StringIO()
    w = out.write
    w("Sample characteristics\n")
    w(f"  {'Domains sampled successfully':44s}{s.domains_sampled_ok:>8d}\n")
    w(f"  {'All images from <img> tags':44s}{s.images_total:>8d}\n")
    w(f"  {'  of which cross-domain images':44s}{s.cross_domain_images:>8d}"
      f"  ({_pct(s.cross_domain_images, s.images_total)})\n")
    w(f"  {'  of which 1x1 images':44s}{s.one_by_one_images:>8d}"
      f"  ({_pct(s.one_by_one_images, s.images_total)})\n")
    w(f"  {'  of which 1x1 cross-domain images':44s}{s.one_by_one_cross_domain:>8d}"
      f"  ({_pct(s.one_by_one_cross_domain, s.one_by_one_images)})\n")
    w(f"  {'Image parse failures (excluded from 1x1)':44s}{s.parse_failures:>8d}\n")
    if s.skip_tally:
        skips = ", ".join(f"{k}={v}" for k, v in sorted(s.skip_tally.items()))
        w(f"  Skipped image refs: {skips}\n")

    w("\nMIME types (all images / 1x1 cross-domain)\n")
    for cls, total, beacons in s.mime_rows:
        w(f"  {cls:12s}{total:>8d}{beacons:>8d}\n")

    if s.category_rows:
        w("\nImages per site category (all / 1x1 / 1x1 cross-domain)\n")
        for cat, total, inv, inv_cd in s.category_rows:
            w(f"  {cat:20s}{total:>8d}{inv:>8d}{inv_cd:>8d}\n")

    w("\nTop referencing domains for 1x1 cross-domain images\n")
    for domain, count in s.top_referencing:
        w(f"  {domain:36s}{count:>6d}\n")
    w("\nTop referenced second-level domains for 1x1 cross-domain images\n")
    for domain, count in s.top_referenced:
        w(f"  {domain:36s}{count:>6d}\n")
    return out.getvalue()


def render_csv(s: SampleSummary) -> str:
    out = io.StringIO()
    writer = csv.writer(out)
    writer.writerow(["section", "key", "value", "extra"])
    writer.writerow(["counts", "domains_sampled_ok", s.domains_sampled_ok, ""])
    writer.writerow(["counts", "images_total", s.images_total, ""])
    writer.writerow(["counts", "cross_domain_images", s.cross_domain_images, ""])
    writer.writerow(["counts", "one_by_one_images", s.one_by_one_images, ""])
    writer.writerow(["counts", "one_by_one_cross_domain", s.one_by_one_cross_domain, ""])
    writer.writerow(["counts", "parse_failures", s.parse_failures, ""])
    for cls, total, beacons in s.mime_rows:
        writer.writerow(["mime", cls, total, beacons])
    for cat, total, inv, inv_cd in s.category_rows:
        writer.writerow(["category", cat, total, f"{inv}/{inv_cd}"])
    for domain, count in s.top_referencing:
        writer.writerow(["top_referencing", domain, count, ""])
    for domain, count in s.top_referenced:
        writer.writerow(["top_referenced", domain, count, ""])
    for key, value in sorted(s.skip_tally.items()):
        writer.writerow(["skipped_refs", key, value, ""])
    return out.getvalue()
