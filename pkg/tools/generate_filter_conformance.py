#!/usr/bin/env python3
"""Freeze the filter-matching conformance corpus.

Each row is one scenario: a small rule set (rules joined with ';;'), a
request URL and its page context.  The expected decision column is computed
here by the regex-translation oracle in tests/oracles.py, before the engine
is ever consulted; the conformance test then demands 100% agreement.

Run from the repo root: ``python tools/generate_filter_conformance.py``.
"""

from __future__ import annotations

import csv
import sys
from pathlib import Path
from urllib.parse import urlsplit

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "tests"))

from oracles import regex_decision  # noqa: E402

OUT = ROOT / "tests" / "data" / "filter_conformance.csv"


def sld(host: str) -> str:
    parts = host.lower().split(".")
    return ".".join(parts[-2:]) if len(parts) > 1 else host


# (rules, url, page_domain) - third-party context derives from the hosts
SCENARIOS: list[tuple[list[str], str, str]] = [
    # domain anchor
    (["||ads.net^"], "http://ads.net/px.gif", "shop.example.com"),
    (["||ads.net^"], "http://sub.ads.net/px.gif", "shop.example.com"),
    (["||ads.net^"], "http://ads.net.evil.org/px.gif", "shop.example.com"),
    (["||ads.net^"], "http://notads.net/px.gif", "shop.example.com"),
    (["||ads.net^"], "http://example.com/banner/ads.net/x.gif", "example.com"),
    (["||ads.example.com^"], "http://ads.example.com/1.gif", "example.com"),
    (["||tracker.io^"], "https://tracker.io:8443/p.gif", "news.site.org"),
    # separator semantics
    (["||cdn.net^img"], "http://cdn.net/img/1.png", "a.com"),
    (["||cdn.net^img"], "http://cdn.netximg/1.png", "a.com"),
    (["/pixel.gif^"], "http://t.net/pixel.gif?u=1", "a.com"),
    (["/pixel.gif^"], "http://t.net/pixel.gif", "a.com"),
    (["/pixel.gif^"], "http://t.net/pixel.gifx", "a.com"),
    (["/pixel.gif^"], "http://t.net/pixel.gif.bak", "a.com"),
    # wildcards
    (["/track/*/pixel"], "http://t.net/track/v2/pixel.gif", "a.com"),
    (["/track/*/pixel"], "http://t.net/track/pixel.gif", "a.com"),
    (["||stats.*/collect"], "http://stats.example.org/collect?x=1", "a.com"),
    (["/beacon*gif"], "http://x.io/beacon123.gif", "a.com"),
    (["/a*b*c"], "http://x.io/albxbyc", "a.com"),
    # start / end anchors
    (["|http://ads."], "http://ads.example.net/x", "a.com"),
    (["|http://ads."], "http://example.net/http://ads.x", "a.com"),
    (["swf|"], "http://x.com/movie.swf", "a.com"),
    (["swf|"], "http://x.com/movie.swf?x=1", "a.com"),
    (["|http://x.com/p.gif|"], "http://x.com/p.gif", "a.com"),
    (["|http://x.com/p.gif|"], "http://x.com/p.gif2", "a.com"),
    # bare substrings
    (["utm_pixel"], "http://a.com/img?utm_pixel=1", "a.com"),
    (["utm_pixel"], "http://a.com/img?utm=1", "a.com"),
    (["-ad-"], "http://a.com/img/banner-ad-300.png", "a.com"),
    # case handling: host region folds, path stays exact
    (["||AdS.NET^"], "http://ads.net/px.gif", "shop.example.com"),
    (["|HTTP://ADS.example.com/"], "http://ads.example.com/x.gif", "other.org"),
    (["/Pixel.GIF"], "http://t.net/Pixel.GIF", "a.com"),
    (["/Pixel.GIF"], "http://t.net/pixel.gif", "a.com"),
    # third-party option
    (["||t.net^$third-party"], "http://t.net/p.gif", "shop.example.com"),
    (["||t.net^$third-party"], "http://t.net/p.gif", "t.net"),
    (["/pixel.gif$third-party"], "http://cdn.a.com/pixel.gif", "a.com"),
    (["||a.com^$~third-party"], "http://a.com/selfpix.gif", "a.com"),
    (["||a.com^$~third-party"], "http://a.com/selfpix.gif", "b.org"),
    # resource-type options
    (["||t.net^$image"], "http://t.net/p.gif", "a.com"),
    (["||t.net^$~image"], "http://t.net/p.gif", "a.com"),
    (["||t.net^$script"], "http://t.net/p.gif", "a.com"),
    (["||t.net^$script,image"], "http://t.net/p.gif", "a.com"),
    (["||t.net^$~script"], "http://t.net/p.gif", "a.com"),
    (["||t.net^$stylesheet,font"], "http://t.net/p.gif", "a.com"),
    (["||t.net^$image,third-party"], "http://t.net/p.gif", "a.com"),
    (["||t.net^$image,third-party"], "http://t.net/p.gif", "t.net"),
    # domain option
    (["||px.io^$domain=shop.com"], "http://px.io/1.gif", "shop.com"),
    (["||px.io^$domain=shop.com"], "http://px.io/1.gif", "news.com"),
    (["||px.io^$domain=shop.com|news.com"], "http://px.io/1.gif", "news.com"),
    (["||px.io^$domain=~shop.com"], "http://px.io/1.gif", "shop.com"),
    (["||px.io^$domain=~shop.com"], "http://px.io/1.gif", "blog.net"),
    (["||px.io^$domain=www.shop.com"], "http://px.io/1.gif", "shop.com"),
    # exceptions and precedence
    (["||ads.net^", "@@||ads.net/ok/"], "http://ads.net/ok/p.gif", "a.com"),
    (["||ads.net^", "@@||ads.net/ok/"], "http://ads.net/px/p.gif", "a.com"),
    (["@@||cdn.example.com^$image"], "http://cdn.example.com/p.gif", "a.com"),
    (["@@||cdn.example.com^"], "http://other.net/p.gif", "a.com"),
    (["/p.gif", "@@|http://good."], "http://good.example.org/p.gif", "a.com"),
    (["@@/p.gif$image", "/p.gif"], "http://t.net/p.gif", "a.com"),
    (["@@||t.net^$~image", "||t.net^"], "http://t.net/p.gif", "a.com"),
    # several blocking rules, order shuffled relative to each other
    (["/nomatch1", "||t.net^", "/nomatch2"], "http://t.net/p.gif", "a.com"),
    (["||t.net^", "/nomatch1", "/nomatch2"], "http://t.net/p.gif", "a.com"),
    (["/nomatch1", "/nomatch2"], "http://t.net/p.gif", "a.com"),
    # empty set
    ([], "http://t.net/p.gif", "a.com"),
    # query-targeting patterns
    (["^uid="], "http://t.net/p.gif?uid=77", "a.com"),
    (["^uid="], "http://t.net/p.gif?suid=77", "a.com"),
    (["||t.net/p.gif?uid=*&cb="], "http://t.net/p.gif?uid=9&cb=3", "a.com"),
    # port and separator interplay
    (["||t.net^p"], "http://t.net:8080/p.gif", "a.com"),
    (["||t.net:8080/"], "http://t.net:8080/p.gif", "a.com"),
]


def main() -> None:
    OUT.parent.mkdir(parents=True, exist_ok=True)
    rows = []
    for rules, url, page_domain in SCENARIOS:
        host = urlsplit(url).hostname
        page_sld = sld(page_domain)
        third_party = sld(host) != page_sld
        expected = regex_decision(rules, url, page_sld, third_party)
        rows.append([";;".join(rules), url, page_sld, int(third_party), expected])
    with open(OUT, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["rules", "url", "page_sld", "third_party", "expected"])
        writer.writerows(rows)
    from collections import Counter
    print(f"{len(rows)} rows -> {OUT}")
    print(Counter(r[-1] for r in rows))


if __name__ == "__main__":
    main()
