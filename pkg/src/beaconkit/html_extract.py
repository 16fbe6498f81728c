"""Pull image references and frontier links out of (possibly broken) HTML.

Extraction is strictly tag-level: ``<img>`` for images, ``<a href>`` plus
``<frame>``/``<iframe>`` src for the crawl frontier.  No scripts run, no CSS
cascades; the ``style`` attribute is captured verbatim.  Arbitrary bytes are
accepted and never raise.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from html.parser import HTMLParser
from typing import Optional

from .corpus import ImgTagRef, MalformedUrl, ParsedUrl, parse_url, second_level_domain

__all__ = ["ExtractionResult", "extract", "frontier"]


@dataclass
class ExtractionResult:
    """Tag references in document order; duplicates kept (dedup is a corpus
    concern, not a parsing one)."""

    img_refs: list[ImgTagRef] = field(default_factory=list)
    anchor_hrefs: list[str] = field(default_factory=list)
    frame_srcs: list[str] = field(default_factory=list)


class _Collector(HTMLParser):
    def __init__(self) -> None:
        super().__init__(convert_charrefs=True)
        self.result = ExtractionResult()

    def handle_starttag(self, tag: str, attrs: list[tuple[str, Optional[str]]]) -> None:
        if tag == "img":
            found = {}
            alt_present = False
            for name, value in attrs:
                if name == "alt":
                    alt_present = True
                if name not in found:  # first occurrence wins, like browsers
                    found[name] = value
            src = found.get("src")
            if src is not None:
                self.result.img_refs.append(
                    ImgTagRef(src=src, alt_present=alt_present,
                              style_value=found.get("style"))
                )
        elif tag == "a":
            href = _first_attr(attrs, "href")
            if href is not None:
                self.result.anchor_hrefs.append(href)
        elif tag in ("frame", "iframe"):
            src = _first_attr(attrs, "src")
            if src is not None:
                self.result.frame_srcs.append(src)

    def handle_startendtag(self, tag: str, attrs: list[tuple[str, Optional[str]]]) -> None:
        self.handle_starttag(tag, attrs)


def _first_attr(attrs: list[tuple[str, Optional[str]]], name: str) -> Optional[str]:
    for key, value in attrs:
        if key == name and value is not None:
            return value
    return None


_META_CHARSET_RE = re.compile(
    rb"""<meta[^>]+charset\s*=\s*["']?\s*([a-zA-Z0-9_.:-]+)""", re.IGNORECASE
)


def _decode(data: bytes, charset_hint: Optional[str]) -> str:
    candidates = []
    if charset_hint:
        candidates.append(charset_hint)
    if data.startswith(b"\xef\xbb\xbf"):
        candidates.append("utf-8-sig")
    elif data.startswith(b"\xff\xfe"):
        candidates.append("utf-16-le")
    elif data.startswith(b"\xfe\xff"):
        candidates.append("utf-16-be")
    m = _META_CHARSET_RE.search(data[:2048])
    if m:
        candidates.append(m.group(1).decode("ascii", "ignore"))
    for enc in candidates:
        try:
            return data.decode(enc, errors="replace")
        except (LookupError, UnicodeError):
            continue
    return data.decode("utf-8", errors="replace")


_TAG_TAIL_RE = re.compile(r"<[a-zA-Z/!?][^<>]*$")


def extract(html: bytes | str, charset_hint: Optional[str] = None) -> ExtractionResult:
    """Tolerantly parse a document and collect img/anchor/frame references.

    Unparseable input yields an empty result.  A document that ends inside an
    open tag still surfaces that tag (the truncation is repaired before the
    final flush), matching how salvage-what-you-can crawlers behave.
    """
    text = html if isinstance(html, str) else _decode(html, charset_hint)
    collector = _Collector()
    try:
        collector.feed(text)
        if _TAG_TAIL_RE.search(text):
            collector.feed(">")
        collector.close()
    except Exception:
        # html.parser recovers from nearly anything; if it still chokes we
        # keep whatever was collected before the failure.
        pass
    return collector.result


def frontier(result: ExtractionResult, page_final: ParsedUrl,
             mode: str = "naive") -> list[ParsedUrl]:
    """Same-site crawl candidates from anchors and frames.

    Hrefs resolve against the final page URL; only http(s) URLs whose
    second-level domain matches the page's survive.  Order-stable dedup.
    """
    page_sld = second_level_domain(page_final.host, mode)
    seen: dict[str, ParsedUrl] = {}
    for raw in list(result.anchor_hrefs) + list(result.frame_srcs):
        try:
            url = parse_url(raw, base=page_final)
        except MalformedUrl:
            continue
        if url.scheme not in ("http", "https"):
            continue
        if second_level_domain(url.host, mode) != page_sld:
            continue
        seen.setdefault(str(url), url)
    return list(seen.values())
