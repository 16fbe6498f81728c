"""Core domain model: URLs, domain-name comparison and the on-disk corpus.

Everything downstream (extraction, filtering, feature computation) shares the
types defined here.  All records are immutable after construction and safe to
hand across threads.
"""

from __future__ import annotations

import ipaddress
import json
import os
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Iterable, Optional
from urllib.parse import urljoin, urlsplit

__all__ = [
    "MalformedUrl",
    "CorruptCorpus",
    "ParsedUrl",
    "ImgTagRef",
    "FetchStatus",
    "PageRecord",
    "HttpResponseMeta",
    "ImageRecord",
    "Corpus",
    "parse_url",
    "second_level_domain",
    "is_cross_domain",
    "is_cross_origin",
]

DEFAULT_PORTS = {"http": 80, "https": 443, "ftp": 21, "ws": 80, "wss": 443}


class MalformedUrl(ValueError):
    """Raised when no usable host can be recovered from a URL string."""


class CorruptCorpus(Exception):
    """Raised when an on-disk corpus directory cannot be read back."""


@dataclass(frozen=True)
class ParsedUrl:
    """An absolute URL reduced to the parts the pipeline cares about.

    Usernames, passwords and fragments are stripped at parse time; they never
    influence any comparison or feature.  ``query`` is the part after ``?``
    (``None`` when the URL has no query separator at all).
    """

    scheme: str
    host: str
    port: int
    path: str = ""
    query: Optional[str] = None

    def __str__(self) -> str:
        host = f"[{self.host}]" if ":" in self.host else self.host  # IPv6
        port = "" if DEFAULT_PORTS.get(self.scheme) == self.port else f":{self.port}"
        query = "" if self.query is None else f"?{self.query}"
        return f"{self.scheme}://{host}{port}{self.path}{query}"

    @property
    def origin(self) -> tuple[str, str, int]:
        return (self.scheme, self.host, self.port)


def parse_url(raw: str, base: Optional[ParsedUrl] = None) -> ParsedUrl:
    """Parse ``raw`` into an absolute :class:`ParsedUrl`.

    Relative references are resolved against ``base``.  Scheme and host are
    lowercased; a trailing dot on the host is dropped.  Raises
    :class:`MalformedUrl` when no host can be recovered even with a base, or
    when the scheme has no known default port and none is given.
    """
    raw = raw.strip()
    if not raw:
        raise MalformedUrl("empty URL")
    if base is not None:
        raw = urljoin(str(base), raw)
    try:
        parts = urlsplit(raw)
    except ValueError as exc:
        raise MalformedUrl(f"unparseable URL {raw!r}: {exc}") from exc

    scheme = parts.scheme.lower()
    if not scheme:
        raise MalformedUrl(f"no scheme in {raw!r}")
    try:
        host = parts.hostname  # lowercases, strips userinfo and brackets
        port = parts.port
    except ValueError as exc:
        raise MalformedUrl(f"bad authority in {raw!r}: {exc}") from exc
    if not host:
        raise MalformedUrl(f"no host in {raw!r}")
    host = host.rstrip(".")
    if not host or any(ch.isspace() for ch in host):
        raise MalformedUrl(f"invalid host in {raw!r}")
    if port is None:
        port = DEFAULT_PORTS.get(scheme)
        if port is None:
            raise MalformedUrl(f"scheme {scheme!r} has no default port")
    has_query = "?" in raw.split("#", 1)[0]
    return ParsedUrl(scheme, host, port, parts.path, parts.query if has_query else None)


def _is_ip_literal(host: str) -> bool:
    try:
        ipaddress.ip_address(host)
        return True
    except ValueError:
        return False


def _load_suffix_table() -> frozenset[str]:
    text = resources.files("beaconkit.data").joinpath("public_suffixes.dat").read_text("utf-8")
    rules = set()
    for line in text.splitlines():
        line = line.strip()
        if line and not line.startswith("//"):
            rules.add(line.lower())
    return frozenset(rules)


_SUFFIX_TABLE: frozenset[str] | None = None


def _suffix_table() -> frozenset[str]:
    global _SUFFIX_TABLE
    if _SUFFIX_TABLE is None:
        _SUFFIX_TABLE = _load_suffix_table()
    return _SUFFIX_TABLE


def second_level_domain(host: str, mode: str = "naive",
                        suffixes: Optional[Iterable[str]] = None) -> str:
    """Reduce ``host`` to the domain name used for cross-domain comparison.

    ``naive`` mode joins the last two DNS labels, which is also what a crawl
    comparing src and page hosts does when no suffix knowledge is available.
    ``psl`` mode consults a public-suffix table (the bundled snapshot unless
    ``suffixes`` is given) and returns the registrable domain: the matched
    suffix plus one label.  Single-label hosts and IP-address literals are
    returned unchanged in both modes.  Total function, never raises.
    """
    host = host.lower().rstrip(".")
    if _is_ip_literal(host):
        return host
    labels = host.split(".")
    if len(labels) <= 1:
        return host
    if mode == "naive":
        return ".".join(labels[-2:])
    if mode != "psl":
        raise ValueError(f"unknown domain-extraction mode {mode!r}")

    table = frozenset(s.lower() for s in suffixes) if suffixes is not None else _suffix_table()
    # Longest matching rule wins; '*.' matches one extra label; '!' rules
    # shorten the matched suffix by one label.  No match falls back to the
    # implicit '*' rule (suffix = last label).
    best_len = 1
    for i in range(len(labels)):
        candidate = ".".join(labels[i:])
        rest = ".".join(labels[i + 1:])
        if "!" + candidate in table:
            best_len = max(best_len, len(labels) - i - 1)
        elif candidate in table:
            best_len = max(best_len, len(labels) - i)
        elif rest and "*." + rest in table:
            best_len = max(best_len, len(labels) - i)
    if best_len >= len(labels):
        return host  # the host itself is a public suffix
    return ".".join(labels[-(best_len + 1):])


def is_cross_domain(page_final: ParsedUrl, image: ParsedUrl, mode: str = "naive") -> bool:
    """True when the image is served from a different second-level domain
    than the page that referenced it.  Final (post-redirect) page URLs must
    be used by callers; the comparison itself is case-insensitive.
    """
    a = second_level_domain(page_final.host, mode)
    b = second_level_domain(image.host, mode)
    return a.lower() != b.lower()


def is_cross_origin(page_final: ParsedUrl, image: ParsedUrl) -> bool:
    """True when the (scheme, host, port) tuples differ (same-origin rule)."""
    return page_final.origin != image.origin


@dataclass(frozen=True)
class ImgTagRef:
    """One ``<img>`` occurrence: verbatim src plus the attributes features need."""

    src: str
    alt_present: bool = False
    style_value: Optional[str] = None


class FetchStatus(str, Enum):
    OK = "ok"
    TIMEOUT = "timeout"
    ERROR = "error"


@dataclass(frozen=True)
class PageRecord:
    """One visited web page, mapped back to the sampled site domain.

    Cross-domain comparisons always use ``final_url`` (redirects followed),
    never ``requested_url``.  ``image_refs`` is empty unless the fetch
    succeeded.
    """

    site_domain: str
    requested_url: ParsedUrl
    final_url: ParsedUrl
    fetch_status: FetchStatus
    image_refs: tuple[ImgTagRef, ...] = ()
    pass_index: int = 1
    error_code: Optional[int] = None

    def __post_init__(self) -> None:
        if self.fetch_status is not FetchStatus.OK and self.image_refs:
            raise ValueError("failed pages cannot carry image refs")


@dataclass(frozen=True)
class HttpResponseMeta:
    """Response metadata for an image fetch; raw header strings are kept
    byte-for-byte so later feature passes can re-parse them."""

    status: int
    etag_present: bool = False
    set_cookie_present: bool = False
    cache_control: Optional[str] = None
    content_type: Optional[str] = None


@dataclass(frozen=True)
class ImageRecord:
    """One unique image per site (dedup key: site domain + content digest)."""

    site_domain: str
    page_index: int
    resolved_url: ParsedUrl
    content_digest: bytes
    mime: str
    width: Optional[float]
    height: Optional[float]
    response_meta: HttpResponseMeta
    tag: ImgTagRef
    is_invisible: bool
    is_cross_domain: bool
    is_cross_origin: bool
    parse_error: Optional[str] = None

    @property
    def digest_hex(self) -> str:
        return self.content_digest.hex()


def _url_to_json(u: ParsedUrl) -> str:
    return str(u)


def _page_to_json(p: PageRecord) -> dict:
    return {
        "site_domain": p.site_domain,
        "requested_url": _url_to_json(p.requested_url),
        "final_url": _url_to_json(p.final_url),
        "fetch_status": p.fetch_status.value,
        "error_code": p.error_code,
        "pass_index": p.pass_index,
        "image_refs": [
            {"src": r.src, "alt_present": r.alt_present, "style_value": r.style_value}
            for r in p.image_refs
        ],
    }


def _page_from_json(obj: dict) -> PageRecord:
    return PageRecord(
        site_domain=obj["site_domain"],
        requested_url=parse_url(obj["requested_url"]),
        final_url=parse_url(obj["final_url"]),
        fetch_status=FetchStatus(obj["fetch_status"]),
        image_refs=tuple(
            ImgTagRef(r["src"], r["alt_present"], r["style_value"])
            for r in obj["image_refs"]
        ),
        pass_index=obj["pass_index"],
        error_code=obj.get("error_code"),
    )


def _image_to_json(r: ImageRecord) -> dict:
    return {
        "site_domain": r.site_domain,
        "page_index": r.page_index,
        "resolved_url": _url_to_json(r.resolved_url),
        "digest": r.digest_hex,
        "mime": r.mime,
        "width": r.width,
        "height": r.height,
        "parse_error": r.parse_error,
        "invisible": r.is_invisible,
        "cross_domain": r.is_cross_domain,
        "cross_origin": r.is_cross_origin,
        "tag": {"src": r.tag.src, "alt_present": r.tag.alt_present,
                "style_value": r.tag.style_value},
        "response": {
            "status": r.response_meta.status,
            "etag_present": r.response_meta.etag_present,
            "set_cookie_present": r.response_meta.set_cookie_present,
            "cache_control": r.response_meta.cache_control,
            "content_type": r.response_meta.content_type,
        },
    }


def _image_from_json(obj: dict) -> ImageRecord:
    resp = obj["response"]
    tag = obj["tag"]
    return ImageRecord(
        site_domain=obj["site_domain"],
        page_index=obj["page_index"],
        resolved_url=parse_url(obj["resolved_url"]),
        content_digest=bytes.fromhex(obj["digest"]),
        mime=obj["mime"],
        width=obj["width"],
        height=obj["height"],
        response_meta=HttpResponseMeta(
            status=resp["status"],
            etag_present=resp["etag_present"],
            set_cookie_present=resp["set_cookie_present"],
            cache_control=resp["cache_control"],
            content_type=resp["content_type"],
        ),
        tag=ImgTagRef(tag["src"], tag["alt_present"], tag["style_value"]),
        is_invisible=obj["invisible"],
        is_cross_domain=obj["cross_domain"],
        is_cross_origin=obj["cross_origin"],
        parse_error=obj.get("parse_error"),
    )


@dataclass
class Corpus:
    """A crawl result: pages, per-site unique images, and skip tallies.

    On disk a corpus is a directory holding ``pages.jsonl`` and
    ``images.jsonl`` (one JSON object per line) plus ``blobs/<hex-digest>``
    files with the raw image bytes.  Image records point at their page via
    ``page_index`` into the pages list.  The field names are fixed:

    pages.jsonl: site_domain, requested_url, final_url, fetch_status
      (ok|timeout|error), error_code, pass_index, image_refs[].{src,
      alt_present, style_value}

    images.jsonl: site_domain, page_index, resolved_url, digest (lowercase
      hex SHA-256), mime, width, height, parse_error, invisible,
      cross_domain, cross_origin, tag.{src, alt_present, style_value},
      response.{status, etag_present, set_cookie_present, cache_control,
      content_type}
    """

    pages: list[PageRecord] = field(default_factory=list)
    images: list[ImageRecord] = field(default_factory=list)
    site_categories: dict[str, str] = field(default_factory=dict)
    skip_tally: dict[str, int] = field(default_factory=dict)

    def site_domains(self) -> list[str]:
        seen: dict[str, None] = {}
        for p in self.pages:
            seen.setdefault(p.site_domain, None)
        return list(seen)

    def sampled_ok_domains(self) -> list[str]:
        ok: dict[str, None] = {}
        for p in self.pages:
            if p.fetch_status is FetchStatus.OK:
                ok.setdefault(p.site_domain, None)
        return list(ok)

    def page_for(self, image: ImageRecord) -> PageRecord:
        return self.pages[image.page_index]

    def save(self, directory: str | os.PathLike, blobs: Optional[dict[bytes, bytes]] = None) -> None:
        """Write the corpus. jsonl files are replaced atomically; blob files
        are content-addressed and written once."""
        root = Path(directory)
        root.mkdir(parents=True, exist_ok=True)
        _atomic_write_lines(root / "pages.jsonl",
                            (json.dumps(_page_to_json(p), sort_keys=True) for p in self.pages))
        _atomic_write_lines(root / "images.jsonl",
                            (json.dumps(_image_to_json(r), sort_keys=True) for r in self.images))
        meta = {"site_categories": self.site_categories, "skip_tally": self.skip_tally}
        _atomic_write_lines(root / "meta.json", [json.dumps(meta, sort_keys=True)])
        if blobs:
            blob_dir = root / "blobs"
            blob_dir.mkdir(exist_ok=True)
            for digest, data in blobs.items():
                path = blob_dir / digest.hex()
                if not path.exists():
                    tmp = path.with_suffix(".tmp")
                    tmp.write_bytes(data)
                    os.replace(tmp, path)

    @classmethod
    def load(cls, directory: str | os.PathLike) -> "Corpus":
        root = Path(directory)
        try:
            pages = [_page_from_json(json.loads(line))
                     for line in _read_lines(root / "pages.jsonl")]
            images = [_image_from_json(json.loads(line))
                      for line in _read_lines(root / "images.jsonl")]
        except FileNotFoundError as exc:
            raise CorruptCorpus(f"missing corpus file: {exc.filename}") from exc
        except (KeyError, ValueError) as exc:
            raise CorruptCorpus(f"unreadable corpus record: {exc}") from exc
        seen: set[tuple[str, bytes]] = set()
        for rec in images:
            if not 0 <= rec.page_index < len(pages):
                raise CorruptCorpus(f"image record points at page {rec.page_index}, "
                                    f"but corpus has {len(pages)} pages")
            key = (rec.site_domain, rec.content_digest)
            if key in seen:
                raise CorruptCorpus(f"duplicate image record for {rec.site_domain} "
                                    f"digest {rec.digest_hex}")
            seen.add(key)
        corpus = cls(pages=pages, images=images)
        meta_path = root / "meta.json"
        if meta_path.exists():
            meta = json.loads(meta_path.read_text("utf-8"))
            corpus.site_categories = meta.get("site_categories", {})
            corpus.skip_tally = meta.get("skip_tally", {})
        return corpus

    def load_blob(self, directory: str | os.PathLike, image: ImageRecord) -> bytes:
        path = Path(directory) / "blobs" / image.digest_hex
        try:
            return path.read_bytes()
        except FileNotFoundError as exc:
            raise CorruptCorpus(f"missing blob {image.digest_hex}") from exc


def _atomic_write_lines(path: Path, lines: Iterable[str]) -> None:
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", encoding="utf-8") as fh:
        for line in lines:
            fh.write(line)
            fh.write("\n")
    os.replace(tmp, path)


def _read_lines(path: Path) -> Iterable[str]:
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                yield line
