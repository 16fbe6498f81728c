"""Networked corpus builder.

For every listed site: fetch the landing page over plain HTTP (following
redirects), expand the same-domain link frontier, fetch every referenced
image with its response headers, and repeat the whole list for a configured
number of passes so one flaky fetch cannot drop a site.  Pre-rendered DOM
snapshots can be ingested instead of fetching pages, in which case only the
images are fetched live.

The HTTP layer is deliberately small: GET only, explicit redirect loop,
verbatim ordered response headers, a wall-clock budget per fetch, per-host
politeness delay and a per-host concurrency cap.  A ``resolve`` hook lets
tests and demos point arbitrary hostnames at a local server.  robots.txt
applies to page fetches (an override flag exists); image requests are
resource loads and skip it, as browsers do.
"""

from __future__ import annotations

import contextlib
import http.client
import json
import socket
import ssl
import threading
import time
import urllib.robotparser
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Optional

from . import image_inspect
from .corpus import (
    DEFAULT_PORTS,
    Corpus,
    FetchStatus,
    HttpResponseMeta,
    ImageRecord,
    ImgTagRef,
    MalformedUrl,
    PageRecord,
    ParsedUrl,
    is_cross_domain,
    is_cross_origin,
    parse_url,
)
from .html_extract import ExtractionResult, extract, frontier
from .image_inspect import ImageParseError, MimeType

__all__ = [
    "CrawlConfig",
    "FetchResult",
    "FetchError",
    "FetchTimeout",
    "TooManyRedirects",
    "FetchFailed",
    "fetch",
    "crawl_site",
    "fetch_images",
    "run",
    "ingest_snapshots",
]

DEFAULT_USER_AGENT = "beaconkit/0.1 (+image measurement crawler)"


class FetchError(Exception):
    pass


class FetchTimeout(FetchError):
    pass


class TooManyRedirects(FetchError):
    pass


class FetchFailed(FetchError):
    """Connection-level failure (refused, reset, DNS, TLS...)."""


Resolver = Callable[[str], Optional[tuple[str, int]]]


@dataclass(frozen=True)
class CrawlConfig:
    domain_list: tuple[tuple[str, Optional[str]], ...] = ()
    timeout_seconds: float = 30.0
    passes: int = 3
    depth: int = 1
    per_host_parallelism: int = 2
    user_agent: str = DEFAULT_USER_AGENT
    scheme: str = "http"
    politeness_delay: float = 0.2
    respect_robots: bool = True
    max_redirects: int = 10
    site_parallelism: int = 8
    max_pages_per_site: Optional[int] = None
    domain_mode: str = "naive"
    resolve: Optional[Resolver] = None

    def __post_init__(self) -> None:
        if self.timeout_seconds <= 0:
            raise ValueError("timeout must be positive")
        if self.passes < 1:
            raise ValueError("at least one pass")


@dataclass(frozen=True)
class FetchResult:
    final_url: ParsedUrl
    status: int
    headers: tuple[tuple[str, str], ...]
    body: bytes
    elapsed_ms: float
    redirect_chain: tuple[str, ...]

    def header(self, name: str) -> Optional[str]:
        lname = name.lower()
        for key, value in self.headers:
            if key.lower() == lname:
                return value
        return None

    def header_present(self, name: str) -> bool:
        lname = name.lower()
        return any(key.lower() == lname for key, _ in self.headers)


class _HostGate:
    """Politeness and concurrency for one host: at most N in-flight requests
    and a minimum interval between request starts."""

    def __init__(self, parallelism: int, delay: float) -> None:
        self._semaphore = threading.BoundedSemaphore(max(1, parallelism))
        self._delay = delay
        self._lock = threading.Lock()
        self._next_allowed = 0.0

    def __enter__(self) -> "_HostGate":
        self._semaphore.acquire()
        while True:
            with self._lock:
                now = time.monotonic()
                if now >= self._next_allowed:
                    self._next_allowed = now + self._delay
                    return self
                wait = self._next_allowed - now
            time.sleep(wait)

    def __exit__(self, *exc) -> None:
        self._semaphore.release()


class _Gates:
    def __init__(self, config: CrawlConfig) -> None:
        self._config = config
        self._lock = threading.Lock()
        self._gates: dict[str, _HostGate] = {}

    def for_host(self, host: str) -> _HostGate:
        with self._lock:
            gate = self._gates.get(host)
            if gate is None:
                gate = _HostGate(self._config.per_host_parallelism,
                                 self._config.politeness_delay)
                self._gates[host] = gate
            return gate


def _open_connection(url: ParsedUrl, config: CrawlConfig,
                     timeout: float) -> http.client.HTTPConnection:
    address, port = url.host, url.port
    locally_resolved = False
    if config.resolve is not None:
        mapped = config.resolve(url.host)
        if mapped is not None:
            address, port = mapped
            locally_resolved = True
    if url.scheme == "https":
        context = ssl.create_default_context()
        if locally_resolved:
            # test hosts pointed at a local server cannot present real certs
            context.check_hostname = False
            context.verify_mode = ssl.CERT_NONE
        return http.client.HTTPSConnection(address, port, timeout=timeout,
                                           context=context)
    return http.client.HTTPConnection(address, port, timeout=timeout)


def _host_header(url: ParsedUrl) -> str:
    host = f"[{url.host}]" if ":" in url.host else url.host
    if DEFAULT_PORTS.get(url.scheme) == url.port:
        return host
    return f"{host}:{url.port}"


_REDIRECT_STATUSES = {301, 302, 303, 307, 308}


def fetch(url: ParsedUrl, config: CrawlConfig,
          gates: Optional[_Gates] = None) -> FetchResult:
    """GET with redirects under one wall-clock budget.

    Response headers come back verbatim and ordered.  Raises FetchTimeout,
    TooManyRedirects or FetchFailed; crawl loops record these per page or
    per image instead of dying.
    """
    deadline = time.monotonic() + config.timeout_seconds
    started = time.monotonic()
    chain = [str(url)]
    current = url
    for _ in range(config.max_redirects + 1):
        remaining = deadline - time.monotonic()
        if remaining <= 0:
            raise FetchTimeout(f"budget exhausted fetching {chain[0]}")
        gate = gates.for_host(current.host) if gates else contextlib.nullcontext()
        try:
            with gate:
                status, headers, body = _single_request(current, config, remaining)
        except socket.timeout as exc:
            raise FetchTimeout(str(exc)) from exc
        except (OSError, http.client.HTTPException) as exc:
            raise FetchFailed(f"{type(exc).__name__}: {exc}") from exc

        if status in _REDIRECT_STATUSES:
            location = next((v for k, v in headers if k.lower() == "location"), None)
            if location:
                try:
                    current = parse_url(location, base=current)
                except MalformedUrl as exc:
                    raise FetchFailed(f"unusable redirect target {location!r}") from exc
                chain.append(str(current))
                continue
        return FetchResult(
            final_url=current,
            status=status,
            headers=tuple(headers),
            body=body,
            elapsed_ms=(time.monotonic() - started) * 1000.0,
            redirect_chain=tuple(chain),
        )
    raise TooManyRedirects(f"more than {config.max_redirects} redirects from {chain[0]}")


def _single_request(url: ParsedUrl, config: CrawlConfig,
                    timeout: float) -> tuple[int, list[tuple[str, str]], bytes]:
    conn = _open_connection(url, config, timeout)
    try:
        target = url.path or "/"
        if url.query is not None:
            target += f"?{url.query}"
        conn.request("GET", target, headers={
            "Host": _host_header(url),
            "User-Agent": config.user_agent,
            "Accept": "*/*",
            "Connection": "close",
        })
        response = conn.getresponse()
        body = response.read()
        return response.status, list(response.getheaders()), body
    finally:
        conn.close()


_ROBOTS_UNSET = object()


class _RobotsCache:
    def __init__(self, config: CrawlConfig, gates: _Gates) -> None:
        self._config = config
        self._gates = gates
        self._lock = threading.Lock()
        self._parsers: dict[str, Optional[urllib.robotparser.RobotFileParser]] = {}

    def allowed(self, url: ParsedUrl) -> bool:
        if not self._config.respect_robots:
            return True
        with self._lock:
            parser = self._parsers.get(url.host, _ROBOTS_UNSET)
        if parser is _ROBOTS_UNSET:
            # a racing duplicate load is harmless and idempotent
            loaded = self._load(url)
            with self._lock:
                parser = self._parsers.setdefault(url.host, loaded)
        if parser is None:
            return True
        return parser.can_fetch(self._config.user_agent, str(url))

    def _load(self, url: ParsedUrl) -> Optional[urllib.robotparser.RobotFileParser]:
        robots_url = ParsedUrl(url.scheme, url.host, url.port, "/robots.txt")
        try:
            result = fetch(robots_url, self._config, self._gates)
        except FetchError:
            return None
        if result.status != 200:
            return None
        parser = urllib.robotparser.RobotFileParser()
        parser.parse(result.body.decode("utf-8", errors="replace").splitlines())
        return parser


def _charset_from_content_type(value: Optional[str]) -> Optional[str]:
    if not value:
        return None
    for param in value.split(";")[1:]:
        name, _, val = param.partition("=")
        if name.strip().lower() == "charset":
            return val.strip().strip('"') or None
    return None


def _fetch_page(url: ParsedUrl, site_domain: str, pass_index: int,
                config: CrawlConfig, gates: _Gates,
                robots: _RobotsCache) -> tuple[PageRecord, Optional[ExtractionResult]]:
    try:
        if not robots.allowed(url):
            page = PageRecord(site_domain, url, url, FetchStatus.ERROR,
                              pass_index=pass_index, error_code=-1)
            return page, None
        result = fetch(url, config, gates)
    except FetchTimeout:
        return PageRecord(site_domain, url, url, FetchStatus.TIMEOUT,
                          pass_index=pass_index), None
    except FetchError:
        return PageRecord(site_domain, url, url, FetchStatus.ERROR,
                          pass_index=pass_index), None
    if result.status >= 400:
        page = PageRecord(site_domain, url, result.final_url, FetchStatus.ERROR,
                          pass_index=pass_index, error_code=result.status)
        return page, None
    charset = _charset_from_content_type(result.header("Content-Type"))
    extraction = extract(result.body, charset)
    page = PageRecord(
        site_domain=site_domain,
        requested_url=url,
        final_url=result.final_url,
        fetch_status=FetchStatus.OK,
        image_refs=tuple(extraction.img_refs),
        pass_index=pass_index,
    )
    return page, extraction


def crawl_site(site_domain: str, config: CrawlConfig, pass_index: int = 1,
               gates: Optional[_Gates] = None,
               robots: Optional[_RobotsCache] = None) -> list[PageRecord]:
    """Fetch a site's landing page and its same-domain frontier.

    Every returned page maps back to ``site_domain`` regardless of where
    redirects land.  Depth 1 follows links found on the landing page only;
    larger depths re-extract links from secondary pages too.
    """
    gates = gates or _Gates(config)
    robots = robots or _RobotsCache(config, gates)
    start = parse_url(f"{config.scheme}://{site_domain}/")
    pages: list[PageRecord] = []
    seen_requests = {str(start)}

    current_layer = [start]
    for layer in range(config.depth + 1):
        next_layer: list[ParsedUrl] = []
        for url in current_layer:
            page, extraction = _fetch_page(url, site_domain, pass_index,
                                           config, gates, robots)
            pages.append(page)
            if config.max_pages_per_site and len(pages) >= config.max_pages_per_site:
                return pages
            if extraction is None or layer == config.depth:
                continue
            for link in frontier(extraction, page.final_url, config.domain_mode):
                key = str(link)
                if key not in seen_requests:
                    seen_requests.add(key)
                    next_layer.append(link)
        current_layer = next_layer
        if not current_layer:
            break
    return pages


def fetch_images(pages: list[PageRecord], config: CrawlConfig,
                 gates: Optional[_Gates] = None, page_offset: int = 0,
                 ) -> tuple[list[ImageRecord], dict[bytes, bytes], dict[str, int]]:
    """GET every image referenced by the given pages.

    Returns (records, blobs, skip_tally).  Images deduplicate per site by
    content digest: the first reference wins.  Empty and ``data:`` srcs are
    tallied, never fetched.  ``page_offset`` is the index of ``pages[0]`` in
    the enclosing corpus page list.
    """
    gates = gates or _Gates(config)
    records: list[ImageRecord] = []
    blobs: dict[bytes, bytes] = {}
    seen: set[tuple[str, bytes]] = set()
    tally: dict[str, int] = {}

    def count(reason: str) -> None:
        tally[reason] = tally.get(reason, 0) + 1

    for index, page in enumerate(pages):
        if page.fetch_status is not FetchStatus.OK:
            continue
        for ref in page.image_refs:
            src = ref.src.strip()
            if not src:
                count("empty_src")
                continue
            if src.lower().startswith("data:"):
                count("data_uri")
                continue
            try:
                resolved = parse_url(src, base=page.final_url)
            except MalformedUrl:
                count("unresolvable_src")
                continue
            if resolved.scheme not in ("http", "https"):
                count("unresolvable_src")
                continue
            try:
                result = fetch(resolved, config, gates)
            except FetchError:
                count("fetch_error")
                continue
            if result.status >= 400 or not result.body:
                count("http_error")
                continue
            digest = image_inspect.content_digest(result.body)
            key = (page.site_domain, digest)
            if key in seen:
                continue
            seen.add(key)
            blobs[digest] = result.body
            records.append(_build_image_record(
                page, page_offset + index, ref, resolved, result, digest,
                config.domain_mode))
    return records, blobs, tally


def _build_image_record(page: PageRecord, page_index: int, ref: ImgTagRef,
                        resolved: ParsedUrl, result: FetchResult,
                        digest: bytes, mode: str) -> ImageRecord:
    body = result.body
    content_type = result.header("Content-Type")
    mime = image_inspect.sniff_mime(body, content_type)
    width = height = None
    parse_error = None
    if mime in image_inspect.RASTER_KINDS:
        try:
            width, height = image_inspect.raster_dimensions(body, mime)
        except ImageParseError as exc:
            parse_error = f"{type(exc).__name__}: {exc}"
    elif mime is MimeType.SVG:
        dims = image_inspect.svg_dimensions(body.decode("utf-8", errors="replace"))
        if dims is not None:
            width, height = dims
    dims = (width, height) if width is not None and height is not None else None
    meta = HttpResponseMeta(
        status=result.status,
        etag_present=result.header_present("ETag"),
        set_cookie_present=result.header_present("Set-Cookie"),
        cache_control=result.header("Cache-Control"),
        content_type=content_type,
    )
    # Flags compare the src URL (as resolved against the final page URL);
    # where the image bytes end up after their own redirects is irrelevant.
    return ImageRecord(
        site_domain=page.site_domain,
        page_index=page_index,
        resolved_url=resolved,
        content_digest=digest,
        mime=mime.value,
        width=width,
        height=height,
        response_meta=meta,
        tag=ref,
        is_invisible=image_inspect.is_invisible(mime, dims) if parse_error is None else False,
        is_cross_domain=is_cross_domain(page.final_url, resolved, mode),
        is_cross_origin=is_cross_origin(page.final_url, resolved),
        parse_error=parse_error,
    )


def run(config: CrawlConfig) -> tuple[Corpus, dict[bytes, bytes]]:
    """Process the whole domain list for the configured number of passes.

    A site counts as successfully sampled when any pass fetched its landing
    page; page and image records merge across passes (a later success
    replaces an earlier failure, images dedup per site by digest).
    """
    gates = _Gates(config)
    robots = _RobotsCache(config, gates)
    corpus = Corpus()
    corpus.site_categories = {
        domain: category for domain, category in config.domain_list if category
    }
    blobs: dict[bytes, bytes] = {}
    page_slot: dict[tuple[str, str], int] = {}
    image_keys: set[tuple[str, bytes]] = set()

    for pass_index in range(1, config.passes + 1):
        with ThreadPoolExecutor(max_workers=max(1, config.site_parallelism)) as pool:
            site_results = list(pool.map(
                lambda item: _process_site(item[0], config, pass_index, gates, robots),
                config.domain_list,
            ))
        for pages, records, site_blobs, tally in site_results:
            local_to_global: dict[int, int] = {}
            for i, page in enumerate(pages):
                key = (page.site_domain, str(page.requested_url))
                slot = page_slot.get(key)
                if slot is None:
                    page_slot[key] = slot = len(corpus.pages)
                    corpus.pages.append(page)
                elif (corpus.pages[slot].fetch_status is not FetchStatus.OK
                      and page.fetch_status is FetchStatus.OK):
                    corpus.pages[slot] = page
                local_to_global[i] = slot
            for record in records:
                key = (record.site_domain, record.content_digest)
                if key in image_keys:
                    continue
                image_keys.add(key)
                corpus.images.append(
                    replace(record, page_index=local_to_global[record.page_index]))
            for digest, data in site_blobs.items():
                blobs.setdefault(digest, data)
            for reason, n in tally.items():
                corpus.skip_tally[reason] = corpus.skip_tally.get(reason, 0) + n
    return corpus, blobs


def _process_site(site_domain: str, config: CrawlConfig, pass_index: int,
                  gates: _Gates, robots: _RobotsCache):
    pages = crawl_site(site_domain, config, pass_index, gates, robots)
    records, site_blobs, tally = fetch_images(pages, config, gates)
    return pages, records, site_blobs, tally


def ingest_snapshots(snapshot_dir: str | Path,
                     config: CrawlConfig) -> tuple[Corpus, dict[bytes, bytes]]:
    """Build a corpus from pre-rendered DOM snapshots, fetching only images.

    Layout: ``<root>/<site>/<page-id>.html`` plus ``<root>/meta.json`` that
    maps ``"<site>/<page-id>"`` to the page's final URL.  Use this to feed
    script-generated markup through the same measurement pipeline without
    embedding a browser.
    """
    root = Path(snapshot_dir)
    meta = json.loads((root / "meta.json").read_text("utf-8"))
    corpus = Corpus()
    blobs: dict[bytes, bytes] = {}
    gates = _Gates(config)
    seen: set[tuple[str, bytes]] = set()

    for key in sorted(meta):
        site, _, page_id = key.partition("/")
        final_url = parse_url(meta[key])
        html_path = root / site / f"{page_id}.html"
        extraction = extract(html_path.read_bytes(), None)
        page = PageRecord(
            site_domain=site,
            requested_url=final_url,
            final_url=final_url,
            fetch_status=FetchStatus.OK,
            image_refs=tuple(extraction.img_refs),
            pass_index=1,
        )
        offset = len(corpus.pages)
        corpus.pages.append(page)
        records, page_blobs, tally = fetch_images([page], config, gates,
                                                  page_offset=offset)
        for record in records:
            dedup_key = (record.site_domain, record.content_digest)
            if dedup_key not in seen:
                seen.add(dedup_key)
                corpus.images.append(record)
        blobs.update(page_blobs)
        for reason, n in tally.items():
            corpus.skip_tally[reason] = corpus.skip_tally.get(reason, 0) + n
    return corpus, blobs
