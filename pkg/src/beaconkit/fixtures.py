"""A deterministic synthetic web for exercising the whole pipeline locally.

``build_fixture_network`` lays out 20 small sites (landing page, three
subpages, an iframe page) plus five third-party tracker hosts and per-site
CDN subdomains.  Image counts, formats, dimensions and hosting are fixed by
construction, and the builder returns a manifest with the expected corpus
counts; a crawl against the served network must reproduce them exactly.

``FixtureServer`` serves the network on localhost with virtual hosting by
Host header, records every request and tracks per-host concurrency so tests
can assert politeness limits.  The tiny image writers (``make_gif``,
``make_png``, ``make_svg``) emit fully valid files at arbitrary sizes.
"""

from __future__ import annotations

import struct
import threading
import time
import zlib
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from importlib import resources
from typing import Optional

__all__ = [
    "FixtureResponse",
    "FixtureNetwork",
    "FixtureServer",
    "build_fixture_network",
    "make_gif",
    "make_png",
    "make_svg",
    "uniquify_jpeg",
    "uniquify_webp",
]

CATEGORIES = ("shopping", "news", "arts", "computers", "science")
TRACKERS = tuple(f"trk{i}.test" for i in range(1, 6))


# --------------------------------------------------------------------------
# minimal image writers


def make_gif(width: int, height: int, uid: int = 0) -> bytes:
    """A valid GIF89a of the given size; ``uid`` lands in the palette so
    different ids yield different bytes."""
    palette = bytes([
        (uid >> 16) & 0xFF, (uid >> 8) & 0xFF, uid & 0xFF,
        0xFF ^ (uid & 0xFF), 0xEE, 0xDD,
    ])
    header = b"GIF89a" + struct.pack("<HH", width, height) + b"\x80\x00\x00" + palette
    descriptor = b"\x2c" + struct.pack("<HHHH", 0, 0, width, height) + b"\x00"
    data = _lzw_zero_pixels(width * height)
    blocks = b""
    for i in range(0, len(data), 255):
        chunk = data[i:i + 255]
        blocks += bytes([len(chunk)]) + chunk
    return header + descriptor + b"\x02" + blocks + b"\x00" + b"\x3b"


def _lzw_zero_pixels(n: int) -> bytes:
    # Clear before every literal so the code width stays at 3 bits.
    bits: list[int] = []

    def emit(code: int) -> None:
        for i in range(3):
            bits.append((code >> i) & 1)

    for _ in range(n):
        emit(4)  # clear
        emit(0)  # pixel index 0
    emit(5)      # end of information
    out = bytearray()
    for i in range(0, len(bits), 8):
        byte = 0
        for j, bit in enumerate(bits[i:i + 8]):
            byte |= bit << j
        out.append(byte)
    return bytes(out)


def make_png(width: int, height: int, uid: int = 0) -> bytes:
    """A valid 8-bit grayscale PNG; fill value and a text chunk carry uid."""
    def chunk(kind: bytes, data: bytes) -> bytes:
        raw = kind + data
        return struct.pack(">I", len(data)) + raw + struct.pack(">I", zlib.crc32(raw))

    ihdr = struct.pack(">IIBBBBB", width, height, 8, 0, 0, 0, 0)
    fill = (uid * 37) % 256
    scanlines = b"".join(b"\x00" + bytes([fill]) * width for _ in range(height))
    idat = zlib.compress(scanlines)
    text = b"id\x00" + str(uid).encode("ascii")
    return (b"\x89PNG\r\n\x1a\n" + chunk(b"IHDR", ihdr) + chunk(b"tEXt", text)
            + chunk(b"IDAT", idat) + chunk(b"IEND", b""))


def make_svg(width: float, height: float, uid: int = 0) -> bytes:
    w = int(width) if float(width).is_integer() else width
    h = int(height) if float(height).is_integer() else height
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}">'
        f"<!-- {uid} -->"
        f'<rect width="100%" height="100%" fill="#{uid % 0xFFFFFF:06x}"/></svg>'
    ).encode("ascii")


def uniquify_jpeg(template: bytes, uid: int) -> bytes:
    """Insert a comment segment after SOI so each id gets distinct bytes."""
    payload = f"id{uid}".encode("ascii")
    segment = b"\xff\xfe" + struct.pack(">H", len(payload) + 2) + payload
    return template[:2] + segment + template[2:]


def uniquify_webp(template: bytes, uid: int) -> bytes:
    """Append an unknown chunk and fix up the RIFF size."""
    payload = f"id{uid}".encode("ascii")
    if len(payload) % 2:
        payload += b"\x00"
    out = template + b"XTRA" + struct.pack("<I", len(payload)) + payload
    return out[:4] + struct.pack("<I", len(out) - 8) + out[8:]


def _template(name: str) -> bytes:
    return (resources.files("beaconkit.data") / "fixture_images" / name).read_bytes()


# --------------------------------------------------------------------------
# network construction


@dataclass(frozen=True)
class FixtureResponse:
    status: int = 200
    headers: tuple[tuple[str, str], ...] = ()
    body: bytes = b""
    delay: float = 0.0       # seconds to stall before answering
    fail_first: int = 0      # answer 503 to this many requests, then recover


@dataclass
class FixtureNetwork:
    domains: list[tuple[str, str]]
    responses: dict[tuple[str, str], FixtureResponse]
    manifest: dict = field(default_factory=dict)

    def hosts(self) -> set[str]:
        return {host for host, _ in self.responses}


def _sld(host: str) -> str:
    parts = host.split(".")
    return ".".join(parts[-2:]) if len(parts) > 1 else host


_TRACKER_HEADERS = (
    ("Cache-Control", "no-store, max-age=0"),
)


def _image_headers(uid: int, tracking: bool, fmt: str) -> tuple[tuple[str, str], ...]:
    ctype = {
        "gif": "image/gif", "png": "image/png", "jpeg": "image/jpeg",
        "svg": "image/svg+xml", "webp": "image/webp",
    }[fmt]
    if tracking:
        return (
            ("Content-Type", ctype),
            ("Set-Cookie", f"uid=u{uid}; Path=/"),
            ("Cache-Control", "no-store, max-age=0"),
        )
    return (
        ("Content-Type", ctype),
        ("ETag", f'"e{uid}"'),
        ("Cache-Control", f"public, max-age={86400 * (1 + uid % 3)}"),
    )


@dataclass
class _Img:
    url: str          # absolute, or site-relative form used in the tag
    host: str
    path: str
    body: bytes
    fmt: str
    width: float
    height: float
    headers: tuple[tuple[str, str], ...]
    page: str         # which site page references it
    page_final_host: str
    alt: bool
    style: Optional[str]


def build_fixture_network(num_sites: int = 20) -> FixtureNetwork:
    """Deterministic 20-site network.  Per site: 30 unique images of which 2
    are invisible; trackers carry the invisible pixels for every site plus a
    same-domain spacer for the second half, which pins the manifest at 600
    images, 40 invisible, 30 invisible-and-cross-domain."""
    jpeg_template = _template("jpeg_4x3.jpg")
    webp_template = _template("webp_2x2.webp")

    domains = [(f"site{s:02d}.test", CATEGORIES[(s - 1) % len(CATEGORIES)])
               for s in range(1, num_sites + 1)]
    responses: dict[tuple[str, str], FixtureResponse] = {}
    all_images: list[_Img] = []
    pages = ("/", "/products", "/about", "/frame.html")

    for s in range(1, num_sites + 1):
        domain = f"site{s:02d}.test"
        cdn = f"cdn.{domain}"
        landing = "/home" if s == 5 else "/"
        imgs: list[_Img] = []

        def add(path_or_url: str, host: str, path: str, body: bytes, fmt: str,
                w: float, h: float, tracking: bool, uid: int,
                page_final_host: str = domain) -> None:
            slot = len(imgs)
            imgs.append(_Img(
                url=path_or_url, host=host, path=path, body=body, fmt=fmt,
                width=w, height=h,
                headers=_image_headers(uid, tracking, fmt),
                page=pages[slot % len(pages)],
                page_final_host=page_final_host,
                alt=slot % 3 != 2,
                style=("margin:0" if slot % 4 == 1 else None),
            ))

        uid_base = s * 1000
        n_png_same = 5 if s == 7 else 6
        for i in range(n_png_same):
            uid = uid_base + i
            add(f"img/p{i}.png", domain, f"/img/p{i}.png",
                make_png(4 + i, 3, uid), "png", 4 + i, 3, False, uid)
        for i in range(6):
            uid = uid_base + 10 + i
            if s in (19, 20) and i == 0:
                uid = 999_999  # shared bytes across two sites, by design
            add(f"/img/g{i}.gif", domain, f"/img/g{i}.gif",
                make_gif(3, 2 + i, uid), "gif", 3, 2 + i, False, uid)
        for i in range(2):
            uid = uid_base + 20 + i
            add(f"img/v{i}.svg", domain, f"/img/v{i}.svg",
                make_svg(32 + i, 24, uid), "svg", 32 + i, 24, False, uid)
        for i in range(4):
            uid = uid_base + 30 + i
            add(f"//{cdn}/as/a{i}.jpg", cdn, f"/as/a{i}.jpg",
                uniquify_jpeg(jpeg_template, uid), "jpeg", 4, 3, False, uid)
        for i in range(4):
            uid = uid_base + 40 + i
            trk = TRACKERS[(s + i) % 5]
            add(f"http://{trk}/b/g{s:02d}_{i}.gif", trk, f"/b/g{s:02d}_{i}.gif",
                make_gif(2, 2 + i, uid), "gif", 2, 2 + i, i % 2 == 0, uid)
        for i in range(3):
            uid = uid_base + 50 + i
            trk = TRACKERS[(s + i + 1) % 5]
            add(f"http://{trk}/b/p{s:02d}_{i}.png", trk, f"/b/p{s:02d}_{i}.png",
                make_png(5, 4 + i, uid), "png", 5, 4 + i, False, uid)
        for i in range(2):
            uid = uid_base + 60 + i
            trk = TRACKERS[(s + i + 2) % 5]
            add(f"http://{trk}/b/j{s:02d}_{i}.jpg", trk, f"/b/j{s:02d}_{i}.jpg",
                uniquify_jpeg(jpeg_template, uid), "jpeg", 4, 3, False, uid)
        uid = uid_base + 70
        trk = TRACKERS[(s + 3) % 5]
        add(f"http://{trk}/b/w{s:02d}.webp", trk, f"/b/w{s:02d}.webp",
            uniquify_webp(webp_template, uid), "webp", 2, 2, False, uid)

        # the invisible pair
        uid = uid_base + 80
        trk = TRACKERS[(s - 1) % 5]
        add(f"http://{trk}/px/p{s:02d}.gif?uid={1000 + s}&cb={s * 7}&r={domain}%2F",
            trk, f"/px/p{s:02d}.gif", make_gif(1, 1, uid), "gif", 1, 1, True, uid)
        uid = uid_base + 81
        if s <= 10:
            trk = TRACKERS[(s + 2) % 5]
            add(f"http://{trk}/px/q{s:02d}.svg?sid={s}", trk, f"/px/q{s:02d}.svg",
                make_svg(1, 1, uid), "svg", 1, 1, True, uid)
        else:
            add(f"/img/spacer{s:02d}.png", domain, f"/img/spacer{s:02d}.png",
                make_png(1, 1, uid), "png", 1, 1, False, uid)

        if s == 7:
            # reached through a frontier link that redirects off-site; the
            # image is first-party relative to the page it ends up on
            uid = uid_base + 90
            add("/lp07.png", "trk1.test", "/lp07.png",
                make_png(6, 3, uid), "png", 6, 3, False, uid,
                page_final_host="trk1.test")

        digests = {img.body for img in imgs}
        assert len(digests) == len(imgs), f"duplicate image bytes within {domain}"

        for img in imgs:
            responses[(img.host, img.path)] = FixtureResponse(
                200, img.headers, img.body)
        all_images.extend(imgs)

        # pages
        def tag(img: _Img) -> str:
            alt = ' alt=""' if img.alt else ""
            style = f' style="{img.style}"' if img.style else ""
            return f'<img src="{img.url}"{alt}{style}>'

        def page_html(path: str) -> str:
            body = "\n".join(tag(i) for i in imgs if i.page == path
                             and i.page_final_host == domain)
            nav = ""
            if path == "/":  # logical landing page (site05 serves it at /home)
                other = f"site{(s % num_sites) + 1:02d}.test"
                nav = (
                    '<a href="/products">catalog</a>\n'
                    '<a href="/about">about</a>\n'
                    f'<a href="http://{other}/">partner</a>\n'
                    '<a href="mailto:hello@example.invalid">mail</a>\n'
                    '<iframe src="/frame.html"></iframe>\n'
                )
                if s == 2:
                    nav += '<a href="/private">internal</a>\n'
                if s == 7:
                    nav += '<a href="/promo">promo</a>\n'
            dup = ""
            if path == "/about":
                dup = (f"{tag(imgs[0])}\n"
                       '<img src="">\n'
                       '<img src="data:image/gif;base64,R0lGODlhAQABAAAAACw=">\n')
            return (f"<html><head><title>{domain}{path}</title></head>"
                    f"<body>\n{nav}{body}\n{dup}</body></html>")

        html_headers = (("Content-Type", "text/html; charset=utf-8"),)
        for path in pages:
            route = landing if path == "/" else path
            responses[(domain, route)] = FixtureResponse(
                200, html_headers, page_html(path).encode("utf-8"))
        if s == 5:
            responses[(domain, "/")] = FixtureResponse(
                301, (("Location", "/home"),), b"")
        if s == 2:
            responses[(domain, "/robots.txt")] = FixtureResponse(
                200, (("Content-Type", "text/plain"),),
                b"User-agent: *\nDisallow: /private\n")
            responses[(domain, "/private")] = FixtureResponse(
                200, html_headers,
                b'<html><body><img src="/img/p0.png"></body></html>')
        if s == 3:
            responses[(domain, "/robots.txt")] = FixtureResponse(
                200, (("Content-Type", "text/plain"),),
                b"User-agent: *\nDisallow:\n")
        if s == 7:
            responses[(domain, "/promo")] = FixtureResponse(
                302, (("Location", "http://trk1.test/landing07"),), b"")
            responses[("trk1.test", "/landing07")] = FixtureResponse(
                200, html_headers,
                b'<html><body><img src="/lp07.png" alt="launch"></body></html>')

    manifest = _manifest_from_specs(num_sites, all_images)
    return FixtureNetwork(domains=domains, responses=responses, manifest=manifest)


def _manifest_from_specs(num_sites: int, images: list[_Img]) -> dict:
    def invisible(img: _Img) -> bool:
        if img.fmt == "svg":
            return img.width <= 1 and img.height <= 1
        return img.width == 1 and img.height == 1

    def cross(img: _Img) -> bool:
        return _sld(img.host) != _sld(img.page_final_host)

    inv = [i for i in images if invisible(i)]
    mime: dict[str, int] = {}
    for img in images:
        cls = img.fmt if img.fmt in ("gif", "jpeg", "png", "svg") else "other"
        mime[cls] = mime.get(cls, 0) + 1
    return {
        "domains_sampled_ok": num_sites,
        "images_total": len(images),
        "cross_domain_images": sum(1 for i in images if cross(i)),
        "one_by_one_images": len(inv),
        "one_by_one_cross_domain": sum(1 for i in inv if cross(i)),
        "parse_failures": 0,
        "mime": dict(sorted(mime.items())),
    }


# --------------------------------------------------------------------------
# server


class _Handler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"

    def do_GET(self) -> None:  # noqa: N802 (stdlib naming)
        server: "FixtureServer" = self.server.fixture  # type: ignore[attr-defined]
        host = (self.headers.get("Host") or "").split(":")[0].lower()
        path = self.path.split("?")[0]
        server._record(host, self.path)
        with server._concurrency(host):
            response = server.network.responses.get((host, path))
            if response is None:
                body = b"not found"
                self.send_response(404)
                self.send_header("Content-Type", "text/plain")
                self.send_header("Content-Length", str(len(body)))
                self.end_headers()
                self.wfile.write(body)
                return
            if response.delay:
                time.sleep(response.delay)
            if response.fail_first and server._bump_failure(host, path) <= response.fail_first:
                self.send_response(503)
                self.send_header("Content-Length", "0")
                self.end_headers()
                return
            self.send_response(response.status)
            for name, value in response.headers:
                self.send_header(name, value)
            self.send_header("Content-Length", str(len(response.body)))
            self.end_headers()
            self.wfile.write(response.body)

    def log_message(self, *args) -> None:
        pass


class FixtureServer:
    """Serves a FixtureNetwork on localhost; use as a context manager."""

    def __init__(self, network: FixtureNetwork, port: int = 0) -> None:
        self.network = network
        self._httpd = ThreadingHTTPServer(("127.0.0.1", port), _Handler)
        self._httpd.fixture = self  # type: ignore[attr-defined]
        self._httpd.daemon_threads = True
        self._thread: Optional[threading.Thread] = None
        self._lock = threading.Lock()
        self.request_log: list[tuple[str, str]] = []
        self.active: dict[str, int] = {}
        self.max_concurrency: dict[str, int] = {}
        self._failure_counts: dict[tuple[str, str], int] = {}

    @property
    def port(self) -> int:
        return self._httpd.server_address[1]

    def resolver(self, host: str) -> Optional[tuple[str, int]]:
        if host.endswith(".test"):
            return ("127.0.0.1", self.port)
        return None

    def _record(self, host: str, path: str) -> None:
        with self._lock:
            self.request_log.append((host, path))

    def _bump_failure(self, host: str, path: str) -> int:
        with self._lock:
            key = (host, path)
            self._failure_counts[key] = self._failure_counts.get(key, 0) + 1
            return self._failure_counts[key]

    def _concurrency(self, host: str):
        server = self

        class _Track:
            def __enter__(self):
                with server._lock:
                    server.active[host] = server.active.get(host, 0) + 1
                    server.max_concurrency[host] = max(
                        server.max_concurrency.get(host, 0), server.active[host])

            def __exit__(self, *exc):
                with server._lock:
                    server.active[host] -= 1

        return _Track()

    def start(self) -> "FixtureServer":
        self._thread = threading.Thread(target=self._httpd.serve_forever, daemon=True)
        self._thread.start()
        return self

    def stop(self) -> None:
        self._httpd.shutdown()
        self._httpd.server_close()
        if self._thread:
            self._thread.join(timeout=5)

    def __enter__(self) -> "FixtureServer":
        return self.start()

    def __exit__(self, *exc) -> None:
        self.stop()
