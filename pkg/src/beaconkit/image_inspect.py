"""Identify image formats and read declared dimensions from raw bytes.

Only headers are parsed, never pixel data: a 1x1 beacon is a 1x1 beacon by
declaration.  Raster dimension readers fail loudly (``TruncatedImage``,
``UnsupportedVariant``, ``InvalidDimensions``) so callers can keep a
parse-failure tally; SVG sizing is indeterminate (``None``) rather than an
error when the root attributes are missing or non-pixel.
"""

from __future__ import annotations

import hashlib
import re
import struct
import xml.etree.ElementTree as ET
from enum import Enum
from typing import Optional

__all__ = [
    "MimeType",
    "ImageParseError",
    "TruncatedImage",
    "UnsupportedVariant",
    "InvalidDimensions",
    "sniff_mime",
    "raster_dimensions",
    "svg_dimensions",
    "is_invisible",
    "content_digest",
]


class MimeType(str, Enum):
    GIF = "gif"
    JPEG = "jpeg"
    PNG = "png"
    SVG = "svg"
    WEBP = "webp"
    OTHER = "other"


RASTER_KINDS = frozenset({MimeType.GIF, MimeType.JPEG, MimeType.PNG, MimeType.WEBP})


class ImageParseError(Exception):
    """Base for failures that exclude an image from invisibility statistics."""


class TruncatedImage(ImageParseError):
    pass


class UnsupportedVariant(ImageParseError):
    pass


class InvalidDimensions(ImageParseError):
    """Zero-sized raster declarations; the format specs forbid them."""


_SVG_CONTENT_TYPES = {"image/svg", "image/svg+xml"}


def sniff_mime(data: bytes, content_type: Optional[str] = None) -> MimeType:
    """Classify image bytes by magic number.

    The Content-Type header is only consulted as a fallback for SVG, which is
    text and has no magic bytes.  Anything unrecognized is ``OTHER``.
    """
    if data.startswith(b"GIF87a") or data.startswith(b"GIF89a"):
        return MimeType.GIF
    if data.startswith(b"\x89PNG\r\n\x1a\n"):
        return MimeType.PNG
    if data.startswith(b"\xff\xd8\xff"):
        return MimeType.JPEG
    if data[:4] == b"RIFF" and data[8:12] == b"WEBP":
        return MimeType.WEBP
    if _looks_like_svg_xml(data):
        return MimeType.SVG
    if content_type is not None:
        base = content_type.split(";", 1)[0].strip().lower()
        if base in _SVG_CONTENT_TYPES:
            return MimeType.SVG
    return MimeType.OTHER


def _looks_like_svg_xml(data: bytes) -> bool:
    head = data.lstrip(b"\xef\xbb\xbf \t\r\n")
    if not head.startswith(b"<"):
        return False
    try:
        root = ET.fromstring(data)
    except ET.ParseError:
        return False
    tag = root.tag
    return tag == "svg" or tag.endswith("}svg")


def raster_dimensions(data: bytes, mime: MimeType) -> tuple[int, int]:
    """Read the declared (width, height) from a raster header."""
    if mime is MimeType.GIF:
        dims = _gif_dimensions(data)
    elif mime is MimeType.PNG:
        dims = _png_dimensions(data)
    elif mime is MimeType.JPEG:
        dims = _jpeg_dimensions(data)
    elif mime is MimeType.WEBP:
        dims = _webp_dimensions(data)
    else:
        raise ValueError(f"not a raster format: {mime}")
    if dims[0] <= 0 or dims[1] <= 0:
        raise InvalidDimensions(f"declared size {dims[0]}x{dims[1]}")
    return dims


def _gif_dimensions(data: bytes) -> tuple[int, int]:
    # Logical screen descriptor: u16le pairs at offsets 6 and 8.  Animated
    # files declare their beacon size here, so frames are never consulted.
    if len(data) < 10:
        raise TruncatedImage("GIF shorter than logical screen descriptor")
    w, h = struct.unpack_from("<HH", data, 6)
    return w, h


def _png_dimensions(data: bytes) -> tuple[int, int]:
    # IHDR is mandatory and first: u32be pair at offsets 16 and 20.
    if len(data) < 24:
        raise TruncatedImage("PNG shorter than IHDR")
    if data[12:16] != b"IHDR":
        raise UnsupportedVariant("PNG without leading IHDR chunk")
    w, h = struct.unpack_from(">II", data, 16)
    return w, h


_JPEG_SOF_MARKERS = frozenset(
    {0xC0, 0xC1, 0xC2, 0xC3, 0xC5, 0xC6, 0xC7, 0xC9, 0xCA, 0xCB, 0xCD, 0xCE, 0xCF}
)
_JPEG_STANDALONE = frozenset({0x01, *range(0xD0, 0xD8), 0xD8})


def _jpeg_dimensions(data: bytes) -> tuple[int, int]:
    # Walk marker segments until the first SOFn; height precedes width.
    pos = 2
    n = len(data)
    while True:
        if pos + 1 >= n:
            raise TruncatedImage("JPEG ended before a frame header")
        if data[pos] != 0xFF:
            raise UnsupportedVariant("JPEG marker stream out of sync")
        while pos < n and data[pos] == 0xFF:  # fill bytes
            pos += 1
        if pos >= n:
            raise TruncatedImage("JPEG ended inside a marker")
        marker = data[pos]
        pos += 1
        if marker in _JPEG_STANDALONE:
            continue
        if marker == 0xD9:  # EOI with no frame header
            raise UnsupportedVariant("JPEG without SOF segment")
        if pos + 2 > n:
            raise TruncatedImage("JPEG ended inside a segment length")
        (seg_len,) = struct.unpack_from(">H", data, pos)
        if seg_len < 2:
            raise UnsupportedVariant("JPEG segment with impossible length")
        if marker in _JPEG_SOF_MARKERS:
            if pos + 7 > n:
                raise TruncatedImage("JPEG frame header cut short")
            h, w = struct.unpack_from(">HH", data, pos + 3)
            return w, h
        if marker == 0xDA:  # scan data before any SOF: give up
            raise UnsupportedVariant("JPEG scan started before SOF segment")
        pos += seg_len


def _webp_dimensions(data: bytes) -> tuple[int, int]:
    if len(data) < 16:
        raise TruncatedImage("WebP shorter than chunk header")
    fourcc = data[12:16]
    payload = data[20:]
    if fourcc == b"VP8 ":
        # Lossy: start code 9d 01 2a, then two u16le with 14-bit dimensions.
        if len(payload) < 10:
            raise TruncatedImage("VP8 payload cut short")
        if payload[3:6] != b"\x9d\x01\x2a":
            raise UnsupportedVariant("VP8 frame without start code")
        w, h = struct.unpack_from("<HH", payload, 6)
        return w & 0x3FFF, h & 0x3FFF
    if fourcc == b"VP8L":
        # Lossless: signature 0x2f, then 14+14 bits of (size - 1).
        if len(payload) < 5:
            raise TruncatedImage("VP8L payload cut short")
        if payload[0] != 0x2F:
            raise UnsupportedVariant("VP8L stream without signature byte")
        (bits,) = struct.unpack_from("<I", payload, 1)
        return (bits & 0x3FFF) + 1, ((bits >> 14) & 0x3FFF) + 1
    if fourcc == b"VP8X":
        # Extended: 24-bit little-endian (canvas size - 1) at payload offset 4.
        if len(payload) < 10:
            raise TruncatedImage("VP8X payload cut short")
        w = int.from_bytes(payload[4:7], "little") + 1
        h = int.from_bytes(payload[7:10], "little") + 1
        return w, h
    raise UnsupportedVariant(f"unknown WebP chunk {fourcc!r}")


_LENGTH_RE = re.compile(r"^([0-9]*\.?[0-9]+)(px)?$")


def svg_dimensions(text: str) -> Optional[tuple[float, float]]:
    """Numeric width/height attributes of the root ``<svg>`` element.

    A ``px`` suffix is stripped; any other unit, percentages, or a missing
    attribute make the size indeterminate (``None``).
    """
    try:
        root = ET.fromstring(text)
    except ET.ParseError:
        return None
    w = _svg_length(root.get("width"))
    h = _svg_length(root.get("height"))
    if w is None or h is None:
        return None
    return w, h


def _svg_length(value: Optional[str]) -> Optional[float]:
    if value is None:
        return None
    m = _LENGTH_RE.match(value.strip())
    if not m:
        return None
    n = float(m.group(1))
    return n if n > 0 else None


def is_invisible(mime: MimeType, dims: Optional[tuple[float, float]]) -> bool:
    """Invisibility rule: rasters must declare exactly 1x1 pixels; SVGs are
    invisible when both lengths are at most one.  Unknown size is visible."""
    if dims is None:
        return False
    w, h = dims
    if mime is MimeType.SVG:
        return w <= 1 and h <= 1
    return w == 1 and h == 1


def content_digest(data: bytes) -> bytes:
    """SHA-256 of the exact bytes; the per-site image dedup key."""
    return hashlib.sha256(data).digest()
