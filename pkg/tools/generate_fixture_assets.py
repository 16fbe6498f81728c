#!/usr/bin/env python3
"""Regenerate the committed binary fixtures.

Two outputs:

* ``src/beaconkit/data/fixture_images/`` - the JPEG/WebP templates the
  fixture network serves (Pillow-encoded once, committed).
* ``tests/data/image_fixtures/`` - the byte-exact header-parsing corpus plus
  ``manifest.csv``.  Expected dimensions come from the construction request
  and, wherever the file is a fully valid image, are cross-checked against
  Pillow's declared size before being frozen.

Run from the repo root: ``python tools/generate_fixture_assets.py``.
Requires Pillow (generation only; the package itself never imports it).
"""

from __future__ import annotations

import csv
import io
import struct
import sys
from pathlib import Path

from PIL import Image

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "src"))

from beaconkit.fixtures import make_gif, make_png, make_svg, uniquify_jpeg  # noqa: E402

TEMPLATE_DIR = ROOT / "src" / "beaconkit" / "data" / "fixture_images"
FIXTURE_DIR = ROOT / "tests" / "data" / "image_fixtures"


def pillow_bytes(size: tuple[int, int], fmt: str, **save_args) -> bytes:
    mode = "P" if fmt == "GIF" else "RGB"
    img = Image.new(mode, size, 0)
    buf = io.BytesIO()
    img.save(buf, fmt, **save_args)
    return buf.getvalue()


def check_with_pillow(data: bytes, width: int, height: int) -> None:
    declared = Image.open(io.BytesIO(data)).size
    assert declared == (width, height), f"Pillow says {declared}, wanted {(width, height)}"


def write_templates() -> None:
    TEMPLATE_DIR.mkdir(parents=True, exist_ok=True)
    jpeg_4x3 = pillow_bytes((4, 3), "JPEG")
    jpeg_1x1 = pillow_bytes((1, 1), "JPEG")
    webp_2x2 = pillow_bytes((2, 2), "WEBP", lossless=True)
    check_with_pillow(jpeg_4x3, 4, 3)
    check_with_pillow(jpeg_1x1, 1, 1)
    check_with_pillow(webp_2x2, 2, 2)
    (TEMPLATE_DIR / "jpeg_4x3.jpg").write_bytes(jpeg_4x3)
    (TEMPLATE_DIR / "jpeg_1x1.jpg").write_bytes(jpeg_1x1)
    (TEMPLATE_DIR / "webp_2x2.webp").write_bytes(webp_2x2)


def patch(data: bytes, offset: int, new: bytes) -> bytes:
    return data[:offset] + new + data[offset + len(new):]


def vp8x_only(width: int, height: int) -> bytes:
    # Extended-format header with just the canvas size; enough for header
    # parsers, intentionally carrying no image payload.
    payload = b"\x00\x00\x00\x00" + struct.pack("<I", width - 1)[:3] \
        + struct.pack("<I", height - 1)[:3]
    chunk = b"VP8X" + struct.pack("<I", len(payload)) + payload
    riff = b"WEBP" + chunk
    return b"RIFF" + struct.pack("<I", len(riff)) + riff


def exif_jpeg(width: int, height: int, orientation: int) -> bytes:
    img = Image.new("RGB", (width, height), 0)
    exif = Image.Exif()
    exif[274] = orientation  # orientation tag
    buf = io.BytesIO()
    img.save(buf, "JPEG", exif=exif)
    return buf.getvalue()


def build_fixture_rows() -> list[tuple[str, bytes, str, object, object, str]]:
    """(filename, bytes, mime, width, height, invisible) rows.

    width/height are '' for non-raster/indeterminate cases; invisible is
    'true', 'false' or 'error' (raster header failed to parse).
    """
    rows: list[tuple[str, bytes, str, object, object, str]] = []

    def add(name, data, mime, w, h, invisible):
        rows.append((name, data, mime, w, h, invisible))

    # GIF
    g11 = make_gif(1, 1, 1)
    add("g_1x1.gif", g11, "gif", 1, 1, "true")
    add("g_87a_1x1.gif", patch(g11, 0, b"GIF87a"), "gif", 1, 1, "true")
    add("g_2x1.gif", make_gif(2, 1, 2), "gif", 2, 1, "false")
    add("g_1x2.gif", make_gif(1, 2, 3), "gif", 1, 2, "false")
    add("g_3x5.gif", make_gif(3, 5, 4), "gif", 3, 5, "false")
    add("g_0x0.gif", make_gif(0, 0, 5), "gif", "", "", "error")
    add("g_trunc.gif", make_gif(1, 1, 6)[:8], "gif", "", "", "error")

    # PNG
    p11 = make_png(1, 1, 11)
    add("p_1x1.png", p11, "png", 1, 1, "true")
    add("p_2x1.png", make_png(2, 1, 12), "png", 2, 1, "false")
    add("p_256x1.png", make_png(256, 1, 13), "png", 256, 1, "false")
    p0 = make_png(1, 5, 14)
    add("p_0x5.png", patch(p0, 16, struct.pack(">I", 0)), "png", "", "", "error")
    add("p_trunc.png", p11[:20], "png", "", "", "error")
    add("p_bad_ihdr.png", patch(p11, 12, b"JUNK"), "png", "", "", "error")

    # JPEG (Pillow-encoded; declared sizes are the encoder's)
    j11 = pillow_bytes((1, 1), "JPEG")
    check_with_pillow(j11, 1, 1)
    add("j_1x1.jpg", j11, "jpeg", 1, 1, "true")
    j43 = pillow_bytes((4, 3), "JPEG")
    check_with_pillow(j43, 4, 3)
    add("j_4x3.jpg", j43, "jpeg", 4, 3, "false")
    jp = pillow_bytes((2, 2), "JPEG", progressive=True)
    check_with_pillow(jp, 2, 2)
    add("j_prog_2x2.jpg", jp, "jpeg", 2, 2, "false")
    add("j_comment_1x1.jpg", uniquify_jpeg(j11, 77), "jpeg", 1, 1, "true")
    jx = exif_jpeg(2, 1, orientation=6)
    add("j_exif_2x1.jpg", jx, "jpeg", 2, 1, "false")  # declared size, not rotated
    add("j_trunc.jpg", j43[:5], "jpeg", "", "", "error")
    add("j_nosof.jpg", b"\xff\xd8\xff\xfe\x00\x04hi\xff\xd9", "jpeg", "", "", "error")

    # WebP
    wl = pillow_bytes((1, 1), "WEBP", lossless=True)
    check_with_pillow(wl, 1, 1)
    add("w_vp8l_1x1.webp", wl, "webp", 1, 1, "true")
    wv = pillow_bytes((3, 2), "WEBP", lossless=False)
    check_with_pillow(wv, 3, 2)
    add("w_vp8_3x2.webp", wv, "webp", 3, 2, "false")
    wx = vp8x_only(2, 2)
    add("w_vp8x_2x2.webp", wx, "webp", 2, 2, "false")
    add("w_trunc.webp", wl[:14], "webp", "", "", "error")
    bad = wl[:12] + b"ABCD" + wl[16:]
    add("w_badchunk.webp", bad, "webp", "", "", "error")

    # SVG (sizes by construction; no encoder involved)
    add("s_1x1.svg", make_svg(1, 1, 21), "svg", 1, 1, "true")
    add("s_0p5x1.svg",
        b'<svg xmlns="http://www.w3.org/2000/svg" width="0.5px" height="1px"/>',
        "svg", 0.5, 1, "true")
    add("s_pct.svg",
        b'<svg xmlns="http://www.w3.org/2000/svg" width="100%" height="1"/>',
        "svg", "", "", "false")
    add("s_nosize.svg", b'<svg xmlns="http://www.w3.org/2000/svg"><rect/></svg>',
        "svg", "", "", "false")
    add("s_32x24.svg", make_svg(32, 24, 22), "svg", 32, 24, "false")
    add("s_1x2.svg", make_svg(1, 2, 23), "svg", 1, 2, "false")
    add("s_em.svg",
        b'<svg xmlns="http://www.w3.org/2000/svg" width="1em" height="1em"/>',
        "svg", "", "", "false")

    # Unrecognized content
    add("o_text.bin", b"hello, definitely not an image", "other", "", "", "false")
    add("o_bmp.bin", b"BM" + b"\x00" * 30, "other", "", "", "false")
    add("o_broken_xml.bin", b"<svg width='1' height='1'", "other", "", "", "false")
    return rows


def write_fixtures() -> None:
    FIXTURE_DIR.mkdir(parents=True, exist_ok=True)
    rows = build_fixture_rows()
    with open(FIXTURE_DIR / "manifest.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["filename", "mime", "width", "height", "invisible"])
        for name, data, mime, w, h, invisible in rows:
            (FIXTURE_DIR / name).write_bytes(data)
            writer.writerow([name, mime, w, h, invisible])
    print(f"{len(rows)} fixtures -> {FIXTURE_DIR}")


if __name__ == "__main__":
    write_templates()
    print(f"templates -> {TEMPLATE_DIR}")
    write_fixtures()
