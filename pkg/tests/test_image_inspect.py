"""Magic-number sniffing, header dimension parsing, invisibility rule."""

import csv

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from beaconkit.fixtures import make_gif, make_png, make_svg
from beaconkit.image_inspect import (
    ImageParseError,
    MimeType,
    RASTER_KINDS,
    content_digest,
    is_invisible,
    raster_dimensions,
    sniff_mime,
    svg_dimensions,
)

SHA256_EMPTY = "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"


class TestSniff:
    def test_gif_magic(self):
        assert sniff_mime(bytes.fromhex("474946383961") + b"\x01\x00") is MimeType.GIF

    def test_png_signature(self):
        assert sniff_mime(bytes.fromhex("89504E470D0A1A0A") + b"rest") is MimeType.PNG

    def test_jpeg_prefix(self):
        assert sniff_mime(b"\xff\xd8\xff\xe0JFIF") is MimeType.JPEG

    def test_svg_by_content_type_and_by_xml(self):
        doc = b'<svg xmlns="http://www.w3.org/2000/svg" width="1" height="1"/>'
        assert sniff_mime(doc, "image/svg+xml") is MimeType.SVG
        assert sniff_mime(doc, None) is MimeType.SVG
        assert sniff_mime(b"not xml at all", "image/svg") is MimeType.SVG

    def test_other(self):
        assert sniff_mime(b"BM\x00\x00") is MimeType.OTHER
        assert sniff_mime(b"") is MimeType.OTHER


class TestRasterDimensions:
    def test_minimal_1x1_gif(self):
        assert raster_dimensions(make_gif(1, 1), MimeType.GIF) == (1, 1)

    def test_png_2x1(self):
        assert raster_dimensions(make_png(2, 1), MimeType.PNG) == (2, 1)

    def test_gif_truncated(self):
        with pytest.raises(ImageParseError):
            raster_dimensions(b"GIF89a\x01", MimeType.GIF)

    def test_zero_dimension_rejected(self):
        with pytest.raises(ImageParseError):
            raster_dimensions(make_gif(0, 0), MimeType.GIF)


class TestSvgDimensions:
    def test_unit_px_and_plain(self):
        assert svg_dimensions('<svg width="1" height="1"/>') == (1, 1)
        assert svg_dimensions('<svg width="0.5px" height="1px"/>') == (0.5, 1)

    def test_percentage_indeterminate(self):
        assert svg_dimensions('<svg width="100%" height="1"/>') is None

    def test_missing_attribute(self):
        assert svg_dimensions("<svg/>") is None

    def test_malformed(self):
        assert svg_dimensions("<svg width='1'") is None


class TestInvisible:
    def test_raster_rule(self):
        assert is_invisible(MimeType.GIF, (1, 1)) is True
        assert is_invisible(MimeType.GIF, (1, 2)) is False

    def test_svg_at_most_one(self):
        assert is_invisible(MimeType.SVG, (0.5, 1)) is True
        assert is_invisible(MimeType.SVG, None) is False

    def test_unknown_dims_visible(self):
        assert is_invisible(MimeType.OTHER, None) is False

    @given(st.integers(min_value=2, max_value=500), st.integers(min_value=2, max_value=500))
    @settings(max_examples=50, deadline=None)
    def test_enlarging_makes_visible(self, w, h):
        assert is_invisible(MimeType.GIF, (1, 1))
        assert not is_invisible(MimeType.GIF, (w, 1))
        assert not is_invisible(MimeType.GIF, (1, h))
        assert not is_invisible(MimeType.GIF, (w, h))


class TestDigest:
    def test_empty_input_published_value(self):
        assert content_digest(b"").hex() == SHA256_EMPTY

    def test_equal_and_differing_bytes(self):
        a = make_png(3, 3, 1)
        assert content_digest(a) == content_digest(bytes(a))
        flipped = bytearray(a)
        flipped[-1] ^= 1
        assert content_digest(bytes(flipped)) != content_digest(a)


def fixture_manifest(data_dir):
    with open(data_dir / "image_fixtures" / "manifest.csv") as fh:
        return list(csv.DictReader(fh))


def test_fixture_manifest_conformance(data_dir):
    """Every committed fixture: (mime, width, height, invisible) must match."""
    rows = fixture_manifest(data_dir)
    assert len(rows) >= 25
    for row in rows:
        data = (data_dir / "image_fixtures" / row["filename"]).read_bytes()
        mime = sniff_mime(data)
        assert mime.value == row["mime"], row["filename"]
        dims = None
        failed = None
        if mime in RASTER_KINDS:
            try:
                dims = raster_dimensions(data, mime)
            except ImageParseError as exc:
                failed = exc
        elif mime is MimeType.SVG:
            dims = svg_dimensions(data.decode("utf-8", "replace"))
        if row["invisible"] == "error":
            assert failed is not None, row["filename"]
            continue
        assert failed is None, row["filename"]
        expected = (float(row["width"]), float(row["height"])) if row["width"] else None
        got = tuple(float(v) for v in dims) if dims is not None else None
        assert got == expected, row["filename"]
        assert is_invisible(mime, dims) is (row["invisible"] == "true"), row["filename"]


def test_fixtures_agree_with_pillow(data_dir):
    """Where Pillow can open a fixture, its declared size must agree."""
    PIL = pytest.importorskip("PIL.Image")
    import io
    checked = 0
    for row in fixture_manifest(data_dir):
        if row["invisible"] == "error" or row["mime"] not in ("gif", "png", "jpeg", "webp"):
            continue
        data = (data_dir / "image_fixtures" / row["filename"]).read_bytes()
        try:
            declared = PIL.open(io.BytesIO(data)).size
        except Exception:
            continue  # header-only fixtures carry no decodable payload
        assert declared == (int(row["width"]), int(row["height"])), row["filename"]
        checked += 1
    assert checked >= 10


@given(st.binary(max_size=256), st.one_of(st.none(), st.text(max_size=20)))
@settings(max_examples=300, deadline=None)
def test_sniff_never_raises(data, content_type):
    sniff_mime(data, content_type)


@given(st.binary(max_size=128), st.sampled_from(sorted(RASTER_KINDS, key=lambda m: m.value)))
@settings(max_examples=300, deadline=None)
def test_raster_dimensions_never_overruns(data, mime):
    try:
        raster_dimensions(data, mime)
    except ImageParseError:
        pass  # rejection is fine, crashing is not


def test_svg_fixture_roundtrip_through_maker():
    body = make_svg(1, 1, 9)
    assert sniff_mime(body) is MimeType.SVG
    assert is_invisible(MimeType.SVG, svg_dimensions(body.decode()))
