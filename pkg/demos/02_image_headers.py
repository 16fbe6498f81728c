"""
Reading image headers without decoding pixels
=============================================

A beacon declares its 1x1 size in the first few dozen bytes.  The inspector
sniffs the format from magic numbers and reads the declared dimensions
straight out of the header; SVG sizing comes from the root element's
attributes.
"""

from beaconkit.fixtures import make_gif, make_png, make_svg
from beaconkit.image_inspect import (
    content_digest,
    is_invisible,
    raster_dimensions,
    sniff_mime,
    svg_dimensions,
)

samples = {
    "tracking pixel (gif)": make_gif(1, 1),
    "spacer (png 1x1)": make_png(1, 1),
    "photo-ish (png 40x30)": make_png(40, 30),
    "vector pixel (svg)": make_svg(1, 1),
    "vector logo (svg)": make_svg(120, 40),
}

for name, data in samples.items():
    mime = sniff_mime(data)
    if mime.value == "svg":
        dims = svg_dimensions(data.decode())
    else:
        dims = raster_dimensions(data, mime)
    print(f"{name:24s} mime={mime.value:4s} dims={dims}"
          f" invisible={is_invisible(mime, dims)}"
          f" digest={content_digest(data).hex()[:12]}...")

# Broken files are a tallied outcome, not a crash.
from beaconkit.image_inspect import ImageParseError, MimeType

try:
    raster_dimensions(make_gif(1, 1)[:7], MimeType.GIF)
except ImageParseError as exc:
    print("truncated gif ->", type(exc).__name__, "-", exc)
