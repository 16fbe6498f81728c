"""beaconkit: find and classify invisible tracking-pixel images.

The pipeline, end to end: crawl a list of sites (or ingest pre-rendered DOM
snapshots), collect every image referenced from ``<img>`` tags, work out each
image's MIME type, pixel dimensions, invisibility and cross-domain status,
compute a compact per-image feature vector (URL shape, filter-list verdict,
tag attributes, caching headers, MIME and top-domain dummies), and run a
seeded under-sampling cross-validation experiment that separates third-party
1x1 beacons from ordinary images.
"""

from .corpus import (
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
    second_level_domain,
)

__version__ = "0.1.0"
