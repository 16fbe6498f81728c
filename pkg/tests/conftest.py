import sys
from pathlib import Path

import pytest

TESTS_DIR = Path(__file__).parent
DATA_DIR = TESTS_DIR / "data"
sys.path.insert(0, str(TESTS_DIR))  # makes `oracles` importable

from beaconkit.corpus import (  # noqa: E402
    HttpResponseMeta,
    ImageRecord,
    ImgTagRef,
    PageRecord,
    FetchStatus,
    parse_url,
)
from beaconkit.crawler import CrawlConfig, run  # noqa: E402
from beaconkit.fixtures import FixtureServer, build_fixture_network  # noqa: E402


@pytest.fixture(scope="session")
def data_dir() -> Path:
    return DATA_DIR


@pytest.fixture(scope="session")
def fixture_network():
    return build_fixture_network()


@pytest.fixture(scope="session")
def fixture_server(fixture_network):
    with FixtureServer(fixture_network) as server:
        yield server


@pytest.fixture(scope="session")
def fixture_config(fixture_server, fixture_network) -> CrawlConfig:
    return CrawlConfig(
        domain_list=tuple(fixture_network.domains),
        timeout_seconds=10,
        passes=1,
        politeness_delay=0.01,
        resolve=fixture_server.resolver,
    )


class CrawlRun:
    def __init__(self, corpus, blobs, request_log, max_concurrency):
        self.corpus = corpus
        self.blobs = blobs
        self.request_log = request_log
        self.max_concurrency = max_concurrency

    def __iter__(self):  # keeps `corpus, blobs = crawled` working
        return iter((self.corpus, self.blobs))


@pytest.fixture(scope="session")
def crawled(fixture_server, fixture_config) -> CrawlRun:
    """One shared crawl of the 20-site network, with its request log."""
    corpus, blobs = run(fixture_config)
    return CrawlRun(corpus, blobs,
                    list(fixture_server.request_log),
                    dict(fixture_server.max_concurrency))


def build_image(page: PageRecord, url: str, *, page_index: int = 0,
                mime: str = "gif", width=1, height=1, invisible=True,
                cross_domain=True, cross_origin=True, digest: bytes = b"\x01" * 32,
                tag: ImgTagRef | None = None,
                meta: HttpResponseMeta | None = None) -> ImageRecord:
    """Hand-assembled record for feature tests (no network involved)."""
    return ImageRecord(
        site_domain=page.site_domain,
        page_index=page_index,
        resolved_url=parse_url(url),
        content_digest=digest,
        mime=mime,
        width=width,
        height=height,
        response_meta=meta or HttpResponseMeta(status=200),
        tag=tag or ImgTagRef(src=url),
        is_invisible=invisible,
        is_cross_domain=cross_domain,
        is_cross_origin=cross_origin,
    )


def build_page(site: str = "a.com", final: str | None = None,
               refs: tuple[ImgTagRef, ...] = ()) -> PageRecord:
    final_url = parse_url(final or f"http://{site}/")
    return PageRecord(
        site_domain=site,
        requested_url=parse_url(f"http://{site}/"),
        final_url=final_url,
        fetch_status=FetchStatus.OK,
        image_refs=refs,
    )
