"""Fetching, frontier crawling and corpus assembly against local servers."""

import json

import pytest

from beaconkit.corpus import FetchStatus, parse_url
from beaconkit.crawler import (
    CrawlConfig,
    FetchTimeout,
    TooManyRedirects,
    crawl_site,
    fetch,
    fetch_images,
    ingest_snapshots,
    run,
)
from beaconkit.fixtures import FixtureNetwork, FixtureResponse, FixtureServer, make_gif


@pytest.fixture(scope="module")
def edge_server():
    html = (("Content-Type", "text/html"),)
    net = FixtureNetwork(
        domains=[("edge.test", None)],
        responses={
            ("edge.test", "/"): FixtureResponse(200, html, b'<a href="/a">a</a>'),
            ("edge.test", "/a"): FixtureResponse(200, html, b"leaf"),
            ("edge.test", "/hop"): FixtureResponse(
                301, (("Location", "/hop2"),), b""),
            ("edge.test", "/hop2"): FixtureResponse(200, html, b"landed"),
            ("edge.test", "/slow"): FixtureResponse(200, html, b"zzz", delay=2.0),
            ("edge.test", "/loop-a"): FixtureResponse(
                302, (("Location", "/loop-b"),), b""),
            ("edge.test", "/loop-b"): FixtureResponse(
                302, (("Location", "/loop-a"),), b""),
        },
    )
    with FixtureServer(net) as server:
        yield server


def edge_config(server, **overrides) -> CrawlConfig:
    settings = dict(domain_list=(("edge.test", None),), timeout_seconds=5,
                    passes=1, politeness_delay=0.0, respect_robots=False,
                    resolve=server.resolver)
    settings.update(overrides)
    return CrawlConfig(**settings)


class TestFetch:
    def test_redirect_chain(self, edge_server):
        result = fetch(parse_url("http://edge.test/hop"), edge_config(edge_server))
        assert result.status == 200
        assert str(result.final_url) == "http://edge.test/hop2"
        assert result.redirect_chain == ("http://edge.test/hop", "http://edge.test/hop2")

    def test_timeout(self, edge_server):
        config = edge_config(edge_server, timeout_seconds=0.3)
        with pytest.raises(FetchTimeout):
            fetch(parse_url("http://edge.test/slow"), config)

    def test_redirect_loop(self, edge_server):
        with pytest.raises(TooManyRedirects):
            fetch(parse_url("http://edge.test/loop-a"), edge_config(edge_server))

    def test_headers_preserved_verbatim(self, edge_server):
        result = fetch(parse_url("http://edge.test/a"), edge_config(edge_server))
        assert result.header("content-type") == "text/html"


class TestCrawlSite:
    def test_frontier_count(self, fixture_server, fixture_config):
        pages = crawl_site("site01.test", fixture_config)
        # landing + products + about + frame
        assert len(pages) == 4
        assert all(p.site_domain == "site01.test" for p in pages)
        assert all(p.fetch_status is FetchStatus.OK for p in pages)

    def test_primary_timeout_short_circuits(self, edge_server):
        net = edge_server.network
        net.responses[("edge.test", "/")] = FixtureResponse(
            200, (("Content-Type", "text/html"),), b'<a href="/a">a</a>', delay=1.0)
        try:
            config = edge_config(edge_server, timeout_seconds=0.2)
            pages = crawl_site("edge.test", config)
            assert len(pages) == 1
            assert pages[0].fetch_status is FetchStatus.TIMEOUT
            assert pages[0].image_refs == ()
        finally:
            net.responses[("edge.test", "/")] = FixtureResponse(
                200, (("Content-Type", "text/html"),), b'<a href="/a">a</a>')

    def test_off_site_redirect_final_url_kept(self, crawled):
        corpus, _ = crawled
        promo = [p for p in corpus.pages
                 if p.site_domain == "site07.test" and p.requested_url.path == "/promo"]
        assert len(promo) == 1
        assert promo[0].final_url.host == "trk1.test"
        lp = [r for r in corpus.images if r.resolved_url.path == "/lp07.png"]
        assert len(lp) == 1
        assert lp[0].is_cross_domain is False  # first party relative to final page


class TestFetchImages:
    def test_duplicate_reference_collapses(self, fixture_server):
        config = CrawlConfig(domain_list=(("site01.test", None),), passes=1,
                             politeness_delay=0.0, timeout_seconds=5,
                             resolve=fixture_server.resolver)
        pages = crawl_site("site01.test", config)
        records, blobs, tally = fetch_images(pages, config)
        assert len(records) == 30  # /about re-references a landing image
        assert tally["empty_src"] == 1
        assert tally["data_uri"] == 1
        assert all(blobs[r.content_digest] for r in records)

    def test_same_digest_two_sites_two_records(self, crawled):
        corpus, _ = crawled
        by_digest: dict[bytes, set[str]] = {}
        for r in corpus.images:
            by_digest.setdefault(r.content_digest, set()).add(r.site_domain)
        shared = {d: sites for d, sites in by_digest.items() if len(sites) > 1}
        assert any(sites == {"site19.test", "site20.test"} for sites in shared.values())


class TestRunProperties:
    def test_any_pass_rule_and_merge(self, fixture_server, fixture_network):
        config = CrawlConfig(domain_list=(("site01.test", None),), passes=2,
                             politeness_delay=0.0, timeout_seconds=5,
                             resolve=fixture_server.resolver)
        corpus, _ = run(config)
        # two passes over one site must not duplicate anything
        assert len([p for p in corpus.pages if p.site_domain == "site01.test"]) == 4
        assert len(corpus.images) == 30

    def test_empty_domain_list(self):
        corpus, blobs = run(CrawlConfig(domain_list=(), passes=1))
        assert corpus.pages == [] and corpus.images == [] and blobs == {}

    def test_site_failing_first_pass_still_sampled(self):
        html = (("Content-Type", "text/html"),)
        net = FixtureNetwork(
            domains=[("flaky.test", None)],
            responses={
                ("flaky.test", "/"): FixtureResponse(
                    200, html, b'<img src="/i.gif">', fail_first=1),
                ("flaky.test", "/i.gif"): FixtureResponse(
                    200, (("Content-Type", "image/gif"),), make_gif(1, 1, 5)),
            },
        )
        with FixtureServer(net) as server:
            config = CrawlConfig(domain_list=(("flaky.test", None),), passes=2,
                                 politeness_delay=0.0, timeout_seconds=5,
                                 respect_robots=False, resolve=server.resolver)
            corpus, _ = run(config)
        from beaconkit.report import summarize
        assert summarize(corpus).domains_sampled_ok == 1
        statuses = [p.fetch_status for p in corpus.pages]
        assert statuses == [FetchStatus.OK]  # the pass-2 success replaced the failure
        assert len(corpus.images) == 1

    def test_all_passes_failing_site_excluded(self, fixture_server):
        config = CrawlConfig(domain_list=(("nosuch.test", None),), passes=2,
                             politeness_delay=0.0, timeout_seconds=2,
                             resolve=fixture_server.resolver)
        corpus, _ = run(config)
        assert all(p.fetch_status is not FetchStatus.OK for p in corpus.pages)
        from beaconkit.report import summarize
        assert summarize(corpus).domains_sampled_ok == 0

    def test_network_containment(self, fixture_server, crawled):
        # every request the shared crawl issued hit a fixture-known host
        hosts = {h for h, _ in crawled.request_log}
        assert hosts <= fixture_server.network.hosts()

    def test_robots_respected(self, crawled):
        assert ("site02.test", "/private") not in crawled.request_log
        private = [p for p in crawled.corpus.pages if p.requested_url.path == "/private"]
        assert len(private) == 1
        assert private[0].fetch_status is FetchStatus.ERROR

    def test_per_host_concurrency_cap(self, fixture_config, crawled):
        cap = fixture_config.per_host_parallelism
        assert crawled.max_concurrency, "no concurrency was recorded at all"
        for host, peak in crawled.max_concurrency.items():
            assert peak <= cap, f"{host} reached {peak} concurrent requests"


class TestIngest:
    def test_snapshots_build_corpus(self, fixture_server, tmp_path):
        root = tmp_path / "snaps"
        (root / "rendered.example").mkdir(parents=True)
        (root / "rendered.example" / "home.html").write_text(
            '<img src="http://trk1.test/px/p01.gif?uid=1001&cb=7&r=site01.test%2F">'
            '<img src="http://trk1.test/px/p01.gif?uid=1001&cb=7&r=site01.test%2F">'
        )
        (root / "meta.json").write_text(json.dumps(
            {"rendered.example/home": "http://rendered.example/"}))
        config = CrawlConfig(domain_list=(), passes=1, politeness_delay=0.0,
                             timeout_seconds=5, resolve=fixture_server.resolver)
        corpus, blobs = ingest_snapshots(root, config)
        assert len(corpus.pages) == 1
        assert corpus.pages[0].fetch_status is FetchStatus.OK
        assert len(corpus.images) == 1  # dedup inside the snapshot page
        record = corpus.images[0]
        assert record.is_invisible and record.is_cross_domain
        assert record.site_domain == "rendered.example"
