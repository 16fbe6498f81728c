"""
The whole pipeline against the bundled synthetic web
====================================================

Twenty deterministic sites with tracker hosts, CDN subdomains, redirects and
invisible pixels are served on localhost; the crawler fetches them exactly
like real sites.  Crawl, summarize, featurize, classify - all in-process,
all reproducible.
"""

import tempfile
from pathlib import Path

from beaconkit.classifier import Dataset, experiment
from beaconkit.crawler import CrawlConfig, run
from beaconkit.features import featurize_corpus, read_feature_csv, write_feature_csv
from beaconkit.filter_engine import compile_filters
from beaconkit.fixtures import FixtureServer, build_fixture_network
from beaconkit.report import render_text, summarize

network = build_fixture_network()
print("expected corpus shape:", network.manifest)

with FixtureServer(network) as server:
    config = CrawlConfig(
        domain_list=tuple(network.domains),
        timeout_seconds=10,
        passes=1,                 # the synthetic network never flakes
        politeness_delay=0.01,    # it is ours, no need to be shy
        resolve=server.resolver,  # any *.test host -> the local server
    )
    corpus, blobs = run(config)

print(render_text(summarize(corpus)))

# The blocked-URL feature wants a filter list; block the tracker hosts.
filters = compile_filters([
    "||trk1.test^$third-party",
    "||trk2.test^$third-party",
    "/px/*$image,third-party",
])
vectors, top = featurize_corpus(corpus, filters)
print("top referenced domains:", ", ".join(top.domains))

out = Path(tempfile.mkdtemp()) / "features.csv"
write_feature_csv(vectors, out)
X, y, names = read_feature_csv(out)
print(f"matrix {X.shape}, beacons={int(y.sum())}")

report = experiment(Dataset(X, y, tuple(names)), resamples=25, k=10, seed=1)
print(report.to_text(title="Beacons vs normal images (fixture corpus)"))
