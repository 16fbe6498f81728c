"""Per-feature rules and whole-vector assembly."""

import pytest

from beaconkit.corpus import Corpus, HttpResponseMeta, ImgTagRef, parse_url
from beaconkit.features import (
    CorpusTooSmall,
    FEATURE_COLUMNS,
    FeatureVector,
    featurize,
    featurize_corpus,
    header_features,
    qdom,
    qurl,
    read_feature_csv,
    top_referenced_domains,
    unum,
    write_feature_csv,
)
from beaconkit.filter_engine import compile_filters
from beaconkit.features import TopDomains

from conftest import build_image, build_page


class TestQurl:
    def test_present(self):
        assert qurl(parse_url("http://t.net/p.gif?id=1")) is True

    def test_absent(self):
        assert qurl(parse_url("http://t.net/p.gif")) is False

    def test_empty_query_counts_as_absent(self):
        assert qurl(parse_url("http://t.net/p.gif?")) is False


class TestQdom:
    def test_percent_encoded_referencing_domain(self):
        url = parse_url("http://t.net/p.gif?ref=shop.example.com%2Fcart")
        assert qdom(url, {"example.com"}) is True

    def test_implied_by_qurl(self):
        assert qdom(parse_url("http://t.net/p.gif"), {"example.com"}) is False

    def test_no_domain_in_query(self):
        assert qdom(parse_url("http://t.net/p.gif?x=1"), {"example.com"}) is False

    def test_case_insensitive(self):
        url = parse_url("http://t.net/p.gif?r=SHOP.EXAMPLE.COM")
        assert qdom(url, {"example.com"}) is True


class TestUnum:
    @pytest.mark.parametrize("url,count", [
        ("http://a.com/p.gif", 0),
        ("http://a.com/px?id=42", 2),
        ("http://a1.com/2/3?x=45", 5),
    ])
    def test_digit_count(self, url, count):
        assert unum(parse_url(url)) == count

    def test_token_mode(self):
        url = parse_url("http://a.com/px?id=2024&v=7")
        assert unum(url) == 5
        assert unum(url, count="tokens") == 2


class TestHeaderFeatures:
    def test_no_store_with_zero_age(self):
        meta = HttpResponseMeta(200, cache_control="no-store, max-age=0")
        assert header_features(meta)[2:] == (True, 0)

    def test_absent_cache_control(self):
        meta = HttpResponseMeta(200, etag_present=True)
        etag, cook, noch, mage = header_features(meta)
        assert (etag, cook, noch, mage) == (True, False, False, -1)

    def test_public_long_age(self):
        meta = HttpResponseMeta(200, cache_control="public, max-age=31536000")
        assert header_features(meta)[2:] == (False, 31536000)

    def test_directive_parsing_is_tolerant(self):
        meta = HttpResponseMeta(200, cache_control="  MUST-REVALIDATE ,max-age=abc")
        assert header_features(meta)[2:] == (True, -1)

    def test_negative_age_treated_as_absent(self):
        meta = HttpResponseMeta(200, cache_control="max-age=-5")
        assert header_features(meta)[3] == -1


def corpus_with_counts(counts: dict[str, int]) -> Corpus:
    page = build_page("site.com")
    corpus = Corpus(pages=[page])
    i = 0
    for host, n in counts.items():
        for _ in range(n):
            i += 1
            corpus.images.append(build_image(
                page, f"http://{host}/px{i}.gif", digest=bytes([i]) * 32))
    return corpus


class TestTopReferencedDomains:
    def test_rank_by_count(self):
        corpus = corpus_with_counts({"t.net": 3, "u.org": 2, "v.io": 1})
        top = top_referenced_domains(corpus, k=3)
        assert top.domains == ("t.net", "u.org", "v.io")
        assert top.counts == (3, 2, 1)

    def test_tie_breaks_lexicographically(self):
        corpus = corpus_with_counts({"b.net": 2, "a.net": 2})
        assert top_referenced_domains(corpus, k=1).domains == ("a.net",)

    def test_empty_scope_raises(self):
        with pytest.raises(CorpusTooSmall):
            top_referenced_domains(Corpus(pages=[build_page()]), k=5)

    def test_scope_all_images(self):
        corpus = corpus_with_counts({"t.net": 1})
        corpus.images[0] = build_image(
            build_page("site.com"), "http://t.net/big.gif",
            width=10, height=10, invisible=False)
        with pytest.raises(CorpusTooSmall):
            top_referenced_domains(corpus, k=1, scope="cross_domain_1x1")
        assert top_referenced_domains(corpus, k=1, scope="all_images").domains == ("t.net",)


def make_top(*domains: str) -> TopDomains:
    return TopDomains(tuple(domains), tuple(1 for _ in domains))


class TestFeaturize:
    def test_tracking_pixel_vector(self):
        page = build_page("a.com")
        image = build_image(
            page, "http://t.net/p.gif?uid=77",
            meta=HttpResponseMeta(200, set_cookie_present=True),
            tag=ImgTagRef(src="http://t.net/p.gif?uid=77", alt_present=False),
        )
        filters = compile_filters(["||t.net^"])
        vec = featurize(image, page, filters, make_top("t.net"), ["a.com"])
        assert vec.label is True
        assert vec.qurl is True and vec.unum == 2
        assert vec.blck is True and vec.cook is True
        assert vec.mime_dummies == (True, False, False, False, False)
        assert vec.dtop_dummies[0] is True

    def test_majority_class_shape(self):
        page = build_page("a.com")
        image = build_image(page, "http://a.com/hero.jpg", mime="jpeg",
                            width=400, height=300, invisible=False,
                            cross_domain=False, cross_origin=False)
        vec = featurize(image, page, compile_filters([]), make_top("t.net"), ["a.com"])
        assert vec.label is False and vec.corg is False
        assert vec.mime_dummies == (False, True, False, False, False)

    def test_invisible_svg_third_party(self):
        page = build_page("a.com")
        image = build_image(page, "http://t.net/px.svg", mime="svg",
                            width=1, height=1)
        vec = featurize(image, page, compile_filters([]), make_top(), ["a.com"])
        assert vec.label is True
        assert vec.mime_dummies == (False, False, False, True, False)

    def test_webp_folds_into_other_dummy(self):
        page = build_page("a.com")
        image = build_image(page, "http://a.com/x.webp", mime="webp",
                            width=2, height=2, invisible=False, cross_domain=False)
        vec = featurize(image, page, compile_filters([]), make_top(), ["a.com"])
        assert vec.mime_dummies == (False, False, False, False, True)


class TestVectorValidation:
    def test_qdom_requires_qurl(self):
        with pytest.raises(ValueError):
            FeatureVector(qurl=False, qdom=True, unum=0, corg=False, blck=False,
                          aalt=False, asty=False, etag=False, cook=False,
                          noch=False, mage=-1,
                          mime_dummies=(True, False, False, False, False),
                          dtop_dummies=(False,) * 5, label=False)

    def test_exactly_one_mime_dummy(self):
        with pytest.raises(ValueError):
            FeatureVector(qurl=False, qdom=False, unum=0, corg=False, blck=False,
                          aalt=False, asty=False, etag=False, cook=False,
                          noch=False, mage=-1,
                          mime_dummies=(True, True, False, False, False),
                          dtop_dummies=(False,) * 5, label=False)


class TestCorpusFeaturization:
    def test_fixture_corpus_invariants(self, crawled, data_dir, tmp_path):
        corpus, _ = crawled
        from beaconkit.filter_engine import load_filter_file
        filters = load_filter_file(data_dir / "pinned_filters.txt")
        vectors, top = featurize_corpus(corpus, filters)
        assert len(vectors) == len(corpus.images)
        assert len(top.domains) == 5
        for vec in vectors:
            assert sum(vec.mime_dummies) == 1
            assert not vec.qdom or vec.qurl
            assert vec.mage >= -1
        labels = sum(v.label for v in vectors)
        invisible_cd = sum(1 for r in corpus.images
                           if r.is_invisible and r.is_cross_domain)
        assert labels == invisible_cd
        # round-trip through the CSV contract
        out = tmp_path / "m.csv"
        write_feature_csv(vectors, out, manifest={"filter_digest": filters.source_digest})
        X, y, names = read_feature_csv(out)
        assert tuple(names) == FEATURE_COLUMNS
        assert X.shape == (len(vectors), len(FEATURE_COLUMNS))
        assert y.sum() == labels
        assert (out.parent / "m.csv.manifest.json").exists()

    def test_deterministic_matrix_bytes(self, crawled, data_dir, tmp_path):
        corpus, _ = crawled
        from beaconkit.filter_engine import load_filter_file
        filters = load_filter_file(data_dir / "pinned_filters.txt")
        a, _ = featurize_corpus(corpus, filters)
        b, _ = featurize_corpus(corpus, filters)
        write_feature_csv(a, tmp_path / "a.csv")
        write_feature_csv(b, tmp_path / "b.csv")
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
