"""Tag extraction tolerance and frontier filtering."""

from hypothesis import given, settings
from hypothesis import strategies as st

from beaconkit.corpus import parse_url
from beaconkit.html_extract import extract, frontier


def test_img_with_style_and_empty_alt():
    res = extract(b'<img src="http://t.net/p.gif" alt="" style="display:none">')
    assert len(res.img_refs) == 1
    ref = res.img_refs[0]
    assert ref.src == "http://t.net/p.gif"
    assert ref.alt_present is True  # empty alt still counts as present
    assert ref.style_value == "display:none"


def test_unquoted_uppercase_attributes():
    res = extract(b"<IMG SRC=a.png>")
    assert [r.src for r in res.img_refs] == ["a.png"]
    assert res.img_refs[0].alt_present is False


def test_truncated_document_still_yields_tag():
    res = extract(b'<p><img src="x.gif"')
    assert [r.src for r in res.img_refs] == ["x.gif"]


def test_entities_decoded_in_attributes():
    res = extract(b'<img src="http://t.net/p.gif?a=1&amp;b=2">')
    assert res.img_refs[0].src == "http://t.net/p.gif?a=1&b=2"


def test_anchor_and_frame_collection_order():
    html = b'<a href="/one"><img src="i.gif"></a><iframe src="/f"></iframe><a href="/two">'
    res = extract(html)
    assert res.anchor_hrefs == ["/one", "/two"]
    assert res.frame_srcs == ["/f"]


def test_img_without_src_skipped():
    res = extract(b'<img alt="no source"><img src="ok.gif">')
    assert [r.src for r in res.img_refs] == ["ok.gif"]


def test_duplicates_preserved():
    res = extract(b'<img src="a.gif"><img src="a.gif">')
    assert len(res.img_refs) == 2


def test_charset_hint_and_meta_sniff():
    latin = "<img src='caf\xe9.gif'>".encode("latin-1")
    assert extract(latin, "latin-1").img_refs[0].src == "caf\xe9.gif"
    meta = b'<meta charset="latin-1"><img src="caf\xe9.gif">'
    assert extract(meta).img_refs[0].src == "caf\xe9.gif"


def test_frontier_same_sld_filter():
    page = parse_url("http://a.com/")
    res = extract(b'<a href="/x"></a><a href="http://a.com/y"></a><a href="http://b.net/z"></a>')
    assert [str(u) for u in frontier(res, page)] == ["http://a.com/x", "http://a.com/y"]


def test_frontier_skips_non_http():
    res = extract(b'<a href="mailto:me@a.com"></a>')
    assert frontier(res, parse_url("http://a.com/")) == []


def test_frontier_protocol_relative_subdomain():
    res = extract(b'<a href="//sub.a.com/p"></a>')
    assert [str(u) for u in frontier(res, parse_url("http://a.com/"))] == ["http://sub.a.com/p"]


def test_frontier_dedup_stable():
    res = extract(b'<a href="/x"></a><a href="/y"></a><a href="/x"></a>')
    assert [u.path for u in frontier(res, parse_url("http://a.com/"))] == ["/x", "/y"]


@given(st.binary(max_size=2048))
@settings(max_examples=300, deadline=None)
def test_never_raises_on_fuzzed_bytes(data):
    extract(data)


@given(st.text(alphabet=st.characters(codec="utf-8"), max_size=512))
@settings(max_examples=200, deadline=None)
def test_never_raises_on_fuzzed_text(text):
    extract(text.encode("utf-8"))


@given(st.lists(st.from_regex(r"[a-zA-Z0-9/._:-]{1,24}", fullmatch=True), max_size=6))
@settings(max_examples=100, deadline=None)
def test_src_values_appear_verbatim(srcs):
    html = "".join(f'<p><img src="{s}">' for s in srcs).encode()
    res = extract(html)
    assert [r.src for r in res.img_refs] == srcs
