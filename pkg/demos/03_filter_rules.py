"""
Would an ad-blocker have stopped this request?
==============================================

The filter engine compiles a plain-text rule list (the same syntax popular
blocking lists use) and answers per request.  Exceptions outrank blocks,
and option gates see the request context: first or third party, resource
type, page domain.
"""

from beaconkit import parse_url
from beaconkit.filter_engine import MatchContext, compile_filters, matches

rules = """\
! demo snapshot
||adnet.example^$third-party
/telemetry/*$image
@@||adnet.example/legit/$image
||promo.io^$domain=shop.test
cosmetic.example##.banner
""".splitlines()

filters = compile_filters(rules)
print(f"compiled: {len(filters.blocking)} blocking, {len(filters.exceptions)} exception,"
      f" skipped {filters.skipped} {dict(filters.skip_reasons)}")

requests = [
    ("http://adnet.example/px.gif", "shop.test", True),
    ("http://adnet.example/legit/logo.png", "shop.test", True),
    ("http://cdn.shop.test/telemetry/t.gif", "shop.test", False),
    ("http://promo.io/sale.jpg", "shop.test", True),
    ("http://promo.io/sale.jpg", "news.test", True),
    ("http://images.shop.test/hero.jpg", "shop.test", False),
]

for url, page_sld, third in requests:
    ctx = MatchContext(request_url=parse_url(url), page_sld=page_sld,
                       is_third_party=third)
    verdict = matches(filters, ctx)
    print(f"{url:42s} on {page_sld:10s} -> {verdict.value}")
