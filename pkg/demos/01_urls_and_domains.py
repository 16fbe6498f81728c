"""
URL handling and the two domain-comparison rules
================================================

Everything downstream hinges on two questions about an image URL: does it
share its second-level domain with the page that referenced it, and does it
share the page's origin?
"""

from beaconkit import is_cross_domain, is_cross_origin, parse_url, second_level_domain

# Parsing normalizes scheme and host, resolves relative references, and
# drops credentials and fragments.
page = parse_url("HTTP://Shop.Example.COM/cart?session=9#top")
print("canonical:", page)

pixel = parse_url("//tracker.example.com/p.gif?uid=442", base=page)
print("resolved: ", pixel)

# The naive rule keeps the last two DNS labels; the suffix-table rule knows
# that e.g. co.uk is not a registrable domain.
for host in ("tracker.example.com", "www.example.co.uk", "localhost"):
    print(f"{host:26s} naive={second_level_domain(host):16s}"
          f" psl={second_level_domain(host, 'psl')}")

# tracker.example.com is a different origin but the same second-level
# domain: "the third party is also a first party".
print("cross-domain:", is_cross_domain(page, pixel))
print("cross-origin:", is_cross_origin(page, pixel))

third_party = parse_url("http://ads.analytics.net/i.gif")
print("vs ads.analytics.net -> cross-domain:", is_cross_domain(page, third_party))
