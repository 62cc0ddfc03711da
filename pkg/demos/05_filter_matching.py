"""The filter engine on its own: anchors, separators, options and exceptions.

    python demos/05_filter_matching.py
"""

from jsblock.filters import MatchContext, match_url, parse_list
from jsblock.psl import registrable_domain
from jsblock.trace import ResourceKind

rules = parse_list("""\
! ads and analytics
||doubleclick.net^
||facebook.net^$third-party
/pixel.gif?
@@||google-analytics.com/analytics.js$script
||google-analytics.com^
example.com##.banner
""")
print(f"{len(rules.block_rules)} block rules, {len(rules.exception_rules)} exceptions, "
      f"{rules.stats.skipped} skipped lines")

page = "https://www.example.co.uk/"
cases = [
    ("https://ad.doubleclick.net/activity;src=1", ResourceKind.IMAGE),
    ("https://doubleclick.network/x", ResourceKind.IMAGE),
    ("https://connect.facebook.net/en_US/fbevents.js", ResourceKind.SCRIPT),
    ("https://cdn.example.co.uk/pixel.gif?id=3", ResourceKind.IMAGE),
    ("https://www.google-analytics.com/analytics.js", ResourceKind.SCRIPT),
    ("https://www.google-analytics.com/collect?v=1", ResourceKind.XHR),
]
for url, kind in cases:
    d = match_url(rules, MatchContext(url, page, kind))
    print(f"{d.verdict.value:>8}  {url}  <- {d.rule.raw if d.rule else '-'}")

for url in ("https://a.b.example.co.uk/", "https://google.com.uk/", "https://google.com/", "https://127.0.0.1:8080/"):
    print(f"registrable domain of {url}: {registrable_domain(url)}")
