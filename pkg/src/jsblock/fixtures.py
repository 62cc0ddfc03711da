"""Bundled fixture corpora and a seeded random trace generator.

The intuit-style page reproduces the localization worked example: ``utag.js``
takes part in 132 tracking and 160 functional requests, its ``loader`` method
in 131/1 and its ``fireCORS`` method in 1/159. The livescore-style page has a
mixed ``_app`` bundle whose method ``u`` issues the only tracking request.
"""

from __future__ import annotations

import random
from importlib import resources
from pathlib import Path

from .labeler import LabeledTrace, RequestLabel
from .trace import (NetworkRequest, PageTrace, ResourceKind, ResourceTag, StackFrame, TagKind,
                    iter_corpus, serialize_trace)

UTAG = "https://tags.tiqcdn.com/utag/intuit/main/prod/utag.js"
GTM = "https://www.googletagmanager.com/gtm.js?id=GTM-5KW3"
APP = "https://www.livescore.com/_next/static/chunks/pages/_app-3f2c1a9e.js"
ANALYTICS = "https://www.google-analytics.com/analytics.js"

FILTER_LIST = """\
[Adblock Plus 2.0]
! Title: jsblock fixture list
! Network rules in the EasyList/EasyPrivacy dialect used by the fixture corpus.
||doubleclick.net^
||googleadservices.com^
||google-analytics.com^
||googletagmanager.com^
||scorecardresearch.com^
||facebook.net^$third-party
||bat.bing.com^
/pixel.gif?
@@||google-analytics.com/analytics.js$script
! cosmetic and regex rules are skipped
livescore.com##.ad-banner
/banner[0-9]+/
"""

FETCH_SNIPPET = """\
u = function(e) {
            ...
            return fetch(e).then(c.cg).then((function(e)
            {return e || {}}))
"""

ANALYTICS_SNIPPET = """\
wd = function(a, b, c, d) {
    var e = O.XMLHttpRequest;
    if (!e) return !1;
    var g = new e;
    if (!("withCredentials" in g)) return !1;
    a = a.replace(/^http:/, "https:");
    g.open("POST", a, !0);
    g.withCredentials = !0;
    g.setRequestHeader("Content-Type", "text/plain");
    g.onreadystatechange = function() {
      if (4 == g.readyState) {
        if (d && "text/plain" === g.getResponseHeader("Content-Type")) try {
          Ea(d, g.responseText, c)
        }
        catch (ca) {
          ge("xhr",
            "rsp"), c()
        } else c();
        g = null}};
    g.send(b);
    return 0}
  ...
ta = function(a) {
    var b = M.createElement("img");
    b.width = 1;
    b.height = 1;
    b.src = a;
    return b}
"""


def _frame(script: str, method: str, line: int = 1, column: int = 1) -> StackFrame:
    return StackFrame(script, method, line, column)


def intuit_trace() -> PageTrace:
    requests = [NetworkRequest("r0000", UTAG, ResourceKind.SCRIPT, (), UTAG)]
    loader = (_frame(UTAG, "loader", 1, 18231),)
    fire = (_frame(UTAG, "fireCORS", 1, 9412),)
    trackers = ["https://ad.doubleclick.net/activity;src=1;ord={}",
                "https://sb.scorecardresearch.com/b?c1=2&c2=6035&n={}",
                "https://www.googleadservices.com/pagead/conversion/{}/",
                "https://bat.bing.com/action/0?ti={}"]
    n = 1
    for i in range(131):
        url = trackers[i % len(trackers)].format(i)
        kind = ResourceKind.IMAGE if i % 2 else ResourceKind.XHR
        requests.append(NetworkRequest(f"r{n:04d}", url, kind, loader))
        n += 1
    requests.append(NetworkRequest(f"r{n:04d}", "https://www.intuit.com/etc/tags/config.json",
                                   ResourceKind.XHR, loader))
    n += 1
    requests.append(NetworkRequest(f"r{n:04d}", "https://www.google-analytics.com/collect?v=1&t=pageview",
                                   ResourceKind.XHR, fire))
    n += 1
    tags = []
    for i in range(159):
        if i < 12:
            url = f"https://digitalasset.intuit.com/IMAGE/A{i:03d}/hero.png"
            requests.append(NetworkRequest(f"r{n:04d}", url, ResourceKind.IMAGE, fire))
            tags.append(ResourceTag(TagKind.IMG, url))
        else:
            url = f"https://www.intuit.com/api/content/v2/block/{i}"
            requests.append(NetworkRequest(f"r{n:04d}", url, ResourceKind.XHR, fire))
        n += 1
    parser_img = "https://www.intuit.com/etc/logo.svg"
    requests.append(NetworkRequest(f"r{n:04d}", parser_img, ResourceKind.IMAGE))
    tags.append(ResourceTag(TagKind.IMG, parser_img))
    tags.append(ResourceTag(TagKind.SCRIPT, UTAG))
    return PageTrace("https://www.intuit.com/", tuple(requests), tuple(tags))


def livescore_trace() -> PageTrace:
    root = _frame(APP, "r", 1, 402)
    jt = (_frame(APP, "Jt", 1, 88120), root)
    ke = (_frame(APP, "Ke", 1, 51007), root)
    gtm = (_frame(GTM, "Bc", 214, 377),)
    requests = [
        NetworkRequest("gtm", GTM, ResourceKind.SCRIPT, (), GTM),
        NetworkRequest("app", APP, ResourceKind.SCRIPT, (), APP),
        NetworkRequest("gads", "https://www.googleadservices.com/pagead/conversion_async.js",
                       ResourceKind.SCRIPT, gtm),
        NetworkRequest("ga", "https://www.google-analytics.com/g/collect?v=2&tid=G-L5",
                       ResourceKind.XHR, gtm),
        NetworkRequest("dclk", "https://securepubads.g.doubleclick.net/gampad/ads?iu=/ls",
                       ResourceKind.XHR, (_frame(APP, "u", 1, 73350), root)),
        NetworkRequest("ann", "https://www.livescore.com/api/announcements/", ResourceKind.XHR, jt),
        NetworkRequest("stats", "https://prod-public-api.livescore.com/v1/api/app/stage/soccer",
                       ResourceKind.XHR, jt),
        NetworkRequest("news", "https://www.livescore.com/api/news/featured", ResourceKind.XHR, jt),
    ]
    tags = [ResourceTag(TagKind.SCRIPT, GTM), ResourceTag(TagKind.SCRIPT, APP)]
    for i in range(4):
        url = f"https://static.livescore.com/content/teams/{i}.png"
        requests.append(NetworkRequest(f"img{i}", url, ResourceKind.IMAGE, ke))
        tags.append(ResourceTag(TagKind.IMG, url))
    highlight = "https://static.livescore.com/content/highlight.mp4"
    requests.append(NetworkRequest("video", highlight, ResourceKind.MEDIA, ke))
    tags.append(ResourceTag(TagKind.VIDEO, highlight))
    return PageTrace("https://www.livescore.com/en/", tuple(requests), tuple(tags))


def analytics_trace(site: str, with_ta: bool) -> PageTrace:
    page = f"https://www.{site}/"
    wd = (_frame(ANALYTICS, "wd", 1, 11003), _frame(ANALYTICS, "Sc", 1, 30212))
    ta = (_frame(ANALYTICS, "ta", 1, 6120), _frame(ANALYTICS, "Sc", 1, 30212))
    own = f"https://www.{site}/static/main.js"
    requests = [
        NetworkRequest("s0", ANALYTICS, ResourceKind.SCRIPT, (_frame(own, "init", 3, 14),), ANALYTICS),
        NetworkRequest("s1", own, ResourceKind.SCRIPT, (), own),
        NetworkRequest("x0", "https://www.google-analytics.com/j/collect?v=1&t=pageview", ResourceKind.XHR, wd),
        NetworkRequest("x1", f"https://www.{site}/api/session", ResourceKind.XHR, (_frame(own, "init", 3, 14),)),
        NetworkRequest("x2", f"https://cdn.{site}/img/banner.jpg", ResourceKind.IMAGE, (_frame(own, "render", 40, 2),)),
    ]
    tags = [ResourceTag(TagKind.IMG, f"https://cdn.{site}/img/banner.jpg"),
            ResourceTag(TagKind.SCRIPT, own), ResourceTag(TagKind.SCRIPT, ANALYTICS)]
    if with_ta:
        pixel = "https://www.google-analytics.com/r/collect?v=1&t=event"
        requests.append(NetworkRequest("p0", pixel, ResourceKind.IMAGE, ta))
    return PageTrace(page, tuple(requests), tuple(tags))


def fixture_corpus() -> list[tuple[str, PageTrace]]:
    return [
        ("intuit", intuit_trace()),
        ("livescore", livescore_trace()),
        ("site-a", analytics_trace("example-news.com", True)),
        ("site-b", analytics_trace("example-shop.co.uk", False)),
        ("site-c", analytics_trace("example-blog.org", True)),
    ]


def fixture_path(*parts: str) -> Path:
    return Path(str(resources.files("jsblock.data").joinpath("fixtures", *parts)))


def load_fixture_corpus(name: str = "corpus") -> list[tuple[str, PageTrace]]:
    """``name`` is ``"corpus"`` (all pages) or ``"intuit"`` (the worked example alone)."""
    return list(iter_corpus(fixture_path(name)))


def write_fixtures(directory: str | Path) -> None:
    """Regenerate the bundled fixture files under ``directory``."""
    directory = Path(directory)
    for sub, pages in (("corpus", fixture_corpus()), ("intuit", fixture_corpus()[:1])):
        (directory / sub).mkdir(parents=True, exist_ok=True)
        for site, trace in pages:
            (directory / sub / f"{site}.json").write_text(serialize_trace(trace), encoding="utf-8")
    (directory / "filters.txt").write_text(FILTER_LIST, encoding="utf-8")
    (directory / "fetch_snippet.js").write_text(FETCH_SNIPPET, encoding="utf-8")
    (directory / "analytics_snippet.js").write_text(ANALYTICS_SNIPPET, encoding="utf-8")


# -- random traces -----------------------------------------------------------

_DOMAINS = ["a.com", "cdn.a.com", "b.net", "t.io", "x.org"]
_METHODS = ["f", "g", "h", "k"]


def random_labeled_trace(rng: random.Random, max_requests: int = 20) -> LabeledTrace:
    """A small labeled trace with script chains, shared URLs and random labels."""
    n_scripts = rng.randint(1, 5)
    scripts = [f"https://{rng.choice(_DOMAINS)}/s{i}.js" for i in range(n_scripts)]
    scripts = list(dict.fromkeys(scripts))
    frames = [StackFrame(s, m, rng.randint(1, 50), rng.randint(1, 80))
              for s in scripts for m in rng.sample(_METHODS, rng.randint(1, 3))]
    url_pool = [f"https://{rng.choice(_DOMAINS)}/r{i}" for i in range(rng.randint(1, 8))]
    requests: list[NetworkRequest] = []
    for s in scripts:
        if len(requests) < max_requests and rng.random() < 0.8:
            stack = tuple(rng.sample(frames, rng.randint(0, min(2, len(frames)))))
            requests.append(NetworkRequest(f"q{len(requests)}", s, ResourceKind.SCRIPT, stack, s))
    kinds = [k for k in ResourceKind if k is not ResourceKind.SCRIPT]
    target = rng.randint(len(requests), max_requests)
    while len(requests) < target:
        depth = rng.choice([0, 1, 1, 2, 3, 4])
        stack = tuple(rng.choice(frames) for _ in range(depth))
        requests.append(NetworkRequest(f"q{len(requests)}", rng.choice(url_pool),
                                       rng.choice(kinds), stack))
    tags = [ResourceTag(rng.choice(list(TagKind)), rng.choice(url_pool + scripts + ["https://z.com/x"]))
            for _ in range(rng.randint(0, 6))]
    trace = PageTrace(f"https://{rng.choice(_DOMAINS)}/", tuple(requests), tuple(tags))
    labels = {r.request_id: rng.choice([RequestLabel.TRACKING, RequestLabel.FUNCTIONAL])
              for r in requests}
    return LabeledTrace(trace, labels, {r.request_id: None for r in requests})
