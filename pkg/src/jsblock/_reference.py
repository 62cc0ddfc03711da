"""Slow, direct reference implementations used as test oracles.

These deliberately share no matching or simulation code with the production
paths: the filter oracle walks rule and URL character by character, and the
simulation oracle recomputes the blocked-script closure by naive iteration.
"""

from __future__ import annotations

from functools import lru_cache

_NOT_SEPARATOR = set("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_-.%")
_KINDS = {"script": "script", "image": "image", "subdocument": "subdocument",
          "stylesheet": "stylesheet", "xmlhttprequest": "xhr", "xhr": "xhr",
          "media": "media", "other": "other"}
_ALL_KINDS = {"script", "image", "subdocument", "stylesheet", "xhr", "media", "other"}


def _host_bounds(url: str) -> tuple[int, int] | None:
    if "://" not in url:
        return None
    start = url.index("://") + 3
    end = start
    while end < len(url) and url[end] not in "/?#":
        end += 1
    if "@" in url[start:end]:
        start = url.rindex("@", start, end) + 1
    stop = start
    while stop < end and url[stop] != ":":
        stop += 1
    return (start, stop) if stop > start else None


def _pattern_matches(pattern: str, url: str, starts: list[int], end_anchor: bool) -> bool:
    @lru_cache(maxsize=None)
    def walk(i: int, j: int) -> bool:
        if i == len(pattern):
            return not end_anchor or j == len(url)
        c = pattern[i]
        if c == "*":
            return any(walk(i + 1, k) for k in range(j, len(url) + 1))
        if c == "^":
            if j == len(url):
                return walk(i + 1, j)
            return url[j] not in _NOT_SEPARATOR and walk(i + 1, j + 1)
        return j < len(url) and url[j] == c and walk(i + 1, j + 1)

    return any(walk(0, s) for s in starts)


def reference_rule_matches(rule: str, url: str, page_host: str | None, resource_kind: str,
                           is_third_party: bool) -> bool:
    """Does one (already valid, non-regex) rule fire for this request?"""
    if rule.startswith("@@"):
        rule = rule[2:]
    pattern, options = (rule.rsplit("$", 1) + [""])[:2] if "$" in rule else (rule, "")
    for opt in filter(None, options.split(",")):
        name, _, value = opt.partition("=")
        name = name.lower()
        if name in ("third-party", "3p"):
            if not is_third_party:
                return False
        elif name in ("~third-party", "~3p", "first-party", "1p"):
            if is_third_party:
                return False
        elif name == "domain":
            inc = [d.lower() for d in value.split("|") if not d.startswith("~")]
            exc = [d[1:].lower() for d in value.split("|") if d.startswith("~")]

            def within(d: str) -> bool:
                return page_host is not None and (page_host == d or page_host.endswith("." + d))
            if any(within(d) for d in exc):
                return False
            if inc and not any(within(d) for d in inc):
                return False
    kinds_pos = {_KINDS[o.lower()] for o in options.split(",") if o.lower() in _KINDS}
    kinds_neg = {_KINDS[o[1:].lower()] for o in options.split(",")
                 if o.startswith("~") and o[1:].lower() in _KINDS}
    if kinds_pos or kinds_neg:
        allowed = (kinds_pos or set(_ALL_KINDS)) - kinds_neg
        if resource_kind not in allowed:
            return False

    bounds = _host_bounds(url)
    if bounds is not None:
        url = url[:bounds[1]].lower() + url[bounds[1]:]
    end_anchor = pattern.endswith("|") and not pattern.endswith("||") or pattern.endswith("|||")
    if pattern.startswith("||"):
        body = pattern[2:]
        cut = 0
        while cut < len(body) and body[cut] not in "/^*?:|":
            cut += 1
        body = body[:cut].lower() + body[cut:]
        if bounds is None:
            return False
        starts = [bounds[0]] + [k + 1 for k in range(bounds[0], bounds[1]) if url[k] == "."]
    elif pattern.startswith("|"):
        body, starts = pattern[1:], [0]
    else:
        body, starts = pattern, list(range(len(url) + 1))
    if end_anchor:
        body = body[:-1]
    return _pattern_matches(body, url, starts, end_anchor)


def reference_decision(rules: list[str], url: str, page_host: str | None, resource_kind: str,
                       is_third_party: bool) -> str:
    """'allow', 'block' or 'no_match'; exceptions always win."""
    args = (url, page_host, resource_kind, is_third_party)
    if any(r.startswith("@@") and reference_rule_matches(r, *args) for r in rules):
        return "allow"
    if any(not r.startswith("@@") and reference_rule_matches(r, *args) for r in rules):
        return "block"
    return "no_match"


def reference_simulate(requests, blocked_scripts, blocked_methods, top_frame_only: bool = False
                       ) -> dict[str, str]:
    """Removed request ids mapped to their cause, by naive fixpoint iteration."""

    def delivers(r):
        if r.fetched_script_url is not None:
            return r.fetched_script_url
        if r.resource_kind.value == "script":
            return r.url.split("#")[0]
        return None

    def dies(r, scripts):
        if any(f.script_url in scripts for f in r.stack):
            return True
        frames = r.stack[:1] if top_frame_only else r.stack
        if any((f.script_url, f.method_name) in blocked_methods for f in frames):
            return True
        return delivers(r) in scripts

    scripts = set(blocked_scripts)
    while True:
        gone = [r for r in requests if dies(r, scripts)]
        grown = set(blocked_scripts) | {delivers(r) for r in gone if delivers(r) is not None}
        if grown == scripts:
            break
        scripts = grown

    causes = {}
    for r in gone:
        if any(f.script_url in blocked_scripts for f in r.stack) or any(
                (f.script_url, f.method_name) in blocked_methods
                for f in (r.stack[:1] if top_frame_only else r.stack)):
            causes[r.request_id] = "direct-block"
        elif delivers(r) in blocked_scripts:
            causes[r.request_id] = "script-fetch-blocked"
        else:
            causes[r.request_id] = "cascade"
    return causes


# -- random inputs within the supported grammar ----------------------------------

_LABELS = ["ad", "a", "cdn", "x-y", "track", "b1"]
_TLDS = ["com", "net", "co.uk", "io"]
_PATH_BITS = ["/", "ad", "x", "pixel.gif", "?", "=", "&", "-", "_", "%20", ".", "1", "A", ":", "/a/b"]


def random_host(rng) -> str:
    labels = [rng.choice(_LABELS) for _ in range(rng.randint(1, 3))]
    host = ".".join(labels) + "." + rng.choice(_TLDS)
    return host.upper() if rng.random() < 0.05 else host


def random_url(rng) -> str:
    url = f"{rng.choice(['https', 'http'])}://{random_host(rng)}"
    if rng.random() < 0.1:
        url += f":{rng.randint(1, 9000)}"
    if rng.random() < 0.85:
        url += "/" + "".join(rng.choice(_PATH_BITS) for _ in range(rng.randint(0, 5)))
    return url


def random_rule(rng) -> str:
    anchor = rng.choice(["", "", "|", "||", "||"])
    parts = []
    if anchor == "||":
        parts.append(rng.choice([random_host(rng), rng.choice(_LABELS), rng.choice(_TLDS)]))
    elif anchor == "|":
        parts.append(rng.choice(["https://", "http://", "https:", "h"]))
    for _ in range(rng.randint(0 if parts else 1, 3)):
        parts.append(rng.choice(_PATH_BITS[:-1] + ["*", "^", "^", rng.choice(_LABELS)]))
    body = "".join(parts)
    if rng.random() < 0.15:
        body += "|"
    opts = []
    if rng.random() < 0.2:
        opts.append(rng.choice(["third-party", "~third-party", "3p", "1p"]))
    if rng.random() < 0.15:
        opts.append("domain=" + "|".join(rng.choice(["", "~"]) + rng.choice(["a.com", "b.net", "ad.a.com"])
                                          for _ in range(rng.randint(1, 2))))
    if rng.random() < 0.2:
        opts.append(rng.choice(["script", "image", "~image", "xmlhttprequest", "media", "~script"]))
    rule = ("@@" if rng.random() < 0.2 else "") + anchor + body
    return rule + ("$" + ",".join(opts) if opts else "")
