"""A practical subset of Adblock filter-list syntax for labeling network requests.

Only network rules are understood: ``||`` / ``|`` anchors, ``*`` wildcards,
``^`` separators, ``@@`` exceptions, and the options ``third-party``,
``domain=`` and resource kinds. Cosmetic rules, comments and regex rules are
skipped; rules carrying any other option are skipped with a warning because
enforcing them partially would mislabel requests.
"""

from __future__ import annotations

import enum
import logging
import re
from dataclasses import dataclass, field
from typing import Iterable

from .psl import DomainError, hostname, registrable_domain
from .trace import ResourceKind

log = logging.getLogger(__name__)

WILDCARD = "*"
SEPARATOR = "^"
# Characters that "^" does NOT match.
NON_SEPARATOR = frozenset("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_-.%")
_SEPARATOR_RE = r"(?:[^A-Za-z0-9_\-.%]|\Z)"

_KIND_OPTIONS = {
    "script": ResourceKind.SCRIPT,
    "image": ResourceKind.IMAGE,
    "subdocument": ResourceKind.SUBDOCUMENT,
    "stylesheet": ResourceKind.STYLESHEET,
    "xmlhttprequest": ResourceKind.XHR,
    "xhr": ResourceKind.XHR,
    "media": ResourceKind.MEDIA,
    "other": ResourceKind.OTHER,
}
_THIRD_PARTY = {"third-party": True, "3p": True, "~third-party": False, "~3p": False,
                "first-party": False, "1p": False}
_COSMETIC_MARKERS = ("##", "#@#", "#?#", "#$#")


class Anchor(str, enum.Enum):
    NONE = "none"
    DOMAIN = "domain"  # "||"
    START = "start"    # "|"


class Verdict(str, enum.Enum):
    BLOCK = "block"
    ALLOW = "allow"
    NO_MATCH = "no_match"


class RuleSyntaxError(ValueError):
    pass


class UnsupportedRule(ValueError):
    pass


@dataclass(frozen=True)
class FilterRule:
    raw: str
    is_exception: bool
    anchor: Anchor
    anchor_end: bool
    pattern_tokens: tuple[str, ...]
    third_party: bool | None = None
    resource_kinds: frozenset[ResourceKind] | None = None
    domain_include: tuple[str, ...] = ()
    domain_exclude: tuple[str, ...] = ()
    _regex: re.Pattern = field(init=False, repr=False, compare=False)
    _literals: tuple[str, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if set(self.domain_include) & set(self.domain_exclude):
            raise RuleSyntaxError("domain option both includes and excludes the same domain")
        body = "".join(
            ".*" if t == WILDCARD else _SEPARATOR_RE if t == SEPARATOR else re.escape(t)
            for t in self.pattern_tokens
        )
        if self.anchor_end:
            body += r"\Z"
        object.__setattr__(self, "_regex", re.compile(body, re.DOTALL))
        object.__setattr__(self, "_literals", tuple(
            t for t in self.pattern_tokens if t not in (WILDCARD, SEPARATOR)))

    @property
    def has_options(self) -> bool:
        return (self.third_party is not None or self.resource_kinds is not None
                or bool(self.domain_include) or bool(self.domain_exclude))

    def pattern_matches(self, url: str, host_span: tuple[int, int] | None) -> bool:
        """Match the URL part of the rule; ``url`` must already be normalized."""
        for lit in self._literals:
            if lit not in url:
                return False
        if self.anchor is Anchor.START:
            return self._regex.match(url) is not None
        if self.anchor is Anchor.DOMAIN:
            if host_span is None:
                return False
            start, end = host_span
            starts = [start] + [i + 1 for i in range(start, end) if url[i] == "."]
            return any(self._regex.match(url, pos) for pos in starts)
        return self._regex.search(url) is not None

    def options_hold(self, ctx: "MatchContext") -> bool:
        if self.third_party is not None and self.third_party != ctx.is_third_party:
            return False
        if self.resource_kinds is not None and ctx.resource_kind not in self.resource_kinds:
            return False
        if self.domain_include or self.domain_exclude:
            page_host = ctx.page_host
            if page_host is None:
                return not self.domain_include
            if any(_host_within(page_host, d) for d in self.domain_exclude):
                return False
            if self.domain_include and not any(_host_within(page_host, d) for d in self.domain_include):
                return False
        return True


def _host_within(host: str, domain: str) -> bool:
    return host == domain or host.endswith("." + domain)


@dataclass
class ParseStats:
    accepted: int = 0
    skipped: int = 0
    rejected: list[tuple[int, str, str]] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def regex_skipped(self) -> int:
        return sum(1 for w in self.warnings if w.startswith("regex rule"))


@dataclass(frozen=True)
class FilterSet:
    block_rules: tuple[FilterRule, ...] = ()
    exception_rules: tuple[FilterRule, ...] = ()
    source_names: tuple[str, ...] = ()
    stats: ParseStats = field(default_factory=ParseStats, compare=False)

    def __len__(self) -> int:
        return len(self.block_rules) + len(self.exception_rules)

    @classmethod
    def merge(cls, sets: Iterable["FilterSet"]) -> "FilterSet":
        sets = list(sets)
        stats = ParseStats()
        for s in sets:
            stats.accepted += s.stats.accepted
            stats.skipped += s.stats.skipped
            stats.rejected.extend(s.stats.rejected)
            stats.warnings.extend(s.stats.warnings)
        return cls(
            tuple(r for s in sets for r in s.block_rules),
            tuple(r for s in sets for r in s.exception_rules),
            tuple(n for s in sets for n in s.source_names),
            stats,
        )


@dataclass(frozen=True)
class MatchDecision:
    verdict: Verdict
    rule: FilterRule | None = None


NO_MATCH = MatchDecision(Verdict.NO_MATCH)


@dataclass(frozen=True)
class MatchContext:
    request_url: str
    page_url: str
    resource_kind: ResourceKind = ResourceKind.OTHER
    is_third_party: bool = field(default=None)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        object.__setattr__(self, "resource_kind", ResourceKind(self.resource_kind))
        if self.is_third_party is None:
            object.__setattr__(self, "is_third_party",
                               third_party(self.request_url, self.page_url))

    @property
    def page_host(self) -> str | None:
        try:
            return hostname(self.page_url)
        except DomainError:
            return None


def third_party(request_url: str, page_url: str) -> bool:
    """Registrable domains differ. A host-less URL on either side counts as third-party."""
    try:
        return registrable_domain(request_url) != registrable_domain(page_url)
    except DomainError:
        return True


# -- parsing -----------------------------------------------------------------

def _parse_options(text: str) -> dict:
    opts: dict = {"third_party": None, "resource_kinds": None,
                  "domain_include": (), "domain_exclude": ()}
    include_kinds: set[ResourceKind] = set()
    exclude_kinds: set[ResourceKind] = set()
    for option in text.split(","):
        option = option.strip()
        if not option:
            raise RuleSyntaxError("empty option")
        name, _, value = option.partition("=")
        name = name.lower()
        if name in _THIRD_PARTY and not value:
            opts["third_party"] = _THIRD_PARTY[name]
        elif name == "domain":
            domains = [d.strip().lower() for d in value.split("|")]
            if not value or any(d in ("", "~") for d in domains):
                raise RuleSyntaxError("empty domain in domain= option")
            opts["domain_include"] = tuple(d for d in domains if not d.startswith("~"))
            opts["domain_exclude"] = tuple(d[1:] for d in domains if d.startswith("~"))
        elif name.lstrip("~") in _KIND_OPTIONS and not value:
            kind = _KIND_OPTIONS[name.lstrip("~")]
            (exclude_kinds if name.startswith("~") else include_kinds).add(kind)
        else:
            raise UnsupportedRule(f"unsupported option {option!r}")
    if include_kinds or exclude_kinds:
        base = include_kinds or set(ResourceKind)
        opts["resource_kinds"] = frozenset(base - exclude_kinds)
    return opts


def _tokenize_pattern(pattern: str) -> tuple[str, ...]:
    tokens: list[str] = []
    literal: list[str] = []
    for ch in pattern:
        if ch in (WILDCARD, SEPARATOR):
            if literal:
                tokens.append("".join(literal))
                literal = []
            if ch == WILDCARD and tokens and tokens[-1] == WILDCARD:
                continue
            tokens.append(ch)
        else:
            literal.append(ch)
    if literal:
        tokens.append("".join(literal))
    return tuple(tokens)


def _lower_host_prefix(pattern: str) -> str:
    # Hosts compare case-insensitively; only the leading hostname part of a
    # domain-anchored pattern is folded.
    m = re.match(r"[^/^*?:|]*", pattern)
    end = m.end() if m else 0
    return pattern[:end].lower() + pattern[end:]


def parse_rule(line: str) -> FilterRule:
    """Parse one network rule.

    Raises RuleSyntaxError for grammar failures and UnsupportedRule for rules
    outside the supported subset (including regex rules).
    """
    text = line.strip()
    if any(c.isspace() for c in text):
        raise RuleSyntaxError("whitespace inside rule")
    is_exception = text.startswith("@@")
    if is_exception:
        text = text[2:]
    options = {}
    if "$" in text:
        idx = text.rfind("$")
        opt_text = text[idx + 1:]
        if not opt_text:
            raise RuleSyntaxError("empty option list")
        text = text[:idx]
        options = _parse_options(opt_text)
    if len(text) > 1 and text.startswith("/") and text.endswith("/"):
        raise UnsupportedRule("regex rule")
    anchor = Anchor.NONE
    if text.startswith("||"):
        anchor, text = Anchor.DOMAIN, _lower_host_prefix(text[2:])
    elif text.startswith("|"):
        anchor, text = Anchor.START, text[1:]
    anchor_end = text.endswith("|")
    if anchor_end:
        text = text[:-1]
    if "|" in text:
        raise RuleSyntaxError("stray '|' inside pattern")
    tokens = _tokenize_pattern(text)
    rule = FilterRule(line.strip(), is_exception, anchor, anchor_end, tokens, **options)
    if not tokens and not rule.has_options:
        raise RuleSyntaxError("empty pattern without options")
    return rule


def parse_list(text: str, source_name: str = "<string>") -> FilterSet:
    """Parse filter-list text. Bad lines are counted, never fatal."""
    stats = ParseStats()
    blocks: list[FilterRule] = []
    exceptions: list[FilterRule] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith(("!", "[")) or any(m in line for m in _COSMETIC_MARKERS):
            stats.skipped += 1
            continue
        try:
            rule = parse_rule(line)
        except UnsupportedRule as exc:
            stats.skipped += 1
            stats.warnings.append(f"{exc} at {source_name}:{lineno}: {line}")
            continue
        except RuleSyntaxError as exc:
            stats.rejected.append((lineno, line, str(exc)))
            continue
        stats.accepted += 1
        (exceptions if rule.is_exception else blocks).append(rule)
    if stats.warnings:
        log.warning("%s: %d rule(s) skipped as unsupported", source_name, len(stats.warnings))
    if stats.rejected:
        log.warning("%s: %d line(s) rejected", source_name, len(stats.rejected))
    return FilterSet(tuple(blocks), tuple(exceptions), (source_name,), stats)


# -- matching ----------------------------------------------------------------

def host_span(url: str) -> tuple[int, int] | None:
    """Character span of the hostname inside ``url``."""
    scheme_end = url.find("://")
    if scheme_end < 0:
        return None
    start = scheme_end + 3
    end = start
    while end < len(url) and url[end] not in "/?#":
        end += 1
    netloc = url[start:end]
    at = netloc.rfind("@")
    host_start = start + at + 1
    host = url[host_start:end]
    if host.startswith("["):
        close = host.find("]")
        host_end = host_start + (close + 1 if close >= 0 else len(host))
    else:
        colon = host.find(":")
        host_end = host_start + (colon if colon >= 0 else len(host))
    if host_end == host_start:
        return None
    return host_start, host_end


def normalize_url(url: str) -> tuple[str, tuple[int, int] | None]:
    """Lowercase scheme and host; leave path and query untouched."""
    span = host_span(url)
    if span is None:
        return url, None
    start, end = span
    return url[:end].lower() + url[end:], span


def match_url(filters: FilterSet, ctx: MatchContext) -> MatchDecision:
    url, span = normalize_url(ctx.request_url)
    for rule in filters.exception_rules:
        if rule.pattern_matches(url, span) and rule.options_hold(ctx):
            return MatchDecision(Verdict.ALLOW, rule)
    for rule in filters.block_rules:
        if rule.pattern_matches(url, span) and rule.options_hold(ctx):
            return MatchDecision(Verdict.BLOCK, rule)
    return NO_MATCH
