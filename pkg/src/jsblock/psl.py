"""Registrable-domain (eTLD+1) lookup against a vendored public suffix list."""

from __future__ import annotations

import functools
import ipaddress
from importlib import resources
from urllib.parse import urlsplit

PSL_RESOURCE = "public_suffix_list.dat"


class DomainError(ValueError):
    pass


class SuffixList:
    """Public suffix rules with the standard wildcard and exception semantics."""

    def __init__(self, text: str) -> None:
        self.rules: set[str] = set()
        self.wildcards: set[str] = set()
        self.exceptions: set[str] = set()
        for raw in text.splitlines():
            line = raw.strip().split()[0] if raw.strip() else ""
            if not line or line.startswith("//"):
                continue
            line = _to_ascii(line.lower())
            if line.startswith("!"):
                self.exceptions.add(line[1:])
            elif line.startswith("*."):
                self.wildcards.add(line[2:])
            else:
                self.rules.add(line)

    def public_suffix(self, host: str) -> str:
        labels = _to_ascii(host.lower()).split(".")
        # Longest matching rule wins; an exception rule beats everything.
        for i in range(len(labels)):
            candidate = ".".join(labels[i:])
            if candidate in self.exceptions:
                return ".".join(labels[i + 1:])
            if candidate in self.rules:
                return candidate
            parent = ".".join(labels[i + 1:])
            if i + 1 < len(labels) and parent in self.wildcards:
                return candidate
        return labels[-1]

    def registrable(self, host: str) -> str | None:
        """eTLD+1 of ``host``; None when the host is itself a public suffix."""
        host = _to_ascii(host.lower())
        suffix = self.public_suffix(host)
        if host == suffix:
            return None
        head = host[: -len(suffix) - 1]
        return f"{head.rsplit('.', 1)[-1]}.{suffix}"


def _to_ascii(name: str) -> str:
    try:
        return name.encode("idna").decode("ascii")
    except UnicodeError:
        return name


@functools.lru_cache(maxsize=None)
def default_suffix_list() -> SuffixList:
    text = resources.files("jsblock.data").joinpath(PSL_RESOURCE).read_text(encoding="utf-8")
    return SuffixList(text)


def hostname(url: str) -> str:
    host = urlsplit(url).hostname
    if not host:
        raise DomainError(f"URL has no hostname: {url!r}")
    return _to_ascii(host.rstrip("."))


def _is_ip(host: str) -> bool:
    try:
        ipaddress.ip_address(host)
    except ValueError:
        return False
    return True


@functools.lru_cache(maxsize=65536)
def registrable_domain(url: str) -> str:
    """Return the eTLD+1 of ``url``'s host.

    IP literals come back unchanged, as does a host that is itself a public
    suffix (``localhost``, ``co.uk``).
    """
    host = hostname(url)
    if _is_ip(host):
        return host
    return default_suffix_list().registrable(host) or host
