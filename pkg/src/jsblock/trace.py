"""Page-load trace data model and its canonical JSON form.

A trace records one page load: every network request with the JS call stack
that initiated it, plus the ``src``-bearing HTML tags present on the page.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Iterator
from urllib.parse import urlsplit, urlunsplit

DEFAULT_CRAWL_SECONDS = 20


class ParseError(ValueError):
    """Malformed JSON; ``offset`` is the byte position of the failure."""

    def __init__(self, message: str, offset: int) -> None:
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


class SchemaError(ValueError):
    """Well-formed JSON that violates the trace schema."""


class ResourceKind(str, enum.Enum):
    SCRIPT = "script"
    IMAGE = "image"
    SUBDOCUMENT = "subdocument"
    MEDIA = "media"
    STYLESHEET = "stylesheet"
    XHR = "xhr"
    OTHER = "other"


class TagKind(str, enum.Enum):
    IMG = "img"
    VIDEO = "video"
    IFRAME = "iframe"
    SCRIPT = "script"
    SOURCE = "source"


class Attribution(str, enum.Enum):
    """Which stack frames a request is credited to."""

    FULL_STACK = "full_stack"
    TOP_FRAME = "top_frame"


class UnitKind(str, enum.Enum):
    SCRIPT = "script"
    METHOD = "method"


def strip_fragment(url: str) -> str:
    return url.split("#", 1)[0]


def strip_query(url: str) -> str:
    parts = urlsplit(url)
    return urlunsplit((parts.scheme, parts.netloc, parts.path, "", ""))


def anonymous_name(line: int, column: int) -> str:
    return f"<anonymous>@{line}:{column}"


@dataclass(frozen=True)
class StackFrame:
    script_url: str
    method_name: str
    line: int
    column: int

    def __post_init__(self) -> None:
        if not self.script_url or "#" in self.script_url:
            raise SchemaError(f"invalid frame script_url {self.script_url!r}")
        if not self.method_name:
            raise SchemaError("frame method_name is empty")
        for name in ("line", "column"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, int) or value < 1:
                raise SchemaError(f"frame {name} must be a positive integer, got {value!r}")


@dataclass(frozen=True)
class NetworkRequest:
    request_id: str
    url: str
    resource_kind: ResourceKind
    stack: tuple[StackFrame, ...] = ()
    fetched_script_url: str | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "resource_kind", ResourceKind(self.resource_kind))
        object.__setattr__(self, "stack", tuple(self.stack))
        if (
            self.resource_kind is ResourceKind.SCRIPT
            and self.fetched_script_url is not None
            and self.fetched_script_url != strip_fragment(self.url)
        ):
            raise SchemaError(
                f"request {self.request_id!r}: fetched_script_url does not match its url"
            )

    @property
    def delivered_script(self) -> str | None:
        """URL of the script this request delivers, if any."""
        if self.fetched_script_url is not None:
            return self.fetched_script_url
        if self.resource_kind is ResourceKind.SCRIPT:
            return strip_fragment(self.url)
        return None


@dataclass(frozen=True)
class ResourceTag:
    tag_kind: TagKind
    src_url: str

    def __post_init__(self) -> None:
        object.__setattr__(self, "tag_kind", TagKind(self.tag_kind))


@dataclass(frozen=True)
class PageTrace:
    page_url: str
    requests: tuple[NetworkRequest, ...] = ()
    tags: tuple[ResourceTag, ...] = ()
    crawl_seconds: float = DEFAULT_CRAWL_SECONDS

    def __post_init__(self) -> None:
        object.__setattr__(self, "requests", tuple(self.requests))
        object.__setattr__(self, "tags", tuple(self.tags))
        if not urlsplit(self.page_url).scheme:
            raise SchemaError(f"page_url is not an absolute URL: {self.page_url!r}")
        seen: set[str] = set()
        for request in self.requests:
            if request.request_id in seen:
                raise SchemaError(f"duplicate request_id {request.request_id!r}")
            seen.add(request.request_id)

    def request(self, request_id: str) -> NetworkRequest:
        for r in self.requests:
            if r.request_id == request_id:
                return r
        raise KeyError(request_id)


@dataclass(frozen=True, order=True)
class CodeUnitId:
    """A script, or a method inside a script."""

    kind: UnitKind
    script_url: str
    method_name: str | None = field(default=None)

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", UnitKind(self.kind))
        if (self.kind is UnitKind.METHOD) != (self.method_name is not None):
            raise ValueError("method_name is required for method units and only for them")
        if self.kind is UnitKind.METHOD and not self.method_name:
            raise ValueError("method_name is empty")

    @classmethod
    def script(cls, script_url: str) -> "CodeUnitId":
        return cls(UnitKind.SCRIPT, script_url)

    @classmethod
    def method(cls, script_url: str, method_name: str) -> "CodeUnitId":
        return cls(UnitKind.METHOD, script_url, method_name)

    def sort_key(self) -> tuple[int, str, str]:
        return (0 if self.kind is UnitKind.SCRIPT else 1, self.script_url, self.method_name or "")

    def __str__(self) -> str:
        if self.kind is UnitKind.SCRIPT:
            return self.script_url
        return f"{self.script_url}#{self.method_name}"


def units_of(request: NetworkRequest, attribution: Attribution | str = Attribution.FULL_STACK
             ) -> frozenset[CodeUnitId]:
    attribution = Attribution(attribution)
    frames = request.stack if attribution is Attribution.FULL_STACK else request.stack[:1]
    units: set[CodeUnitId] = set()
    for frame in frames:
        units.add(CodeUnitId.script(frame.script_url))
        units.add(CodeUnitId.method(frame.script_url, frame.method_name))
    return frozenset(units)


# -- parsing -----------------------------------------------------------------

def _require(obj: dict, key: str, where: str) -> Any:
    if not isinstance(obj, dict):
        raise SchemaError(f"{where}: expected an object")
    if key not in obj:
        raise SchemaError(f"{where}: missing required field {key!r}")
    return obj[key]


def _string(value: Any, name: str) -> str:
    if not isinstance(value, str):
        raise SchemaError(f"field {name!r} must be a string")
    return value


def _normalize(url: str, normalize_query: bool) -> str:
    url = strip_fragment(url)
    return strip_query(url) if normalize_query else url


def _frame_from_json(obj: dict, where: str, normalize_query: bool) -> StackFrame:
    script_url = _normalize(_string(_require(obj, "script_url", where), "script_url"), normalize_query)
    line = _require(obj, "line", where)
    column = _require(obj, "column", where)
    method = obj.get("method_name")
    if method is not None and not isinstance(method, str):
        raise SchemaError(f"{where}: field 'method_name' must be a string")
    if not method:
        if isinstance(line, int) and isinstance(column, int):
            method = anonymous_name(line, column)
        else:
            method = "<anonymous>"
    return StackFrame(script_url, method, line, column)


def _request_from_json(obj: dict, index: int, normalize_query: bool) -> NetworkRequest:
    where = f"requests[{index}]"
    request_id = _string(_require(obj, "request_id", where), "request_id")
    url = _normalize(_string(_require(obj, "url", where), "url"), normalize_query)
    kind = _string(_require(obj, "resource_kind", where), "resource_kind")
    try:
        kind_enum = ResourceKind(kind)
    except ValueError:
        raise SchemaError(f"{where}: unknown resource_kind {kind!r}") from None
    raw_stack = obj.get("stack", [])
    if not isinstance(raw_stack, list):
        raise SchemaError(f"{where}: field 'stack' must be a list")
    stack = tuple(
        _frame_from_json(f, f"{where}.stack[{j}]", normalize_query) for j, f in enumerate(raw_stack)
    )
    fetched = obj.get("fetched_script_url")
    if fetched is not None:
        fetched = _normalize(_string(fetched, "fetched_script_url"), normalize_query)
    return NetworkRequest(request_id, url, kind_enum, stack, fetched)


def _tag_from_json(obj: dict, index: int, normalize_query: bool) -> ResourceTag:
    where = f"tags[{index}]"
    kind = _string(_require(obj, "tag_kind", where), "tag_kind")
    try:
        kind_enum = TagKind(kind)
    except ValueError:
        raise SchemaError(f"{where}: unknown tag_kind {kind!r}") from None
    src = _normalize(_string(_require(obj, "src_url", where), "src_url"), normalize_query)
    return ResourceTag(kind_enum, src)


def trace_from_obj(obj: Any, normalize_query: bool = False) -> PageTrace:
    if not isinstance(obj, dict):
        raise SchemaError("trace document must be a JSON object")
    page_url = strip_fragment(_string(_require(obj, "page_url", "trace"), "page_url"))
    crawl_seconds = obj.get("crawl_seconds", DEFAULT_CRAWL_SECONDS)
    if isinstance(crawl_seconds, bool) or not isinstance(crawl_seconds, (int, float)) or crawl_seconds < 0:
        raise SchemaError("field 'crawl_seconds' must be a non-negative number")
    raw_requests = _require(obj, "requests", "trace")
    raw_tags = _require(obj, "tags", "trace")
    if not isinstance(raw_requests, list) or not isinstance(raw_tags, list):
        raise SchemaError("fields 'requests' and 'tags' must be lists")
    requests = tuple(_request_from_json(r, i, normalize_query) for i, r in enumerate(raw_requests))
    tags = tuple(_tag_from_json(t, i, normalize_query) for i, t in enumerate(raw_tags))
    return PageTrace(page_url, requests, tags, crawl_seconds)


def parse_trace(data: bytes | str, normalize_query: bool = False) -> PageTrace:
    """Parse one trace document.

    Fragments are stripped from every URL; with ``normalize_query`` the query
    string is dropped too, merging script variants that differ only by query.
    Unknown fields are ignored.
    """
    text = data.decode("utf-8") if isinstance(data, (bytes, bytearray)) else data
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        offset = len(text[: exc.pos].encode("utf-8"))
        raise ParseError(exc.msg, offset) from None
    return trace_from_obj(obj, normalize_query)


# -- serialization -----------------------------------------------------------

def trace_to_obj(trace: PageTrace) -> dict:
    requests = []
    for r in trace.requests:
        item: dict[str, Any] = {
            "request_id": r.request_id,
            "url": r.url,
            "resource_kind": r.resource_kind.value,
            "stack": [
                {"script_url": f.script_url, "method_name": f.method_name,
                 "line": f.line, "column": f.column}
                for f in r.stack
            ],
        }
        if r.fetched_script_url is not None:
            item["fetched_script_url"] = r.fetched_script_url
        requests.append(item)
    return {
        "page_url": trace.page_url,
        "crawl_seconds": trace.crawl_seconds,
        "requests": requests,
        "tags": [{"tag_kind": t.tag_kind.value, "src_url": t.src_url} for t in trace.tags],
    }


def dumps_canonical(obj: Any) -> str:
    """Sorted keys, no insignificant whitespace."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False,
                      allow_nan=False)


def serialize_trace(trace: PageTrace) -> str:
    return dumps_canonical(trace_to_obj(trace))


# -- corpora -----------------------------------------------------------------

def iter_corpus(path: str | Path, normalize_query: bool = False) -> Iterator[tuple[str, PageTrace]]:
    """Yield ``(site_id, trace)`` pairs from a directory or an NDJSON file.

    Directory entries are read in sorted filename order and keyed by file stem;
    NDJSON lines are keyed ``<stem>-<line number>``.
    """
    path = Path(path)
    if path.is_dir():
        for file in sorted(path.glob("*.json")):
            yield file.stem, parse_trace(file.read_bytes(), normalize_query)
        return
    with path.open("rb") as fh:
        for lineno, line in enumerate(fh, start=1):
            if line.strip():
                yield f"{path.stem}-{lineno:06d}", parse_trace(line, normalize_query)


def write_corpus(traces: Iterable[tuple[str, PageTrace]], directory: str | Path) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for site_id, trace in traces:
        (directory / f"{site_id}.json").write_text(serialize_trace(trace), encoding="utf-8")
