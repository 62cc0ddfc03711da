import json
import random

import pytest
from hypothesis import given, strategies as st

from jsblock.fixtures import fixture_corpus, random_labeled_trace
from jsblock.trace import (Attribution, CodeUnitId, NetworkRequest, PageTrace, ParseError, ResourceKind,
                           SchemaError, StackFrame, iter_corpus, parse_trace, serialize_trace,
                           strip_fragment, units_of, write_corpus)


def frame(script, method, line=1, col=1):
    return StackFrame(script, method, line, col)


def test_minimal_document():
    t = parse_trace('{"page_url":"https://a.com","requests":[],"tags":[]}')
    assert t.requests == () and t.tags == ()
    assert t.crawl_seconds == 20


def test_empty_trace_serializes_canonically():
    t = parse_trace('{"page_url":"https://a.com","requests":[],"tags":[]}')
    assert serialize_trace(t) == '{"crawl_seconds":20,"page_url":"https://a.com","requests":[],"tags":[]}'


def test_fragment_stripped_from_frames_and_urls():
    doc = {"page_url": "https://a.com/#top", "tags": [{"tag_kind": "img", "src_url": "https://a.com/i.png#x"}],
           "requests": [{"request_id": "r", "url": "https://x.com/p#q", "resource_kind": "image",
                         "stack": [{"script_url": "https://x.com/s.js#frag", "method_name": "f",
                                    "line": 1, "column": 2}]}]}
    t = parse_trace(json.dumps(doc))
    assert t.page_url == "https://a.com/"
    assert t.requests[0].url == "https://x.com/p"
    assert t.requests[0].stack[0].script_url == "https://x.com/s.js"
    assert t.tags[0].src_url == "https://a.com/i.png"


def test_unknown_fields_ignored():
    t = parse_trace('{"page_url":"https://a.com","requests":[],"tags":[],"browser":"x","v":2}')
    assert t.page_url == "https://a.com"


def test_anonymous_methods_get_position_names():
    doc = {"page_url": "https://a.com", "tags": [], "requests": [
        {"request_id": "r", "url": "https://b.com/x", "resource_kind": "xhr",
         "stack": [{"script_url": "https://a.com/s.js", "line": 4, "column": 17},
                   {"script_url": "https://a.com/s.js", "method_name": "", "line": 9, "column": 1}]}]}
    names = [f.method_name for f in parse_trace(json.dumps(doc)).requests[0].stack]
    assert names == ["<anonymous>@4:17", "<anonymous>@9:1"]


def test_malformed_json_reports_byte_offset():
    text = '{"page_url": "https://é.com", oops}'
    with pytest.raises(ParseError) as err:
        parse_trace(text.encode())
    assert err.value.offset == text.encode().index(b"oops")


@pytest.mark.parametrize("doc, field", [
    ({"requests": [], "tags": []}, "page_url"),
    ({"page_url": "https://a.com", "tags": []}, "requests"),
    ({"page_url": "https://a.com", "requests": [{"url": "u", "resource_kind": "xhr"}], "tags": []}, "request_id"),
    ({"page_url": "https://a.com", "requests": [], "tags": [{"tag_kind": "img"}]}, "src_url"),
])
def test_missing_field_is_named(doc, field):
    with pytest.raises(SchemaError, match=field):
        parse_trace(json.dumps(doc))


def test_duplicate_request_ids_rejected():
    req = {"request_id": "r", "url": "https://b.com", "resource_kind": "xhr"}
    with pytest.raises(SchemaError, match="duplicate"):
        parse_trace(json.dumps({"page_url": "https://a.com", "requests": [req, req], "tags": []}))


@pytest.mark.parametrize("kind_field, value", [("resource_kind", "font"), ("tag_kind", "embed")])
def test_unknown_enums_rejected(kind_field, value):
    doc = {"page_url": "https://a.com", "requests": [], "tags": []}
    if kind_field == "resource_kind":
        doc["requests"] = [{"request_id": "r", "url": "https://b.com", "resource_kind": value}]
    else:
        doc["tags"] = [{"tag_kind": value, "src_url": "https://b.com"}]
    with pytest.raises(SchemaError):
        parse_trace(json.dumps(doc))


def test_frame_invariants():
    with pytest.raises(SchemaError):
        StackFrame("https://a.com/s.js#x", "f", 1, 1)
    with pytest.raises(SchemaError):
        StackFrame("https://a.com/s.js", "f", 0, 1)
    with pytest.raises(SchemaError):
        StackFrame("", "f", 1, 1)


def test_script_request_fetched_url_must_match():
    with pytest.raises(SchemaError):
        NetworkRequest("r", "https://a.com/s.js", ResourceKind.SCRIPT, (), "https://a.com/t.js")
    ok = NetworkRequest("r", "https://a.com/s.js", ResourceKind.SCRIPT, (), "https://a.com/s.js")
    assert ok.delivered_script == "https://a.com/s.js"


def test_normalize_query_merges_variants():
    doc = {"page_url": "https://a.com", "tags": [], "requests": [
        {"request_id": "r", "url": "https://b.com/x?y=1", "resource_kind": "xhr",
         "stack": [{"script_url": "https://a.com/s.js?v=2", "method_name": "f", "line": 1, "column": 1}]}]}
    kept = parse_trace(json.dumps(doc))
    merged = parse_trace(json.dumps(doc), normalize_query=True)
    assert kept.requests[0].stack[0].script_url == "https://a.com/s.js?v=2"
    assert merged.requests[0].stack[0].script_url == "https://a.com/s.js"


def test_units_of():
    a, b = "https://x.com/A.js", "https://x.com/B.js"
    req = NetworkRequest("r", "https://t.com/p", ResourceKind.XHR,
                         (frame(a, "f"), frame(a, "g"), frame(b, "h")))
    assert units_of(NetworkRequest("e", "https://t.com", ResourceKind.XHR), Attribution.FULL_STACK) == set()
    assert units_of(req, "full_stack") == {CodeUnitId.script(a), CodeUnitId.script(b), CodeUnitId.method(a, "f"),
                                           CodeUnitId.method(a, "g"), CodeUnitId.method(b, "h")}
    assert units_of(req, "top_frame") == {CodeUnitId.script(a), CodeUnitId.method(a, "f")}


def test_code_unit_identity():
    with pytest.raises(ValueError):
        CodeUnitId.method("https://a.com/s.js", "")
    assert str(CodeUnitId.method("https://a.com/s.js", "f")) == "https://a.com/s.js#f"
    assert CodeUnitId.method("https://a.com/s.js", "f") != CodeUnitId.method("https://b.com/s.js", "f")


def test_fixture_round_trip_is_a_fixpoint():
    for _, trace in fixture_corpus():
        once = serialize_trace(parse_trace(serialize_trace(trace)))
        assert once == serialize_trace(parse_trace(once))
        assert parse_trace(once) == trace


def test_corpus_directory_and_ndjson(tmp_path):
    pages = fixture_corpus()[:2]
    write_corpus(pages, tmp_path / "dir")
    assert [s for s, _ in iter_corpus(tmp_path / "dir")] == sorted(s for s, _ in pages)
    nd = tmp_path / "crawl.ndjson"
    nd.write_text("\n".join(serialize_trace(t) for _, t in pages) + "\n")
    got = list(iter_corpus(nd))
    assert [s for s, _ in got] == ["crawl-000001", "crawl-000002"]
    assert [t for _, t in got] == [t for _, t in pages]


@given(st.randoms(use_true_random=False))
def test_round_trip_property(rng):
    trace = random_labeled_trace(rng).trace
    text = serialize_trace(trace)
    assert parse_trace(text) == trace
    assert serialize_trace(parse_trace(text)) == text


@given(st.randoms(use_true_random=False))
def test_top_frame_units_within_full_stack(rng):
    for r in random_labeled_trace(rng).trace.requests:
        assert units_of(r, "top_frame") <= units_of(r, "full_stack")


@given(st.text(alphabet="ab#/:?", max_size=20))
def test_fragment_strip_idempotent(url):
    assert strip_fragment(strip_fragment(url)) == strip_fragment(url)
