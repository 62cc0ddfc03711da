import pytest
from hypothesis import given, strategies as st

from jsblock.fixtures import FETCH_SNIPPET, ANALYTICS_SNIPPET, fixture_path
from jsblock.rewriter import (DefinitionPattern, RenameCollision, TokenKind, TokenizeError, find_definitions,
                              rename_method, scan_definitions, tokenize)


def kinds(src):
    return [(t.kind, t.text) for t in tokenize(src)]


def test_simple_tokens():
    assert kinds("a = 1") == [(TokenKind.IDENTIFIER, "a"), (TokenKind.WHITESPACE, " "),
                              (TokenKind.PUNCTUATION, "="), (TokenKind.WHITESPACE, " "),
                              (TokenKind.NUMBER, "1")]


def test_string_is_opaque():
    toks = tokenize('s = "u = function"')
    assert [t.text for t in toks if t.kind is TokenKind.IDENTIFIER] == ["s"]
    assert toks[-1].kind is TokenKind.STRING


def test_analytics_snippet_identifiers():
    idents = {t.text for t in tokenize(ANALYTICS_SNIPPET) if t.kind is TokenKind.IDENTIFIER}
    assert {"wd", "ta", "XMLHttpRequest"} <= idents


@pytest.mark.parametrize("src, kind", [
    ("x = a / b / c", None),
    ("x = /ab+c/g.test(s)", TokenKind.REGEX),
    ("return /re/.source", TokenKind.REGEX),
    ("if (a) /re/.exec(b)", TokenKind.REGEX),
    ("a.return / 2 / 3", None),
])
def test_regex_vs_division(src, kind):
    regexes = [t for t in tokenize(src) if t.kind is TokenKind.REGEX]
    assert (regexes[0].kind if regexes else None) is kind


def test_template_with_nested_expression():
    toks = tokenize("t = `a${ {b: `c${d}`}.b }e` + u")
    assert "".join(t.text for t in toks) == "t = `a${ {b: `c${d}`}.b }e` + u"
    assert [t.text for t in toks if t.kind is TokenKind.IDENTIFIER] == ["t", "u"]


@pytest.mark.parametrize("src", ['"abc', "/* open", "`x${", "'a\nb'"])
def test_unterminated_raises_with_offset(src):
    with pytest.raises(TokenizeError) as err:
        tokenize(src)
    assert 0 <= err.value.offset <= len(src)


def test_offsets_are_positions():
    src = "var é = 1; u = function(){}"
    for t in tokenize(src):
        assert src[t.offset:t.offset + len(t.text)] == t.text


def test_snippet_definitions():
    (site,) = find_definitions(tokenize(FETCH_SNIPPET), "u")
    assert site.pattern is DefinitionPattern.ASSIGNMENT
    (site,) = find_definitions(tokenize(ANALYTICS_SNIPPET), "ta")
    assert site.pattern is DefinitionPattern.ASSIGNMENT


def test_call_site_is_not_definition():
    assert find_definitions(tokenize("u(1); v = function(){}"), "u") == []


@pytest.mark.parametrize("src, pattern", [
    ("function u(a) {}", DefinitionPattern.FUNCTION_DECL),
    ("async function u() {}", DefinitionPattern.FUNCTION_DECL),
    ("x.u = function () {}", DefinitionPattern.ASSIGNMENT),
    ("u = async function () {}", DefinitionPattern.ASSIGNMENT),
    ("o = {a: 1, u: function (e) {}}", DefinitionPattern.PROPERTY),
])
def test_supported_patterns(src, pattern):
    (site,) = find_definitions(tokenize(src), "u")
    assert site.pattern is pattern


@pytest.mark.parametrize("src", ["o = {u() { return 1 }}", "class K { u(a) { } }", "class K { static u() {} }"])
def test_shorthand_and_class_methods_reported(src):
    sites, unsupported = scan_definitions(tokenize(src), "u")
    assert sites == [] and len(unsupported) == 1


def test_ignored_contexts():
    src = '// u = function(){}\n/* function u(){} */ s = "u = function"; r = /u = function/;'
    assert find_definitions(tokenize(src), "u") == []


def test_fetch_snippet_rewrite_byte_exact():
    result = rename_method(FETCH_SNIPPET, "u", "donotExecuteMe")
    assert result.count == 1
    want = FETCH_SNIPPET.replace("u = function(e) {", "donotExecuteMe = function(e) {", 1)
    assert result.source.encode("utf-8") == want.encode("utf-8")
    assert fixture_path("fetch_snippet.js").read_text(encoding="utf-8") == FETCH_SNIPPET


@pytest.mark.parametrize("name", ["wd", "ta"])
def test_analytics_snippet_rewrite(name):
    result = rename_method(ANALYTICS_SNIPPET, name)
    assert result.count == 1
    assert len(result.source) - len(ANALYTICS_SNIPPET) == len("doNotExecuteMe") - len(name)
    off = result.sites[0].name_token_offset
    assert result.source[:off] == ANALYTICS_SNIPPET[:off]
    assert result.source[off + len("doNotExecuteMe"):] == ANALYTICS_SNIPPET[off + len(name):]


def test_nonexistent_name_is_identity():
    result = rename_method(ANALYTICS_SNIPPET, "nothere")
    assert result.count == 0 and result.source == ANALYTICS_SNIPPET


def test_redefinitions_all_renamed():
    src = "u = function(){}; function u(){}; o = {u: function(){}}; u();"
    result = rename_method(src, "u")
    assert result.count == 3
    assert result.source == ("doNotExecuteMe = function(){}; function doNotExecuteMe(){}; "
                             "o = {doNotExecuteMe: function(){}}; u();")


def test_collision_and_bad_replacement():
    with pytest.raises(RenameCollision):
        rename_method("u = function(){}; doNotExecuteMe();", "u")
    with pytest.raises(ValueError):
        rename_method("u = function(){}", "u", "not-an-id")
    with pytest.raises(ValueError):
        rename_method("u = function(){}", "u", "return")


def test_idempotent():
    once = rename_method(ANALYTICS_SNIPPET, "wd").source
    again = rename_method(once, "wd")
    assert again.count == 0 and again.source == once


JS_PIECES = ["u", "v", " ", "\n", "=", "function", "(", ")", "{", "}", ";", ",", ":", "/", "*", "+",
             "1", ".5", "'s'", '"d"', "`t`", "/*c*/", "//l\n", "/re/g", "return", "async", "a.b"]


@given(st.lists(st.sampled_from(JS_PIECES), max_size=40))
def test_lossless_and_local(pieces):
    src = "".join(pieces)
    try:
        toks = tokenize(src)
    except TokenizeError:
        return
    assert "".join(t.text for t in toks) == src
    try:
        result = rename_method(src, "u", "zz")
    except RenameCollision:
        return
    if result.count == 0:
        assert result.source == src
        return
    # Splice the original back in at the reported sites and recover the input.
    out, pos, delta = [], 0, 0
    for site in sorted(result.sites, key=lambda s: s.name_token_offset):
        start = site.name_token_offset + delta
        out.append(result.source[pos:start] + "u")
        pos = start + 2
        delta += 1
    out.append(result.source[pos:])
    assert "".join(out) == src
    assert rename_method(result.source, "u", "zz").count == 0
