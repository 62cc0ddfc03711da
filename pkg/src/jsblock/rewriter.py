"""Method-level JS blocking by renaming a function's definition.

Renaming only the definition site leaves every call site pointing at a name
that no longer exists, so invoking the method throws and the code path that
would have issued the request is cut short. The transform is lexical: a
lossless tokenizer keeps strings, templates, comments and regex literals
opaque, and everything outside the renamed tokens is preserved byte for byte.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass
from typing import NamedTuple, Sequence

log = logging.getLogger(__name__)

DEFAULT_REPLACEMENT = "doNotExecuteMe"

KEYWORDS = frozenset("""
break case catch class const continue debugger default delete do else enum export extends
false finally for function if import in instanceof new null return super switch this throw
true try typeof var void while with yield let static implements interface package private
protected public await
""".split())

# After these keywords an expression starts, so "/" opens a regex.
_REGEX_AFTER_KEYWORDS = frozenset(
    "return typeof instanceof in of new delete void throw case do else yield await".split())

_PUNCTUATORS = sorted("""
>>>= ... === !== **= <<= >>= >>> &&= ||= ??= => == != <= >= && || ?? ?. ++ -- += -= *= /= %= &= |= ^=
** << >> { } ( ) [ ] ; , < > + - * / % & | ^ ! ~ ? : = . @ #
""".split(), key=len, reverse=True)

_LINE_TERMINATORS = "\n\r\u2028\u2029"


class TokenKind(str, enum.Enum):
    IDENTIFIER = "identifier"
    KEYWORD = "keyword"
    PUNCTUATION = "punctuation"
    STRING = "string"
    TEMPLATE = "template"
    COMMENT = "comment"
    REGEX = "regex"
    NUMBER = "number"
    WHITESPACE = "whitespace"


class TokenizeError(ValueError):
    def __init__(self, message: str, offset: int) -> None:
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class RenameCollision(ValueError):
    pass


@dataclass(frozen=True)
class JsToken:
    kind: TokenKind
    text: str
    offset: int

    @property
    def significant(self) -> bool:
        return self.kind not in (TokenKind.WHITESPACE, TokenKind.COMMENT)


def _is_id_start(ch: str) -> bool:
    return ch.isalpha() or ch in "_$\\" or (ord(ch) > 127 and ch.isidentifier())


def _is_id_part(ch: str) -> bool:
    return ch.isalnum() or ch in "_$\\\u200c\u200d" or (ord(ch) > 127 and ("a" + ch).isidentifier())


class _Lexer:
    def __init__(self, src: str) -> None:
        self.src = src
        self.pos = 0
        self.tokens: list[JsToken] = []
        self.prev: JsToken | None = None  # last significant token
        # One entry per open "(": does it hold an if/while/for/with condition?
        self.parens: list[bool] = []
        self.closed_condition = False

    def emit(self, kind: TokenKind, start: int) -> None:
        tok = JsToken(kind, self.src[start:self.pos], start)
        self.tokens.append(tok)
        if not tok.significant:
            return
        if kind is TokenKind.PUNCTUATION and tok.text == "(":
            self.parens.append(self.prev is not None and self.prev.kind is TokenKind.KEYWORD
                               and self.prev.text in ("if", "while", "for", "with"))
        elif kind is TokenKind.PUNCTUATION and tok.text == ")":
            self.closed_condition = self.parens.pop() if self.parens else False
        self.prev = tok

    def regex_allowed(self) -> bool:
        p = self.prev
        if p is None:
            return True
        if p.kind in (TokenKind.IDENTIFIER, TokenKind.NUMBER, TokenKind.STRING,
                      TokenKind.TEMPLATE, TokenKind.REGEX):
            return False
        if p.kind is TokenKind.KEYWORD:
            return p.text in _REGEX_AFTER_KEYWORDS
        if p.text == ")":
            return self.closed_condition
        return p.text != "]"

    def run(self, stop_at_brace: bool = False) -> None:
        src = self.src
        depth = 0
        while self.pos < len(src):
            start = self.pos
            ch = src[start]
            if stop_at_brace:
                if ch == "{":
                    depth += 1
                elif ch == "}":
                    if depth == 0:
                        return
                    depth -= 1
            if ch.isspace() or ch == "\ufeff":
                while self.pos < len(src) and (src[self.pos].isspace() or src[self.pos] == "\ufeff"):
                    self.pos += 1
                self.emit(TokenKind.WHITESPACE, start)
            elif src.startswith("//", start) or (start == 0 and src.startswith("#!")):
                self.pos = start + 2
                while self.pos < len(src) and src[self.pos] not in _LINE_TERMINATORS:
                    self.pos += 1
                self.emit(TokenKind.COMMENT, start)
            elif src.startswith("/*", start):
                end = src.find("*/", start + 2)
                if end < 0:
                    raise TokenizeError("unterminated comment", start)
                self.pos = end + 2
                self.emit(TokenKind.COMMENT, start)
            elif ch in "'\"":
                self.scan_string(ch)
                self.emit(TokenKind.STRING, start)
            elif ch == "`":
                self.scan_template()
                self.emit(TokenKind.TEMPLATE, start)
            elif ch.isdigit() or (ch == "." and start + 1 < len(src) and src[start + 1].isdigit()):
                self.scan_number()
                self.emit(TokenKind.NUMBER, start)
            elif _is_id_start(ch):
                self.pos += 1
                while self.pos < len(src) and _is_id_part(src[self.pos]):
                    self.pos += 1
                word = src[start:self.pos]
                prev_dot = self.prev is not None and self.prev.text in (".", "?.")
                kind = TokenKind.KEYWORD if word in KEYWORDS and not prev_dot else TokenKind.IDENTIFIER
                self.emit(kind, start)
            elif ch == "/" and self.regex_allowed() and self.scan_regex():
                self.emit(TokenKind.REGEX, start)
            else:
                self.scan_punctuator()
                self.emit(TokenKind.PUNCTUATION, start)

    def scan_string(self, quote: str) -> None:
        src, start = self.src, self.pos
        self.pos += 1
        while self.pos < len(src):
            ch = src[self.pos]
            if ch == "\\":
                self.pos += 2
                if src[self.pos - 1:self.pos + 1] == "\r\n":
                    self.pos += 1
                continue
            if ch == quote:
                self.pos += 1
                return
            if ch in "\n\r":
                break
            self.pos += 1
        raise TokenizeError("unterminated string", start)

    def scan_template(self) -> None:
        src, start = self.src, self.pos
        self.pos += 1
        while self.pos < len(src):
            ch = src[self.pos]
            if ch == "\\":
                self.pos += 2
            elif ch == "`":
                self.pos += 1
                return
            elif src.startswith("${", self.pos):
                self.pos += 2
                inner = _Lexer(src)
                inner.pos = self.pos
                inner.run(stop_at_brace=True)
                if inner.pos >= len(src):
                    break
                self.pos = inner.pos + 1
            else:
                self.pos += 1
        raise TokenizeError("unterminated template literal", start)

    def scan_number(self) -> None:
        src = self.src
        if src.startswith(("0x", "0X", "0b", "0B", "0o", "0O"), self.pos):
            self.pos += 2
            while self.pos < len(src) and (src[self.pos].isalnum() or src[self.pos] == "_"):
                self.pos += 1
            return
        while self.pos < len(src) and (src[self.pos].isdigit() or src[self.pos] == "_"):
            self.pos += 1
        if self.pos < len(src) and src[self.pos] == ".":
            self.pos += 1
            while self.pos < len(src) and (src[self.pos].isdigit() or src[self.pos] == "_"):
                self.pos += 1
        if self.pos < len(src) and src[self.pos] in "eE":
            j = self.pos + 1
            if j < len(src) and src[j] in "+-":
                j += 1
            if j < len(src) and src[j].isdigit():
                self.pos = j
                while self.pos < len(src) and src[self.pos].isdigit():
                    self.pos += 1
        if self.pos < len(src) and src[self.pos] == "n":
            self.pos += 1

    def scan_regex(self) -> bool:
        """Consume a regex literal; False (position unchanged) if none fits on this line."""
        src = self.src
        i = self.pos + 1
        in_class = False
        while i < len(src):
            ch = src[i]
            if ch in _LINE_TERMINATORS:
                return False
            if ch == "\\":
                i += 2
                continue
            if ch == "[":
                in_class = True
            elif ch == "]":
                in_class = False
            elif ch == "/" and not in_class:
                if i == self.pos + 1:
                    return False
                i += 1
                while i < len(src) and _is_id_part(src[i]):
                    i += 1
                self.pos = i
                return True
            i += 1
        return False

    def scan_punctuator(self) -> None:
        src = self.src
        for p in _PUNCTUATORS:
            if src.startswith(p, self.pos):
                if p == "?." and self.pos + 2 < len(src) and src[self.pos + 2].isdigit():
                    continue
                self.pos += len(p)
                return
        self.pos += 1


def tokenize(source: str) -> list[JsToken]:
    """Split JS source into tokens whose texts concatenate back to ``source``."""
    lexer = _Lexer(source)
    lexer.run()
    return lexer.tokens


# -- definition sites -----------------------------------------------------------

class DefinitionPattern(str, enum.Enum):
    FUNCTION_DECL = "function_decl"   # function NAME(
    ASSIGNMENT = "assignment"         # NAME = function
    PROPERTY = "property"             # NAME: function


@dataclass(frozen=True)
class DefinitionSite:
    method_name: str
    pattern: DefinitionPattern
    name_token_offset: int


@dataclass(frozen=True)
class UnsupportedSite:
    method_name: str
    reason: str
    offset: int


def _significant(tokens: Sequence[JsToken]) -> list[JsToken]:
    return [t for t in tokens if t.significant]


def _starts_function(sig: list[JsToken], i: int) -> bool:
    """``function`` (optionally preceded by ``async``) begins at sig[i]."""
    if i < len(sig) and sig[i].kind is TokenKind.IDENTIFIER and sig[i].text == "async":
        i += 1
    return i < len(sig) and sig[i].kind is TokenKind.KEYWORD and sig[i].text == "function"


def _closing_paren(sig: list[JsToken], i: int) -> int | None:
    depth = 0
    for j in range(i, len(sig)):
        if sig[j].text == "(":
            depth += 1
        elif sig[j].text == ")":
            depth -= 1
            if depth == 0:
                return j
    return None


def scan_definitions(tokens: Sequence[JsToken], method_name: str
                     ) -> tuple[list[DefinitionSite], list[UnsupportedSite]]:
    """Definition sites of ``method_name``, plus shorthand/class-method sites we decline to rename."""
    sig = _significant(tokens)
    sites: list[DefinitionSite] = []
    unsupported: list[UnsupportedSite] = []
    for i, tok in enumerate(sig):
        if tok.kind is not TokenKind.IDENTIFIER or tok.text != method_name:
            continue
        prev = sig[i - 1] if i > 0 else None
        nxt = sig[i + 1] if i + 1 < len(sig) else None
        if nxt is None:
            continue
        if prev is not None and (prev.text == "function" or
                                 (prev.text == "*" and i > 1 and sig[i - 2].text == "function")):
            if nxt.text == "(":
                sites.append(DefinitionSite(method_name, DefinitionPattern.FUNCTION_DECL, tok.offset))
            continue
        if nxt.text == "=" and _starts_function(sig, i + 2):
            sites.append(DefinitionSite(method_name, DefinitionPattern.ASSIGNMENT, tok.offset))
        elif (nxt.text == ":" and _starts_function(sig, i + 2)
              and prev is not None and prev.text in ("{", ",")):
            sites.append(DefinitionSite(method_name, DefinitionPattern.PROPERTY, tok.offset))
        elif nxt.text == "(" and (prev is None or prev.text in ("{", "}", ",", ";", "static",
                                                                "get", "set", "async", "*")):
            close = _closing_paren(sig, i + 1)
            if close is not None and close + 1 < len(sig) and sig[close + 1].text == "{":
                unsupported.append(UnsupportedSite(method_name, "shorthand or class method", tok.offset))
    return sites, unsupported


def find_definitions(tokens: Sequence[JsToken], method_name: str) -> list[DefinitionSite]:
    return scan_definitions(tokens, method_name)[0]


class RenameResult(NamedTuple):
    source: str
    count: int
    sites: tuple[DefinitionSite, ...] = ()
    unsupported: tuple[UnsupportedSite, ...] = ()


def _check_identifier(name: str) -> None:
    if not name or not _is_id_start(name[0]) or "\\" in name or not all(_is_id_part(c) for c in name):
        raise ValueError(f"not a valid JS identifier: {name!r}")
    if name in KEYWORDS:
        raise ValueError(f"replacement is a reserved word: {name!r}")


def rename_method(source: str, method_name: str, replacement: str = DEFAULT_REPLACEMENT) -> RenameResult:
    """Rename every definition site of ``method_name``; call sites stay as they are.

    Raises RenameCollision when there is something to rename and
    ``replacement`` already occurs as an identifier in the source.
    """
    _check_identifier(replacement)
    tokens = tokenize(source)
    sites, unsupported = scan_definitions(tokens, method_name)
    for u in unsupported:
        log.warning("%s at offset %d: %s left untouched", method_name, u.offset, u.reason)
    if not sites:
        return RenameResult(source, 0, (), tuple(unsupported))
    if any(t.kind is TokenKind.IDENTIFIER and t.text == replacement for t in tokens):
        raise RenameCollision(f"identifier {replacement!r} already occurs in the source")
    offsets = {s.name_token_offset for s in sites}
    out = [replacement if t.offset in offsets else t.text for t in tokens]
    return RenameResult("".join(out), len(sites), tuple(sites), tuple(unsupported))
