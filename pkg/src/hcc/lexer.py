"""Word-level lexer for Python source.

Produces identifiers, keywords, numeric literals, whole string literals and
operator/delimiter tokens. Comments and all whitespace (including indentation)
are dropped.
"""
import keyword
import re
from typing import List, Literal

from pydantic import BaseModel

from hcc.errors import LexError


TokenKind = Literal["name", "keyword", "number", "string", "operator", "delimiter", "other"]


class Token(BaseModel):
    kind: TokenKind
    text: str
    offset: int


_WHITESPACE = re.compile(r"[ \t\f\r\n]+|\\\r?\n")
_COMMENT = re.compile(r"#[^\r\n]*")
_STRING_PREFIX = re.compile(r"(?i:rb|br|fr|rf|r|b|u|f)?('''|\"\"\"|'|\")")
_NAME = re.compile(r"[^\W\d]\w*")
_NUMBER = re.compile(
    r"0[xX](?:_?[0-9a-fA-F])+"
    r"|0[oO](?:_?[0-7])+"
    r"|0[bB](?:_?[01])+"
    r"|(?:\d(?:_?\d)*\.(?:\d(?:_?\d)*)?|\.\d(?:_?\d)*|\d(?:_?\d)*)(?:[eE][+-]?\d(?:_?\d)*)?[jJ]?"
)

OPERATORS = sorted([
    "**=", "//=", ">>=", "<<=", "...",
    "->", ":=", "**", "//", "<<", ">>", "<=", ">=", "==", "!=",
    "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "@=",
    "+", "-", "*", "/", "%", "@", "&", "|", "^", "~", "<", ">", "=", "!",
    "(", ")", "[", "]", "{", "}", ",", ":", ".", ";",
], key=len, reverse=True)

DELIMITERS = frozenset("()[]{},:.;")

_OPERATOR = re.compile("|".join(re.escape(op) for op in OPERATORS))


def _byte_offset(source: str, index: int) -> int:
    return len(source[:index].encode("utf-8"))


def _scan_string(source: str, start: int, body_start: int, quote: str) -> int:
    """Return the index just past the closing quote."""
    i = body_start
    n = len(source)
    triple = len(quote) == 3
    while i < n:
        ch = source[i]
        if ch == "\\":
            i += 2
            continue
        if not triple and ch in "\r\n":
            break
        if source.startswith(quote, i):
            return i + len(quote)
        i += 1
    raise LexError("unterminated string literal", _byte_offset(source, start))


def lex(source: str) -> List[Token]:
    tokens: List[Token] = []
    i = 0
    n = len(source)

    while i < n:
        m = _WHITESPACE.match(source, i)
        if m:
            i = m.end()
            continue

        m = _COMMENT.match(source, i)
        if m:
            i = m.end()
            continue

        m = _STRING_PREFIX.match(source, i)
        if m:
            end = _scan_string(source, i, m.end(), m.group(1))
            tokens.append(Token(kind="string", text=source[i:end], offset=i))
            i = end
            continue

        m = _NUMBER.match(source, i)
        if m and m.end() > i:
            tokens.append(Token(kind="number", text=m.group(), offset=i))
            i = m.end()
            continue

        m = _NAME.match(source, i)
        if m:
            text = m.group()
            kind = "keyword" if keyword.iskeyword(text) or keyword.issoftkeyword(text) else "name"
            tokens.append(Token(kind=kind, text=text, offset=i))
            i = m.end()
            continue

        m = _OPERATOR.match(source, i)
        if m:
            text = m.group()
            kind = "delimiter" if text in DELIMITERS else "operator"
            tokens.append(Token(kind=kind, text=text, offset=i))
            i = m.end()
            continue

        tokens.append(Token(kind="other", text=source[i], offset=i))
        i += 1

    return tokens


def tokenize_code(source: str) -> List[str]:
    return [t.text for t in lex(source)]
