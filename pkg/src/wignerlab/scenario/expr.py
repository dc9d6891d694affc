"""
Complex amplitude expressions.

Grammar::

    expr   := term (('+' | '-') term)*
    term   := factor (('*' | '/') factor)*
    factor := decimal | 'sqrt(' decimal ')' | 'i' | '(' expr ')' | '-' factor

Expressions are kept as canonical text (tokens joined without whitespace) so
that scenarios compare and serialize exactly; :func:`amp_value` evaluates.
"""

from __future__ import annotations

import cmath
import math
import re
from dataclasses import dataclass
from functools import lru_cache

from ..errors import ScenarioParseError

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_][A-Za-z0-9_]*)|(?P<op>[-+*/()]))"
)


@dataclass(frozen=True)
class Tok:
    kind: str  # "num" | "name" | "op"
    text: str
    col: int


def tokenize(text: str, line: int | None = None, col0: int = 1) -> list[Tok]:
    toks = []
    pos = 0
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            bad = text[pos:].lstrip()
            col = col0 + len(text) - len(bad)
            raise ScenarioParseError(f"unexpected character {bad[:1]!r} in amplitude", line, col)
        kind = m.lastgroup
        toks.append(Tok(kind, m.group(kind), col0 + m.start(kind)))
        pos = m.end()
    return toks


class _Parser:
    def __init__(self, toks: list[Tok], line, col0):
        self.toks = toks
        self.i = 0
        self.line = line
        self.col0 = col0

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else None

    def error(self, msg):
        t = self.peek()
        col = t.col if t is not None else (self.toks[-1].col + len(self.toks[-1].text) if self.toks else self.col0)
        raise ScenarioParseError(msg, self.line, col)

    def take(self, text=None, kind=None):
        t = self.peek()
        if t is None or (text is not None and t.text != text) or (kind is not None and t.kind != kind):
            self.error(f"expected {text or kind!r}")
        self.i += 1
        return t

    def expr(self) -> complex:
        v = self.term()
        while (t := self.peek()) is not None and t.text in "+-" and t.kind == "op":
            self.i += 1
            rhs = self.term()
            v = v + rhs if t.text == "+" else v - rhs
        return v

    def term(self) -> complex:
        v = self.factor()
        while (t := self.peek()) is not None and t.kind == "op" and t.text in "*/":
            self.i += 1
            rhs = self.factor()
            if t.text == "*":
                v = v * rhs
            else:
                if rhs == 0:
                    self.i -= 1
                    self.error("division by zero")
                v = v / rhs
        return v

    def factor(self) -> complex:
        t = self.peek()
        if t is None:
            self.error("amplitude expression ended early")
        if t.kind == "num":
            self.i += 1
            return complex(float(t.text))
        if t.kind == "op" and t.text == "-":
            self.i += 1
            return -self.factor()
        if t.kind == "op" and t.text == "(":
            self.i += 1
            v = self.expr()
            self.take(")")
            return v
        if t.kind == "name" and t.text == "i":
            self.i += 1
            return 1j
        if t.kind == "name" and t.text == "sqrt":
            self.i += 1
            self.take("(")
            num = self.take(kind="num")
            self.take(")")
            return complex(math.sqrt(float(num.text)))
        self.error(f"unexpected {t.text!r} in amplitude")


def parse_amp(text: str, line: int | None = None, col0: int = 1) -> tuple[str, complex]:
    """Canonical text and value of one amplitude expression."""
    toks = tokenize(text, line, col0)
    if not toks:
        raise ScenarioParseError("empty amplitude", line, col0)
    p = _Parser(toks, line, col0)
    value = p.expr()
    if p.peek() is not None:
        p.error(f"unexpected {p.peek().text!r} after amplitude")
    if not cmath.isfinite(value):
        raise ScenarioParseError("amplitude is not finite", line, col0)
    return "".join(t.text for t in toks), value


@lru_cache(maxsize=4096)
def amp_value(text: str) -> complex:
    return parse_amp(text)[1]


def canonical_amp(a) -> str:
    """Canonical text for a string expression or a Python number."""
    if isinstance(a, str):
        return parse_amp(a)[0]
    return format_amp(a)


def _fmt_real(x: float) -> str:
    if x == 0:
        return "0"
    if float(x).is_integer() and abs(x) < 1e15:
        return str(int(x))
    return repr(float(x))


def format_amp(z) -> str:
    """Text that evaluates back to exactly ``z``."""
    z = complex(z)
    if not cmath.isfinite(z):
        raise ValueError("amplitude must be finite")
    re_, im = z.real, z.imag
    if im == 0:
        return _fmt_real(re_)
    im_txt = _fmt_real(abs(im))
    if re_ == 0:
        return ("-" if im < 0 else "") + f"{im_txt}*i"
    return f"{_fmt_real(re_)}{'-' if im < 0 else '+'}{im_txt}*i"
