"""Text syntax for recursive element definitions.

    def   := name "=" expr
    expr  := term { "*" term }
    term  := atom { "^-1" | "^" int }
    atom  := "id" | "eta" | "perm(" cycles ")" | "(" expr { "," expr } ")" | name
    cycles := { "(" int { [","] int } ")" }

Definitions are separated by newlines or ";" and "#" starts a comment. Inside
brackets newlines are ignored. "f * g" means apply g first, then f, so
"a = (a, id) * eta" is the binary odometer. "(e)" with a single entry is
grouping, not a one-letter tuple.
"""
from __future__ import annotations

import re
from dataclasses import dataclass

from .recursion import (
    ETA,
    ID,
    ArityError,
    Compose,
    ElementExpr,
    Inverse,
    NonContracting,
    RecursionEnv,
    UnresolvedRef,
    Ref,
    RootPerm,
    Tuple,
    check_arity,
)
from .tree import TreeError

KEYWORDS = {"id", "eta", "perm"}

_TOKEN = re.compile(r"""
    (?P<ws>[ \t\r]+) | (?P<comment>\#[^\n]*) | (?P<nl>\n) |
    (?P<name>[A-Za-z_][A-Za-z0-9_]*) | (?P<int>-?\d+) |
    (?P<op>\^|\*|=|\(|\)|,|;)
""", re.VERBOSE)


class ParseError(TreeError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    column: int


def tokenize(source: str) -> list[Token]:
    tokens = []
    pos, line, line_start = 0, 1, 0
    depth = 0
    while pos < len(source):
        m = _TOKEN.match(source, pos)
        if m is None:
            raise ParseError(f"unexpected character {source[pos]!r}", line, pos - line_start + 1)
        kind, text = m.lastgroup, m.group()
        col = pos - line_start + 1
        if kind == "nl":
            if depth == 0:
                tokens.append(Token("sep", text, line, col))
            line, line_start = line + 1, m.end()
        elif kind == "op":
            if text == "(":
                depth += 1
            elif text == ")":
                depth = max(depth - 1, 0)
            tokens.append(Token("sep" if text == ";" else "op", text, line, col))
        elif kind in ("name", "int"):
            tokens.append(Token(kind, text, line, col))
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


class _Parser:
    def __init__(self, source: str, d: int):
        self.tokens = tokenize(source)
        self.i = 0
        self.d = d

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def error(self, message: str, tok: Token | None = None) -> ParseError:
        tok = tok or self.tok
        return ParseError(message, tok.line, tok.column)

    def take(self, kind: str, text: str | None = None) -> Token:
        tok = self.tok
        if tok.kind != kind or (text is not None and tok.text != text):
            want = repr(text) if text else kind
            got = repr(tok.text) if tok.text else tok.kind
            raise self.error(f"expected {want}, found {got}")
        self.i += 1
        return tok

    def at(self, kind: str, text: str | None = None) -> bool:
        return self.tok.kind == kind and (text is None or self.tok.text == text)

    def definitions(self) -> list[tuple[str, ElementExpr, Token]]:
        out = []
        while True:
            while self.at("sep"):
                self.i += 1
            if self.at("eof"):
                return out
            name_tok = self.take("name")
            if name_tok.text in KEYWORDS:
                raise self.error(f"{name_tok.text!r} is reserved", name_tok)
            self.take("op", "=")
            expr = self.expr()
            if not (self.at("sep") or self.at("eof")):
                raise self.error(f"unexpected {self.tok.text!r} after definition of {name_tok.text}")
            out.append((name_tok.text, expr, name_tok))

    def expr(self) -> ElementExpr:
        factors = [self.term()]
        while self.at("op", "*"):
            self.i += 1
            factors.append(self.term())
        return factors[0] if len(factors) == 1 else Compose(tuple(factors))

    def term(self) -> ElementExpr:
        e = self.atom()
        while self.at("op", "^"):
            self.i += 1
            exp_tok = self.take("int")
            k = int(exp_tok.text)
            if k < 0:
                e, k = Inverse(e), -k
            if k == 0:
                e = ID
            elif k > 1:
                e = Compose((e,) * k)
        return e

    def atom(self) -> ElementExpr:
        tok = self.tok
        if tok.kind == "name":
            self.i += 1
            if tok.text == "id":
                return ID
            if tok.text == "eta":
                if self.d != 2:
                    raise self.error("eta needs a binary tree; use perm(...)", tok)
                return ETA
            if tok.text == "perm":
                return self.perm()
            return Ref(tok.text)
        if self.at("op", "("):
            self.i += 1
            items = [self.expr()]
            while self.at("op", ","):
                self.i += 1
                items.append(self.expr())
            self.take("op", ")")
            if len(items) == 1:
                return items[0]
            if len(items) != self.d:
                raise self.error(f"tuple has {len(items)} entries, the tree has arity {self.d}", tok)
            return Tuple(tuple(items))
        raise self.error(f"expected an element, found {tok.text!r}" if tok.text else "unexpected end of input")

    def perm(self) -> RootPerm:
        self.take("op", "(")
        image = list(range(self.d))
        seen: set[int] = set()
        while self.at("op", "("):
            self.i += 1
            cycle = []
            while not self.at("op", ")"):
                if cycle and self.at("op", ","):
                    self.i += 1
                t = self.take("int")
                x = int(t.text)
                if not 0 <= x < self.d:
                    raise self.error(f"letter {x} outside 0..{self.d - 1}", t)
                if x in seen:
                    raise self.error(f"letter {x} appears twice", t)
                seen.add(x)
                cycle.append(x)
            self.take("op", ")")
            for a, b in zip(cycle, cycle[1:] + cycle[:1]):
                image[a] = b
        self.take("op", ")")
        return RootPerm(tuple(image))


def parse_expr(source: str, d: int = 2) -> ElementExpr:
    p = _Parser(source, d)
    e = p.expr()
    if not p.at("eof"):
        raise p.error(f"unexpected {p.tok.text!r}")
    return e


def parse_definitions(source: str, d: int = 2, env: RecursionEnv | None = None) -> RecursionEnv:
    """Parse definitions into a new environment (or an extension of env).

    Every definition is checked for arity, and the whole batch for unresolved
    names and same-level self-reference. Errors carry the line and column of
    the offending definition.
    """
    env = RecursionEnv(d) if env is None else env
    if env.d != d:
        raise TreeError(f"environment has arity {env.d}, parser was given {d}")
    defs = _Parser(source, d).definitions()
    where = {}
    for name, expr, tok in defs:
        if name in where or name in env:
            raise ParseError(f"{name!r} is defined twice", tok.line, tok.column)
        try:
            check_arity(expr, d)
        except ArityError as exc:
            raise ParseError(str(exc), tok.line, tok.column) from None
        where[name] = tok
    try:
        return env.extend({name: expr for name, expr, _ in defs})
    except NonContracting as exc:
        tok = next((where[n] for n in exc.cycle if n in where), _first(defs))
        raise ParseError(str(exc), tok.line, tok.column) from None
    except UnresolvedRef as exc:
        tok = where.get(exc.binding) or _first(defs)
        raise ParseError(str(exc), tok.line, tok.column) from None


def _first(defs) -> Token:
    return defs[0][2] if defs else Token("eof", "", 1, 1)
