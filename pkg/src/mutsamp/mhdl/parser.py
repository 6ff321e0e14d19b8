"""Recursive-descent parser for MHDL source text."""

from __future__ import annotations

import re
from pathlib import Path

from ..errors import HdlSyntaxError
from .design import (
    COMPARE_OPS,
    LOGICAL_OPS,
    Assign,
    Binary,
    Cond,
    Const,
    Design,
    Lit,
    Port,
    Ref,
    Register,
    Unary,
    number_nodes,
)

KEYWORDS = {"design", "in", "out", "sig", "const", "reg", "reset", "when", "else", "not", *LOGICAL_OPS}

_TOKEN = re.compile(r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>--[^\n]*)
  | (?P<char>'[01]')
  | (?P<int>\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op><=|/=|>=|[=<>+\-();:])
""", re.VERBOSE)


def tokenize(text: str) -> list:
    tokens, line, pos = [], 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise HdlSyntaxError(f"unexpected character {text[pos]!r}", line)
        kind, value = m.lastgroup, m.group()
        pos = m.end()
        if kind == "nl":
            line += 1
        elif kind == "ident":
            low = value.lower()
            tokens.append(("kw", low, line) if low in KEYWORDS else ("ident", value, line))
        elif kind in ("char", "int", "op"):
            tokens.append((kind, value, line))
    tokens.append(("eof", "", line))
    return tokens


class _Parser:
    def __init__(self, text):
        self.tokens = tokenize(text)
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos]

    def next(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def accept(self, value):
        if self.peek()[1] == value and self.peek()[0] in ("kw", "op"):
            return self.next()
        return None

    def expect(self, value):
        tok = self.next()
        if tok[1] != value or tok[0] not in ("kw", "op"):
            raise HdlSyntaxError(f"expected {value!r}, found {tok[1] or 'end of input'!r}", tok[2])
        return tok

    def ident(self):
        tok = self.next()
        if tok[0] != "ident":
            raise HdlSyntaxError(f"expected identifier, found {tok[1] or 'end of input'!r}", tok[2])
        return tok[1]

    def integer(self):
        tok = self.next()
        if tok[0] != "int":
            raise HdlSyntaxError(f"expected integer, found {tok[1] or 'end of input'!r}", tok[2])
        return int(tok[1])

    def design(self) -> Design:
        self.expect("design")
        name = self.ident()
        self.expect(";")
        ports = {"in": [], "out": [], "sig": []}
        consts, stmts = [], []
        while self.peek()[0] != "eof":
            tok = self.peek()
            if tok[0] == "kw" and tok[1] in ports:
                self.next()
                pname = self.ident()
                self.expect(":")
                ports[tok[1]].append(Port(pname, self.integer()))
                self.expect(";")
            elif tok[1] == "const" and tok[0] == "kw":
                self.next()
                cname = self.ident()
                self.expect(":")
                width = self.integer()
                self.expect("=")
                consts.append(Const(cname, width, Lit(self.integer())))
                self.expect(";")
            elif tok[1] == "reg" and tok[0] == "kw":
                self.next()
                target = self.ident()
                self.expect("<=")
                expr = self.expr()
                reset = self.integer() if self.accept("reset") else 0
                self.expect(";")
                stmts.append(Register(target, expr, reset, line=tok[2]))
            elif tok[0] == "ident":
                target = self.ident()
                self.expect("<=")
                expr = self.expr()
                self.expect(";")
                stmts.append(Assign(target, expr, line=tok[2]))
            else:
                raise HdlSyntaxError(f"unexpected {tok[1]!r}", tok[2])
        consts, stmts = number_nodes(consts, stmts)
        return Design(name, ports["in"], ports["out"], ports["sig"], consts, stmts)
    def expr(self):
        e = self.logic()
        if self.accept("when"):
            cond = self.logic()
            self.expect("else")
            return Cond(e, cond, self.expr())
        return e

    def logic(self):
        e = self.relation()
        while self.peek()[0] == "kw" and self.peek()[1] in LOGICAL_OPS:
            op = self.next()[1]
            e = Binary(op, e, self.relation())
        return e

    def relation(self):
        e = self.additive()
        if self.peek()[0] == "op" and self.peek()[1] in COMPARE_OPS:
            op = self.next()[1]
            e = Binary(op, e, self.additive())
        return e

    def additive(self):
        e = self.unary()
        while self.peek()[0] == "op" and self.peek()[1] in ("+", "-"):
            op = self.next()[1]
            e = Binary(op, e, self.unary())
        return e

    def unary(self):
        if self.accept("not"):
            return Unary("not", self.unary())
        return self.primary()

    def primary(self):
        tok = self.next()
        if tok[0] == "int":
            return Lit(int(tok[1]))
        if tok[0] == "char":
            return Lit(int(tok[1][1]), 1)
        if tok[0] == "ident":
            return Ref(tok[1])
        if tok[1] == "(" and tok[0] == "op":
            e = self.expr()
            self.expect(")")
            return e
        raise HdlSyntaxError(f"unexpected {tok[1] or 'end of input'!r} in expression", tok[2])


def parse_mhdl(text: str) -> Design:
    """Parse and check MHDL source; node ids are assigned in preorder."""
    return _Parser(text).design()


def read_mhdl(path) -> Design:
    return parse_mhdl(Path(path).read_text(encoding="utf-8"))
