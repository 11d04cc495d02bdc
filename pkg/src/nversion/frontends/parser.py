"""Recursive-descent parsers for the Cm (C-like) and Gm (Go-like) dialects."""

from __future__ import annotations

import re
from dataclasses import dataclass

from ..errors import DialectError, ParseError
from .ast import (
    Assign, Binary, Block, BoolLit, Cast, Cond, Decl, FuncDef, If, IntLit,
    Return, TYPE_NAMES, Unary, Var, While, INT32,
)

_TOKEN_RE = re.compile(
    r"(?P<ws>[ \t\r]+)|(?P<nl>\n)|(?P<comment>//[^\n]*|/\*.*?\*/)"
    r"|(?P<int>0[xX][0-9a-fA-F]+|0[bB][01]+|[0-9]+)(?P<suffix>[uUlL]*)"
    r"|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op><<=|>>=|&\^|&&|\|\||==|!=|<=|>=|<<|>>|\+=|-=|\*=|/=|%=|&=|\|=|\^=|\+\+|--|:=|[-+*/%&|^~!<>=?:;,(){}\[\]])",
    re.S,
)

CM_KEYWORDS = {"if", "else", "while", "for", "return", "true", "false", "static", "inline", "const"}
GM_KEYWORDS = {"func", "var", "if", "else", "for", "return", "true", "false"}
ASSIGN_OPS = {"+=": "+", "-=": "-", "*=": "*", "/=": "/", "%=": "%", "&=": "&",
              "|=": "|", "^=": "^", "<<=": "<<", ">>=": ">>"}


@dataclass
class Tok:
    kind: str       # ident int op eof ';'(gm auto)
    text: str
    line: int
    col: int
    value: int = 0


def tokenize(text: str, dialect: str):
    toks = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        col = pos - line_start + 1
        if kind == "suffix":
            kind = "int"
        if kind == "comment":
            nls = m.group().count("\n")
            if nls:
                if dialect == "gm":
                    _auto_semicolon(toks, line, col)
                line += nls
                line_start = m.start() + m.group().rfind("\n") + 1
        elif kind == "nl":
            if dialect == "gm":
                _auto_semicolon(toks, line, col)
            line += 1
            line_start = m.end()
        elif kind == "int":
            digits = m.group("int")
            if m.group("suffix") and dialect == "gm":
                raise DialectError(f"integer suffix {m.group('suffix')!r} is Cm-only", line, col)
            toks.append(Tok("int", m.group(), line, col, int(digits, 0)))
        elif kind == "ident":
            toks.append(Tok("ident", m.group(), line, col))
        elif kind == "op":
            toks.append(Tok("op", m.group(), line, col))
        pos = m.end()
    if dialect == "gm":
        _auto_semicolon(toks, line, pos - line_start + 1)
    toks.append(Tok("eof", "", line, pos - line_start + 1))
    return toks


def _auto_semicolon(toks, line, col):
    # Go's rule: a newline after an identifier, literal, return, ++, --, ) or } ends a statement.
    if not toks:
        return
    last = toks[-1]
    if last.kind in ("ident", "int") or last.text in (")", "}", "++", "--"):
        toks.append(Tok("op", ";", line, col))


class _Base:
    dialect = ""

    def __init__(self, text):
        self.toks = tokenize(text, self.dialect)
        self.i = 0
        self.tmp = 0

    @property
    def tok(self):
        return self.toks[self.i]

    def peek(self, k=1):
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def error(self, msg, tok=None, cls=ParseError):
        tok = tok or self.tok
        return cls(msg, tok.line, tok.col)

    def advance(self):
        t = self.tok
        self.i += 1
        return t

    def at(self, text, kind=None):
        t = self.tok
        return t.text == text and (kind is None or t.kind == kind)

    def accept(self, text):
        if self.tok.text == text and self.tok.kind in ("op", "ident"):
            return self.advance()
        return None

    def expect(self, text):
        if self.tok.text != text or self.tok.kind not in ("op", "ident"):
            got = self.tok.text or "end of input"
            raise self.error(f"expected {text!r}, found {got!r}")
        return self.advance()

    def ident(self):
        t = self.tok
        if t.kind != "ident" or t.text in self.keywords:
            got = t.text or "end of input"
            raise self.error(f"expected identifier, found {got!r}")
        return self.advance().text

    def is_type(self, tok=None):
        tok = tok or self.tok
        return tok.kind == "ident" and (tok.text in TYPE_NAMES or (self.dialect == "cm" and tok.text == "int"))

    def type_name(self):
        t = self.tok
        if not self.is_type(t):
            raise self.error(f"expected type name, found {t.text or 'end of input'!r}")
        self.advance()
        return INT32 if t.text == "int" else TYPE_NAMES[t.text]

    def finish_unit(self, fn):
        if self.tok.kind != "eof":
            raise self.error("exactly one function per compilation unit is allowed; "
                             "auxiliary or helper functions are not permitted")
        return fn

    # expressions shared by both dialects -----------------------------------

    def parse_expr(self):
        return self.parse_binary(0)

    def parse_binary(self, level):
        levels = self.levels
        if level == len(levels):
            return self.parse_unary()
        left = self.parse_binary(level + 1)
        while self.tok.kind == "op" and self.tok.text in levels[level]:
            op = self.advance().text
            right = self.parse_binary(level + 1)
            left = Binary(op, left, right)
        return left

    def parse_primary(self):
        t = self.tok
        if t.kind == "int":
            self.advance()
            return IntLit(t.value)
        if t.kind == "ident" and t.text in ("true", "false"):
            self.advance()
            return BoolLit(t.text == "true")
        if self.at("("):
            self.advance()
            e = self.parse_expr()
            self.expect(")")
            return e
        if t.kind == "ident" and t.text not in self.keywords:
            if self.peek().text == "(" and not self.is_type(t):
                raise self.error(f"calls not permitted: {t.text}()", t)
            self.advance()
            return Var(t.text)
        raise self.error(f"expected expression, found {t.text or 'end of input'!r}")

    def negate_literal(self, e):
        if isinstance(e, IntLit):
            return IntLit(-e.value)
        return Unary("-", e)

    def block_body(self):
        self.expect("{")
        stmts = []
        while not self.at("}"):
            if self.tok.kind == "eof":
                raise self.error("unexpected end of input, expected '}'")
            if self.accept(";"):
                continue
            stmts.extend(self.parse_statement())
        self.expect("}")
        return tuple(stmts)


class CmParser(_Base):
    dialect = "cm"
    keywords = CM_KEYWORDS
    levels = (("||",), ("&&",), ("|",), ("^",), ("&",), ("==", "!="),
              ("<", "<=", ">", ">="), ("<<", ">>"), ("+", "-"), ("*", "/", "%"))

    def parse_unit(self) -> FuncDef:
        if self.at("func"):
            raise self.error("'func' declarations are Gm-only", cls=DialectError)
        while self.tok.text in ("static", "inline"):
            self.advance()
        ret = self.type_name()
        name = self.ident()
        self.expect("(")
        params = []
        if self.at("void") and self.peek().text == ")":
            self.advance()
        while not self.at(")"):
            if params:
                self.expect(",")
            self.accept("const")
            ty = self.type_name()
            params.append((self.ident(), ty))
        self.expect(")")
        if self.at(";"):
            raise self.error("function prototypes are not permitted")
        body = self.block_body()
        return self.finish_unit(FuncDef(name, tuple(params), ret, body, "cm"))

    def stmt_or_block(self):
        if self.at("{"):
            return self.block_body()
        return tuple(self.parse_statement())

    def parse_statement(self):
        t = self.tok
        if t.text in ("var", "func") or self.peek().text == ":=":
            raise self.error(f"'{t.text if t.text in ('var', 'func') else ':='}' is Gm-only syntax",
                             cls=DialectError)
        if t.text == "return" and t.kind == "ident":
            self.advance()
            e = self.parse_expr()
            self.expect(";")
            return [Return(e)]
        if t.text == "if":
            self.advance()
            self.expect("(")
            c = self.parse_expr()
            self.expect(")")
            then = self.stmt_or_block()
            other = None
            if self.accept("else"):
                other = self.stmt_or_block()
            return [If(c, then, other)]
        if t.text == "while":
            self.advance()
            self.expect("(")
            c = self.parse_expr()
            self.expect(")")
            return [While(c, self.stmt_or_block())]
        if t.text == "for":
            self.advance()
            self.expect("(")
            init = [] if self.at(";") else self.simple_statement()
            self.expect(";")
            cond = BoolLit(True) if self.at(";") else self.parse_expr()
            self.expect(";")
            step = [] if self.at(")") else self.simple_statement()
            self.expect(")")
            body = self.stmt_or_block()
            return [Block(tuple(init) + (While(cond, body + tuple(step)),))]
        if t.text == "{":
            return [Block(self.block_body())]
        stmts = self.simple_statement()
        self.expect(";")
        return stmts

    def simple_statement(self):
        self.accept("const")
        if self.is_type():
            ty = self.type_name()
            out = []
            while True:
                name = self.ident()
                if not self.accept("="):
                    raise self.error(f"declaration of {name!r} requires an initializer")
                out.append(Decl(name, ty, self.parse_expr()))
                if not self.accept(","):
                    return out
        name = self.ident()
        if self.peek(0).text == "(":
            raise self.error(f"calls not permitted: {name}()")
        op = self.advance()
        if op.text == "=":
            return [Assign(name, self.parse_expr())]
        if op.text in ASSIGN_OPS:
            return [Assign(name, Binary(ASSIGN_OPS[op.text], Var(name), self.parse_expr()))]
        if op.text in ("++", "--"):
            return [Assign(name, Binary(op.text[0], Var(name), IntLit(1)))]
        raise self.error(f"expected assignment, found {op.text!r}", op)

    def parse_expr(self):
        c = self.parse_binary(0)
        if self.accept("?"):
            a = self.parse_expr()
            self.expect(":")
            b = self.parse_expr()
            return Cond(c, a, b)
        return c

    def parse_unary(self):
        t = self.tok
        if t.kind == "op" and t.text in ("-", "~", "!", "+"):
            self.advance()
            e = self.parse_unary()
            if t.text == "+":
                return e
            return self.negate_literal(e) if t.text == "-" else Unary(t.text, e)
        if t.text == "(" and self.is_type(self.peek()) and self.peek(2).text == ")":
            self.advance()
            ty = self.type_name()
            self.expect(")")
            return Cast(ty, self.parse_unary())
        return self.parse_primary()


class GmParser(_Base):
    dialect = "gm"
    keywords = GM_KEYWORDS
    levels = (("||",), ("&&",), ("==", "!=", "<", "<=", ">", ">="),
              ("+", "-", "|", "^"), ("*", "/", "%", "<<", ">>", "&"))

    def parse_unit(self) -> FuncDef:
        if self.is_type() or self.tok.text in ("static", "inline", "int", "void"):
            raise self.error("C-style function header is Cm-only; Gm functions start with 'func'",
                             cls=DialectError)
        self.expect("func")
        name = self.ident()
        self.expect("(")
        params = []
        pending = []
        while not self.at(")"):
            if params or pending:
                self.expect(",")
            pname = self.ident()
            if self.is_type():
                ty = self.type_name()
                params.extend((p, ty) for p in pending + [pname])
                pending = []
            else:
                pending.append(pname)
        if pending:
            raise self.error("parameter list is missing a type")
        self.expect(")")
        ret = self.type_name()
        body = self.block_body()
        self.accept(";")
        return self.finish_unit(FuncDef(name, tuple(params), ret, body, "gm"))

    def end_statement(self):
        if self.at("}"):
            return
        self.expect(";")

    def parse_statement(self):
        t = self.tok
        if t.text == "while":
            raise self.error("'while' loops are Cm-only; use 'for'", cls=DialectError)
        if self.is_type(t) and self.peek().kind == "ident":
            raise self.error("C-style declarations are Cm-only; use 'var'", cls=DialectError)
        if t.text == "return":
            self.advance()
            e = self.parse_expr()
            self.end_statement()
            return [Return(e)]
        if t.text == "if":
            s = self.parse_if()
            self.end_statement()
            return [s]
        if t.text == "for":
            self.advance()
            if self.at("{"):
                body = self.block_body()
                self.end_statement()
                return [While(BoolLit(True), body)]
            if self.is_simple_start():
                init = self.simple_statement()
                self.expect(";")
                cond = self.parse_expr()
                self.expect(";")
                step = [] if self.at("{") else self.simple_statement()
                body = self.block_body()
                self.end_statement()
                return [Block(tuple(init) + (While(cond, body + tuple(step)),))]
            cond = self.parse_expr()
            body = self.block_body()
            self.end_statement()
            return [While(cond, body)]
        if t.text == "{":
            body = self.block_body()
            self.end_statement()
            return [Block(body)]
        if t.text == "var":
            self.advance()
            name = self.ident()
            ty = self.type_name()
            init = self.parse_expr() if self.accept("=") else None
            self.end_statement()
            return [Decl(name, ty, init)]
        stmts = self.simple_statement()
        self.end_statement()
        return stmts

    def is_simple_start(self):
        return (self.tok.kind == "ident" and self.tok.text not in self.keywords
                and self.peek().text in ("=", ":=", "++", "--", *ASSIGN_OPS))

    def parse_if(self):
        self.expect("if")
        c = self.parse_expr()
        then = self.block_body()
        other = None
        if self.accept("else"):
            other = (self.parse_if(),) if self.at("if") else self.block_body()
        return If(c, then, other)

    def simple_statement(self):
        name = self.ident()
        op = self.advance()
        if op.text == ":=":
            return [Decl(name, None, self.parse_expr())]
        if op.text == "=":
            return [Assign(name, self.parse_expr())]
        if op.text in ASSIGN_OPS:
            return [Assign(name, Binary(ASSIGN_OPS[op.text], Var(name), self.parse_expr()))]
        if op.text in ("++", "--"):
            return [Assign(name, Binary(op.text[0], Var(name), IntLit(1)))]
        if op.text == "(":
            raise self.error(f"calls not permitted: {name}()", op)
        raise self.error(f"expected assignment, found {op.text!r}", op)

    def parse_unary(self):
        t = self.tok
        if t.kind == "op" and t.text == "~":
            raise self.error("'~' is Cm-only; Gm uses unary '^'", cls=DialectError)
        if t.kind == "op" and t.text in ("-", "^", "!", "+"):
            self.advance()
            e = self.parse_unary()
            if t.text == "+":
                return e
            if t.text == "-":
                return self.negate_literal(e)
            return Unary("~" if t.text == "^" else "!", e)
        if t.text == "(" and self.is_type(self.peek()) and self.peek(2).text == ")":
            raise self.error("C-style casts are Cm-only; use T(x)", cls=DialectError)
        if self.is_type(t) and self.peek().text == "(":
            self.advance()
            self.expect("(")
            e = self.parse_expr()
            self.expect(")")
            return Cast(TYPE_NAMES[t.text], e)
        return self.parse_primary()

    def parse_expr(self):
        e = self.parse_binary(0)
        if self.at("?"):
            raise self.error("conditional expression '?:' is Cm-only", cls=DialectError)
        return e


def parse_syntax(text: str, dialect: str) -> FuncDef:
    if dialect == "cm":
        return CmParser(text).parse_unit()
    if dialect == "gm":
        return GmParser(text).parse_unit()
    raise ValueError(f"unknown dialect {dialect!r}")
