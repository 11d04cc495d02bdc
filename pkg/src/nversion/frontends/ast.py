"""Dialect-neutral source AST shared by the Cm and Gm front ends.

Expression nodes carry a ``ty`` slot filled in by the type checker; it is
excluded from equality so checked and unchecked trees compare equal.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from ..mir import MirType

DIALECTS = ("cm", "gm")


@dataclass(frozen=True)
class SrcType:
    signed: bool
    width: int

    @property
    def is_bool(self) -> bool:
        return self.width == 1

    @property
    def name(self) -> str:
        if self.is_bool:
            return "bool"
        return f"{'' if self.signed else 'u'}int{self.width}"

    @property
    def mir(self) -> MirType:
        return MirType(self.width)

    @property
    def min(self) -> int:
        return -(1 << (self.width - 1)) if self.signed else 0

    @property
    def max(self) -> int:
        return (1 << (self.width - 1)) - 1 if self.signed else (1 << self.width) - 1

    def __str__(self):
        return self.name


BOOL = SrcType(False, 1)
INT32 = SrcType(True, 32)
TYPE_NAMES = {"bool": BOOL}
for _w in (8, 16, 32, 64):
    TYPE_NAMES[f"int{_w}"] = SrcType(True, _w)
    TYPE_NAMES[f"uint{_w}"] = SrcType(False, _w)


def _ty():
    return field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class IntLit:
    value: int
    ty: Optional[SrcType] = _ty()


@dataclass(frozen=True)
class BoolLit:
    value: bool
    ty: Optional[SrcType] = _ty()


@dataclass(frozen=True)
class Var:
    name: str
    ty: Optional[SrcType] = _ty()


@dataclass(frozen=True)
class Unary:
    op: str            # '-', '~', '!'
    operand: object
    ty: Optional[SrcType] = _ty()


@dataclass(frozen=True)
class Binary:
    op: str
    left: object
    right: object
    ty: Optional[SrcType] = _ty()


@dataclass(frozen=True)
class Cond:
    cond: object
    then: object
    other: object
    ty: Optional[SrcType] = _ty()


@dataclass(frozen=True)
class Cast:
    target: SrcType
    operand: object
    ty: Optional[SrcType] = _ty()


@dataclass(frozen=True)
class Decl:
    name: str
    type: Optional[SrcType]
    init: object = None


@dataclass(frozen=True)
class Assign:
    name: str
    expr: object


@dataclass(frozen=True)
class If:
    cond: object
    then: tuple
    other: Optional[tuple] = None


@dataclass(frozen=True)
class While:
    cond: object
    body: tuple


@dataclass(frozen=True)
class Return:
    expr: object


@dataclass(frozen=True)
class Block:
    body: tuple


@dataclass(frozen=True)
class FuncDef:
    name: str
    params: tuple        # ((name, SrcType), ...)
    ret: SrcType
    body: tuple
    dialect: str


SourceAst = FuncDef

ARITH_OPS = ("+", "-", "*", "/", "%", "&", "|", "^")
SHIFT_OPS = ("<<", ">>")
CMP_OPS = ("==", "!=", "<", "<=", ">", ">=")
LOGIC_OPS = ("&&", "||")


def walk_expr(e):
    """Yield ``e`` and all sub-expressions, pre-order."""
    yield e
    if isinstance(e, Unary):
        yield from walk_expr(e.operand)
    elif isinstance(e, Binary):
        yield from walk_expr(e.left)
        yield from walk_expr(e.right)
    elif isinstance(e, Cond):
        yield from walk_expr(e.cond)
        yield from walk_expr(e.then)
        yield from walk_expr(e.other)
    elif isinstance(e, Cast):
        yield from walk_expr(e.operand)


def stmt_exprs(s):
    if isinstance(s, Decl):
        return [s.init] if s.init is not None else []
    if isinstance(s, (Assign,)):
        return [s.expr]
    if isinstance(s, Return):
        return [s.expr]
    if isinstance(s, (If, While)):
        return [s.cond]
    return []


def child_bodies(s):
    if isinstance(s, If):
        return [s.then] + ([s.other] if s.other is not None else [])
    if isinstance(s, While):
        return [s.body]
    if isinstance(s, Block):
        return [s.body]
    return []


def assigned_names(stmts):
    """Names assigned (not declared) anywhere inside ``stmts``."""
    out = []
    for s in stmts:
        if isinstance(s, Assign) and s.name not in out:
            out.append(s.name)
        for body in child_bodies(s):
            for n in assigned_names(body):
                if n not in out:
                    out.append(n)
    return out
