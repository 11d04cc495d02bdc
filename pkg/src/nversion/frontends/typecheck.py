"""Static typing for source ASTs.

Both dialects share one typing discipline: arithmetic operands must have the
same integer type, integer literals are untyped until context fixes a type,
and an explicit cast is required to change width or signedness.  Cm adds C's
truthiness (ints usable as conditions) and implicit bool-to-int conversion;
those are made explicit in the returned tree so later stages never see them.
"""

from __future__ import annotations

from dataclasses import replace

from ..errors import TypeCheckError
from .ast import (
    ARITH_OPS, BOOL, CMP_OPS, INT32, LOGIC_OPS, SHIFT_OPS,
    Assign, Binary, Block, BoolLit, Cast, Cond, Decl, FuncDef, If, IntLit,
    Return, SrcType, Unary, Var, While,
)


def is_untyped(e) -> bool:
    """True for constant expressions built only from integer literals."""
    if isinstance(e, IntLit):
        return True
    if isinstance(e, Unary) and e.op in ("-", "~"):
        return is_untyped(e.operand)
    if isinstance(e, Binary) and e.op in ARITH_OPS + SHIFT_OPS:
        return is_untyped(e.left) and (e.op in SHIFT_OPS or is_untyped(e.right))
    return False


def literal_fits(value: int, ty: SrcType) -> bool:
    return ty.min <= value <= ty.max


class Checker:
    def __init__(self, dialect: str):
        self.dialect = dialect
        self.scopes = []

    def fail(self, msg):
        raise TypeCheckError(msg)

    # scopes -----------------------------------------------------------------

    def lookup(self, name):
        for scope in reversed(self.scopes):
            if name in scope:
                return scope[name]
        self.fail(f"undefined: {name}")

    def declare(self, name, ty):
        if any(name in s for s in self.scopes):
            self.fail(f"redeclared: {name}")
        self.scopes[-1][name] = ty

    def scoped(self, stmts):
        self.scopes.append({})
        try:
            return self.stmts(stmts)
        finally:
            self.scopes.pop()

    # entry point --------------------------------------------------------------

    def function(self, fn: FuncDef) -> FuncDef:
        self.ret = fn.ret
        self.scopes = [{}]
        for name, ty in fn.params:
            self.declare(name, ty)
        body = self.scoped(fn.body)
        return replace(fn, body=body)

    # statements -------------------------------------------------------------

    def stmts(self, stmts):
        return tuple(self.stmt(s) for s in stmts)

    def stmt(self, s):
        if isinstance(s, Decl):
            if s.type is not None and s.type.is_bool and s.init is None:
                init = BoolLit(False, ty=BOOL)
            elif s.init is None:
                if s.type is None:
                    self.fail(f"declaration of {s.name} needs a type or an initializer")
                init = IntLit(0, ty=s.type)
            elif s.type is None:
                init = self.expr(s.init, None)
            else:
                init = self.coerce(self.expr(s.init, s.type), s.type, f"declaration of {s.name}")
            ty = s.type or init.ty
            self.declare(s.name, ty)
            return Decl(s.name, ty, init)
        if isinstance(s, Assign):
            ty = self.lookup(s.name)
            return Assign(s.name, self.coerce(self.expr(s.expr, ty), ty, f"assignment to {s.name}"))
        if isinstance(s, Return):
            return Return(self.coerce(self.expr(s.expr, self.ret), self.ret, "return"))
        if isinstance(s, If):
            cond = self.condition(s.cond)
            then = self.scoped(s.then)
            other = self.scoped(s.other) if s.other is not None else None
            return If(cond, then, other)
        if isinstance(s, While):
            return While(self.condition(s.cond), self.scoped(s.body))
        if isinstance(s, Block):
            return Block(self.scoped(s.body))
        self.fail(f"unknown statement {type(s).__name__}")

    def coerce(self, e, ty, what):
        if e.ty == ty:
            return e
        if self.dialect == "cm" and e.ty.is_bool and not ty.is_bool:
            return Cast(ty, e, ty=ty)
        self.fail(f"cannot use {e.ty} value as {ty} in {what}")

    def condition(self, e):
        t = self.expr(e, None)
        if t.ty.is_bool:
            return t
        if self.dialect == "cm":
            return Binary("!=", t, IntLit(0, ty=t.ty), ty=BOOL)
        self.fail(f"non-boolean condition of type {t.ty}")

    # expressions ------------------------------------------------------------

    def expr(self, e, hint):
        if isinstance(e, IntLit):
            ty = hint if hint is not None and not hint.is_bool else INT32
            if not literal_fits(e.value, ty):
                self.fail(f"integer literal {e.value} overflows {ty}")
            return IntLit(e.value, ty=ty)
        if isinstance(e, BoolLit):
            return BoolLit(e.value, ty=BOOL)
        if isinstance(e, Var):
            return Var(e.name, ty=self.lookup(e.name))
        if isinstance(e, Unary):
            if e.op == "!":
                return Unary("!", self.condition(e.operand), ty=BOOL)
            t = self.expr(e.operand, hint)
            if t.ty.is_bool:
                self.fail(f"operator {e.op} not defined on bool")
            return Unary(e.op, t, ty=t.ty)
        if isinstance(e, Binary):
            return self.binary(e, hint)
        if isinstance(e, Cond):
            c = self.condition(e.cond)
            a, b = self.pair(e.then, e.other, hint)
            if a.ty != b.ty:
                self.fail(f"mismatched types {a.ty} and {b.ty} in conditional expression")
            return Cond(c, a, b, ty=a.ty)
        if isinstance(e, Cast):
            if e.target.is_bool:
                self.fail("conversion to bool is not permitted")
            t = self.expr(e.operand, e.target if is_untyped(e.operand) else None)
            return Cast(e.target, t, ty=e.target)
        self.fail(f"unknown expression {type(e).__name__}")

    def pair(self, left, right, hint):
        if is_untyped(left) and not is_untyped(right):
            r = self.expr(right, hint)
            return self.expr(left, r.ty), r
        lt = self.expr(left, hint)
        return lt, self.expr(right, lt.ty)

    def binary(self, e, hint):
        op = e.op
        if op in LOGIC_OPS:
            return Binary(op, self.condition(e.left), self.condition(e.right), ty=BOOL)
        if op in SHIFT_OPS:
            left = self.expr(e.left, hint)
            right = self.expr(e.right, left.ty)
            if left.ty.is_bool or right.ty.is_bool:
                self.fail(f"operator {op} not defined on bool")
            return Binary(op, left, right, ty=left.ty)
        if op in CMP_OPS:
            left, right = self.pair(e.left, e.right, None)
            if left.ty != right.ty:
                self.fail(f"mismatched types {left.ty} and {right.ty} in '{op}'")
            if left.ty.is_bool and op not in ("==", "!="):
                self.fail(f"operator {op} not defined on bool")
            return Binary(op, left, right, ty=BOOL)
        if op in ARITH_OPS:
            left, right = self.pair(e.left, e.right, hint)
            if left.ty != right.ty:
                self.fail(f"mismatched types {left.ty} and {right.ty} in '{op}'")
            if left.ty.is_bool:
                self.fail(f"operator {op} not defined on bool")
            return Binary(op, left, right, ty=left.ty)
        self.fail(f"unknown operator {op}")


def typecheck(fn: FuncDef) -> FuncDef:
    return Checker(fn.dialect).function(fn)
