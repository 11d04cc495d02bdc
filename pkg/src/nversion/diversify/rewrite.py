"""Seeded source-level rewrite rules used by the mock provider.

Each rule takes a typed AST and a ``random.Random`` and returns a new AST, or
None when it has no applicable site.  All rules except ``off_by_one``
preserve semantics.
"""

from __future__ import annotations

from .. import semantics
from ..frontends.ast import (
    BOOL, Assign, Binary, Block, Cast, Cond, Decl, FuncDef, If, IntLit,
    Return, Unary, Var, While,
)
from ..frontends.lower import trap_free

_FLIP = {"<": ">", ">": "<", "<=": ">=", ">=": "<=", "==": "==", "!=": "!="}
_NEGATE = {"==": "!=", "!=": "==", "<": ">=", ">=": "<", ">": "<=", "<=": ">"}
_COMMUTATIVE = ("+", "*", "&", "|", "^")


# -- generic traversal ----------------------------------------------------------

def _map_expr(e, fn):
    """Bottom-up rebuild of an expression with ``fn`` applied to every node."""
    if isinstance(e, Unary):
        e = Unary(e.op, _map_expr(e.operand, fn), ty=e.ty)
    elif isinstance(e, Binary):
        e = Binary(e.op, _map_expr(e.left, fn), _map_expr(e.right, fn), ty=e.ty)
    elif isinstance(e, Cond):
        e = Cond(_map_expr(e.cond, fn), _map_expr(e.then, fn), _map_expr(e.other, fn), ty=e.ty)
    elif isinstance(e, Cast):
        e = Cast(e.target, _map_expr(e.operand, fn), ty=e.ty)
    return fn(e)


def _map_stmts(stmts, efn, sfn=None):
    out = []
    for s in stmts:
        if isinstance(s, Decl):
            s = Decl(s.name, s.type, _map_expr(s.init, efn))
        elif isinstance(s, Assign):
            s = Assign(s.name, _map_expr(s.expr, efn))
        elif isinstance(s, Return):
            s = Return(_map_expr(s.expr, efn))
        elif isinstance(s, If):
            other = _map_stmts(s.other, efn, sfn) if s.other is not None else None
            s = If(_map_expr(s.cond, efn), _map_stmts(s.then, efn, sfn), other)
        elif isinstance(s, While):
            s = While(_map_expr(s.cond, efn), _map_stmts(s.body, efn, sfn))
        elif isinstance(s, Block):
            s = Block(_map_stmts(s.body, efn, sfn))
        if sfn is not None:
            out.extend(sfn(s))
        else:
            out.append(s)
    return tuple(out)


def _sites(fn: FuncDef, pred):
    """Count expression nodes satisfying ``pred``."""
    hits = []

    def visit(e):
        if pred(e):
            hits.append(e)
        return e
    _map_stmts(fn.body, visit)
    return len(hits)


def _rewrite_nth(fn: FuncDef, pred, make, rng):
    """Apply ``make`` to one uniformly chosen node satisfying ``pred``."""
    n = _sites(fn, pred)
    if n == 0:
        return None
    target = rng.randrange(n)
    counter = [0]

    def visit(e):
        if pred(e):
            k = counter[0]
            counter[0] += 1
            if k == target:
                return make(e)
        return e
    return FuncDef(fn.name, fn.params, fn.ret, _map_stmts(fn.body, visit), fn.dialect)


def _lit(value, ty):
    return IntLit(value, ty=ty)


def _fits(value, ty):
    return ty.min <= value <= ty.max


# -- rules ----------------------------------------------------------------------

def commute(fn, rng):
    def ok(e):
        return isinstance(e, Binary) and (e.op in _COMMUTATIVE or e.op in _FLIP)

    def make(e):
        op = _FLIP.get(e.op, e.op)
        return Binary(op, e.right, e.left, ty=e.ty)
    return _rewrite_nth(fn, ok, make, rng)


def _negate(c):
    if isinstance(c, Binary) and c.op in _NEGATE:
        return Binary(_NEGATE[c.op], c.left, c.right, ty=BOOL)
    if isinstance(c, Unary) and c.op == "!":
        return c.operand
    return Unary("!", c, ty=BOOL)


def negate_conditional(fn, rng):
    return _rewrite_nth(fn, lambda e: isinstance(e, Cond),
                        lambda e: Cond(_negate(e.cond), e.other, e.then, ty=e.ty), rng)


def select_to_if(fn, rng):
    """``return c ? a : b``  ->  ``if (c) return a; return b;``"""
    sites = []

    def count(s):
        if isinstance(s, Return) and isinstance(s.expr, Cond):
            sites.append(s)
        return [s]
    _map_stmts(fn.body, lambda e: e, count)
    if not sites:
        return None
    target = rng.randrange(len(sites))
    seen = [0]

    def rewrite(s):
        if isinstance(s, Return) and isinstance(s.expr, Cond):
            k = seen[0]
            seen[0] += 1
            if k == target:
                e = s.expr
                return [If(e.cond, (Return(e.then),), (Return(e.other),))]
        return [s]
    return FuncDef(fn.name, fn.params, fn.ret, _map_stmts(fn.body, lambda e: e, rewrite), fn.dialect)


def if_to_select(fn, rng):
    """``if (c) return a; [else] return b;``  ->  ``return c ? a : b;``

    Only applied when both returned expressions are trap-free, so eager
    evaluation of the select keeps the outcome unchanged.
    """
    def fold(stmts):
        out = []
        i = 0
        stmts = list(stmts)
        while i < len(stmts):
            s = stmts[i]
            if isinstance(s, If) and len(s.then) == 1 and isinstance(s.then[0], Return):
                a = s.then[0].expr
                b = None
                if s.other is not None and len(s.other) == 1 and isinstance(s.other[0], Return):
                    b, skip = s.other[0].expr, 1
                elif s.other is None and i + 1 < len(stmts) and isinstance(stmts[i + 1], Return):
                    b, skip = stmts[i + 1].expr, 2
                if b is not None and trap_free(a) and trap_free(b):
                    out.append(Return(Cond(s.cond, a, b, ty=a.ty)))
                    i += skip
                    continue
            out.append(s)
            i += 1
        return tuple(out)

    def fold_all(stmts):
        rebuilt = []
        for s in stmts:
            if isinstance(s, If):
                s = If(s.cond, fold_all(s.then), fold_all(s.other) if s.other is not None else None)
            elif isinstance(s, While):
                s = While(s.cond, fold_all(s.body))
            elif isinstance(s, Block):
                s = Block(fold_all(s.body))
            rebuilt.append(s)
        return fold(rebuilt)

    body = fold_all(fn.body)
    if body == fn.body:
        return None
    return FuncDef(fn.name, fn.params, fn.ret, body, fn.dialect)


def _pow2(e):
    return isinstance(e, IntLit) and e.value > 1 and e.value & (e.value - 1) == 0


def mul_shift(fn, rng):
    """``x * 2^k``  <->  ``x << k``."""
    def ok(e):
        if not isinstance(e, Binary):
            return False
        if e.op == "*" and (_pow2(e.right) or _pow2(e.left)):
            return True
        return e.op == "<<" and isinstance(e.right, IntLit) and 0 < e.right.value < e.ty.width - 1

    def make(e):
        if e.op == "*":
            x, c = (e.left, e.right) if _pow2(e.right) else (e.right, e.left)
            return Binary("<<", x, _lit(c.value.bit_length() - 1, e.ty), ty=e.ty)
        return Binary("*", e.left, _lit(1 << e.right.value, e.ty), ty=e.ty)
    return _rewrite_nth(fn, ok, make, rng)


def redundant_identity(fn, rng):
    """Wrap one returned integer expression in ``^ 0`` or ``+ 0``."""
    op = rng.choice(["^", "+"])
    sites = []

    def count(s):
        if isinstance(s, Return) and not s.expr.ty.is_bool:
            sites.append(s)
        return [s]
    _map_stmts(fn.body, lambda e: e, count)
    if not sites:
        return None
    target = rng.randrange(len(sites))
    seen = [0]

    def rewrite(s):
        if isinstance(s, Return) and not s.expr.ty.is_bool:
            k = seen[0]
            seen[0] += 1
            if k == target:
                return [Return(Binary(op, s.expr, _lit(0, s.expr.ty), ty=s.expr.ty))]
        return [s]
    return FuncDef(fn.name, fn.params, fn.ret, _map_stmts(fn.body, lambda e: e, rewrite), fn.dialect)


_C_OPS = {"+": "add", "-": "sub", "*": "mul", "&": "and", "|": "or", "^": "xor"}


def _eval_const(e):
    ty = e.ty
    a, b = e.left.value, e.right.value
    w = ty.width
    m = (1 << w) - 1
    if e.op in _C_OPS:
        bits = semantics.binop(_C_OPS[e.op], w, a & m, b & m)
    elif e.op in ("/", "%"):
        op = ("s" if ty.signed else "u") + ("div" if e.op == "/" else "rem")
        bits = semantics.binop(op, w, a & m, b & m)
    else:
        return None
    return semantics.to_signed(bits, w) if ty.signed else bits


def fold_constants(fn, rng):
    """Fold one operator whose operands are both literals."""
    def ok(e):
        if not (isinstance(e, Binary) and isinstance(e.left, IntLit) and isinstance(e.right, IntLit)):
            return False
        if e.ty is None or e.ty.is_bool:
            return False
        try:
            return _eval_const(e) is not None
        except semantics.TrapSignal:
            return False
    return _rewrite_nth(fn, ok, lambda e: _lit(_eval_const(e), e.ty), rng)


def shift_add(fn, rng):
    """``x * c``  ->  sum of shifted copies of ``x`` for small odd ``c``."""
    def ok(e):
        return (isinstance(e, Binary) and e.op == "*" and isinstance(e.left, Var)
                and isinstance(e.right, IntLit) and e.right.value in (3, 5, 6, 9, 10, 12))

    def make(e):
        x, c = e.left, e.right.value
        terms = []
        for k in range(c.bit_length()):
            if c >> k & 1:
                terms.append(x if k == 0 else Binary("<<", x, _lit(k, e.ty), ty=e.ty))
        out = terms[0]
        for t in terms[1:]:
            out = Binary("+", out, t, ty=e.ty)
        return out
    return _rewrite_nth(fn, ok, make, rng)


def sub_to_add(fn, rng):
    """``x - c``  ->  ``x + (-c)`` for literal ``c`` of a signed type."""
    def ok(e):
        return (isinstance(e, Binary) and e.op == "-" and isinstance(e.right, IntLit)
                and e.ty.signed and _fits(-e.right.value, e.ty))
    return _rewrite_nth(fn, ok, lambda e: Binary("+", e.left, _lit(-e.right.value, e.ty), ty=e.ty), rng)


def complement(fn, rng):
    """``~x``  ->  ``-x - 1``."""
    def ok(e):
        return isinstance(e, Unary) and e.op == "~" and e.ty.signed
    return _rewrite_nth(fn, ok, lambda e: Binary("-", Unary("-", e.operand, ty=e.ty),
                                                _lit(1, e.ty), ty=e.ty), rng)


def rename_locals(fn, rng):
    """Cosmetic renaming of declared locals (no effect on canonical MIR)."""
    decls = []

    def collect(s):
        if isinstance(s, Decl):
            decls.append(s.name)
        return [s]
    _map_stmts(fn.body, lambda e: e, collect)
    if not decls:
        return None
    used = {n for n, _ in fn.params} | set(decls)
    mapping = {}
    for n in decls:
        k = 1
        while f"{n}{k}" in used:
            k += 1
        mapping[n] = f"{n}{k}"
        used.add(mapping[n])

    def efn(e):
        return Var(mapping[e.name], ty=e.ty) if isinstance(e, Var) and e.name in mapping else e

    def sfn(s):
        if isinstance(s, Decl) and s.name in mapping:
            s = Decl(mapping[s.name], s.type, s.init)
        elif isinstance(s, Assign) and s.name in mapping:
            s = Assign(mapping[s.name], s.expr)
        return [s]
    return FuncDef(fn.name, fn.params, fn.ret, _map_stmts(fn.body, efn, sfn), fn.dialect)


def off_by_one(fn, rng):
    """Semantics-breaking: nudge one literal by one."""
    delta = rng.choice([1, -1])

    def ok(e):
        return isinstance(e, IntLit) and e.ty is not None and _fits(e.value + delta, e.ty)
    return _rewrite_nth(fn, ok, lambda e: _lit(e.value + delta, e.ty), rng)


PRESERVING_RULES = {
    "commute": commute,
    "negate_conditional": negate_conditional,
    "select_to_if": select_to_if,
    "if_to_select": if_to_select,
    "mul_shift": mul_shift,
    "redundant_identity": redundant_identity,
    "fold_constants": fold_constants,
    "shift_add": shift_add,
    "sub_to_add": sub_to_add,
    "complement": complement,
    "rename_locals": rename_locals,
}
BREAKING_RULES = {"off_by_one": off_by_one}
