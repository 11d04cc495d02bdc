"""Source printers for both dialects.

``print_source(ast, "gm")`` accepts ASTs from either dialect: Cm-only
constructs (conditional expressions, bool-to-int casts) are first rewritten
into Gm statements by :func:`to_gm`.  The input must be type-checked.
"""

from __future__ import annotations

from .ast import (
    BOOL, Assign, Binary, Block, BoolLit, Cast, Cond, Decl, FuncDef, If, IntLit,
    Return, Unary, Var, While, walk_expr, stmt_exprs, child_bodies,
)

_CM_PREC = {"||": 1, "&&": 2, "|": 3, "^": 4, "&": 5, "==": 6, "!=": 6,
            "<": 7, "<=": 7, ">": 7, ">=": 7, "<<": 8, ">>": 8,
            "+": 9, "-": 9, "*": 10, "/": 10, "%": 10}
_GM_PREC = {"||": 1, "&&": 2, "==": 3, "!=": 3, "<": 3, "<=": 3, ">": 3, ">=": 3,
            "+": 4, "-": 4, "|": 4, "^": 4,
            "*": 5, "/": 5, "%": 5, "<<": 5, ">>": 5, "&": 5}
_UNARY = 20


class _Printer:
    def __init__(self, dialect):
        self.dialect = dialect
        self.prec = _CM_PREC if dialect == "cm" else _GM_PREC
        self.indent = "    " if dialect == "cm" else "\t"

    # expressions ------------------------------------------------------------

    def expr(self, e, need=0):
        text, p = self._expr(e)
        return f"({text})" if p < need else text

    def _expr(self, e):
        if isinstance(e, IntLit):
            return str(e.value), (_UNARY if e.value >= 0 else _UNARY - 1)
        if isinstance(e, BoolLit):
            return ("true" if e.value else "false"), _UNARY
        if isinstance(e, Var):
            return e.name, _UNARY
        if isinstance(e, Unary):
            op = "^" if (e.op == "~" and self.dialect == "gm") else e.op
            inner = self.expr(e.operand, _UNARY)
            if inner.startswith(("-", "^", "~", "!")):
                inner = f"({inner})"
            return f"{op}{inner}", _UNARY - 1
        if isinstance(e, Cast):
            if self.dialect == "gm":
                return f"{e.target.name}({self.expr(e.operand)})", _UNARY
            return f"({e.target.name}){self.expr(e.operand, _UNARY)}", _UNARY - 1
        if isinstance(e, Binary):
            p = self.prec[e.op]
            return f"{self.expr(e.left, p)} {e.op} {self.expr(e.right, p + 1)}", p
        if isinstance(e, Cond):
            if self.dialect == "gm":
                raise ValueError("conditional expressions must be rewritten before Gm printing")
            return f"{self.expr(e.cond, 1)} ? {self.expr(e.then, 1)} : {self.expr(e.other, 0)}", 0
        raise TypeError(f"cannot print {e!r}")

    # statements -------------------------------------------------------------

    def block(self, stmts, depth):
        out = []
        for s in stmts:
            out.extend(self.stmt(s, depth))
        return out

    def stmt(self, s, depth):
        pad = self.indent * depth
        cm = self.dialect == "cm"
        if isinstance(s, Decl):
            if cm:
                return [f"{pad}{s.type.name} {s.name} = {self.expr(s.init)};"]
            return [f"{pad}var {s.name} {s.type.name} = {self.expr(s.init)}"]
        if isinstance(s, Assign):
            return [f"{pad}{s.name} = {self.expr(s.expr)}{';' if cm else ''}"]
        if isinstance(s, Return):
            return [f"{pad}return {self.expr(s.expr)}{';' if cm else ''}"]
        if isinstance(s, Block):
            return [f"{pad}{{", *self.block(s.body, depth + 1), f"{pad}}}"]
        if isinstance(s, While):
            head = f"while ({self.expr(s.cond)})" if cm else f"for {self.expr(s.cond)}"
            return [f"{pad}{head} {{", *self.block(s.body, depth + 1), f"{pad}}}"]
        if isinstance(s, If):
            return self.if_stmt(s, depth, pad)
        raise TypeError(f"cannot print {s!r}")

    def if_stmt(self, s, depth, pad, prefix=""):
        cond = f"({self.expr(s.cond)})" if self.dialect == "cm" else self.expr(s.cond)
        lines = [f"{pad}{prefix}if {cond} {{", *self.block(s.then, depth + 1)]
        other = s.other
        if other is None:
            lines.append(f"{pad}}}")
        elif len(other) == 1 and isinstance(other[0], If):
            nested = self.if_stmt(other[0], depth, pad, prefix="} else ")
            lines.extend(nested)
        else:
            lines.append(f"{pad}}} else {{")
            lines.extend(self.block(other, depth + 1))
            lines.append(f"{pad}}}")
        return lines

    def function(self, fn: FuncDef):
        if self.dialect == "cm":
            params = ", ".join(f"{t.name} {n}" for n, t in fn.params)
            head = f"{fn.ret.name} {fn.name}({params}) {{"
        else:
            params = ", ".join(f"{n} {t.name}" for n, t in fn.params)
            head = f"func {fn.name}({params}) {fn.ret.name} {{"
        return "\n".join([head, *self.block(fn.body, 1), "}"]) + "\n"


# -- Cm to Gm rewriting -------------------------------------------------------

def _names(fn):
    names = {n for n, _ in fn.params}

    def visit(stmts):
        for s in stmts:
            if isinstance(s, (Decl, Assign)):
                names.add(s.name)
            for e in stmt_exprs(s):
                names.update(x.name for x in walk_expr(e) if isinstance(x, Var))
            for b in child_bodies(s):
                visit(b)
    visit(fn.body)
    return names


def _has_cond(e):
    return any(isinstance(x, Cond) or (isinstance(x, Cast) and x.operand.ty.is_bool)
               for x in walk_expr(e))


class _GmRewriter:
    def __init__(self, fn):
        self.used = _names(fn)
        self.n = 0

    def fresh(self, stem):
        while True:
            self.n += 1
            name = f"_{stem}{self.n}"
            if name not in self.used:
                self.used.add(name)
                return name

    def hoist(self, e):
        """Return (pre-statements, expression free of Cond)."""
        if not _has_cond(e):
            return [], e
        if isinstance(e, Cast) and e.operand.ty.is_bool:
            return self.hoist(Cond(e.operand, IntLit(1, ty=e.ty), IntLit(0, ty=e.ty), ty=e.ty))
        if isinstance(e, Binary) and e.op in ("&&", "||") and _has_cond(e.right):
            t, f = BoolLit(True, ty=BOOL), BoolLit(False, ty=BOOL)
            alt = Cond(e.left, e.right, f, ty=BOOL) if e.op == "&&" else Cond(e.left, t, e.right, ty=BOOL)
            return self.hoist(alt)
        if isinstance(e, Cond):
            pre, c = self.hoist(e.cond)
            tmp = self.fresh("t")
            a_pre, a = self.hoist(e.then)
            b_pre, b = self.hoist(e.other)
            zero = BoolLit(False, ty=BOOL) if e.ty.is_bool else IntLit(0, ty=e.ty)
            pre += [Decl(tmp, e.ty, zero),
                    If(c, tuple(a_pre) + (Assign(tmp, a),), tuple(b_pre) + (Assign(tmp, b),))]
            return pre, Var(tmp, ty=e.ty)
        if isinstance(e, Unary):
            pre, x = self.hoist(e.operand)
            return pre, Unary(e.op, x, ty=e.ty)
        if isinstance(e, Cast):
            pre, x = self.hoist(e.operand)
            return pre, Cast(e.target, x, ty=e.ty)
        if isinstance(e, Binary):
            lp, l = self.hoist(e.left)
            rp, r = self.hoist(e.right)
            return lp + rp, Binary(e.op, l, r, ty=e.ty)
        return [], e

    def stmts(self, stmts):
        out = []
        for s in stmts:
            out.extend(self.stmt(s))
        return tuple(out)

    def stmt(self, s):
        if isinstance(s, Return):
            e = s.expr
            if isinstance(e, Cond):
                pre, c = self.hoist(e.cond)
                return pre + [If(c, self.stmts((Return(e.then),))), *self.stmt(Return(e.other))]
            pre, x = self.hoist(e)
            return pre + [Return(x)]
        if isinstance(s, Decl):
            pre, x = self.hoist(s.init)
            return pre + [Decl(s.name, s.type, x)]
        if isinstance(s, Assign):
            pre, x = self.hoist(s.expr)
            return pre + [Assign(s.name, x)]
        if isinstance(s, If):
            pre, c = self.hoist(s.cond)
            other = self.stmts(s.other) if s.other is not None else None
            return pre + [If(c, self.stmts(s.then), other)]
        if isinstance(s, While):
            body = self.stmts(s.body)
            if not _has_cond(s.cond):
                return [While(s.cond, body)]
            flag = self.fresh("c")
            pre, c = self.hoist(s.cond)
            again_pre, again = self.hoist(s.cond)
            loop_body = body + tuple(again_pre) + (Assign(flag, again),)
            return pre + [Decl(flag, BOOL, c), While(Var(flag, ty=BOOL), loop_body)]
        if isinstance(s, Block):
            return [Block(self.stmts(s.body))]
        raise TypeError(f"cannot rewrite {s!r}")


def to_gm(fn: FuncDef) -> FuncDef:
    """Rewrite a typed AST so that it only uses constructs Gm can express."""
    body = _GmRewriter(fn).stmts(fn.body)
    return FuncDef(fn.name, fn.params, fn.ret, body, "gm")


def print_source(fn: FuncDef, dialect: str = None) -> str:
    dialect = dialect or fn.dialect
    if dialect == "gm":
        fn = to_gm(fn)
    return _Printer(dialect).function(fn)
