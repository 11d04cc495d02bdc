"""Lowering of typed source ASTs to MIR.

The two dialects share the statement lowering but imprint different
instruction patterns, which is where cross-dialect structural diversity comes
from:

* Cm: ternaries become ``select`` when both arms are trap-free, ``&&``/``||``
  evaluate eagerly under the same condition, shift amounts are masked to
  ``width - 1`` and ``return`` emits ``ret`` in place.
* Gm: every division and remainder is preceded by a ``gm.divcheck`` guard,
  every shift by an explicit range check, logical operators always
  short-circuit, and all returns funnel through one exit block.
"""

from __future__ import annotations

from ..errors import LoweringError, TypeCheckError, ValidationError
from ..mir import (
    I1, MAX_INSTRUCTIONS, BasicBlock, Const, Function, Instruction, MirType, Reg,
    Target,
    assert_valid,
)
from .ast import (
    Assign, Binary, Block, BoolLit, Cast, Cond, Decl, FuncDef, If, IntLit,
    Return, Unary, Var, While, assigned_names, walk_expr,
)
from .typecheck import typecheck

_ARITH = {"+": "add", "-": "sub", "*": "mul", "&": "and", "|": "or", "^": "xor"}
_CMP = {"==": "eq", "!=": "ne", "<": "lt", "<=": "le", ">": "gt", ">=": "ge"}


def trap_free(e) -> bool:
    """No sub-expression can trap under Cm semantics."""
    return not any(isinstance(x, Binary) and x.op in ("/", "%") for x in walk_expr(e))


class _BlockBuf:
    def __init__(self, label, params=()):
        self.label = label
        self.params = tuple(params)
        self.instrs = []
        self.term = None


class Lowerer:
    def __init__(self, fn: FuncDef, dialect: str):
        self.fn = fn
        self.dialect = dialect
        self.blocks = []
        self.counter = 0
        self.labels = {}
        self.cur = self.new_block("entry")
        self.env = {name: Reg(name) for name, _ in fn.params}
        self.rtypes = {name: ty.mir for name, ty in fn.params}
        self.exit_block = None
        self.panic_block = None

    # plumbing ---------------------------------------------------------------

    def fresh(self) -> str:
        self.counter += 1
        return str(self.counter)

    def new_label(self, stem):
        n = self.labels.get(stem, 0) + 1
        self.labels[stem] = n
        return f"{stem}{n}"

    def new_block(self, label, params=(), append=True):
        b = _BlockBuf(label, params)
        if append:
            self.blocks.append(b)
        return b

    def emit(self, op, ty, *operands, pred=None, intrinsic=None) -> Reg:
        dest = self.fresh()
        self.rtypes[dest] = ty
        self.cur.instrs.append(Instruction(op, dest, ty, tuple(operands), pred=pred, intrinsic=intrinsic))
        return Reg(dest)

    def terminate(self, ins):
        self.cur.term = ins
        self.cur = None

    def br(self, label, args=()):
        self.terminate(Instruction("br", targets=(Target(label, tuple(args)),)))

    def condbr(self, c, t, f, t_args=(), f_args=()):
        self.terminate(Instruction("condbr", operands=(c,),
                                   targets=(Target(t, tuple(t_args)), Target(f, tuple(f_args)))))

    def start(self, block):
        self.cur = block

    def panic(self):
        if self.panic_block is None:
            self.panic_block = self.new_block("panic", append=False)
            self.panic_block.term = Instruction("trap")
        return self.panic_block.label

    # expressions --------------------------------------------------------------

    def expr(self, e):
        if isinstance(e, IntLit):
            return Const.of(e.ty.mir, e.value)
        if isinstance(e, BoolLit):
            return Const(I1, int(e.value))
        if isinstance(e, Var):
            return self.env[e.name]
        if isinstance(e, Unary):
            v = self.expr(e.operand)
            ty = e.ty.mir
            if e.op == "-":
                return self.emit("sub", ty, Const(ty, 0), v)
            if e.op == "~":
                return self.emit("xor", ty, v, Const.of(ty, -1))
            return self.emit("xor", I1, v, Const(I1, 1))
        if isinstance(e, Cast):
            return self.cast(self.expr(e.operand), e.operand.ty, e.target)
        if isinstance(e, Cond):
            return self.conditional(e)
        return self.binary(e)

    def cast(self, v, src, dst):
        if src.width == dst.width:
            return v
        if src.width > dst.width:
            return self.emit("trunc", dst.mir, v)
        op = "sext" if src.signed and not src.is_bool else "zext"
        return self.emit(op, dst.mir, v)

    def resize(self, v, src_width, dst_width):
        if src_width == dst_width:
            return v
        op = "trunc" if src_width > dst_width else "zext"
        return self.emit(op, MirType(dst_width), v)

    def binary(self, e):
        op = e.op
        if op in ("&&", "||"):
            return self.logical(e)
        lt = e.left.ty
        if op in _CMP:
            a = self.expr(e.left)
            b = self.expr(e.right)
            pred = _CMP[op]
            if pred not in ("eq", "ne"):
                pred = ("s" if lt.signed else "u") + pred
            return self.emit("icmp", I1, a, b, pred=pred)
        ty = e.ty.mir
        if op in ("<<", ">>"):
            a = self.expr(e.left)
            amt = self.expr(e.right)
            aw = e.right.ty.width
            if self.dialect == "gm":
                bad = self.emit("icmp", I1, amt, Const.of(e.right.ty.mir, ty.width), pred="uge")
                cont = self.new_block(self.new_label("shok"))
                self.condbr(bad, self.panic(), cont.label)
                self.start(cont)
                amt = self.resize(amt, aw, ty.width)
            else:
                amt = self.resize(amt, aw, ty.width)
                amt = self.emit("and", ty, amt, Const(ty, ty.width - 1))
            mop = "shl" if op == "<<" else ("ashr" if lt.signed else "lshr")
            return self.emit(mop, ty, a, amt)
        a = self.expr(e.left)
        b = self.expr(e.right)
        if op in ("/", "%"):
            mop = ("s" if lt.signed else "u") + ("div" if op == "/" else "rem")
            if self.dialect == "gm":
                zero = self.emit("intrinsic", I1, b, intrinsic="gm.divcheck")
                cont = self.new_block(self.new_label("divok"))
                self.condbr(zero, self.panic(), cont.label)
                self.start(cont)
            return self.emit(mop, ty, a, b)
        return self.emit(_ARITH[op], ty, a, b)

    def logical(self, e):
        is_and = e.op == "&&"
        a = self.expr(e.left)
        if self.dialect == "cm" and trap_free(e.right):
            b = self.expr(e.right)
            return self.emit("and" if is_and else "or", I1, a, b)
        rhs = self.new_block(self.new_label("rhs"))
        res = self.fresh()
        self.rtypes[res] = I1
        join = _BlockBuf(self.new_label("sc"), ((res, I1),))
        short = Const(I1, 0 if is_and else 1)
        if is_and:
            self.condbr(a, rhs.label, join.label, f_args=(short,))
        else:
            self.condbr(a, join.label, rhs.label, t_args=(short,))
        self.start(rhs)
        b = self.expr(e.right)
        self.br(join.label, (b,))
        self.blocks.append(join)
        self.start(join)
        return Reg(res)

    def conditional(self, e):
        c = self.expr(e.cond)
        ty = e.ty.mir
        if trap_free(e.then) and trap_free(e.other) and self.dialect == "cm":
            a = self.expr(e.then)
            b = self.expr(e.other)
            return self.emit("select", ty, c, a, b)
        t = self.new_block(self.new_label("tern"))
        f = self.new_block(self.new_label("tern"))
        res = self.fresh()
        self.rtypes[res] = ty
        join = _BlockBuf(self.new_label("tjoin"), ((res, ty),))
        self.condbr(c, t.label, f.label)
        self.start(t)
        self.br(join.label, (self.expr(e.then),))
        self.start(f)
        self.br(join.label, (self.expr(e.other),))
        self.blocks.append(join)
        self.start(join)
        return Reg(res)

    # statements -------------------------------------------------------------

    def body(self, stmts):
        """Lower a scoped statement list; names declared inside are dropped."""
        outer = set(self.env)
        for s in stmts:
            if self.cur is None:
                break           # unreachable after return
            self.stmt(s)
        for name in list(self.env):
            if name not in outer:
                del self.env[name]

    def stmt(self, s):
        if isinstance(s, Decl):
            self.env[s.name] = self.expr(s.init)
        elif isinstance(s, Assign):
            self.env[s.name] = self.expr(s.expr)
        elif isinstance(s, Return):
            v = self.expr(s.expr)
            if self.dialect == "gm":
                if self.exit_block is None:
                    r = self.fresh()
                    self.exit_block = _BlockBuf("exit", ((r, self.fn.ret.mir),))
                    self.exit_block.term = Instruction("ret", operands=(Reg(r),))
                self.br("exit", (v,))
            else:
                self.terminate(Instruction("ret", operands=(v,)))
        elif isinstance(s, Block):
            self.body(s.body)
        elif isinstance(s, If):
            self.if_stmt(s)
        elif isinstance(s, While):
            self.while_stmt(s)
        else:
            raise LoweringError(f"unknown statement {type(s).__name__}")

    def carried(self, stmts):
        return [n for n in assigned_names(stmts) if n in self.env]

    def type_of(self, v) -> MirType:
        return v.ty if isinstance(v, Const) else self.rtypes[v.name]

    def join_params(self, names):
        params = tuple((self.fresh(), self.type_of(self.env[n])) for n in names)
        self.rtypes.update(params)
        return params

    def if_stmt(self, s):
        names = self.carried(s.then + (s.other or ()))
        c = self.expr(s.cond)
        then = self.new_block(self.new_label("then"))
        other = self.new_block(self.new_label("else")) if s.other is not None else None
        join = _BlockBuf(self.new_label("join"), self.join_params(names))
        base = dict(self.env)
        if other is None:
            self.condbr(c, then.label, join.label, f_args=[base[n] for n in names])
        else:
            self.condbr(c, then.label, other.label)
        reached = other is None
        for blk, stmts in ((then, s.then), (other, s.other)):
            if blk is None:
                continue
            self.env = dict(base)
            self.start(blk)
            self.body(stmts)
            if self.cur is not None:
                self.br(join.label, [self.env[n] for n in names])
                reached = True
        self.env = base
        if reached:
            self.blocks.append(join)
            self.start(join)
            for (reg, _), n in zip(join.params, names):
                self.env[n] = Reg(reg)

    def while_stmt(self, s):
        names = self.carried(s.body)
        head = _BlockBuf(self.new_label("loop"), self.join_params(names))
        self.br(head.label, [self.env[n] for n in names])
        self.blocks.append(head)
        self.start(head)
        for (reg, _), n in zip(head.params, names):
            self.env[n] = Reg(reg)
        c = self.expr(s.cond)
        body = self.new_block(self.new_label("body"))
        done = _BlockBuf(self.new_label("done"))
        self.condbr(c, body.label, done.label)
        base = dict(self.env)
        self.start(body)
        self.body(s.body)
        if self.cur is not None:
            self.br(head.label, [self.env[n] for n in names])
        self.env = base
        self.blocks.append(done)
        self.start(done)

    # driver -----------------------------------------------------------------

    def run(self) -> Function:
        self.body(self.fn.body)
        if self.cur is not None:
            self.terminate(Instruction("trap"))
        tail = [b for b in (self.exit_block, self.panic_block) if b is not None]
        blocks = tuple(
            BasicBlock(b.label, b.params, tuple(b.instrs), b.term)
            for b in self.blocks + tail
        )
        f = Function(self.fn.name, tuple((n, t.mir) for n, t in self.fn.params),
                     self.fn.ret.mir, blocks, self.dialect)
        if f.instruction_count() > MAX_INSTRUCTIONS:
            raise LoweringError(f"function exceeds {MAX_INSTRUCTIONS} instructions")
        return f


def lower_ast(ast: FuncDef, dialect: str = None) -> Function:
    dialect = dialect or ast.dialect
    if dialect not in ("cm", "gm"):
        raise LoweringError(f"unknown dialect {dialect!r}")
    try:
        typed = typecheck(ast)
    except TypeCheckError as exc:
        raise LoweringError(exc.message) from None
    f = Lowerer(typed, dialect).run()
    try:
        return assert_valid(f)
    except ValidationError as exc:   # an internal defect, never user error
        raise LoweringError(f"lowering produced invalid MIR: {exc}") from None
