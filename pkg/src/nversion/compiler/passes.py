"""MIR optimization pipeline (levels 0 to 3) with injectable miscompilation bugs.

Pass lists per level:

    1: constant folding, algebraic identities, dead-instruction elimination
    2: + instruction combining, branch folding on constant conditions
    3: + strength reduction, block merging, unreachable-block elimination

The bugs are deliberately silent; a buggy compilation is indistinguishable
from a correct one except by running the result.

    B1 (level >= 1): sdiv/srem folding rounds toward negative infinity when
                     the dividend is negative.
    B2 (level >= 2): multiplication by 3 is rewritten to a shift left by 1.
    B3 (level 3):    a condbr on an icmp fed by a trunc is folded as if the
                     condition were always false.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from ..mir import (
    I1, BasicBlock, Const, Function, Instruction, MirType, Reg, Target,
    assert_valid, predecessors, reverse_postorder,
)
from ..semantics import (
    DIVISION_OPS, SHIFT_OPS, TrapSignal, binop, cast, icmp, to_signed,
)

BUGS = {"B1": 1, "B2": 2, "B3": 3}
LEVELS = (0, 1, 2, 3)


@dataclass
class _Block:
    label: str
    params: list
    instrs: list
    term: Instruction


@dataclass
class _Work:
    """Mutable working copy of a Function."""
    name: str
    params: tuple
    ret: MirType
    tag: str
    blocks: list = field(default_factory=list)

    @classmethod
    def of(cls, f: Function):
        w = cls(f.name, f.params, f.return_type, f.dialect_tag)
        w.blocks = [_Block(b.label, list(b.params), list(b.instructions), b.terminator) for b in f.blocks]
        return w

    def freeze(self) -> Function:
        blocks = tuple(BasicBlock(b.label, tuple(b.params), tuple(b.instrs), b.term) for b in self.blocks)
        return Function(self.name, self.params, self.ret, blocks, self.tag)

    def substitute(self, mapping):
        """Replace uses of registers (by name) with operands, following chains."""
        if not mapping:
            return

        def res(o):
            seen = 0
            while isinstance(o, Reg) and o.name in mapping and seen < 10_000:
                o = mapping[o.name]
                seen += 1
            return o

        def fix(ins):
            ops = tuple(res(o) for o in ins.operands)
            tg = tuple(Target(t.label, tuple(res(a) for a in t.args)) for t in ins.targets)
            if ops == ins.operands and tg == ins.targets:
                return ins
            return replace(ins, operands=ops, targets=tg)

        for b in self.blocks:
            b.instrs = [fix(i) for i in b.instrs]
            b.term = fix(b.term)

    def use_counts(self):
        counts = {}
        for b in self.blocks:
            for ins in (*b.instrs, b.term):
                for r in ins.uses():
                    counts[r.name] = counts.get(r.name, 0) + 1
        return counts

    def definitions(self):
        return {i.dest: i for b in self.blocks for i in b.instrs}


# -- folding helpers ----------------------------------------------------------

def _fold_binop(op, width, a, b, floor_div_bug):
    if floor_div_bug and op in ("sdiv", "srem") and b != 0:
        sa, sb = to_signed(a, width), to_signed(b, width)
        if sa < 0 and not (sb == -1 and sa == -(1 << (width - 1))):
            q = sa // sb
            return (q if op == "sdiv" else sa - sb * q) & ((1 << width) - 1)
    return binop(op, width, a, b)


def _all_const(ops):
    return all(isinstance(o, Const) for o in ops)


def _may_trap(ins: Instruction) -> bool:
    if ins.op in DIVISION_OPS:
        d = ins.operands[1]
        if not isinstance(d, Const) or d.bits == 0:
            return True
        return ins.op in ("sdiv", "srem") and d.bits == d.ty.mask
    if ins.op in SHIFT_OPS:
        amt = ins.operands[1]
        return not isinstance(amt, Const) or amt.bits >= ins.ty.width
    return False


# -- level 1 ------------------------------------------------------------------

def constant_fold(w: _Work, bug_b1=False):
    changed = False
    mapping = {}
    for b in w.blocks:
        kept = []
        for ins in b.instrs:
            ops = tuple(mapping.get(o.name, o) if isinstance(o, Reg) else o for o in ins.operands)
            ins = replace(ins, operands=ops) if ops != ins.operands else ins
            value = _try_fold(ins, bug_b1)
            if value is not None:
                mapping[ins.dest] = value
                changed = True
            else:
                kept.append(ins)
        b.instrs = kept
    w.substitute(mapping)
    return changed


def _try_fold(ins, bug_b1):
    op, ops = ins.op, ins.operands
    if op == "const":
        return ops[0]
    if op == "select":
        c, a, b = ops
        if isinstance(c, Const):
            return a if c.bits else b
        if a == b:
            return a
        return None
    if not ops or not _all_const(ops):
        return None
    try:
        if op == "icmp":
            return Const(I1, icmp(ins.pred, ops[0].ty.width, ops[0].bits, ops[1].bits))
        if op in ("zext", "sext", "trunc"):
            return Const(ins.ty, cast(op, ops[0].ty.width, ins.ty.width, ops[0].bits))
        if op == "intrinsic" and ins.intrinsic == "gm.divcheck":
            return Const(I1, int(ops[0].bits == 0))
        if op in ("callv",):
            return None
        return Const(ins.ty, _fold_binop(op, ins.ty.width, ops[0].bits, ops[1].bits, bug_b1))
    except TrapSignal:
        return None       # leave the trapping instruction in place


def _is(o, value):
    return isinstance(o, Const) and o.bits == (value & o.ty.mask)


def algebraic_simplify(w: _Work):
    mapping = {}
    for b in w.blocks:
        kept = []
        for ins in b.instrs:
            r = _identity(ins)
            if r is not None:
                mapping[ins.dest] = r
            else:
                kept.append(ins)
        b.instrs = kept
    w.substitute(mapping)
    return bool(mapping)


def _identity(ins):
    if len(ins.operands) != 2 or ins.op == "icmp":
        return None
    a, b = ins.operands
    op = ins.op
    unit = {"add": 0, "or": 0, "xor": 0, "mul": 1, "and": -1}
    if op in unit:
        if _is(b, unit[op]):
            return a
        if _is(a, unit[op]):
            return b
    if op == "sub" and _is(b, 0):
        return a
    return None


def dead_instruction_elimination(w: _Work):
    changed = False
    while True:
        uses = w.use_counts()
        removed = False
        for b in w.blocks:
            kept = [i for i in b.instrs if uses.get(i.dest, 0) or _may_trap(i)]
            if len(kept) != len(b.instrs):
                b.instrs = kept
                removed = True
        if not removed:
            return changed
        changed = True


# -- level 2 ------------------------------------------------------------------

def instcombine(w: _Work):
    defs = w.definitions()
    mapping = {}
    changed = False
    for b in w.blocks:
        out = []
        for ins in b.instrs:
            a = ins.operands[0] if ins.operands else None
            inner = defs.get(a.name) if isinstance(a, Reg) else None
            # xor (xor x, -1), -1  ->  x   (also i1 negation)
            if (ins.op == "xor" and _is(ins.operands[1], -1) and inner is not None
                    and inner.op == "xor" and _is(inner.operands[1], -1)):
                mapping[ins.dest] = inner.operands[0]
                continue
            # sub 0, (sub 0, x)  ->  x
            if ins.op == "sub" and _is(a, 0):
                src = ins.operands[1]
                inner = defs.get(src.name) if isinstance(src, Reg) else None
                if inner is not None and inner.op == "sub" and _is(inner.operands[0], 0):
                    mapping[ins.dest] = inner.operands[1]
                    continue
            if ins.op == "select":
                c, x, y = ins.operands
                if ins.ty.width == 1 and _is(x, 1) and _is(y, 0):
                    mapping[ins.dest] = c
                    continue
                if ins.ty.width > 1 and _is(x, 1) and _is(y, 0):
                    out.append(Instruction("zext", ins.dest, ins.ty, (c,)))
                    changed = True
                    continue
                if ins.ty.width > 1 and _is(x, -1) and _is(y, 0):
                    out.append(Instruction("sext", ins.dest, ins.ty, (c,)))
                    changed = True
                    continue
            out.append(ins)
        b.instrs = out
    w.substitute(mapping)
    return changed or bool(mapping)


def buggy_mul3(w: _Work):
    """B2: mul x, 3 -> shl x, 1."""
    changed = False
    for b in w.blocks:
        for k, ins in enumerate(b.instrs):
            if ins.op != "mul":
                continue
            x, c = ins.operands
            if _is(x, 3) and not isinstance(c, Const):
                x, c = c, x
            if _is(c, 3) and not isinstance(x, Const):
                b.instrs[k] = Instruction("shl", ins.dest, ins.ty, (x, Const(ins.ty, 1)))
                changed = True
    return changed


def branch_fold(w: _Work, bug_b3=False):
    defs = w.definitions() if bug_b3 else {}
    changed = False
    for b in w.blocks:
        t = b.term
        if t.op != "condbr":
            continue
        c = t.operands[0]
        if isinstance(c, Const):
            b.term = Instruction("br", targets=(t.targets[0 if c.bits else 1],))
            changed = True
        elif t.targets[0] == t.targets[1]:
            b.term = Instruction("br", targets=(t.targets[0],))
            changed = True
        elif bug_b3 and _icmp_of_trunc(c, defs):
            b.term = Instruction("br", targets=(t.targets[1],))
            changed = True
    return changed


def _icmp_of_trunc(c, defs):
    cmp = defs.get(c.name)
    if cmp is None or cmp.op != "icmp":
        return False
    return any(isinstance(o, Reg) and o.name in defs and defs[o.name].op == "trunc" for o in cmp.operands)


# -- level 3 ------------------------------------------------------------------

def strength_reduce(w: _Work):
    changed = False
    for b in w.blocks:
        for k, ins in enumerate(b.instrs):
            if ins.op != "mul":
                continue
            x, c = ins.operands
            if isinstance(x, Const) and not isinstance(c, Const):
                x, c = c, x
            if isinstance(c, Const) and not isinstance(x, Const):
                v = c.bits
                if v > 1 and v & (v - 1) == 0:
                    b.instrs[k] = Instruction("shl", ins.dest, ins.ty, (x, Const(ins.ty, v.bit_length() - 1)))
                    changed = True
    return changed


def remove_unreachable(w: _Work):
    f = w.freeze()
    live = set(reverse_postorder(f))
    before = len(w.blocks)
    w.blocks = [b for b in w.blocks if b.label in live]
    return len(w.blocks) != before


def merge_blocks(w: _Work):
    changed = False
    while True:
        preds = predecessors(w.freeze())
        index = {b.label: b for b in w.blocks}
        entry = w.blocks[0].label
        for b in w.blocks:
            if b.term.op != "br":
                continue
            tgt = b.term.targets[0]
            s = index[tgt.label]
            if s.label == entry or s is b or len(preds.get(s.label, ())) != 1:
                continue
            mapping = {name: arg for (name, _), arg in zip(s.params, tgt.args)}
            b.instrs.extend(s.instrs)
            b.term = s.term
            w.blocks.remove(s)
            w.substitute(mapping)
            changed = True
            break
        else:
            return changed


# -- driver ---------------------------------------------------------------------

def _pipeline(level, inject):
    bug = inject if inject is not None and level >= BUGS[inject] else None
    passes = []
    if level >= 1:
        passes += [lambda w: constant_fold(w, bug == "B1"), algebraic_simplify]
    if level >= 2:
        passes += [instcombine]
        if bug == "B2":
            passes.append(buggy_mul3)
        passes.append(lambda w: branch_fold(w, bug == "B3"))
    if level >= 3:
        passes += [strength_reduce, remove_unreachable, merge_blocks]
    if level >= 1:
        passes.append(dead_instruction_elimination)
    return passes


def optimize(f: Function, level: int, inject: str = None) -> Function:
    """Run the pass list for ``level``; ``inject`` names a bug (B1..B3) or None."""
    if level not in LEVELS:
        raise ValueError(f"optimization level must be 0..3, got {level}")
    if inject is not None and inject not in BUGS:
        raise ValueError(f"unknown bug {inject!r}")
    if level == 0:
        return f
    w = _Work.of(f)
    passes = _pipeline(level, inject)
    for _ in range(16):
        changed = False
        for p in passes:
            changed = bool(p(w)) or changed
        if not changed:
            break
    return assert_valid(w.freeze())
