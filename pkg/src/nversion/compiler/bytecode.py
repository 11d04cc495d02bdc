"""Stack-VM back end: MIR -> bytecode, static verification, disassembly, hashing."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

from ..errors import LoweringError, MalformedBytecode
from ..mir import Const, Function, assert_valid
from ..semantics import BINARY_OPS

WIDTHLESS_BINARY = frozenset(["and", "or", "xor"])


@dataclass(frozen=True)
class BcInstr:
    op: str                 # push ldloc stloc <binary> cmp sel zext sext trunc jmp jz ret trap
    width: int = 0          # operand width for width-suffixed mnemonics
    args: tuple = ()        # immediates: push value, slot, jump index, cast widths
    pred: str = ""

    @property
    def mnemonic(self) -> str:
        if self.op == "cmp":
            return f"cmp.{self.pred}.i{self.width}"
        if self.op == "push" or (self.op in BINARY_OPS and self.op not in WIDTHLESS_BINARY):
            return f"{self.op}.i{self.width}"
        return self.op

    def __str__(self):
        if self.args:
            return f"{self.mnemonic} {' '.join(str(a) for a in self.args)}"
        return self.mnemonic


@dataclass(frozen=True)
class BytecodeUnit:
    name: str
    param_widths: tuple
    return_width: int
    code: tuple
    n_locals: int

    def disassemble(self, with_header: bool = True) -> str:
        lines = []
        if with_header:
            params = ", ".join(f"i{w}" for w in self.param_widths)
            lines.append(f"# unit ({params}) -> i{self.return_width} locals={self.n_locals}")
        lines.extend(str(i) for i in self.code)
        return "\n".join(lines) + "\n"


_STACK_EFFECT = {"push": 1, "ldloc": 1, "stloc": -1, "cmp": -1, "sel": -2,
                 "zext": 0, "sext": 0, "trunc": 0, "jz": -1, "jmp": 0}


def verify_bytecode(u: BytecodeUnit) -> None:
    """Check jump ranges, local indices and that every path balances the stack."""
    n = len(u.code)
    if n == 0:
        raise MalformedBytecode("empty unit")
    depth = {0: 0}
    work = [0]
    while work:
        pc = work.pop()
        d = depth[pc]
        ins = u.code[pc]
        op = ins.op
        if op in ("ldloc", "stloc") and not 0 <= ins.args[0] < u.n_locals:
            raise MalformedBytecode(f"local index out of range at {pc}")
        if op == "ret":
            if d != 1:
                raise MalformedBytecode(f"ret with stack depth {d} at {pc}")
            continue
        if op == "trap":
            continue
        eff = -1 if op in BINARY_OPS else _STACK_EFFECT.get(op)
        if eff is None:
            raise MalformedBytecode(f"unknown opcode {op!r} at {pc}")
        need = {"stloc": 1, "cmp": 2, "sel": 3, "jz": 1, "zext": 1, "sext": 1, "trunc": 1}.get(op, 0)
        if op in BINARY_OPS:
            need = 2
        if d < need:
            raise MalformedBytecode(f"stack underflow at {pc}")
        nd = d + eff
        succs = []
        if op in ("jmp", "jz"):
            tgt = ins.args[0]
            if not 0 <= tgt < n:
                raise MalformedBytecode(f"jump target {tgt} out of range at {pc}")
            succs.append(tgt)
        if op != "jmp":
            if pc + 1 >= n:
                raise MalformedBytecode(f"falls off the end at {pc}")
            succs.append(pc + 1)
        for s in succs:
            if s in depth:
                if depth[s] != nd:
                    raise MalformedBytecode(f"inconsistent stack depth at {s}")
            else:
                depth[s] = nd
                work.append(s)


def lower_to_bytecode(f: Function) -> BytecodeUnit:
    assert_valid(f)
    slots = {n: i for i, (n, _) in enumerate(f.params)}
    types = f.register_types()
    for b in f.blocks:
        for n, _ in b.params:
            slots[n] = len(slots)
        for ins in b.instructions:
            slots[ins.dest] = len(slots)

    code = []
    fixups = []   # (index, label) for jumps to block starts
    starts = {}

    def emit(op, width=0, args=(), pred=""):
        code.append(BcInstr(op, width, tuple(args), pred))

    def push(o):
        if isinstance(o, Const):
            emit("push", o.ty.width, (o.bits if o.ty.width == 1 else o.signed,))
        else:
            emit("ldloc", args=(slots[o.name],))

    def width_of(o):
        return o.ty.width if isinstance(o, Const) else types[o.name].width

    def jump(op, label):
        fixups.append((len(code), label))
        emit(op, args=(-1,))

    def moves(target, params):
        for a in target.args:
            push(a)
        for name, _ in reversed(params):
            emit("stloc", args=(slots[name],))

    bm = f.block_map()
    order = [b.label for b in f.blocks]
    for pos, b in enumerate(f.blocks):
        starts[b.label] = len(code)
        nxt = order[pos + 1] if pos + 1 < len(order) else None
        for ins in b.instructions:
            op = ins.op
            if op in BINARY_OPS:
                push(ins.operands[0])
                push(ins.operands[1])
                emit(op, ins.ty.width)
            elif op == "icmp":
                push(ins.operands[0])
                push(ins.operands[1])
                emit("cmp", width_of(ins.operands[0]), pred=ins.pred)
            elif op == "select":
                for o in ins.operands:
                    push(o)
                emit("sel")
            elif op in ("zext", "sext"):
                push(ins.operands[0])
                emit(op, args=(width_of(ins.operands[0]), ins.ty.width))
            elif op == "trunc":
                push(ins.operands[0])
                emit("trunc", args=(ins.ty.width,))
            elif op == "const":
                push(ins.operands[0])
            elif op == "intrinsic" and ins.intrinsic == "gm.divcheck":
                w = width_of(ins.operands[0])
                push(ins.operands[0])
                emit("push", w, (0,))
                emit("cmp", w, pred="eq")
            else:
                raise LoweringError(f"cannot lower {op!r}")
            emit("stloc", args=(slots[ins.dest],))
        t = b.terminator
        if t.op == "ret":
            push(t.operands[0])
            emit("ret")
        elif t.op == "trap":
            emit("trap")
        elif t.op == "br":
            tgt = t.targets[0]
            moves(tgt, bm[tgt.label].params)
            if tgt.label != nxt:
                jump("jmp", tgt.label)
        elif t.op == "condbr":
            tt, ft = t.targets
            push(t.operands[0])
            if ft.args:
                stub = len(code)
                emit("jz", args=(-1,))
            else:
                stub = None
                jump("jz", ft.label)
            moves(tt, bm[tt.label].params)
            if tt.label != nxt or stub is not None:
                jump("jmp", tt.label)
            if stub is not None:
                code[stub] = BcInstr("jz", 0, (len(code),))
                moves(ft, bm[ft.label].params)
                if ft.label != nxt:
                    jump("jmp", ft.label)
        else:
            raise LoweringError(f"cannot lower terminator {t.op!r}")
    for idx, label in fixups:
        ins = code[idx]
        code[idx] = BcInstr(ins.op, ins.width, (starts[label],), ins.pred)

    unit = BytecodeUnit(
        name=f.name,
        param_widths=tuple(t.width for _, t in f.params),
        return_width=f.return_type.width,
        code=tuple(code),
        n_locals=max(len(slots), 1),
    )
    try:
        verify_bytecode(unit)
    except MalformedBytecode as exc:
        raise LoweringError(f"internal error lowering @{f.name}: {exc}") from exc
    return unit


def canonicalize_unit(u: BytecodeUnit) -> BytecodeUnit:
    """Renumber non-parameter locals in first-use order."""
    n_params = len(u.param_widths)
    mapping = {i: i for i in range(n_params)}
    code = []
    for ins in u.code:
        if ins.op in ("ldloc", "stloc"):
            slot = ins.args[0]
            if slot not in mapping:
                mapping[slot] = len(mapping)
            ins = BcInstr(ins.op, ins.width, (mapping[slot],), ins.pred)
        code.append(ins)
    return BytecodeUnit("", u.param_widths, u.return_width, tuple(code), max(len(mapping), 1))


def canonical_disassembly(u: BytecodeUnit) -> str:
    return canonicalize_unit(u).disassemble()


def canonical_hash(u: BytecodeUnit) -> str:
    return hashlib.sha256(canonical_disassembly(u).encode("utf-8")).hexdigest()


def parse_disassembly(text: str, name: str = "unit") -> BytecodeUnit:
    """Inverse of ``BytecodeUnit.disassemble`` (header line required)."""
    lines = [l.strip() for l in text.splitlines() if l.strip()]
    header = lines[0]
    if not header.startswith("# unit ("):
        raise MalformedBytecode("missing unit header")
    sig, _, rest = header[len("# unit ("):].partition(") -> i")
    params = tuple(int(p.strip()[1:]) for p in sig.split(",") if p.strip())
    ret, _, loc = rest.partition(" locals=")
    code = []
    for line in lines[1:]:
        if line.startswith("#"):
            continue
        parts = line.split()
        mn, args = parts[0], tuple(int(a) for a in parts[1:])
        pieces = mn.split(".")
        if pieces[0] == "cmp":
            code.append(BcInstr("cmp", int(pieces[2][1:]), args, pieces[1]))
        elif len(pieces) == 2:
            code.append(BcInstr(pieces[0], int(pieces[1][1:]), args))
        else:
            code.append(BcInstr(mn, 0, args))
    u = BytecodeUnit(name, params, int(ret), tuple(code), int(loc))
    verify_bytecode(u)
    return u

