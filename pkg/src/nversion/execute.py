"""Execution engines.

* ``eval_mir``        -- scalar MIR evaluator; the reference semantics.
* ``eval_mir_batch``  -- lane-parallel numpy evaluator used for exhaustive
                         enumeration; must agree with ``eval_mir`` lane by lane.
* ``run_bytecode``    -- stack-VM interpreter with opcode tracing.

All engines charge one unit of fuel per executed instruction and trap with
``fuel_exhausted`` when the budget runs out.
"""

from __future__ import annotations

import json
from collections import Counter, OrderedDict
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .compiler.bytecode import BytecodeUnit
from .errors import ArgMismatch, MalformedBytecode
from .mir import Const, Function, Reg
from .semantics import (
    BINARY_OPS, TRAP_REASONS, TrapSignal, binop, cast, icmp, mask, to_signed,
)

DEFAULT_FUEL = 1_000_000


@dataclass(frozen=True)
class Outcome:
    kind: str                       # "return" | "trap"
    bits: Optional[int] = None
    width: Optional[int] = None
    reason: Optional[str] = None
    detail: str = field(default="", compare=False)

    @classmethod
    def ret(cls, width: int, bits: int) -> "Outcome":
        return cls("return", bits & mask(width), width)

    @classmethod
    def trap(cls, reason: str, detail: str = "") -> "Outcome":
        assert reason in TRAP_REASONS, reason
        return cls("trap", reason=reason, detail=detail)

    @property
    def is_trap(self) -> bool:
        return self.kind == "trap"

    @property
    def value(self) -> Optional[int]:
        """Signed interpretation of the returned bits."""
        if self.kind != "return":
            return None
        return to_signed(self.bits, self.width) if self.width > 1 else self.bits

    def agrees(self, other: "Outcome") -> bool:
        """Outcome equality with trap reasons erased."""
        if self.is_trap or other.is_trap:
            return self.is_trap and other.is_trap
        return self.width == other.width and self.bits == other.bits

    def to_json(self):
        if self.is_trap:
            d = {"kind": "trap", "reason": self.reason}
            if self.detail:
                d["detail"] = self.detail
            return d
        return {"kind": "return", "type": f"i{self.width}", "value": self.value}

    @classmethod
    def from_json(cls, d) -> "Outcome":
        if d["kind"] == "trap":
            return cls.trap(d["reason"], d.get("detail", ""))
        return cls.ret(int(d["type"][1:]), d["value"])

    def __str__(self):
        if self.is_trap:
            return f"Trap({self.reason})"
        return f"Return({self.value})"


@dataclass
class Trace:
    mnemonics: list

    @property
    def profile(self):
        return dict(sorted(Counter(self.mnemonics).items()))

    @property
    def total(self) -> int:
        return len(self.mnemonics)

    def opcode_set(self):
        return set(self.mnemonics)


def trace_document(function_name, args, outcome: Outcome, trace: Trace) -> str:
    doc = {
        "function": function_name,
        "args": list(args),
        "outcome": outcome.to_json(),
        "profile": trace.profile,
        "total": trace.total,
    }
    return json.dumps(doc, indent=2, sort_keys=True)


def coerce_args(widths, args):
    """Convert Python ints (signed or unsigned spelling) to bit patterns."""
    if len(args) != len(widths):
        raise ArgMismatch(f"expected {len(widths)} arguments, got {len(args)}")
    out = []
    for w, a in zip(widths, args):
        a = int(a)
        if not -(1 << (w - 1)) <= a <= mask(w) and not (w == 1 and a == -1):
            raise ArgMismatch(f"argument {a} does not fit in i{w}")
        out.append(a & mask(w))
    return out


# --------------------------------------------------------------------------
# scalar MIR evaluator

class _Cache:
    def __init__(self, size=256):
        self.size = size
        self.data = OrderedDict()

    def get(self, obj, build):
        key = id(obj)
        hit = self.data.get(key)
        if hit is not None and hit[0] is obj:
            self.data.move_to_end(key)
            return hit[1]
        value = build(obj)
        self.data[key] = (obj, value)
        if len(self.data) > self.size:
            self.data.popitem(last=False)
        return value


_mir_cache = _Cache()


def _prepare_mir(f: Function):
    types = f.register_types()
    blocks = {}
    for b in f.blocks:
        blocks[b.label] = (b, tuple(n for n, _ in b.params))
    return types, blocks


def eval_mir(f: Function, args, fuel: int = DEFAULT_FUEL, calls=None) -> Outcome:
    """Evaluate ``f`` on ``args``.

    ``calls`` is only used for bundle wrappers: ``calls(version, bits_list)``
    must return the Outcome of the given version.
    """
    if fuel < 1:
        raise ValueError("fuel must be positive")
    types, blocks = _prepare_mir(f) if calls else _mir_cache.get(f, _prepare_mir)
    env = dict(zip((n for n, _ in f.params), coerce_args([t.width for _, t in f.params], args)))
    origin = {}
    used = 0

    def val(o):
        if isinstance(o, Const):
            return o.bits
        return env[o.name]

    label = f.blocks[0].label
    try:
        while True:
            b, _ = blocks[label]
            for ins in b.instructions:
                if used >= fuel:
                    return Outcome.trap("fuel_exhausted")
                used += 1
                op = ins.op
                if op in BINARY_OPS:
                    r = binop(op, ins.ty.width, val(ins.operands[0]), val(ins.operands[1]))
                elif op == "icmp":
                    a, c = ins.operands
                    w = a.ty.width if isinstance(a, Const) else types[a.name].width
                    r = icmp(ins.pred, w, val(a), val(c))
                elif op == "select":
                    c, x, y = ins.operands
                    r = val(x) if val(c) else val(y)
                elif op in ("zext", "sext", "trunc"):
                    a = ins.operands[0]
                    w = a.ty.width if isinstance(a, Const) else types[a.name].width
                    r = cast(op, w, ins.ty.width, val(a))
                elif op == "const":
                    r = ins.operands[0].bits
                elif op == "intrinsic":
                    r = int(val(ins.operands[0]) == 0)
                elif op == "callv":
                    if calls is None:
                        raise MalformedBytecode("callv outside a bundle")
                    out = calls(ins.version, [val(o) for o in ins.operands])
                    if out.is_trap:
                        raise TrapSignal(out.reason, out.detail)
                    r = out.bits
                    origin[ins.dest] = ins.version
                else:
                    raise ValueError(f"cannot evaluate {op!r}")
                env[ins.dest] = r
            if used >= fuel:
                return Outcome.trap("fuel_exhausted")
            used += 1
            t = b.terminator
            op = t.op
            if op == "ret":
                return Outcome.ret(f.return_type.width, val(t.operands[0]))
            if op == "trap":
                return Outcome.trap("explicit_trap")
            if op == "diverge":
                w = f.return_type.width
                parts = []
                for o in t.operands:
                    tag = f"v{origin[o.name]}" if isinstance(o, Reg) and o.name in origin else str(o)
                    parts.append(f"{tag}={to_signed(val(o), w)}")
                return Outcome.trap("nversion_divergence", " ".join(parts))
            if op == "br":
                tgt = t.targets[0]
            else:
                tgt = t.targets[0] if val(t.operands[0]) else t.targets[1]
            values = [val(a) for a in tgt.args]
            for name, v in zip(blocks[tgt.label][1], values):
                env[name] = v
            label = tgt.label
    except TrapSignal as sig:
        return Outcome.trap(sig.reason, sig.detail)


# --------------------------------------------------------------------------
# lane-parallel MIR evaluator

RETURNED = 0
RUNNING = -1
TRAP_CODES = {r: i + 1 for i, r in enumerate(TRAP_REASONS)}
_U = np.uint64


def _signed(a, w):
    if w == 64:
        return a.view(np.int64)
    s = a.astype(np.int64)
    return np.where(s >= (1 << (w - 1)), s - (1 << w), s)


def eval_mir_batch(f: Function, arg_arrays, fuel: int = DEFAULT_FUEL, deadline=None, calls=None):
    """Evaluate ``f`` on many inputs at once.

    ``arg_arrays`` holds one uint64 array of bit patterns per parameter.
    Returns ``(status, values)``: status is 0 for Return or the 1-based index
    of the trap reason in TRAP_REASONS; values holds returned bit patterns.
    ``deadline`` is an optional ``time.monotonic()`` bound; when exceeded a
    TimeoutError is raised.  ``calls(version, arg_arrays)`` plays the same
    role as in ``eval_mir`` and returns a ``(status, values)`` pair.
    """
    import time

    n = len(arg_arrays[0]) if arg_arrays else 1
    types = f.register_types()
    regs = {}
    for (name, t), arr in zip(f.params, arg_arrays):
        regs[name] = np.asarray(arr, dtype=_U) & _U(t.mask)
    status = np.full(n, RUNNING, dtype=np.int8)
    values = np.zeros(n, dtype=_U)
    steps = np.zeros(n, dtype=np.int64)
    bm = f.block_map()
    pending = {b.label: np.zeros(n, dtype=bool) for b in f.blocks}
    pending[f.entry.label][:] = True
    order = [b.label for b in f.blocks]

    def width(o):
        return o.ty.width if isinstance(o, Const) else types[o.name].width

    def val(o):
        if isinstance(o, Const):
            return np.full(n, o.bits, dtype=_U)
        return regs[o.name]

    def trap(lanes, reason):
        status[lanes] = TRAP_CODES[reason]

    def charge(m):
        out = m & (steps >= fuel)
        if out.any():
            trap(out, "fuel_exhausted")
            m = m & ~out
        steps[m] += 1
        return m

    def compute(ins, m):
        """Return (result array, trapping lanes or None)."""
        op = ins.op
        if op in BINARY_OPS:
            w = ins.ty.width
            M = _U(mask(w))
            a, b = val(ins.operands[0]), val(ins.operands[1])
            if op == "add":
                return (a + b) & M, None
            if op == "sub":
                return (a - b) & M, None
            if op == "mul":
                return (a * b) & M, None
            if op == "and":
                return a & b, None
            if op == "or":
                return a | b, None
            if op == "xor":
                return a ^ b, None
            if op in ("udiv", "urem"):
                zero = b == 0
                sb = np.where(zero, _U(1), b)
                r = a // sb if op == "udiv" else a % sb
                return r, m & zero
            if op in ("sdiv", "srem"):
                sa, sbv = _signed(a, w), _signed(b, w)
                zero = sbv == 0
                ovf = (sa == -(1 << (w - 1))) & (sbv == -1)
                safe = np.where(zero | ovf, 1, sbv)
                rem = np.fmod(sa, safe)
                if op == "srem":
                    r = rem
                else:
                    r = (sa - rem) // safe
                bad = np.full(n, 0, dtype=np.int8)
                bad[m & zero] = TRAP_CODES["div_zero"]
                bad[m & ovf & ~zero] = TRAP_CODES["overflow_div"]
                return r.astype(_U) & M, bad
            bad_shift = b >= _U(w)
            s = np.where(bad_shift, _U(0), b)
            if op == "shl":
                r = (a << s) & M
            elif op == "lshr":
                r = a >> s
            else:
                r = (_signed(a, w) >> s.astype(np.int64)).astype(_U) & M
            trapped = np.zeros(n, dtype=np.int8)
            trapped[m & bad_shift] = TRAP_CODES["shift_range"]
            return r, trapped
        if op == "icmp":
            x, y = ins.operands
            w = width(x)
            a, b = val(x), val(y)
            p = ins.pred
            if p in ("slt", "sle", "sgt", "sge"):
                a, b = _signed(a, w), _signed(b, w)
            rel = {"eq": np.equal, "ne": np.not_equal, "lt": np.less, "le": np.less_equal,
                   "gt": np.greater, "ge": np.greater_equal}[p if p in ("eq", "ne") else p[1:]]
            return rel(a, b).astype(_U), None
        if op == "select":
            c, x, y = ins.operands
            return np.where(val(c) != 0, val(x), val(y)), None
        if op == "zext":
            return val(ins.operands[0]).copy(), None
        if op == "sext":
            w0 = width(ins.operands[0])
            return _signed(val(ins.operands[0]), w0).astype(_U) & _U(ins.ty.mask), None
        if op == "trunc":
            return val(ins.operands[0]) & _U(ins.ty.mask), None
        if op == "const":
            return val(ins.operands[0]), None
        if op == "intrinsic":
            return (val(ins.operands[0]) == 0).astype(_U), None
        if op == "callv" and calls is not None:
            st, vs = calls(ins.version, [val(o) for o in ins.operands])
            return vs, np.where(m, st, 0).astype(np.int8)
        raise ValueError(f"cannot batch-evaluate {op!r}")

    def take_branch(m, tgt):
        return [(m, tgt, [val(a) for a in tgt.args])]

    while True:
        progressed = False
        for label in order:
            m = pending[label]
            if not m.any():
                continue
            if deadline is not None and time.monotonic() > deadline:
                raise TimeoutError("wall limit exceeded")
            pending[label] = np.zeros(n, dtype=bool)
            progressed = True
            b = bm[label]
            for ins in b.instructions:
                m = charge(m)
                if not m.any():
                    break
                r, bad = compute(ins, m)
                if bad is not None and bad.dtype == bool:
                    if bad.any():
                        trap(bad, "div_zero")
                        m = m & ~bad
                elif bad is not None:
                    hit = m & (bad != 0)
                    if hit.any():
                        status[hit] = bad[hit]
                        m = m & ~hit
                old = regs.get(ins.dest)
                regs[ins.dest] = r if old is None else np.where(m, r, old)
                if not m.any():
                    break
            else:
                m = charge(m)
                if not m.any():
                    continue
                t = b.terminator
                if t.op == "ret":
                    status[m] = RETURNED
                    values[m] = val(t.operands[0])[m]
                    continue
                if t.op == "trap":
                    trap(m, "explicit_trap")
                    continue
                if t.op == "diverge":
                    trap(m, "nversion_divergence")
                    continue
                if t.op == "br":
                    moves = take_branch(m, t.targets[0])
                elif t.op == "condbr":
                    c = val(t.operands[0]) != 0
                    moves = take_branch(m & c, t.targets[0]) + take_branch(m & ~c, t.targets[1])
                else:
                    raise ValueError(f"cannot batch-evaluate {t.op!r}")
                for mm, tgt, vals in moves:
                    if not mm.any():
                        continue
                    for (pname, _), v in zip(bm[tgt.label].params, vals):
                        old = regs.get(pname)
                        regs[pname] = v.copy() if old is None else np.where(mm, v, old)
                    pending[tgt.label] |= mm
        if not progressed:
            break
    return status, values


# --------------------------------------------------------------------------
# bytecode interpreter

(_PUSH, _LDLOC, _STLOC, _BIN, _CMP, _SEL, _ZEXT, _SEXT, _TRUNC,
 _JMP, _JZ, _RET, _TRAP) = range(13)

_bc_cache = _Cache()


def _decode(u: BytecodeUnit):
    out = []
    for ins in u.code:
        op = ins.op
        if op == "push":
            out.append((_PUSH, ins.args[0] & mask(ins.width), 0))
        elif op == "ldloc":
            out.append((_LDLOC, ins.args[0], 0))
        elif op == "stloc":
            out.append((_STLOC, ins.args[0], 0))
        elif op in BINARY_OPS:
            out.append((_BIN, op, ins.width or 64))
        elif op == "cmp":
            out.append((_CMP, ins.pred, ins.width))
        elif op == "sel":
            out.append((_SEL, 0, 0))
        elif op == "zext":
            out.append((_ZEXT, 0, 0))
        elif op == "sext":
            out.append((_SEXT, ins.args[0], ins.args[1]))
        elif op == "trunc":
            out.append((_TRUNC, mask(ins.args[0]), 0))
        elif op == "jmp":
            out.append((_JMP, ins.args[0], 0))
        elif op == "jz":
            out.append((_JZ, ins.args[0], 0))
        elif op == "ret":
            out.append((_RET, 0, 0))
        elif op == "trap":
            out.append((_TRAP, 0, 0))
        else:
            raise MalformedBytecode(f"unknown opcode {op!r}")
    return out, [i.mnemonic for i in u.code]


def _vm_binop(op, w, a, b):
    m = (1 << w) - 1
    if op == "add":
        return (a + b) & m
    if op == "sub":
        return (a - b) & m
    if op == "mul":
        return (a * b) & m
    if op == "and":
        return a & b
    if op == "or":
        return a | b
    if op == "xor":
        return a ^ b
    if op in ("shl", "lshr", "ashr"):
        if b >= w:
            raise TrapSignal("shift_range")
        if op == "shl":
            return (a << b) & m
        if op == "lshr":
            return a >> b
        sa = a - (1 << w) if a >> (w - 1) else a
        return (sa >> b) & m
    if b == 0:
        raise TrapSignal("div_zero")
    if op == "udiv":
        return a // b
    if op == "urem":
        return a % b
    sa = a - (1 << w) if a >> (w - 1) else a
    sb = b - (1 << w) if b >> (w - 1) else b
    if sb == -1 and sa == -(1 << (w - 1)):
        raise TrapSignal("overflow_div")
    q = abs(sa) // abs(sb)
    if (sa < 0) != (sb < 0):
        q = -q
    if op == "sdiv":
        return q & m
    return (sa - q * sb) & m


def _vm_cmp(pred, w, a, b):
    if pred == "eq":
        return int(a == b)
    if pred == "ne":
        return int(a != b)
    if pred[0] == "s":
        if a >> (w - 1):
            a -= 1 << w
        if b >> (w - 1):
            b -= 1 << w
    p = pred[1:]
    if p == "lt":
        return int(a < b)
    if p == "le":
        return int(a <= b)
    if p == "gt":
        return int(a > b)
    return int(a >= b)


def run_bytecode(u: BytecodeUnit, args, fuel: int = DEFAULT_FUEL, trace: bool = False):
    """Interpret ``u``; returns ``(Outcome, Trace or None)``."""
    if fuel < 1:
        raise ValueError("fuel must be positive")
    code, mnemonics = _bc_cache.get(u, _decode)
    locs = [0] * u.n_locals
    for i, a in enumerate(coerce_args(u.param_widths, args)):
        locs[i] = a
    stack = []
    pop, push = stack.pop, stack.append
    executed = [] if trace else None
    pc = 0
    used = 0
    n = len(code)
    try:
        while True:
            if used >= fuel:
                outcome = Outcome.trap("fuel_exhausted")
                break
            if not 0 <= pc < n:
                raise MalformedBytecode(f"pc {pc} out of range")
            used += 1
            op, a, b = code[pc]
            if trace:
                executed.append(mnemonics[pc])
            pc += 1
            if op == _LDLOC:
                push(locs[a])
            elif op == _STLOC:
                locs[a] = pop()
            elif op == _PUSH:
                push(a)
            elif op == _BIN:
                y = pop()
                push(_vm_binop(a, b, pop(), y))
            elif op == _CMP:
                y = pop()
                push(_vm_cmp(a, b, pop(), y))
            elif op == _JZ:
                if not pop():
                    pc = a
            elif op == _JMP:
                pc = a
            elif op == _SEL:
                y = pop()
                x = pop()
                push(x if pop() else y)
            elif op == _RET:
                outcome = Outcome.ret(u.return_width, pop())
                break
            elif op == _TRAP:
                outcome = Outcome.trap("explicit_trap")
                break
            elif op == _ZEXT:
                pass
            elif op == _SEXT:
                v = pop()
                if v >> (a - 1):
                    v -= 1 << a
                push(v & ((1 << b) - 1))
            elif op == _TRUNC:
                push(pop() & a)
    except TrapSignal as sig:
        outcome = Outcome.trap(sig.reason)
    except IndexError as exc:
        raise MalformedBytecode(f"stack underflow at {pc - 1}") from exc
    return outcome, (Trace(executed) if trace else None)
