"""Scalar integer semantics shared by the MIR evaluator and the constant folder.

Values are carried as unsigned bit patterns ``0 <= v < 2**width``.
"""

BINARY_OPS = frozenset(
    ["add", "sub", "mul", "sdiv", "udiv", "srem", "urem",
     "and", "or", "xor", "shl", "lshr", "ashr"]
)
COMMUTATIVE_OPS = frozenset(["add", "mul", "and", "or", "xor"])
DIVISION_OPS = frozenset(["sdiv", "udiv", "srem", "urem"])
SHIFT_OPS = frozenset(["shl", "lshr", "ashr"])
ICMP_PREDICATES = ("eq", "ne", "slt", "sle", "sgt", "sge", "ult", "ule", "ugt", "uge")
CAST_OPS = frozenset(["zext", "sext", "trunc"])

TRAP_REASONS = (
    "div_zero", "overflow_div", "shift_range", "explicit_trap",
    "nversion_divergence", "fuel_exhausted",
)


class TrapSignal(Exception):
    def __init__(self, reason, detail=""):
        super().__init__(reason)
        self.reason = reason
        self.detail = detail


def mask(width):
    return (1 << width) - 1


def to_signed(bits, width):
    if bits >> (width - 1):
        return bits - (1 << width)
    return bits


def to_bits(value, width):
    return value & mask(width)


def trunc_div(a, b):
    q = abs(a) // abs(b)
    return q if (a < 0) == (b < 0) else -q


def binop(op, width, a, b):
    """Evaluate ``op`` on two bit patterns of ``width``; raises TrapSignal."""
    m = mask(width)
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
    if op in DIVISION_OPS:
        if b == 0:
            raise TrapSignal("div_zero")
        if op == "udiv":
            return a // b
        if op == "urem":
            return a % b
        sa, sb = to_signed(a, width), to_signed(b, width)
        if sb == -1 and sa == -(1 << (width - 1)):
            raise TrapSignal("overflow_div")
        q = trunc_div(sa, sb)
        if op == "sdiv":
            return q & m
        return (sa - sb * q) & m
    if op in SHIFT_OPS:
        if b >= width:
            raise TrapSignal("shift_range")
        if op == "shl":
            return (a << b) & m
        if op == "lshr":
            return a >> b
        return (to_signed(a, width) >> b) & m
    raise ValueError(f"unknown binary op {op!r}")


def icmp(pred, width, a, b):
    if pred == "eq":
        return int(a == b)
    if pred == "ne":
        return int(a != b)
    if pred[0] == "s":
        a, b = to_signed(a, width), to_signed(b, width)
    rel = pred[1:]
    if rel == "lt":
        return int(a < b)
    if rel == "le":
        return int(a <= b)
    if rel == "gt":
        return int(a > b)
    if rel == "ge":
        return int(a >= b)
    raise ValueError(f"unknown predicate {pred!r}")


def cast(op, from_width, to_width, a):
    if op == "zext":
        return a
    if op == "sext":
        return to_signed(a, from_width) & mask(to_width)
    if op == "trunc":
        return a & mask(to_width)
    raise ValueError(f"unknown cast {op!r}")
