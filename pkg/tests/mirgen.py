"""Hypothesis strategy for small random MIR functions over i8."""

from __future__ import annotations

from hypothesis import strategies as st

BIN = ["add", "sub", "mul", "and", "or", "xor", "shl", "lshr", "ashr", "sdiv", "srem", "udiv", "urem"]
PREDS = ["eq", "ne", "slt", "sle", "sgt", "sge", "ult", "ule", "ugt", "uge"]
CONSTS = [0, 1, -1, 2, 3, 7, 8, -7, -128, 127]


@st.composite
def straight_line(draw, max_len=8):
    """Two i8 params, a chain of binops, compares, selects and casts, one
    conditional branch, and a return."""
    regs = ["a", "b"]
    lines = []
    n = draw(st.integers(1, max_len))

    def operand():
        if draw(st.booleans()):
            return "%" + draw(st.sampled_from(regs))
        return f"const.i8 {draw(st.sampled_from(CONSTS))}"

    for k in range(n):
        kind = draw(st.sampled_from(["bin", "bin", "bin", "cmpsel", "cast"]))
        r = f"t{k}"
        if kind == "bin":
            op = draw(st.sampled_from(BIN))
            lhs = operand()
            rhs = operand()
            if op in ("shl", "lshr", "ashr") and draw(st.booleans()):
                lines.append(f"%m{k} = and {rhs}, const.i8 7")
                rhs = f"%m{k}"
            lines.append(f"%{r} = {op} {lhs}, {rhs}")
        elif kind == "cmpsel":
            lines.append(f"%c{k} = icmp.{draw(st.sampled_from(PREDS))} {operand()}, {operand()}")
            lines.append(f"%{r} = select %c{k}, {operand()}, {operand()}")
        else:
            x = "%" + draw(st.sampled_from(regs))
            lines.append(f"%w{k} = {draw(st.sampled_from(['sext', 'zext']))}.i16 {x}")
            lines.append(f"%{r} = trunc.i8 %w{k}")
        regs.append(r)
    last = "%" + regs[-1]
    other = "%" + draw(st.sampled_from(regs))
    pred = draw(st.sampled_from(PREDS))
    body = "\n  ".join(lines)
    return (f"func @g(%a: i8, %b: i8) -> i8 {{\nentry:\n  {body}\n"
            f"  %cc = icmp.{pred} {last}, {other}\n  condbr %cc, yes, no\n"
            f"yes:\n  ret {last}\nno:\n  %z = xor {other}, const.i8 0\n  ret %z\n}}\n")
