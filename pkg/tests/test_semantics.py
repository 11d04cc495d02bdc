from __future__ import annotations

import pytest
from hypothesis import given, strategies as st

from nversion.semantics import TrapSignal, binop, cast, icmp, mask, to_bits, to_signed
from oracles import c_div, c_rem, wrap

widths = st.sampled_from([8, 16, 32, 64])


@st.composite
def operands(draw):
    w = draw(widths)
    return w, draw(st.integers(0, mask(w))), draw(st.integers(0, mask(w)))


@given(operands())
def test_wrapping_arithmetic_matches_python(case):
    w, a, b = case
    assert binop("add", w, a, b) == (a + b) % (1 << w)
    assert binop("sub", w, a, b) == (a - b) % (1 << w)
    assert binop("mul", w, a, b) == (a * b) % (1 << w)


@given(operands())
def test_signed_division_truncates_toward_zero(case):
    w, a, b = case
    sa, sb = to_signed(a, w), to_signed(b, w)
    if sb == 0:
        with pytest.raises(TrapSignal) as exc:
            binop("sdiv", w, a, b)
        assert exc.value.reason == "div_zero"
    elif sa == -(1 << (w - 1)) and sb == -1:
        with pytest.raises(TrapSignal) as exc:
            binop("sdiv", w, a, b)
        assert exc.value.reason == "overflow_div"
    else:
        assert to_signed(binop("sdiv", w, a, b), w) == c_div(sa, sb)
        assert to_signed(binop("srem", w, a, b), w) == c_rem(sa, sb)


@given(operands())
def test_shifts_trap_out_of_range(case):
    w, a, b = case
    for op in ("shl", "lshr", "ashr"):
        if b >= w:
            with pytest.raises(TrapSignal):
                binop(op, w, a, b)
    if b < w:
        assert binop("shl", w, a, b) == (a << b) % (1 << w)
        assert binop("lshr", w, a, b) == a >> b
        assert to_signed(binop("ashr", w, a, b), w) == to_signed(a, w) >> b


@given(operands())
def test_icmp_predicates(case):
    w, a, b = case
    sa, sb = to_signed(a, w), to_signed(b, w)
    assert icmp("eq", w, a, b) == int(a == b)
    assert icmp("ult", w, a, b) == int(a < b)
    assert icmp("slt", w, a, b) == int(sa < sb)
    assert icmp("sge", w, a, b) == int(sa >= sb)
    assert icmp("ugt", w, a, b) == int(a > b)


@given(st.integers(0, 0xFFFF))
def test_casts(x):
    assert cast("trunc", 16, 8, x) == x & 0xFF
    assert cast("zext", 16, 32, x) == x
    assert to_signed(cast("sext", 16, 32, x), 32) == to_signed(x, 16)


@given(widths, st.integers())
def test_signed_round_trip(w, v):
    assert to_signed(to_bits(v, w), w) == wrap(v, w)
