from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, strategies as st

from nversion.compiler import compile_mir, lower_to_bytecode
from nversion.corpus import load_corpus, load_fixture
from nversion.errors import ArgMismatch
from nversion.execute import (
    RETURNED, Outcome, eval_mir, eval_mir_batch, run_bytecode,
)
from nversion.mir import parse_mir
from oracles import SIGNED, expected, outcome_pair

FIXTURES = load_corpus()
LOOP = parse_mir("func @spin(%x: i8) -> i8 {\nentry:\n  br entry\n}")


def test_documented_values():
    assert eval_mir(load_fixture("ctz8").reference, [0b00010100]) == Outcome.ret(8, 2)
    nz = load_fixture("nz16").reference
    assert eval_mir(nz, [0]).value == 0
    assert eval_mir(nz, [5]).value == -1


@pytest.mark.parametrize("fx", FIXTURES, ids=lambda fx: fx.name)
def test_three_engines_agree_with_model(fx):
    """Scalar evaluator, batch evaluator and bytecode VM against the Python
    model on a seeded sample of the domain (the whole domain for 8-bit)."""
    f = fx.reference
    widths = [t.width for _, t in f.params]
    rng = np.random.default_rng(7)
    total = 1 << sum(widths)
    idx = np.arange(total, dtype=np.uint64) if total <= 1 << 16 else \
        rng.integers(0, total, 4096, dtype=np.uint64)
    cols, shift = [], sum(widths)
    for w in widths:
        shift -= w
        cols.append((idx >> np.uint64(shift)) & np.uint64((1 << w) - 1))
    status, values = eval_mir_batch(f, cols)
    unit = lower_to_bytecode(f)
    step = max(1, len(idx) // 512)
    for i in range(0, len(idx), step):
        bits = [int(c[i]) for c in cols]
        args = [b - (1 << w) if SIGNED[fx.name] and b >> (w - 1) else b for b, w in zip(bits, widths)]
        want = expected(fx.name, args, f.return_type.width)
        assert outcome_pair(eval_mir(f, bits)) == want
        assert outcome_pair(run_bytecode(unit, bits)[0]) == want
        got = ("return", int(values[i])) if status[i] == RETURNED else ("trap", None)
        assert got == want


def test_fuel_exhaustion_is_a_trap():
    assert eval_mir(LOOP, [1], fuel=50).reason == "fuel_exhausted"
    status, _ = eval_mir_batch(LOOP, [np.arange(4, dtype=np.uint64)], fuel=50)
    assert (status != RETURNED).all()
    out, _ = run_bytecode(compile_mir(LOOP).unit, [1], fuel=50)
    assert out.reason == "fuel_exhausted"


def test_argument_checks():
    f = load_fixture("quot8").reference
    with pytest.raises(ArgMismatch):
        eval_mir(f, [1])
    with pytest.raises(ArgMismatch):
        eval_mir(f, [1, 300])
    assert eval_mir(f, [-128, 255]) == eval_mir(f, [128, -1])


def test_trace_profile_counts_every_step():
    unit = lower_to_bytecode(load_fixture("parity8").reference)
    out, trace = run_bytecode(unit, [0b1011], trace=True)
    assert out.value == 1
    assert trace.total == sum(trace.profile.values())
    assert "jz" in trace.opcode_set()


@given(st.one_of(
    st.builds(Outcome.ret, st.sampled_from([1, 8, 16, 32, 64]), st.integers(0, 2**64 - 1)),
    st.builds(Outcome.trap, st.sampled_from(["div_zero", "shift_range", "explicit_trap"])),
))
def test_outcome_json_round_trip(o):
    assert Outcome.from_json(o.to_json()) == o


def test_traps_agree_regardless_of_reason():
    assert Outcome.trap("div_zero").agrees(Outcome.trap("explicit_trap"))
    assert not Outcome.trap("div_zero").agrees(Outcome.ret(8, 0))
    assert not Outcome.ret(8, 1).agrees(Outcome.ret(16, 1))
