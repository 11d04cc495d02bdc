from __future__ import annotations

import itertools

import pytest
from hypothesis import given, settings

from nversion.compiler import (
    BUGS, LEVELS, canonical_disassembly, canonical_hash, compile_mir, lower_to_bytecode,
    optimize, parse_disassembly, verify_bytecode,
)
from nversion.compiler.bytecode import BcInstr, BytecodeUnit
from nversion.corpus import WITNESSES, load_corpus, load_fixture
from nversion.equiv import check_equivalence
from nversion.errors import LoweringError, MalformedBytecode
from nversion.execute import eval_mir, run_bytecode
from nversion.mir import parse_mir, rename_registers
from mirgen import straight_line

FIXTURES = load_corpus()


def test_add_zero_simplified():
    f = parse_mir("func @f(%x: i32) -> i32 {\nentry:\n  %y = add %x, const.i32 0\n  ret %y\n}")
    g = optimize(f, 1)
    assert g.instruction_count() == 1
    assert g.entry.terminator.operands[0].name == "x"


def test_b1_folds_with_the_wrong_sign():
    fx = load_fixture("b1_srem")
    good = compile_mir(fx.reference, 1)
    bad = compile_mir(fx.reference, 1, "B1")
    assert bad.ok
    assert run_bytecode(good.unit, [0])[0].value == -1
    assert run_bytecode(bad.unit, [0])[0].value == 2


def test_nz_bytecode_uses_cmp_and_sel():
    text = lower_to_bytecode(load_fixture("nz16").reference).disassemble()
    assert "cmp.ne.i16" in text and "\nsel" in text


@pytest.mark.parametrize("fx", FIXTURES, ids=lambda fx: fx.name)
@pytest.mark.parametrize("level", LEVELS)
def test_bytecode_matches_mir_on_i8_domain(fx, level):
    f = fx.reference
    unit = compile_mir(f, level).unit
    per = [range(-128, 128)] * len(f.params)
    for args in itertools.product(*per):
        a = eval_mir(f, list(args))
        b, _ = run_bytecode(unit, args)
        assert a.agrees(b), (args, a, b)


@pytest.mark.parametrize("fx", FIXTURES, ids=lambda fx: fx.name)
@pytest.mark.parametrize("level", LEVELS)
def test_optimizer_preserves_semantics(fx, level):
    for f in (fx.reference, fx.gm_function):
        assert check_equivalence(f, optimize(f, level)).kind == "equivalent"


@pytest.mark.parametrize("bug", sorted(BUGS))
def test_bug_witnesses(bug):
    name, level, args, _ = WITNESSES[bug]
    f = load_fixture(name).reference
    assert level == BUGS[bug]
    res = compile_mir(f, level, bug)
    assert res.ok                                   # stealth
    assert not run_bytecode(res.unit, args)[0].agrees(eval_mir(f, list(args)))
    below = compile_mir(f, level - 1, bug)          # inactive below its level
    assert run_bytecode(below.unit, args)[0].agrees(eval_mir(f, list(args)))


def test_hash_ignores_register_names():
    f = load_fixture("add_sat8").reference
    g = rename_registers(f, {n: f"r_{n}" for n in f.register_types()})
    assert canonical_hash(lower_to_bytecode(f)) == canonical_hash(lower_to_bytecode(g))


def test_paired_nz_hashes_differ():
    fx = load_fixture("nz16")
    assert canonical_hash(lower_to_bytecode(fx.reference)) != canonical_hash(lower_to_bytecode(fx.gm_function))


@pytest.mark.parametrize("fx", FIXTURES, ids=lambda fx: fx.name)
def test_disassembly_round_trip(fx):
    u = compile_mir(fx.gm_function, 2).unit
    again = parse_disassembly(u.disassemble())
    assert canonical_disassembly(again) == canonical_disassembly(u)


def test_verifier_rejects_underflow():
    bad = BytecodeUnit("u", (8,), 8, (BcInstr("add", 8), BcInstr("ret")), 1)
    with pytest.raises((MalformedBytecode, LoweringError)):
        verify_bytecode(bad)


@settings(max_examples=120)
@given(straight_line())
def test_random_programs_optimize_soundly(text):
    f = parse_mir(text)
    for level in LEVELS:
        assert check_equivalence(f, optimize(f, level)).kind == "equivalent", level
