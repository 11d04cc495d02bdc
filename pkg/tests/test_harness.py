from __future__ import annotations

import itertools
from dataclasses import replace

import pytest
from hypothesis import given, settings, strategies as st

from nversion.corpus import FIXTURES, WITNESSES, load_corpus, load_fixture
from nversion.diversify import ProviderConfig, diversify
from nversion.equiv import check_equivalence
from nversion.errors import EmptyVariantList, UnvalidatedVariant
from nversion.execute import eval_mir, run_bytecode
from nversion.harness import (
    assemble_nversion, lower_bundle, normalize_variant, read_bundle, write_bundle,
)
from nversion.mir import parse_mir, print_mir
from nversion.validate import ValidatedVariant, VariantSource, run_validation


def validated(name, n=4, seed=1, out="cm"):
    fx = load_fixture(name)
    batch, _, _ = diversify(fx.cm_source, name, ProviderConfig(n_variants=n, seed=seed, out_dialect=out))
    return fx, run_validation(fx.project(), batch).equivalent()


def test_params_renamed_positionally():
    f = normalize_variant(load_fixture("quot8").reference)
    assert [n for n, _ in f.params] == ["a0", "a1"]
    assert f.dialect_tag == "raw"


def test_param_name_collisions():
    f = parse_mir("func @f(%a1: i8, %a0: i8) -> i8 {\nentry:\n  %a2 = sub %a1, %a0\n  ret %a2\n}")
    g = normalize_variant(f)
    assert [n for n, _ in g.params] == ["a0", "a1"]
    assert check_equivalence(f, g).kind == "equivalent"
    assert eval_mir(g, [5, 3]).value == 2


@pytest.mark.parametrize("fx", load_corpus(), ids=lambda fx: fx.name)
def test_divcheck_guards_removed(fx):
    g = fx.gm_function
    n = normalize_variant(g)
    assert not any(i.op == "intrinsic" for b in n.blocks for i in b.instructions)
    assert check_equivalence(g, n).kind == "equivalent"
    assert normalize_variant(n) == n


def test_guarded_division_keeps_inherent_trap():
    n = normalize_variant(load_fixture("quot8").gm_function)
    ops = [i.op for b in n.blocks for i in b.instructions]
    assert "sdiv" in ops and "srem" in ops
    assert eval_mir(n, [1, 0]).reason == "div_zero"


@settings(max_examples=25)
@given(st.sampled_from(FIXTURES), st.integers(1, 10), st.sampled_from(["cm", "gm"]))
def test_normalization_sound_and_idempotent(name, seed, out):
    _, vs = validated(name, 3, seed, out)
    for v in vs:
        n = normalize_variant(v.function)
        assert check_equivalence(v.function, n).kind == "equivalent"
        assert normalize_variant(n) == n


def test_wrapper_shape():
    fx, vs = validated("nz16", 6)
    b = assemble_nversion(fx.project(), fx.reference, vs)
    ins = [i for blk in b.wrapper.blocks for i in blk.all_instructions()]
    assert [i.version for i in ins if i.op == "callv"] == list(range(1, b.n + 1))
    assert sum(i.op == "icmp" for i in ins) == b.n - 1
    assert sum(i.op == "diverge" for i in ins) == b.n - 1
    assert [f.name for f in b.versions] == [f"nz16__v{k}" for k in range(1, b.n + 1)]
    assert len({f.signature for f in b.versions}) == 1
    assert b.version(1) == replace(normalize_variant(fx.reference), name="nz16__v1")


def test_call_sites_reach_wrapper():
    fx, vs = validated("nz16")
    b = assemble_nversion(fx.project(), fx.reference, vs)
    p = b.project
    assert p.call_sites and all(p.functions[cs.callee] is b.wrapper for cs in p.call_sites)
    assert not any(p.functions[cs.callee].name.endswith("__v1") for cs in p.call_sites)


def test_assembly_errors():
    fx, vs = validated("nz16")
    with pytest.raises(EmptyVariantList):
        assemble_nversion(fx.project(), fx.reference, [])
    with pytest.raises(UnvalidatedVariant):
        assemble_nversion(fx.project(), fx.reference, [fx.gm_function])
    forged = ValidatedVariant(9, fx.gm_function, vs[0].record[:2])
    with pytest.raises(UnvalidatedVariant):
        assemble_nversion(fx.project(), fx.reference, [forged])


def _self_variant(fx):
    report = run_validation(fx.project(), [VariantSource(1, fx.cm_source, "cm")])
    return report.equivalent()


def test_two_versions_b2():
    fx = load_fixture("b2_mul3")
    b = assemble_nversion(fx.project(), fx.reference, _self_variant(fx))
    assert b.n == 2
    exe = lower_bundle(b, 2, "B2", {1})
    assert exe.call(1, [1]).value == 2 and exe.call(2, [1]).value == 3
    out = exe.run([1])
    assert out.reason == "nversion_divergence" and out.detail == "v1=2 v2=3"
    assert lower_bundle(b, 2).run([1]).value == 3
    baseline, _ = run_bytecode(exe.units[1], [1])
    assert baseline.value == 2 and not baseline.is_trap


@pytest.mark.parametrize("name", ["nz16", "quot8", "add_sat8", "ctz8"])
def test_transparency_on_i8_sweep(name):
    fx, vs = validated(name, 5)
    exe = lower_bundle(assemble_nversion(fx.project(), fx.reference, vs), 3)
    for args in itertools.product(range(-128, 128), repeat=len(fx.reference.params)):
        if len(args) == 2 and (args[0] + args[1]) % 5:
            continue            # a fifth of the 2-d sweep keeps this unit test quick
        assert exe.run(args) == eval_mir(fx.reference, list(args))


@settings(max_examples=40)
@given(st.sampled_from(sorted(WITNESSES)), st.integers(0, 9), st.integers(-2**15, 2**15 - 1))
def test_fail_stop(bug, k, x):
    name, level, _, _ = WITNESSES[bug]
    fx, vs = validated(name, 6)
    b = assemble_nversion(fx.project(), fx.reference, vs)
    k = 1 + k % b.n
    exe = lower_bundle(b, level, bug, {k})
    want = eval_mir(fx.reference, [x])
    out = exe.run([x])
    bad = exe.call(k, [x])
    if bad.agrees(want):
        assert out == want
    else:
        assert out.is_trap
        if not bad.is_trap:
            assert out.reason == "nversion_divergence"


@settings(max_examples=15)
@given(st.permutations(range(5)), st.integers(-2**15, 2**15 - 1))
def test_order_invariance(perm, x):
    fx, vs = validated("b2_mul3", 8)
    vs = vs[:5]
    a = lower_bundle(assemble_nversion(fx.project(), fx.reference, vs), 2, "B2", {1})
    b = lower_bundle(assemble_nversion(fx.project(), fx.reference, [vs[i] for i in perm]), 2, "B2", {1})
    assert a.run([x]).is_trap == b.run([x]).is_trap


def test_persistence_round_trip(tmp_path):
    fx, vs = validated("quot8", 5, out="gm")
    b = assemble_nversion(fx.project(), fx.reference, vs)
    path = write_bundle(tmp_path, b, {"level": 1, "inject": None, "inject_into": []})
    again = read_bundle(path)
    assert again.versions == b.versions and again.wrapper == b.wrapper
    assert again.origins == b.origins and again.validation_digest == b.validation_digest
    text = (tmp_path / "bundle/quot8/wrapper.mir").read_text()
    assert "callv 1(%a0, %a1)" in text and text == print_mir(b.wrapper)


@pytest.mark.parametrize("bug", sorted(WITNESSES))
def test_batch_driver_matches_scalar(bug):
    import numpy as np
    from nversion.execute import TRAP_CODES
    name, level, inputs, _ = WITNESSES[bug]
    fx, vs = validated(name, n=6)
    b = assemble_nversion(fx.project(), fx.reference, vs)
    reasons = {c: r for r, c in TRAP_CODES.items()}
    for inject in (None, bug):
        exe = lower_bundle(b, level, inject, {1})
        widths = [t.width for _, t in b.wrapper.params]
        rng = np.random.default_rng(7)
        cols = [rng.integers(0, 1 << w, 300, dtype=np.uint64) for w in widths]
        for j, c in enumerate(cols):
            c[0] = inputs[j] & ((1 << widths[j]) - 1)
        status, values = exe.run_batch(cols)
        for i in range(300):
            args = [int(c[i]) for c in cols]
            want = exe.run(args)
            if want.is_trap:
                assert reasons[int(status[i])] == want.reason
            else:
                assert status[i] == 0 and int(values[i]) == want.bits
