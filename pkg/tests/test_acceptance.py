"""Acceptance suite.  Each criterion prints one PASS/FAIL line, repeated in the
terminal summary (see conftest.py)."""

from __future__ import annotations

import hashlib
import json
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from nversion.compiler import BUGS, LEVELS, canonical_hash, compile_mir
from nversion.corpus import FIXTURES, WITNESSES, load_fixture
from nversion.demo import demo_mitigate
from nversion.diversify import ProviderConfig, diversify
from nversion.equiv import (
    Equivalent, NotEquivalent, bytecode_enumeration, check_equivalence, decode_indices, domain_size,
)
from nversion.execute import eval_mir, eval_mir_batch, run_bytecode
from nversion.harness import assemble_nversion, lower_bundle, read_bundle, write_bundle
from nversion.metrics import corpus_uniqueness, dynamic_report, level_key, ir_key
from nversion.validate import filter_compile_isolation, run_validation

from conftest import ACCEPTANCE

SEEDS = (1, 2, 3, 4, 5)


def report(criterion, ok: bool, detail: str):
    line = f"criterion {criterion}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE[str(criterion)] = line
    print(line)


# -- shared pipeline runs ----------------------------------------------------------

def run_funnel(out_dialect="cm", seeds=SEEDS):
    """{(fixture, seed): (batch, report)} for the mock provider with n=10."""
    runs = {}
    for name in FIXTURES:
        fx = load_fixture(name)
        for seed in seeds:
            cfg = ProviderConfig(n_variants=10, seed=seed, out_dialect=out_dialect)
            batch, _, _ = diversify(fx.cm_source, name, cfg)
            runs[name, seed] = (batch, run_validation(fx.project(), batch))
    return runs


@pytest.fixture(scope="module")
def funnel():
    t = time.monotonic()
    runs = run_funnel()
    return runs, time.monotonic() - t


@pytest.fixture(scope="module")
def gm_seed1():
    return run_funnel("gm", seeds=(1,))


def equivalent_functions(runs, name, seeds=SEEDS):
    return [v.function for s in seeds for v in runs[name, s][1].equivalent()]


# -- 1. mitigation -------------------------------------------------------------------

@pytest.mark.parametrize("bug", sorted(WITNESSES))
def test_c1_mitigation(bug, tmp_path):
    t = time.monotonic()
    r = demo_mitigate(bug, tmp_path / bug)
    _, _, inputs, n = WITNESSES[bug]
    args = ",".join(map(str, inputs))
    proc = subprocess.run([sys.executable, "-m", "nversion.cli", "run", str(tmp_path / bug / "bundle"),
                           "--args", args], capture_output=True, text=True)
    elapsed = time.monotonic() - t
    ok = (r.mitigated and r.baseline_wrong and r.variants_unaffected and r.n_versions == n
          and proc.returncode == 42 and "divergence" in proc.stderr and elapsed < 10)
    report(f"1 ({bug})", ok,
           f"N={r.n_versions} baseline {r.baseline} vs expected {r.expected}, "
           f"hardened {r.hardened}, nv run exit {proc.returncode}, {elapsed:.1f}s")
    assert ok, proc.stderr


# -- 2. funnel -----------------------------------------------------------------------

def test_c2_funnel(funnel):
    runs, elapsed = funnel
    monotone = all(
        10 >= f["isolation"] >= f["project"] >= f["tests"] >= f["equivalence"]
        for f in (rep.funnel for _, rep in runs.values()))
    rejected = sum(rep.rejected_after_compile() for _, rep in runs.values())
    with_equiv = [n for n in FIXTURES if any(runs[n, s][1].funnel["equivalence"] for s in SEEDS)]
    share = len(with_equiv) / len(FIXTURES)
    ok = monotone and rejected >= 1 and share >= 0.8 and elapsed < 60
    report(2, ok, f"monotone={monotone} rejected_after_compile={rejected} "
                  f"functions_with_equivalent={len(with_equiv)}/{len(FIXTURES)} ({elapsed:.1f}s)")
    assert ok


# -- 3. equivalence-checker soundness -----------------------------------------------------

def test_c3_checker_soundness(funnel):
    runs, _ = funnel
    t = time.monotonic()
    mismatches, pairs = 0, 0
    for name in FIXTURES:
        fx = load_fixture(name)
        assert isinstance(check_equivalence(fx.reference, fx.gm_function), Equivalent)
        mismatches += bytecode_enumeration(fx.reference, fx.gm_function)
        pairs += 1
    replayed, bad_replays = 0, 0
    for (name, _), (batch, _) in runs.items():
        ref = load_fixture(name).reference
        for v in batch:
            iso = filter_compile_isolation(v)
            if not iso.passed:
                continue
            verdict = check_equivalence(ref, iso.function)
            if not isinstance(verdict, NotEquivalent):
                continue
            replayed += 1
            bits = [x & ((1 << t.width) - 1) for x, (_, t) in zip(verdict.inputs, ref.params)]
            a, b = eval_mir(ref, bits), eval_mir(iso.function, bits)
            ba, _ = run_bytecode(compile_mir(ref).unit, bits)
            bb, _ = run_bytecode(compile_mir(iso.function).unit, bits)
            if a != verdict.reference or b != verdict.variant or a.agrees(b) or ba.agrees(bb):
                bad_replays += 1
    elapsed = time.monotonic() - t
    ok = mismatches == 0 and replayed >= 1 and bad_replays == 0 and elapsed < 120
    report(3, ok, f"{pairs} equivalent cm/gm pairs, {mismatches} bytecode mismatches; "
                  f"{replayed} counterexamples replayed, {bad_replays} failed ({elapsed:.1f}s)")
    assert ok


# -- 4. optimizer correctness --------------------------------------------------------------

def test_c4_optimizer():
    failures = []
    for name in FIXTURES:
        fx = load_fixture(name)
        for f in (fx.reference, fx.gm_function):
            for k in LEVELS:
                if not isinstance(check_equivalence(f, compile_mir(f, k).function), Equivalent):
                    failures.append((name, k))
    potency = {}
    stealthy = True
    for bug in sorted(BUGS):
        hits = 0
        for name in FIXTURES:
            f = load_fixture(name).reference
            for k in LEVELS:
                res = compile_mir(f, k, bug)
                stealthy &= not res.diagnostics
                hits += isinstance(check_equivalence(f, res.function), NotEquivalent)
        potency[bug] = hits
    ok = not failures and all(potency.values()) and stealthy
    report(4, ok, f"{len(FIXTURES) * 2 * len(LEVELS)} clean compilations, {len(failures)} not "
                  f"equivalent; miscompiled fixture/levels per bug {potency}; diagnostics empty={stealthy}")
    assert ok


# -- 5. static uniqueness -----------------------------------------------------------------------

def test_c5_static_uniqueness(funnel):
    runs, _ = funnel
    entries = [(n, load_fixture(n).reference, equivalent_functions(runs, n)) for n in FIXTURES]
    rep = corpus_uniqueness(entries)
    undone = [(row.function, i) for row in rep.rows for i, pv in enumerate(row.per_variant)
              if pv["O0"] and not any(pv[f"O{k}"] for k in (1, 2, 3))]
    pairs = corpus_uniqueness([(n, load_fixture(n).reference, [load_fixture(n).gm_function])
                               for n in FIXTURES])
    surviving = [row.function for row in pairs.rows if all(row.per_variant[0][f"O{k}"] for k in LEVELS)]

    # independent recomputation of the flags straight from canonical hashes
    exact = True
    for (name, ref, fns), row in zip(entries, rep.rows):
        for f, pv in zip(fns, row.per_variant):
            exact &= pv["ir"] == (ir_key(f) != ir_key(ref))
            for k in LEVELS:
                exact &= pv[f"O{k}"] == (level_key(f, k) != level_key(ref, k))
    deterministic = rep.dumps() == corpus_uniqueness(entries).dumps()
    ok = bool(undone) and bool(surviving) and exact and deterministic
    report(5, ok, f"{len(undone)} variants unique at O0 only; cm/gm pairs unique at every "
                  f"level: {len(surviving)}/{len(FIXTURES)}; flags exact={exact} "
                  f"deterministic={deterministic}")
    assert ok


# -- 6. dynamic diversity ----------------------------------------------------------------------

def test_c6_dynamic(funnel, gm_seed1):
    runs, _ = funnel
    cm_j, gm_j, self_ok = [], [], True
    for name in FIXTURES:
        fx = load_fixture(name)
        inputs = fx.suite.inputs()
        cm = dynamic_report(fx.reference, equivalent_functions(runs, name, (1,)), inputs)
        gm = dynamic_report(fx.reference, equivalent_functions(gm_seed1, name, (1,)), inputs)
        cm_j += cm.jaccards
        gm_j += gm.jaccards
        me = dynamic_report(fx.reference, [fx.reference], inputs)
        self_ok &= me.jaccards == [1.0] and me.profiles[0] == me.profiles[1]
    in_range = all(0.0 <= j <= 1.0 for j in cm_j + gm_j)
    cm_mean, gm_mean = float(np.mean(cm_j)), float(np.mean(gm_j))
    ok = cm_mean > gm_mean and in_range and self_ok
    report(6, ok, f"mean jaccard cm {cm_mean:.3f} ({len(cm_j)} variants) > gm {gm_mean:.3f} "
                  f"({len(gm_j)} variants); in [0,1]={in_range}; self=1.0={self_ok}")
    assert ok


# -- 7. transparency ----------------------------------------------------------------------------

def full_domain(f):
    return decode_indices(f, np.arange(domain_size(f), dtype=np.uint64))


def sweep_bundle(bundle, reference):
    """(inputs swept, disagreements) over every level.  The domain of each fixture
    is at most 2^16 points, which contains the i8 sweep."""
    cols = full_domain(reference)
    rs, rv = eval_mir_batch(reference, cols)
    swept = bad = 0
    for k in LEVELS:
        exe = lower_bundle(bundle, k)
        ws, wv = exe.run_batch(cols)
        agree = np.where((rs != 0) | (ws != 0), (rs != 0) & (ws != 0), rv == wv)
        swept += len(agree)
        bad += int((~agree).sum())
        # spot-check the lane-parallel driver against bytecode execution
        for i in range(0, len(rs), max(1, len(rs) // 64)):
            args = [int(c[i]) for c in cols]
            assert exe.run(args).agrees(eval_mir(reference, args))
    return swept, bad


def test_c7_transparency(funnel, tmp_path):
    runs, _ = funnel
    bundles, swept, bad = 0, 0, 0
    for name in FIXTURES:
        fx = load_fixture(name)
        vs = runs[name, 1][1].equivalent()
        if not vs:
            continue
        b = assemble_nversion(fx.project(), fx.reference, vs)
        s, d = sweep_bundle(b, fx.reference)
        bundles, swept, bad = bundles + 1, swept + s, bad + d
    for bug, (name, *_rest) in sorted(WITNESSES.items()):
        demo_mitigate(bug, tmp_path / bug)
        b = read_bundle(tmp_path / bug / "bundle" / name)
        s, d = sweep_bundle(b, load_fixture(name).reference)
        bundles, swept, bad = bundles + 1, swept + s, bad + d
    ok = bundles > 0 and bad == 0
    report(7, ok, f"{bundles} bundles x {len(LEVELS)} levels, {swept} inputs swept, "
                  f"{bad} disagreements with the reference")
    assert ok


# -- 8. reproducibility ---------------------------------------------------------------------------

def produce(root: Path):
    """Write every artifact the criteria above depend on under ``root``."""
    for bug in sorted(WITNESSES):
        demo_mitigate(bug, root / "demo" / bug)
    runs = run_funnel()
    for (name, seed), (_, rep) in sorted(runs.items()):
        (root / "funnel").mkdir(parents=True, exist_ok=True)
        (root / "funnel" / f"{name}-{seed}.json").write_text(rep.dumps())
    entries = [(n, load_fixture(n).reference, equivalent_functions(runs, n)) for n in FIXTURES]
    (root / "uniqueness.json").write_text(corpus_uniqueness(entries).dumps())
    gm = run_funnel("gm", seeds=(1,))
    hashes = {}
    for name in FIXTURES:
        fx = load_fixture(name)
        for label, src in (("cm", runs), ("gm", gm)):
            dr = dynamic_report(fx.reference, equivalent_functions(src, name, (1,)), fx.suite.inputs())
            (root / "dynamic").mkdir(exist_ok=True)
            (root / "dynamic" / f"{name}-{label}.csv").write_text(dr.csv())
        vs = runs[name, 1][1].equivalent()
        if vs:
            write_bundle(root / "bundles", assemble_nversion(fx.project(), fx.reference, vs))
        for k in LEVELS:
            hashes[f"{name}/O{k}"] = canonical_hash(compile_mir(fx.reference, k).unit)
    (root / "hashes.json").write_text(json.dumps(hashes, indent=2, sort_keys=True) + "\n")


def tree_digest(root: Path) -> dict:
    return {str(p.relative_to(root)): hashlib.sha256(p.read_bytes()).hexdigest()
            for p in sorted(root.rglob("*")) if p.is_file()}


def test_c8_reproducibility(tmp_path):
    a, b = tmp_path / "first", tmp_path / "second"
    produce(a)
    produce(b)
    da, db = tree_digest(a), tree_digest(b)
    differing = sorted(k for k in set(da) | set(db) if da.get(k) != db.get(k))
    ok = bool(da) and not differing
    report(8, ok, f"{len(da)} files compared across two runs, {len(differing)} differ"
                  + (f" (first: {differing[0]})" if differing else ""))
    assert ok
