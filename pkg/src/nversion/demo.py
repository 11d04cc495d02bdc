"""End-to-end mitigation demonstration on the bundled bug witnesses.

A single-version build of the witness, compiled with the bug, silently returns
a wrong value.  The N-version build, with the bug hitting only version 1,
must stop with a divergence trap instead.
"""

from __future__ import annotations

import json
import tempfile
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

from .compiler import compile_mir
from .corpus import WITNESSES
from .diversify import diversify, write_batch
from .errors import PipelineError
from .execute import Outcome, eval_mir, run_bytecode
from .harness import lower_bundle
from .validate import ValidationReport, run_validation
from .workspace import _write, init_workspace, load_project, step_harness

DEMO_SEED = 1
MAX_ROUNDS = 8


@dataclass(frozen=True)
class MitigationResult:
    bug: Optional[str]
    fixture: str
    level: int
    inputs: tuple
    n_versions: int
    expected: Outcome           # level-0 reference semantics
    baseline: Outcome           # single version, bug injected
    hardened: Outcome           # N versions, bug injected into version 1
    others: tuple               # outcomes of versions 2..N in the hardened build
    affected_if_everywhere: int     # variants that would misbehave if all got the bug
    rounds: int

    @property
    def baseline_wrong(self) -> bool:
        return not self.baseline.is_trap and not self.baseline.agrees(self.expected)

    @property
    def variants_unaffected(self) -> bool:
        return all(o.agrees(self.expected) for o in self.others)

    @property
    def mitigated(self) -> bool:
        return (self.baseline_wrong and self.hardened.is_trap
                and self.hardened.reason == "nversion_divergence")

    def to_json(self) -> dict:
        return {
            "bug": self.bug,
            "fixture": self.fixture,
            "level": self.level,
            "inputs": list(self.inputs),
            "n_versions": self.n_versions,
            "expected": self.expected.to_json(),
            "baseline": self.baseline.to_json(),
            "hardened": self.hardened.to_json(),
            "variants_unaffected": self.variants_unaffected,
            "affected_if_everywhere": self.affected_if_everywhere,
            "rounds": self.rounds,
            "mitigated": self.mitigated,
        }


def _collect(m, project, needed: int, seed: int):
    """Draw seeded mock batches until ``needed`` variants are proven equivalent."""
    batch, results, responses = [], [], []
    offset = 0
    for r in range(MAX_ROUNDS):
        cfg = replace(m.provider, seed=seed + r)
        variants, raw, _ = diversify(project.reference_source, project.target, cfg)
        for v in variants:
            v.index += offset
        offset += len(variants)
        report = run_validation(project, variants, m.budget)
        batch.extend(variants)
        results.extend(report.variants)
        responses.append(raw)
        merged = ValidationReport(project.target, {"provider": m.provider.to_json(), "rounds": r + 1},
                                  results, {v.index: v for v in batch})
        if len(merged.equivalent()) >= needed:
            return batch, merged, responses
    return batch, merged, responses


def demo_mitigate(bug: Optional[str], workdir=None, seed: int = DEMO_SEED,
                  fixture: str = "b2_mul3") -> MitigationResult:
    """Run the pipeline on the witness for ``bug``; ``None`` is the control run
    (witness of ``fixture`` compiled without any bug)."""
    if bug is not None:
        if bug not in WITNESSES:
            raise ValueError(f"unknown bug {bug!r}")
        fixture, level, inputs, n = WITNESSES[bug]
    else:
        _, level, inputs, n = next(w for w in WITNESSES.values() if w[0] == fixture)
    if workdir is None:
        with tempfile.TemporaryDirectory() as tmp:
            return _run(bug, Path(tmp), seed, fixture, level, inputs, n)
    return _run(bug, Path(workdir), seed, fixture, level, inputs, n)


def _run(bug, root, seed, fixture, level, inputs, n):
    m = init_workspace(root, fixture, "cm", seed=seed)
    project = load_project(m)
    batch, report, responses = _collect(m, project, n - 1, seed)
    for k, raw in enumerate(responses):
        _write(m.path(f"variants/{fixture}/response-{seed + k}.txt"), raw)
    write_batch(root, fixture, batch, report, report.config)
    _write(m.path("reports/validation.json"), report.dumps())
    if not report.equivalent():
        raise PipelineError("validation produced zero equivalent variants")

    bundle = step_harness(m, max_versions=n, level=level, inject=bug, inject_into=(1,))
    exe = lower_bundle(bundle, level, bug, {1})
    expected = eval_mir(project.reference, list(inputs))
    baseline, _ = run_bytecode(compile_mir(project.reference, level, bug).unit, inputs)
    hardened = exe.run(inputs)
    others = tuple(exe.call(k, inputs) for k in range(2, bundle.n + 1))
    affected = 0
    if bug is not None:
        for f in bundle.versions[1:]:
            out, _ = run_bytecode(compile_mir(f, level, bug).unit, inputs)
            affected += not out.agrees(expected)
    result = MitigationResult(bug, fixture, level, tuple(inputs), bundle.n, expected, baseline,
                              hardened, others, affected, report.config["rounds"])
    _write(m.path("reports/mitigation.json"), json.dumps(result.to_json(), indent=2, sort_keys=True) + "\n")
    return result
