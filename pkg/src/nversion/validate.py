"""The validation funnel: four filters applied in a fixed order.

    compile_isolation  -> the variant parses, lowers and validates on its own
    compile_project    -> name, signature and intrinsics fit the project
    tests              -> the project test suite passes
    equivalence        -> exhaustive outcome equality with the reference

A variant stops at the first failing filter, so per-filter pass counts never
increase along the funnel.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

from .equiv import Budget, Equivalent, check_equivalence, verdict_reason
from .errors import LoweringError, NVersionError, ParseError
from .execute import Outcome, eval_mir
from .frontends import lower_ast, parse_source
from .mir import REGISTERED_INTRINSICS, Function, Project, validate_function

FILTERS = ("compile_isolation", "compile_project", "tests", "equivalence")
FUNNEL_KEYS = {"compile_isolation": "isolation", "compile_project": "project",
               "tests": "tests", "equivalence": "equivalence"}


@dataclass(frozen=True)
class TestCase:
    args: tuple
    expected: Outcome

    __test__ = False    # not a pytest class


@dataclass(frozen=True)
class TestSuite:
    cases: tuple
    per_case_fuel: int = 100_000
    seed: Optional[int] = None

    __test__ = False

    @property
    def timeout(self) -> int:
        """Suite budget in total fuel: ten times the sum of per-case fuel."""
        return 10 * self.per_case_fuel * len(self.cases)

    def inputs(self):
        return [c.args for c in self.cases]

    def to_json(self) -> dict:
        return {
            "per_case_fuel": self.per_case_fuel,
            "seed": self.seed,
            "cases": [{"args": list(c.args), "expected": c.expected.to_json()} for c in self.cases],
        }

    @classmethod
    def from_json(cls, d) -> "TestSuite":
        cases = tuple(TestCase(tuple(c["args"]), Outcome.from_json(c["expected"])) for c in d["cases"])
        return cls(cases, d.get("per_case_fuel", 100_000), d.get("seed"))

    def dumps(self) -> str:
        d = self.to_json()
        rows = ",\n".join("    " + json.dumps(c, sort_keys=True) for c in d["cases"])
        return (f'{{\n  "per_case_fuel": {d["per_case_fuel"]},\n  "seed": {json.dumps(d["seed"])},\n'
                f'  "cases": [\n{rows}\n  ]\n}}\n')


@dataclass(frozen=True)
class FilterResult:
    filter: str
    passed: bool
    reason: str = ""
    function: Optional[Function] = field(default=None, compare=False, repr=False)

    def to_json(self):
        return {"name": self.filter, "passed": self.passed, "reason": self.reason}


@dataclass
class VariantSource:
    index: int
    source_text: str
    dialect: str
    provenance: dict = field(default_factory=dict)
    status: list = field(default_factory=list)     # FilterResults, filled by run_validation
    premarked: Optional[str] = None                # isolation failure decided at split time

    def extension(self) -> str:
        return self.dialect


@dataclass(frozen=True)
class ValidatedVariant:
    """A variant that passed all four filters, with its record."""
    index: int
    function: Function
    record: tuple
    source: Optional[VariantSource] = field(default=None, compare=False)

    @property
    def proven(self) -> bool:
        return (len(self.record) == len(FILTERS)
                and all(r.passed for r in self.record)
                and tuple(r.filter for r in self.record) == FILTERS)


@dataclass
class ValidationReport:
    function: str
    config: dict
    variants: list          # [(index, [FilterResult, ...])]
    sources: dict = field(default_factory=dict, repr=False)   # index -> VariantSource

    @property
    def funnel(self) -> dict:
        counts = {FUNNEL_KEYS[f]: 0 for f in FILTERS}
        for _, results in self.variants:
            for r in results:
                if r.passed:
                    counts[FUNNEL_KEYS[r.filter]] += 1
        return counts

    def equivalent(self):
        out = []
        for index, results in self.variants:
            if len(results) == len(FILTERS) and all(r.passed for r in results):
                out.append(ValidatedVariant(index, results[-1].function, tuple(results),
                                            self.sources.get(index)))
        return out

    def rejected_after_compile(self) -> int:
        """Variants that compiled in the project but failed tests or equivalence."""
        f = self.funnel
        return f["project"] - f["equivalence"]

    def to_json(self) -> dict:
        return {
            "function": self.function,
            "config": self.config,
            "variants": [{"index": i, "filters": [r.to_json() for r in rs]} for i, rs in self.variants],
            "funnel": self.funnel,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n"


# -- filters ------------------------------------------------------------------

def filter_compile_isolation(v: VariantSource) -> FilterResult:
    name = FILTERS[0]
    if v.premarked:
        return FilterResult(name, False, v.premarked)
    try:
        ast = parse_source(v.source_text, v.dialect)
    except ParseError as exc:
        return FilterResult(name, False, f"parse: {exc}")
    try:
        f = lower_ast(ast, v.dialect)
    except LoweringError as exc:
        return FilterResult(name, False, f"lowering: {exc}")
    diags = validate_function(f)
    if diags:
        return FilterResult(name, False, "invalid MIR: " + "; ".join(map(str, diags)))
    return FilterResult(name, True, function=f)


def _signature_text(f: Function) -> str:
    return f"({', '.join(str(t) for _, t in f.params)}) -> {f.return_type}"


def filter_compile_in_project(v, project: Project) -> FilterResult:
    """``v`` is a VariantSource (compiled here) or an already lowered Function."""
    name = FILTERS[1]
    if isinstance(v, VariantSource):
        iso = filter_compile_isolation(v)
        if not iso.passed:
            return FilterResult(name, False, iso.reason)
        f = iso.function
    else:
        f = v
    ref = project.reference
    if f.name != project.target:
        return FilterResult(name, False, f"name mismatch: {f.name} is not declared in the project "
                                         f"(expected {project.target})")
    if f.signature != ref.signature:
        return FilterResult(name, False, f"signature mismatch: {_signature_text(f)} "
                                         f"vs {_signature_text(ref)}")
    for b in f.blocks:
        for ins in b.instructions:
            if ins.op == "intrinsic" and ins.intrinsic not in REGISTERED_INTRINSICS:
                return FilterResult(name, False, f"undeclared intrinsic {ins.intrinsic}")
    return FilterResult(name, True, function=f)


def filter_tests(fn: Function, suite: TestSuite) -> FilterResult:
    name = FILTERS[2]
    for k, case in enumerate(suite.cases):
        got = eval_mir(fn, list(case.args), fuel=suite.per_case_fuel)
        if got.is_trap and got.reason == "fuel_exhausted":
            return FilterResult(name, False, f"timeout at case {k} {tuple(case.args)}")
        if not got.agrees(case.expected):
            return FilterResult(name, False, f"case {k} {tuple(case.args)}: expected {case.expected}, got {got}")
    return FilterResult(name, True, function=fn)


def filter_equivalence(reference: Function, variant: Function, budget: Budget = Budget()) -> FilterResult:
    name = FILTERS[3]
    try:
        verdict = check_equivalence(reference, variant, budget)
    except NVersionError as exc:
        return FilterResult(name, False, str(exc))
    if isinstance(verdict, Equivalent):
        return FilterResult(name, True, function=variant)
    return FilterResult(name, False, verdict_reason(verdict))


def validate_variant(project: Project, v: VariantSource, budget: Budget = Budget()):
    results = []
    r = filter_compile_isolation(v)
    results.append(r)
    if r.passed:
        r = filter_compile_in_project(r.function, project)
        results.append(r)
    if r.passed:
        r = filter_tests(r.function, project.test_suite)
        results.append(r)
    if r.passed:
        r = filter_equivalence(project.reference, r.function, budget)
        results.append(r)
    return results


def run_validation(project: Project, batch, budget: Budget = Budget(), config: dict = None) -> ValidationReport:
    variants = []
    for v in batch:
        results = validate_variant(project, v, budget)
        v.status = results
        variants.append((v.index, results))
    cfg = dict(config or {})
    cfg.setdefault("budget", {"max_enumeration": budget.max_enumeration,
                              "per_input_fuel": budget.per_input_fuel,
                              "wall_limit_ms": budget.wall_limit_ms})
    return ValidationReport(project.target, cfg, variants, {v.index: v for v in batch})
