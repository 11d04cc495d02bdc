"""Project workspaces: the ``nv.json`` manifest and the file-based pipeline
steps (diversify, validate, harness, metrics) that read and write
``variants/``, ``bundle/`` and ``reports/`` under the project root."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .corpus import load_fixture
from .diversify import ProviderConfig, diversify, read_batch, write_batch
from .equiv import Budget
from .errors import ManifestError, NVersionError, PipelineError
from .frontends import compile_source, parse_source
from .harness import assemble_nversion, write_bundle
from .metrics import dynamic_report, static_uniqueness
from .mir import CallSite, Project
from .validate import (
    FILTERS, FilterResult, TestSuite, ValidatedVariant, ValidationReport,
    filter_compile_isolation, run_validation,
)

MANIFEST = "nv.json"
EXTENSIONS = {".cm": "cm", ".gm": "gm"}


@dataclass
class Manifest:
    root: Path
    project: str
    sources: list               # [{"path": ..., "dialect": ...}]
    target: str
    test_suite: str
    call_sites: list = field(default_factory=list)
    provider: ProviderConfig = field(default_factory=ProviderConfig)
    budget: Budget = field(default_factory=Budget)

    def to_json(self) -> dict:
        return {
            "project": self.project,
            "sources": self.sources,
            "target": self.target,
            "test_suite": self.test_suite,
            "call_sites": self.call_sites,
            "provider": self.provider.to_json(),
            "budget": {"max_enumeration": self.budget.max_enumeration,
                       "per_input_fuel": self.budget.per_input_fuel,
                       "wall_limit_ms": self.budget.wall_limit_ms},
        }

    def save(self):
        _write(self.root / MANIFEST, json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n")

    def path(self, rel) -> Path:
        return self.root / rel


def _write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


def load_manifest(root) -> Manifest:
    root = Path(root)
    try:
        doc = json.loads((root / MANIFEST).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ManifestError(f"no {MANIFEST} in {root}") from None
    except json.JSONDecodeError as exc:
        raise ManifestError(f"{MANIFEST}: {exc}") from None
    try:
        m = Manifest(
            root=root,
            project=doc["project"],
            sources=list(doc["sources"]),
            target=doc["target"],
            test_suite=doc["test_suite"],
            call_sites=list(doc.get("call_sites", [])),
            provider=ProviderConfig(**doc.get("provider", {})),
            budget=Budget(**doc.get("budget", {})),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ManifestError(f"{MANIFEST}: bad or missing field: {exc}") from None
    for rel in [s["path"] for s in m.sources] + [m.test_suite]:
        if not (root / rel).is_file():
            raise ManifestError(f"{MANIFEST}: referenced file {rel} does not exist")
    return m


def load_project(m: Manifest) -> Project:
    functions, texts = {}, {}
    for s in m.sources:
        text = m.path(s["path"]).read_text(encoding="utf-8")
        try:
            f = compile_source(text, s["dialect"])
        except NVersionError as exc:
            raise ManifestError(f"{s['path']}: {exc}") from None
        if f.name in functions:
            raise ManifestError(f"function {f.name} is defined in more than one source file")
        functions[f.name] = f
        texts[f.name] = (text, s["dialect"])
    if m.target not in functions:
        raise ManifestError(f"target {m.target} is not defined in any source file")
    suite = TestSuite.from_json(json.loads(m.path(m.test_suite).read_text(encoding="utf-8")))
    sites = [CallSite(c["context"], c["callee"]) for c in m.call_sites]
    text, dialect = texts[m.target]
    return Project(functions, m.target, sites, suite, str(m.root / MANIFEST), text, dialect)


def init_workspace(root, fixture: str, dialect: str = "cm", out_dialect: Optional[str] = None,
                   seed: int = 1, n_variants: int = 10) -> Manifest:
    """Scaffold a workspace around one bundled fixture."""
    fx = load_fixture(fixture)
    root = Path(root)
    src = f"src/{fixture}.{dialect}"
    _write(root / src, fx.source(dialect))
    _write(root / f"tests/{fixture}.suite.json", fx.suite.dumps())
    for d in ("variants", "bundle", "reports"):
        (root / d).mkdir(parents=True, exist_ok=True)
    m = Manifest(
        root=root,
        project=fixture,
        sources=[{"path": src, "dialect": dialect}],
        target=fixture,
        test_suite=f"tests/{fixture}.suite.json",
        call_sites=[{"context": "main", "callee": fixture},
                    {"context": "selftest", "callee": fixture}],
        provider=ProviderConfig(n_variants=n_variants, in_dialect=dialect,
                                out_dialect=out_dialect or dialect, seed=seed),
    )
    m.save()
    return m


# -- pipeline steps -----------------------------------------------------------

def step_diversify(m: Manifest, cfg: Optional[ProviderConfig] = None, transport=None):
    cfg = cfg or m.provider
    project = load_project(m)
    variants, raw, prompt = diversify(project.reference_source, m.target, cfg, transport)
    d = m.path(f"variants/{m.target}")
    _write(d / "prompt.txt", prompt)
    _write(d / "response.txt", raw)
    write_batch(m.root, m.target, variants, config=cfg.to_json(),
                provenance=variants[0].provenance if variants else {})
    return variants


def step_validate(m: Manifest) -> ValidationReport:
    project = load_project(m)
    doc, batch = read_batch(m.root, m.target)
    report = run_validation(project, batch, m.budget, config=doc.get("config"))
    write_batch(m.root, m.target, batch, report, doc.get("config"), doc.get("provenance"))
    _write(m.path("reports/validation.json"), report.dumps())
    return report


def load_validated(m: Manifest):
    """Rebuild ValidatedVariants from the persisted batch and validation report."""
    path = m.path("reports/validation.json")
    if not path.is_file():
        raise PipelineError("no validation report; run `nv validate` first")
    report = json.loads(path.read_text(encoding="utf-8"))
    _, batch = read_batch(m.root, m.target)
    sources = {v.index: v for v in batch}
    out = []
    for entry in report["variants"]:
        record = tuple(FilterResult(r["name"], r["passed"], r["reason"]) for r in entry["filters"])
        if len(record) != len(FILTERS) or not all(r.passed for r in record):
            continue
        src = sources[entry["index"]]
        iso = filter_compile_isolation(src)
        if not iso.passed:
            raise PipelineError(f"variant {src.index} no longer compiles: {iso.reason}")
        out.append(ValidatedVariant(src.index, iso.function, record, src))
    return out


def step_harness(m: Manifest, max_versions: Optional[int] = None, level: int = 0,
                 inject: Optional[str] = None, inject_into=(1,)):
    project = load_project(m)
    validated = load_validated(m)
    if not validated:
        raise PipelineError("validation produced zero equivalent variants")
    if max_versions is not None:
        validated = validated[:max_versions - 1]
    bundle = assemble_nversion(project, project.reference, validated)
    settings = {"level": level, "inject": inject,
                "inject_into": sorted(inject_into) if inject else []}
    write_bundle(m.root, bundle, settings)
    return bundle


def step_metrics_static(m: Manifest):
    project = load_project(m)
    fns = [v.function for v in load_validated(m)]
    report = static_uniqueness(project.reference, fns)
    _write(m.path("reports/uniqueness.json"), report.dumps())
    return report


def step_metrics_dynamic(m: Manifest):
    project = load_project(m)
    validated = load_validated(m)
    report = dynamic_report(project.reference, [v.function for v in validated],
                            project.test_suite.inputs(), [f"variant {v.index}" for v in validated])
    _write(m.path("reports/dynamic.csv"), report.csv())
    _write(m.path("reports/dynamic.json"), json.dumps(report.to_json(), indent=2, sort_keys=True) + "\n")
    return report


def source_dialect(path) -> str:
    ext = Path(path).suffix
    if ext not in EXTENSIONS:
        raise ManifestError(f"cannot infer dialect of {path}; use --dialect")
    return EXTENSIONS[ext]


def parse_file(path, dialect: Optional[str] = None):
    text = Path(path).read_text(encoding="utf-8")
    return parse_source(text, dialect or source_dialect(path))
