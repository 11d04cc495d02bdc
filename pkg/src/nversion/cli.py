"""``nv`` command-line interface.

Exit codes: 0 success, 1 usage or configuration error, 2 validation produced
no equivalent variant, 41 program trap, 42 N-version divergence trap.
``demo-mitigate`` exits 0 only when the hardened run trapped on divergence
and the baseline silently returned a wrong value, 1 otherwise.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .compiler import BUGS, LEVELS, canonical_disassembly, canonical_hash, compile_mir
from .corpus import FIXTURES
from .errors import NVersionError, PipelineError
from .execute import DEFAULT_FUEL, eval_mir, run_bytecode, trace_document
from .frontends import lower_ast
from .frontends.printer import print_source
from .harness import (
    bundle_settings, divergence_message, find_bundle, lower_bundle, read_bundle,
)
from .mir import parse_mir, print_mir

EXIT_OK, EXIT_USAGE, EXIT_NO_VARIANTS, EXIT_TRAP, EXIT_DIVERGENCE = 0, 1, 2, 41, 42


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"nv: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _load_function(path: str, dialect=None):
    """A .cm/.gm source or a .mir file, as MIR."""
    from .workspace import parse_file, source_dialect
    if path.endswith(".mir"):
        return parse_mir(Path(path).read_text(encoding="utf-8"))
    d = dialect or source_dialect(path)
    return lower_ast(parse_file(path, d), d)


def _parse_args(values):
    out = []
    for v in values or []:
        out.extend(int(x, 0) for x in v.replace(",", " ").split())
    return out


def _outcome_exit(outcome, args) -> int:
    if not outcome.is_trap:
        print(outcome.value)
        return EXIT_OK
    if outcome.reason == "nversion_divergence":
        print(divergence_message(outcome, args), file=sys.stderr)
        return EXIT_DIVERGENCE
    print(f"trap: {outcome.reason}", file=sys.stderr)
    return EXIT_TRAP


# -- subcommands ----------------------------------------------------------------

def cmd_parse(a):
    from .workspace import parse_file, source_dialect
    status = EXIT_OK
    for path in a.files:
        d = a.dialect or source_dialect(path)
        fn = parse_file(path, d)
        if a.emit == "mir":
            sys.stdout.write(print_mir(lower_ast(fn, d)))
        elif a.emit == "source":
            sys.stdout.write(print_source(fn, a.to or d))
        else:
            print(f"{path}: ok ({fn.name})")
    return status


def cmd_compile(a):
    f = _load_function(a.file, a.dialect)
    res = compile_mir(f, a.level, a.inject)
    for d in res.diagnostics:
        print(f"diagnostic: {d}", file=sys.stderr)
    if a.emit == "mir":
        sys.stdout.write(print_mir(res.function))
    elif a.emit == "disasm":
        sys.stdout.write(res.unit.disassemble())
    elif a.emit == "canonical":
        sys.stdout.write(canonical_disassembly(res.unit))
    else:
        print(canonical_hash(res.unit))
    return EXIT_OK


def cmd_run(a):
    args = _parse_args(a.args)
    path = a.target
    if os.path.isdir(path):
        bdir = find_bundle(path)
        settings = bundle_settings(bdir)
        level = a.level if a.level is not None else settings.get("level", 0)
        inject = a.inject if a.inject is not None else settings.get("inject")
        into = set(a.inject_into or settings.get("inject_into") or [1])
        exe = lower_bundle(read_bundle(bdir), level, inject, into)
        return _outcome_exit(exe.run(args, a.fuel), args)
    f = _load_function(path, a.dialect)
    if a.level is None and not a.trace and a.inject is None:
        return _outcome_exit(eval_mir(f, args, a.fuel), args)
    unit = compile_mir(f, a.level or 0, a.inject).unit
    outcome, trace = run_bytecode(unit, args, a.fuel, trace=a.trace)
    if a.trace:
        print(trace_document(f.name, args, outcome, trace))
        return EXIT_OK if not outcome.is_trap else EXIT_TRAP
    return _outcome_exit(outcome, args)


def _manifest(a):
    from .workspace import load_manifest
    return load_manifest(a.project)


def cmd_init(a):
    from .workspace import init_workspace
    m = init_workspace(a.project, a.fixture, a.dialect, a.out_dialect, a.seed, a.n)
    print(f"initialized {m.root / 'nv.json'} for {m.target}")
    return EXIT_OK


def cmd_diversify(a):
    from dataclasses import replace
    from .workspace import step_diversify
    m = _manifest(a)
    cfg = m.provider
    changes = {}
    if a.n is not None:
        changes["n_variants"] = a.n
    if a.out_dialect:
        changes["out_dialect"] = a.out_dialect
    if a.provider:
        changes["kind"] = a.provider
    if a.seed is not None:
        changes["seed"] = a.seed
    if a.endpoint:
        changes["endpoint"] = a.endpoint
    cfg = replace(cfg, **changes) if changes else cfg
    variants = step_diversify(m, cfg)
    marked = sum(1 for v in variants if v.premarked)
    print(f"{len(variants)} candidates written to variants/{m.target}/ ({marked} pre-rejected)")
    return EXIT_OK


def cmd_validate(a):
    from .workspace import step_validate
    report = step_validate(_manifest(a))
    f = report.funnel
    print(f"isolation {f['isolation']}  project {f['project']}  tests {f['tests']}  "
          f"equivalence {f['equivalence']}")
    if not f["equivalence"]:
        print("validation produced zero equivalent variants", file=sys.stderr)
        return EXIT_NO_VARIANTS
    return EXIT_OK


def cmd_harness(a):
    from .workspace import step_harness
    try:
        b = step_harness(_manifest(a), a.max_versions, a.level, a.inject, a.inject_into or [1])
    except PipelineError as exc:
        print(f"nv: {exc}", file=sys.stderr)
        return EXIT_NO_VARIANTS
    print(f"bundle/{b.target}/ written with {b.n} versions")
    return EXIT_OK


def cmd_metrics(a):
    from .workspace import step_metrics_dynamic, step_metrics_static
    m = _manifest(a)
    if a.kind == "static":
        r = step_metrics_static(m)
        print(json.dumps(r.totals, sort_keys=True))
    else:
        r = step_metrics_dynamic(m)
        print(f"mean jaccard {r.mean_jaccard:.3f} over {len(r.jaccards)} variants")
    return EXIT_OK


def cmd_demo(a):
    from .demo import demo_mitigate
    bug = None if a.bug == "none" else a.bug
    r = demo_mitigate(bug, a.workdir, a.seed)
    args = ", ".join(map(str, r.inputs))
    print(f"witness {r.fixture}({args}) at level {r.level}, expected {r.expected}")
    print(f"baseline (1 version): {r.baseline}")
    print(f"hardened ({r.n_versions} versions): {r.hardened}" +
          (f" [{r.hardened.detail}]" if r.hardened.detail else ""))
    if bug is None:
        print("nothing to mitigate")
        return EXIT_USAGE
    print(f"variants affected in the hardened build: "
          f"{0 if r.variants_unaffected else 'some'}; "
          f"would be affected if the bug hit every version: {r.affected_if_everywhere}")
    print(f"mitigated: {str(r.mitigated).lower()}")
    return EXIT_OK if r.mitigated and r.variants_unaffected else EXIT_USAGE


# -- argument parsing -----------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="nv", description="N-version hardening toolchain")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    dialect = dict(choices=("cm", "gm"), default=None, help="source dialect (default: from extension)")
    bugs = dict(choices=sorted(BUGS), default=None)

    s = sub.add_parser("parse", help="check or reformat sources")
    s.add_argument("files", nargs="+")
    s.add_argument("--dialect", **dialect)
    s.add_argument("--emit", choices=("check", "source", "mir"), default="check")
    s.add_argument("--to", choices=("cm", "gm"), help="print source in this dialect")
    s.set_defaults(func=cmd_parse)

    s = sub.add_parser("compile", help="optimize and lower to bytecode")
    s.add_argument("file")
    s.add_argument("--dialect", **dialect)
    s.add_argument("--level", type=int, choices=LEVELS, default=0)
    s.add_argument("--inject", **bugs)
    s.add_argument("--emit", choices=("mir", "disasm", "canonical", "hash"), default="disasm")
    s.set_defaults(func=cmd_compile)

    s = sub.add_parser("run", help="run a function or a bundle directory")
    s.add_argument("target")
    s.add_argument("--args", nargs="*", default=[])
    s.add_argument("--dialect", **dialect)
    s.add_argument("--level", type=int, choices=LEVELS, default=None)
    s.add_argument("--inject", **bugs)
    s.add_argument("--inject-into", type=int, nargs="+", default=None)
    s.add_argument("--fuel", type=int, default=DEFAULT_FUEL)
    s.add_argument("--trace", action="store_true")
    s.set_defaults(func=cmd_run)

    s = sub.add_parser("init", help="create a workspace around a bundled fixture")
    s.add_argument("--fixture", choices=FIXTURES, required=True)
    s.add_argument("--dialect", choices=("cm", "gm"), default="cm")
    s.add_argument("--out-dialect", choices=("cm", "gm"), default=None)
    s.add_argument("--seed", type=int, default=1)
    s.add_argument("--n", type=int, default=10)
    s.add_argument("-C", "--project", default=".")
    s.set_defaults(func=cmd_init)

    s = sub.add_parser("diversify", help="request variants from the provider")
    s.add_argument("--n", type=int, default=None)
    s.add_argument("--out-dialect", choices=("cm", "gm"), default=None)
    s.add_argument("--provider", choices=("mock", "http"), default=None)
    s.add_argument("--endpoint", default=None)
    s.add_argument("--seed", type=int, default=None)
    s.add_argument("-C", "--project", default=".")
    s.set_defaults(func=cmd_diversify)

    s = sub.add_parser("validate", help="run the four-filter validation funnel")
    s.add_argument("-C", "--project", default=".")
    s.set_defaults(func=cmd_validate)

    s = sub.add_parser("harness", help="assemble the N-version bundle")
    s.add_argument("--max-versions", type=int, default=None)
    s.add_argument("--level", type=int, choices=LEVELS, default=0)
    s.add_argument("--inject", **bugs)
    s.add_argument("--inject-into", type=int, nargs="+", default=None)
    s.add_argument("-C", "--project", default=".")
    s.set_defaults(func=cmd_harness)

    s = sub.add_parser("metrics", help="static or dynamic diversity reports")
    s.add_argument("kind", choices=("static", "dynamic"))
    s.add_argument("-C", "--project", default=".")
    s.set_defaults(func=cmd_metrics)

    s = sub.add_parser("demo-mitigate", help="miscompilation mitigation on a bug witness")
    s.add_argument("--bug", choices=sorted(BUGS) + ["none"], required=True)
    s.add_argument("--workdir", default=None)
    s.add_argument("--seed", type=int, default=1)
    s.set_defaults(func=cmd_demo)
    return p


def main(argv=None) -> int:
    try:
        a = build_parser().parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        return a.func(a)
    except PipelineError as exc:
        print(f"nv: {exc}", file=sys.stderr)
        return EXIT_NO_VARIANTS
    except (NVersionError, OSError, ValueError) as exc:
        print(f"nv: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
