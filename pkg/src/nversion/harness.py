"""The harnessing pass: normalize validated variants, rename them into
versions, synthesize the N-of-N wrapper and redirect call sites.

The wrapper is ordinary MIR plus two bundle-only constructs: ``callv k(...)``
invokes version k, and ``diverge`` is the fail-stop trap taken when two
versions disagree.  Versions run sequentially in index order and the first
trap propagates unchanged.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field, replace
from typing import Optional

from .compiler import compile_mir
from .errors import EmptyVariantList, UnvalidatedVariant
from .execute import DEFAULT_FUEL, Outcome, eval_mir, eval_mir_batch, run_bytecode
from .mir import (
    I1, BasicBlock, CallSite, Function, Instruction, Project, Reg, Target,
    assert_valid, parse_mir, print_mir, rename_registers, reverse_postorder,
)
from .validate import ValidatedVariant

# Intrinsics with no observable effect, dropped during normalization.  None
# are registered at present; gm.divcheck is a guard and handled separately.
INERT_INTRINSICS = frozenset()

DIVISIONS = frozenset(["sdiv", "udiv", "srem", "urem"])


# -- normalization ------------------------------------------------------------

def _param_renaming(f: Function):
    """Map params to a0, a1, ... moving any existing register that already
    uses one of those names out of the way."""
    wanted = {n: f"a{i}" for i, (n, _) in enumerate(f.params)}
    taken = set(wanted.values())
    mapping = dict(wanted)
    names = set(wanted)
    for b in f.blocks:
        names.update(n for n, _ in b.params)
        names.update(i.dest for i in b.instructions if i.dest)
    for n in sorted(names - set(wanted)):
        if n in taken:
            k = 0
            while f"{n}_{k}" in names or f"{n}_{k}" in taken:
                k += 1
            mapping[n] = f"{n}_{k}"
            taken.add(mapping[n])
    return mapping


def _is_trap_block(b: BasicBlock) -> bool:
    return not b.params and not b.instructions and b.terminator.op == "trap"


def _strip_divchecks(f: Function) -> Function:
    bm = f.block_map()
    uses = {}
    for b in f.blocks:
        for ins in b.all_instructions():
            for r in ins.uses():
                uses[r.name] = uses.get(r.name, 0) + 1
    blocks = []
    for b in f.blocks:
        t = b.terminator
        last = b.instructions[-1] if b.instructions else None
        if (last is not None and last.op == "intrinsic" and last.intrinsic == "gm.divcheck"
                and t.op == "condbr" and t.operands[0] == Reg(last.dest)
                and uses.get(last.dest) == 1):
            trap_t, ok_t = t.targets
            cont = bm[ok_t.label]
            first = cont.instructions[0] if cont.instructions else None
            if (_is_trap_block(bm[trap_t.label]) and not trap_t.args and not ok_t.args
                    and not cont.params and first is not None and first.op in DIVISIONS
                    and first.operands[1] == last.operands[0]):
                b = replace(b, instructions=b.instructions[:-1],
                            terminator=Instruction("br", targets=(Target(ok_t.label),)))
        blocks.append(b)
    g = replace(f, blocks=tuple(blocks))
    live = set(reverse_postorder(g))
    return replace(g, blocks=tuple(b for b in g.blocks if b.label in live))


def normalize_variant(f: Function) -> Function:
    """Apply the four normalization rules; the result is equivalent to ``f``."""
    g = replace(f, dialect_tag="raw")                               # rule 1
    g = rename_registers(g, _param_renaming(g))                     # rule 2
    g = replace(g, blocks=tuple(                                    # rule 3
        replace(b, instructions=tuple(
            i for i in b.instructions
            if not (i.op == "intrinsic" and i.intrinsic in INERT_INTRINSICS)))
        for b in g.blocks))
    g = _strip_divchecks(g)                                         # rule 4
    return assert_valid(g)


# -- assembly -----------------------------------------------------------------

@dataclass(frozen=True)
class NVersionBundle:
    target: str
    versions: tuple             # Functions named <target>__v<k>, reference first
    wrapper: Function
    project: Project = field(compare=False)
    origins: tuple = ()         # per version: "reference" or "variant <index>"
    validation_digest: str = ""

    @property
    def n(self) -> int:
        return len(self.versions)

    def version(self, k: int) -> Function:
        return self.versions[k - 1]


def version_name(target: str, k: int) -> str:
    return f"{target}__v{k}"


def synthesize_wrapper(target: str, params, return_type, n: int) -> Function:
    """N sequential calls, then N-1 comparisons of v1 against every other
    version; any mismatch ends in ``diverge``."""
    if n < 2:
        raise EmptyVariantList("an N-version wrapper needs at least two versions")
    args = tuple(Reg(p) for p, _ in params)
    calls = tuple(Instruction("callv", f"r{k}", return_type, args, version=k) for k in range(1, n + 1))
    blocks = []
    div_blocks = []
    for k in range(2, n + 1):
        label = "entry" if k == 2 else f"cmp{k}"
        nxt = f"cmp{k + 1}" if k < n else "agree"
        cmp = Instruction("icmp", f"c{k}", I1, (Reg("r1"), Reg(f"r{k}")), pred="eq")
        body = (calls + (cmp,)) if k == 2 else (cmp,)
        term = Instruction("condbr", operands=(Reg(f"c{k}"),),
                           targets=(Target(nxt), Target(f"div{k}")))
        blocks.append(BasicBlock(label, (), body, term))
        div_blocks.append(BasicBlock(f"div{k}", (), (),
                                     Instruction("diverge", operands=(Reg("r1"), Reg(f"r{k}")))))
    blocks.append(BasicBlock("agree", (), (), Instruction("ret", operands=(Reg("r1"),))))
    f = Function(target, tuple(params), return_type, tuple(blocks + div_blocks))
    return assert_valid(f, bundle=True)


def _digest(variants) -> str:
    doc = [{"index": v.index, "filters": [r.to_json() for r in v.record]} for v in variants]
    return hashlib.sha256(json.dumps(doc, sort_keys=True).encode()).hexdigest()


def assemble_nversion(project: Project, reference: Function, variants) -> NVersionBundle:
    """Build an N-version bundle from the reference and validated variants."""
    if not variants:
        raise EmptyVariantList("N-version requires at least one variant besides the reference")
    for v in variants:
        if not isinstance(v, ValidatedVariant) or not v.proven:
            raise UnvalidatedVariant(f"variant {getattr(v, 'index', v)!r} has no passing validation record")
        if v.function.signature != reference.signature:
            raise UnvalidatedVariant(f"variant {v.index} does not match the reference signature")
    target = project.target
    fns = [reference] + [v.function for v in variants]
    versions = tuple(replace(normalize_variant(f), name=version_name(target, k))
                     for k, f in enumerate(fns, 1))
    norm_ref = versions[0]
    wrapper = synthesize_wrapper(target, norm_ref.params, norm_ref.return_type, len(versions))

    functions = {k: v for k, v in project.functions.items() if k != target}
    functions.update({f.name: f for f in versions})
    functions[target] = wrapper
    # call sites name the target, which is now the wrapper
    sites = list(project.call_sites)
    hardened = Project(functions, target, sites, project.test_suite, project.manifest_path,
                       project.reference_source, project.reference_dialect)
    origins = ("reference",) + tuple(f"variant {v.index}" for v in variants)
    return NVersionBundle(target, versions, wrapper, hardened, origins, _digest(variants))


# -- lowering and execution ---------------------------------------------------

@dataclass
class BundleExecutable:
    """Compiled versions plus a driver that interprets the wrapper."""
    bundle: NVersionBundle
    level: int
    units: dict                 # version index -> BytecodeUnit
    inject: Optional[str] = None
    inject_into: frozenset = frozenset()
    optimized: dict = field(default_factory=dict)   # version index -> optimized MIR

    def call(self, k: int, args, fuel: int = DEFAULT_FUEL) -> Outcome:
        return run_bytecode(self.units[k], args, fuel)[0]

    def run(self, args, fuel: int = DEFAULT_FUEL) -> Outcome:
        return eval_mir(self.bundle.wrapper, list(args), fuel=fuel,
                        calls=lambda k, bits: self.call(k, bits, fuel))

    def run_batch(self, arg_arrays, fuel: int = DEFAULT_FUEL):
        """Lane-parallel wrapper execution for sweeps.  Versions run as their
        optimized MIR through the batch evaluator rather than as bytecode, so
        results are cross-checked against ``run`` in the tests."""
        return eval_mir_batch(self.bundle.wrapper, arg_arrays, fuel,
                              calls=lambda k, arrs: eval_mir_batch(self.optimized[k], arrs, fuel))


def lower_bundle(b: NVersionBundle, level: int = 0, inject: Optional[str] = None,
                 inject_into=frozenset({1})) -> BundleExecutable:
    into = frozenset(inject_into) if inject else frozenset()
    units, optimized = {}, {}
    for k, f in enumerate(b.versions, 1):
        res = compile_mir(f, level, inject if k in into else None)
        units[k], optimized[k] = res.unit, res.function
    return BundleExecutable(b, level, units, inject, into, optimized)


def divergence_message(outcome: Outcome, args) -> str:
    shown = ", ".join(str(a) for a in args)
    return f"n-version divergence: {outcome.detail} at input ({shown})"


# -- persistence --------------------------------------------------------------

def bundle_manifest(b: NVersionBundle, settings=None) -> dict:
    return {
        "compile": settings or {"level": 0, "inject": None, "inject_into": []},
        "target": b.target,
        "n": b.n,
        "signature": {"params": [str(t) for _, t in b.wrapper.params],
                      "return": str(b.wrapper.return_type)},
        "versions": [{"version": k, "name": f.name, "file": f"v{k}.mir", "origin": o}
                     for k, (f, o) in enumerate(zip(b.versions, b.origins), 1)],
        "wrapper": "wrapper.mir",
        "call_sites": [{"context": cs.context, "callee": cs.callee} for cs in b.project.call_sites],
        "validation_digest": b.validation_digest,
    }


def write_bundle(root, b: NVersionBundle, settings=None) -> str:
    """Write ``bundle/<target>/``.  ``settings`` records how ``nv run`` should
    compile the versions (level, injected bug, receiving versions)."""
    out = os.path.join(root, "bundle", b.target)
    os.makedirs(out, exist_ok=True)
    for name in os.listdir(out):
        if name.endswith(".mir"):
            os.remove(os.path.join(out, name))
    for k, f in enumerate(b.versions, 1):
        with open(os.path.join(out, f"v{k}.mir"), "w") as fh:
            fh.write(print_mir(f))
    with open(os.path.join(out, "wrapper.mir"), "w") as fh:
        fh.write(print_mir(b.wrapper))
    with open(os.path.join(out, "bundle.json"), "w") as fh:
        fh.write(json.dumps(bundle_manifest(b, settings), indent=2, sort_keys=True) + "\n")
    return out


def find_bundle(path) -> str:
    """Accept a bundle directory or a ``bundle/`` root holding exactly one."""
    if os.path.isfile(os.path.join(path, "bundle.json")):
        return path
    subs = sorted(d for d in os.listdir(path) if os.path.isfile(os.path.join(path, d, "bundle.json")))
    if len(subs) != 1:
        raise FileNotFoundError(f"{path} does not hold exactly one bundle")
    return os.path.join(path, subs[0])


def bundle_settings(path) -> dict:
    with open(os.path.join(path, "bundle.json")) as fh:
        return json.load(fh).get("compile", {"level": 0, "inject": None, "inject_into": []})


def read_bundle(path) -> NVersionBundle:
    """Load a bundle directory written by ``write_bundle``."""
    with open(os.path.join(path, "bundle.json")) as fh:
        meta = json.load(fh)
    versions = []
    for v in meta["versions"]:
        with open(os.path.join(path, v["file"])) as fh:
            versions.append(parse_mir(fh.read()))
    with open(os.path.join(path, meta["wrapper"])) as fh:
        wrapper = parse_mir(fh.read(), bundle=True)
    target = meta["target"]
    functions = {f.name: f for f in versions}
    functions[target] = wrapper
    sites = [CallSite(c["context"], c["callee"]) for c in meta["call_sites"]]
    project = Project(functions, target, sites)
    origins = tuple(v["origin"] for v in meta["versions"])
    return NVersionBundle(target, tuple(versions), wrapper, project, origins, meta["validation_digest"])
