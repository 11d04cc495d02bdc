"""Diversity measurements.

Static: how many variants stay distinct from the reference and from each other,
first as canonical MIR and then as canonical bytecode at each optimization
level.  Dynamic: executed-opcode profiles over the test-suite inputs and their
Jaccard similarity to the reference profile.
"""

from __future__ import annotations

import csv
import io
import json
from collections import Counter
from dataclasses import dataclass, field

from .compiler import LEVELS, canonical_hash, compile_mir
from .errors import ArgMismatch
from .execute import DEFAULT_FUEL, run_bytecode
from .harness import normalize_variant
from .mir import Function, canonicalize, print_mir

COLUMNS = ("ir",) + tuple(f"O{k}" for k in LEVELS)


def ir_key(f: Function) -> str:
    return print_mir(canonicalize(normalize_variant(f), name="f"))


def level_key(f: Function, level: int) -> str:
    return canonical_hash(compile_mir(normalize_variant(f), level).unit)


def _keys(f: Function, levels):
    out = {"ir": ir_key(f)}
    for k in levels:
        out[f"O{k}"] = level_key(f, k)
    return out


@dataclass
class UniquenessRow:
    function: str
    total: int
    unique: dict                # column -> distinct keys that differ from the reference
    per_variant: list = field(default_factory=list)   # [{column: differs_from_reference}]

    def to_json(self):
        return {"function": self.function, "total": self.total, "unique": dict(self.unique),
                "per_variant": self.per_variant}


@dataclass
class UniquenessReport:
    columns: tuple
    rows: list

    @property
    def totals(self) -> dict:
        t = {"total": sum(r.total for r in self.rows)}
        for c in self.columns:
            t[c] = sum(r.unique[c] for r in self.rows)
        return t

    def to_json(self):
        return {
            "note": "a variant counts as unique in a column when its key differs from the "
                    "reference and from every other variant's key",
            "columns": list(self.columns),
            "rows": [r.to_json() for r in self.rows],
            "totals": self.totals,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n"


def uniqueness_row(name: str, reference: Function, variants, levels=LEVELS) -> UniquenessRow:
    cols = ("ir",) + tuple(f"O{k}" for k in levels)
    ref = _keys(reference, levels)
    seen = {c: set() for c in cols}
    per_variant = []
    for v in variants:
        keys = _keys(v, levels)
        per_variant.append({c: keys[c] != ref[c] for c in cols})
        for c in cols:
            if keys[c] != ref[c]:
                seen[c].add(keys[c])
    return UniquenessRow(name, len(variants), {c: len(seen[c]) for c in cols}, per_variant)


def static_uniqueness(reference: Function, variants, levels=LEVELS) -> UniquenessReport:
    """Single-function report; see ``corpus_uniqueness`` for several rows."""
    row = uniqueness_row(reference.name, reference, variants, levels)
    return UniquenessReport(("ir",) + tuple(f"O{k}" for k in levels), [row])


def corpus_uniqueness(entries, levels=LEVELS) -> UniquenessReport:
    """``entries`` is an iterable of (name, reference, variants)."""
    rows = [uniqueness_row(n, r, vs, levels) for n, r, vs in entries]
    return UniquenessReport(("ir",) + tuple(f"O{k}" for k in levels), rows)


# -- dynamic --------------------------------------------------------------------

def jaccard(a, b) -> float:
    a, b = set(a), set(b)
    if not a and not b:
        return 1.0
    return len(a & b) / len(a | b)


@dataclass(frozen=True)
class TraceProfile:
    counts: dict                # mnemonic -> executed count, summed over inputs

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    @property
    def opcodes(self):
        return frozenset(self.counts)


def trace_profile(f: Function, inputs, level: int = 0, fuel: int = DEFAULT_FUEL) -> TraceProfile:
    unit = compile_mir(normalize_variant(f), level).unit
    counts = Counter()
    for args in inputs:
        if len(args) != len(unit.param_widths):
            raise ArgMismatch(f"expected {len(unit.param_widths)} arguments, got {len(args)}")
        _, trace = run_bytecode(unit, list(args), fuel, trace=True)
        counts.update(trace.mnemonics)
    return TraceProfile(dict(sorted(counts.items())))


@dataclass
class DynamicReport:
    labels: list                # series labels, "reference" first
    profiles: list              # TraceProfile per series
    jaccards: list              # per variant, vs the reference

    @property
    def mean_jaccard(self) -> float:
        return sum(self.jaccards) / len(self.jaccards) if self.jaccards else 1.0

    def rows(self):
        """(series, opcode, count) for every series and every opcode observed
        anywhere in the report, zeros included."""
        ops = sorted(set().union(*(p.opcodes for p in self.profiles)))
        return [(lbl, op, p.counts.get(op, 0))
                for lbl, p in zip(self.labels, self.profiles) for op in ops]

    def csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["series", "opcode", "count"])
        w.writerows(self.rows())
        return buf.getvalue()

    def to_json(self):
        return {
            "series": [{"label": l, "total": p.total, "jaccard": j}
                       for l, p, j in zip(self.labels, self.profiles, [1.0] + self.jaccards)],
            "mean_jaccard": self.mean_jaccard,
        }


def dynamic_report(reference: Function, variants, inputs, labels=None, level: int = 0) -> DynamicReport:
    ref = trace_profile(reference, inputs, level)
    profiles = [ref]
    for v in variants:
        if v.signature != reference.signature:
            raise ArgMismatch(f"variant {v.name} does not share the reference signature")
        profiles.append(trace_profile(v, inputs, level))
    names = ["reference"] + list(labels or [f"v{k}" for k in range(2, len(variants) + 2)])
    return DynamicReport(names, profiles, [jaccard(ref.opcodes, p.opcodes) for p in profiles[1:]])
