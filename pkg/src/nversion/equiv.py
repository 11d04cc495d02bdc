"""Exhaustive outcome-equality checking of MIR functions.

Two functions are equivalent when, for every input tuple in the domain, both
Return the same bits or both Trap (trap reasons are not compared).  Inputs are
enumerated lexicographically over unsigned bit patterns with the first
parameter most significant, so the reported counterexample is the smallest
distinguishing tuple regardless of how the work was partitioned.
"""

from __future__ import annotations

import itertools
import time
from collections import OrderedDict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from threading import Lock
from typing import Optional

import numpy as np

from .errors import SignatureMismatch
from .execute import Outcome, eval_mir, eval_mir_batch, run_bytecode
from .mir import Function

CHUNK = 1 << 16


@dataclass(frozen=True)
class Budget:
    max_enumeration: int = 1 << 20
    per_input_fuel: int = 100_000
    wall_limit_ms: Optional[int] = None

    def __post_init__(self):
        if self.max_enumeration <= 0 or self.per_input_fuel <= 0:
            raise ValueError("budget values must be positive")
        if self.wall_limit_ms is not None and self.wall_limit_ms <= 0:
            raise ValueError("wall_limit_ms must be positive")


@dataclass(frozen=True)
class Equivalent:
    checked: int = 0
    kind: str = "equivalent"


@dataclass(frozen=True)
class NotEquivalent:
    inputs: tuple           # signed values, one per parameter
    reference: Outcome
    variant: Outcome
    kind: str = "not_equivalent"


@dataclass(frozen=True)
class Unknown:
    reason: str             # domain_too_large | wall_limit | sampled
    kind: str = "unknown"


EquivalenceVerdict = Equivalent | NotEquivalent | Unknown


def domain_size(f: Function) -> int:
    return 1 << sum(t.width for _, t in f.params)


def _check_signatures(f, g):
    if f.signature != g.signature:
        fs = ", ".join(str(t) for t in f.signature[0])
        gs = ", ".join(str(t) for t in g.signature[0])
        raise SignatureMismatch(
            f"({fs}) -> {f.return_type} vs ({gs}) -> {g.return_type}")


def decode_indices(f: Function, idx: np.ndarray):
    """Split flat enumeration indices into per-parameter bit patterns."""
    widths = [t.width for _, t in f.params]
    out = []
    shift = sum(widths)
    for w in widths:
        shift -= w
        out.append((idx >> np.uint64(shift)) & np.uint64((1 << w) - 1))
    return out


def _signed_tuple(f: Function, bits):
    from .semantics import to_signed
    return tuple(to_signed(int(b), t.width) if t.width > 1 else int(b)
                 for b, (_, t) in zip(bits, f.params))


# Reference outcomes are re-used across many variant checks, so batch results
# are memoized per (function, chunk, fuel).
_batch_cache = OrderedDict()
_cache_lock = Lock()
_CACHE_LIMIT = 96


def _batch(f: Function, lo: int, hi: int, fuel: int, deadline):
    key = (f, lo, hi, fuel)
    with _cache_lock:
        hit = _batch_cache.get(key)
        if hit is not None:
            _batch_cache.move_to_end(key)
            return hit
    idx = np.arange(lo, hi, dtype=np.uint64)
    res = eval_mir_batch(f, decode_indices(f, idx), fuel=fuel, deadline=deadline)
    with _cache_lock:
        _batch_cache[key] = res
        while len(_batch_cache) > _CACHE_LIMIT:
            _batch_cache.popitem(last=False)
    return res


def _first_mismatch(a, b):
    sa, va = a
    sb, vb = b
    ra, rb = sa == 0, sb == 0
    bad = (ra != rb) | (ra & rb & (va != vb))
    hits = np.flatnonzero(bad)
    return int(hits[0]) if hits.size else None


def _replay(f, g, bits, fuel):
    args = list(bits)
    return NotEquivalent(_signed_tuple(f, bits), eval_mir(f, args, fuel), eval_mir(g, args, fuel))


def check_equivalence(f: Function, g: Function, budget: Budget = Budget(), threads: int = 1):
    """Exhaustive equivalence check of ``f`` (reference) against ``g``."""
    _check_signatures(f, g)
    total = domain_size(f)
    if total > budget.max_enumeration:
        return Unknown("domain_too_large")
    deadline = None
    if budget.wall_limit_ms is not None:
        deadline = time.monotonic() + budget.wall_limit_ms / 1000.0
    fuel = budget.per_input_fuel
    chunks = [(lo, min(lo + CHUNK, total)) for lo in range(0, total, CHUNK)]

    def run(chunk):
        lo, hi = chunk
        k = _first_mismatch(_batch(f, lo, hi, fuel, deadline), _batch(g, lo, hi, fuel, deadline))
        return None if k is None else lo + k

    try:
        if threads > 1 and len(chunks) > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                found = [k for k in pool.map(run, chunks) if k is not None]
            first = min(found) if found else None
        else:
            first = None
            for c in chunks:
                first = run(c)
                if first is not None:
                    break
    except TimeoutError:
        return Unknown("wall_limit")
    if first is None:
        return Equivalent(total)
    bits = [int(x[0]) for x in decode_indices(f, np.array([first], dtype=np.uint64))]
    return _replay(f, g, bits, fuel)


def _boundary_values(width):
    if width == 1:
        return [0, 1]
    m = (1 << width) - 1
    top = 1 << (width - 1)
    vals = [0, 1, m, top, top - 1, 2, m - 1, top + 1, 0x5555555555555555 & m, 0xAAAAAAAAAAAAAAAA & m]
    return list(dict.fromkeys(vals))


def boundary_tuples(f: Function, limit: int = 4096):
    per = [_boundary_values(t.width) for _, t in f.params]
    return list(itertools.islice(itertools.product(*per), limit))


def sample_differential(f: Function, g: Function, samples: int = 1000, seed: int = 0,
                        fuel: int = 100_000):
    """Seeded random plus boundary testing; never returns Equivalent."""
    _check_signatures(f, g)
    rng = np.random.default_rng(seed)
    rows = boundary_tuples(f)
    cols = [np.array([r[k] for r in rows], dtype=np.uint64) for k in range(len(f.params))]
    for k, (_, t) in enumerate(f.params):
        draw = rng.integers(0, 1 << t.width, size=samples, dtype=np.uint64, endpoint=False) \
            if t.width < 64 else rng.integers(0, np.iinfo(np.uint64).max, size=samples,
                                              dtype=np.uint64, endpoint=True)
        cols[k] = np.concatenate([cols[k], draw])
    if not f.params:
        cols = []
    k = _first_mismatch(eval_mir_batch(f, cols, fuel=fuel), eval_mir_batch(g, cols, fuel=fuel))
    if k is None:
        return Unknown("sampled")
    return _replay(f, g, [int(c[k]) for c in cols], fuel)


def bytecode_enumeration(f: Function, g: Function, fuel: int = 100_000, level: int = 0):
    """Independent exhaustive cross-check that runs both functions through the
    bytecode VM instead of the MIR evaluators.  Returns the mismatch count."""
    from .compiler import compile_mir
    _check_signatures(f, g)
    uf = compile_mir(f, level).unit
    ug = compile_mir(g, level).unit
    widths = [t.width for _, t in f.params]
    mismatches = 0
    for bits in itertools.product(*[range(1 << w) for w in widths]):
        a, _ = run_bytecode(uf, bits, fuel)
        b, _ = run_bytecode(ug, bits, fuel)
        if not a.agrees(b):
            mismatches += 1
    return mismatches


def render_counterexample(v: NotEquivalent, f: Function) -> str:
    """Counterexample report: one line per input, then both outcomes."""
    lines = ["ERROR: Value mismatch", "", "Example:"]
    for (name, t), x in zip(f.params, v.inputs):
        lines.append(f"{t} %{name} = {x}")
    lines.append(f"Source value: {v.reference}")
    lines.append(f"Target value: {v.variant}")
    return "\n".join(lines) + "\n"


def verdict_reason(v) -> str:
    if isinstance(v, Equivalent):
        return ""
    if isinstance(v, Unknown):
        return f"unknown: {'budget' if v.reason == 'domain_too_large' else v.reason}"
    args = ", ".join(str(x) for x in v.inputs)
    return f"counterexample ({args}): reference {v.reference}, variant {v.variant}"
