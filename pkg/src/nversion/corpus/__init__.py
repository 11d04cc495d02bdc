"""Bundled fixture corpus: small pure functions with paired Cm/Gm sources and
frozen 32-case test suites."""

from __future__ import annotations

import json
import zlib
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

import numpy as np

from ..execute import eval_mir
from ..frontends import compile_source
from ..mir import CallSite, Function, Project
from ..validate import TestCase, TestSuite

FIXTURES = (
    "nz16", "abs16", "ctz8", "parity8", "b64char", "add_sat8",
    "val_seg", "mod_add", "quot8", "b1_srem", "b2_mul3", "b3_trunc",
)

# Each bug's witness: fixture, activation level, input, and the number of
# versions in the hardened build.
WITNESSES = {
    "B1": ("b1_srem", 1, (0,), 11),
    "B2": ("b2_mul3", 2, (1,), 11),
    "B3": ("b3_trunc", 3, (0,), 3),
}

SUITE_FUEL = 100_000


@dataclass(frozen=True)
class Fixture:
    name: str
    cm_source: str
    gm_source: str
    suite: TestSuite

    def source(self, dialect: str) -> str:
        return self.cm_source if dialect == "cm" else self.gm_source

    @property
    def reference(self) -> Function:
        return _compiled(self.name, "cm")

    @property
    def gm_function(self) -> Function:
        return _compiled(self.name, "gm")

    def project(self, dialect: str = "cm") -> Project:
        f = _compiled(self.name, dialect)
        return Project(
            functions={self.name: f},
            target=self.name,
            call_sites=[CallSite("main", self.name), CallSite("selftest", self.name)],
            test_suite=self.suite,
            reference_source=self.source(dialect),
            reference_dialect=dialect,
        )


def _read(name: str) -> str:
    return resources.files(__package__).joinpath("data", name).read_text(encoding="utf-8")


@lru_cache(maxsize=None)
def _compiled(name: str, dialect: str) -> Function:
    return compile_source(_read(f"{name}.{dialect}"), dialect)


@lru_cache(maxsize=None)
def load_fixture(name: str) -> Fixture:
    if name not in FIXTURES:
        raise KeyError(f"unknown fixture {name!r}")
    suite = TestSuite.from_json(json.loads(_read(f"{name}.suite.json")))
    return Fixture(name, _read(f"{name}.cm"), _read(f"{name}.gm"), suite)


def load_corpus():
    return [load_fixture(n) for n in FIXTURES]


# -- suite generation ---------------------------------------------------------

def boundary_values(width: int, signed: bool):
    """Sixteen boundary values in the parameter's natural spelling."""
    m = (1 << width) - 1

    def rep(byte):
        return int.from_bytes(bytes([byte]) * (width // 8), "big")

    smin = 1 << (width - 1)
    bits = [0, 1, m, smin if signed else m, smin - 1 if signed else 0x7F & m,
            rep(0x55), rep(0xAA), 2, rep(0x0F), rep(0xF0),
            smin + 1, smin - 2, m - 1, 3, rep(0x33), rep(0xCC)]
    if not signed:
        bits[3] = smin
        bits[4] = smin - 1
    out = []
    for b in bits:
        b &= m
        out.append(b - (1 << width) if signed and b >= smin else b)
    return out


def suite_seed(name: str) -> int:
    return zlib.crc32(name.encode())


def generate_suite(name: str, reference: Function, signedness) -> TestSuite:
    """16 boundary tuples plus 16 seeded-random tuples; expectations from eval_mir."""
    rng = np.random.default_rng(suite_seed(name))
    per_param = [boundary_values(t.width, s) for (_, t), s in zip(reference.params, signedness)]
    rows = []
    for i in range(16):
        rows.append(tuple(vals[(i + 5 * k) % 16] for k, vals in enumerate(per_param)))
    for _ in range(16):
        row = []
        for (_, t), s in zip(reference.params, signedness):
            b = int(rng.integers(0, 1 << t.width))
            row.append(b - (1 << t.width) if s and b >> (t.width - 1) else b)
        rows.append(tuple(row))
    cases = tuple(TestCase(r, eval_mir(reference, list(r), fuel=SUITE_FUEL)) for r in rows)
    return TestSuite(cases, SUITE_FUEL, suite_seed(name))


def param_signedness(name: str):
    from ..frontends import parse_source
    ast = parse_source(_read(f"{name}.cm"), "cm")
    return [t.signed for _, t in ast.params]
