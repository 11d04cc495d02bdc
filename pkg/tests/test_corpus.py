from __future__ import annotations

import pytest

from nversion.compiler import BUGS
from nversion.corpus import (
    FIXTURES, WITNESSES, _compiled, generate_suite, load_corpus, load_fixture, param_signedness,
)
from nversion.execute import eval_mir
from nversion.mir import canonicalize, print_mir
from oracles import SIGNED, expected, outcome_pair


def test_corpus_shape():
    corpus = load_corpus()
    assert len(corpus) == len(FIXTURES) >= 6
    assert set(WITNESSES) == set(BUGS)
    for fx in corpus:
        assert len(fx.suite.cases) == 32
        assert fx.reference.name == fx.gm_function.name == fx.name
        assert fx.reference.signature == fx.gm_function.signature


@pytest.mark.parametrize("name", FIXTURES)
def test_frozen_suites_regenerate(name):
    fresh = generate_suite(name, _compiled(name, "cm"), param_signedness(name))
    assert fresh == load_fixture(name).suite
    assert fresh.dumps() == load_fixture(name).suite.dumps()


@pytest.mark.parametrize("name", FIXTURES)
def test_suite_expectations_match_models(name):
    fx = load_fixture(name)
    assert param_signedness(name) == [SIGNED[name]] * len(fx.reference.params)
    for case in fx.suite.cases:
        want = expected(name, case.args, fx.reference.return_type.width)
        assert outcome_pair(case.expected) == want
        assert eval_mir(fx.reference, list(case.args)) == case.expected


@pytest.mark.parametrize("name", FIXTURES)
def test_pairs_are_textually_distinct(name):
    fx = load_fixture(name)
    assert print_mir(canonicalize(fx.reference)) != print_mir(canonicalize(fx.gm_function))


def test_project_call_sites():
    p = load_fixture("nz16").project("gm")
    assert p.reference_dialect == "gm" and p.target == "nz16"
    assert {cs.context for cs in p.call_sites} == {"main", "selftest"}
