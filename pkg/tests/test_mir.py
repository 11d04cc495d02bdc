from __future__ import annotations

import pytest

from nversion.corpus import load_corpus
from nversion.errors import ParseError, ValidationError
from nversion.mir import canonicalize, parse_mir, print_mir, rename_registers, validate_function

ONE_LINE = "func @f(%x: i32) -> i32 { entry: %y = add %x, const.i32 1 ret %y }"


def test_one_line_function_parses():
    f = parse_mir(ONE_LINE)
    assert f.name == "f"
    assert f.instruction_count() == 2
    assert [i.op for i in f.entry.all_instructions()] == ["add", "ret"]


@pytest.mark.parametrize("fx", load_corpus(), ids=lambda fx: fx.name)
def test_corpus_round_trips(fx):
    for f in (fx.reference, fx.gm_function):
        text = print_mir(f)
        again = parse_mir(text)
        assert again == f
        assert print_mir(again) == text


@pytest.mark.parametrize("body, message", [
    ("%y = add %x, %z\n  ret %y", "undefined register %z"),
    ("%y = add %x, const.i32 1\n  %y = add %x, const.i32 1\n  ret %y", "duplicate definition"),
    ("br nowhere", "unknown label nowhere"),
    ("%c = add %x, const.i32 1\n  condbr %c, entry, entry", "condbr condition must be i1"),
])
def test_validator_diagnostics(body, message):
    with pytest.raises(ValidationError) as exc:
        parse_mir(f"func @f(%x: i32) -> i32 {{\nentry:\n  {body}\n}}")
    assert message in str(exc.value)


def test_bundle_constructs_rejected_outside_bundles():
    text = "func @f(%x: i8) -> i8 {\nentry:\n  %r = callv 1(%x)\n  ret %r\n}"
    with pytest.raises(ParseError):
        parse_mir(text)
    f = parse_mir(text, bundle=True)
    assert validate_function(f, bundle=True) == []
    assert validate_function(f)


def test_use_must_be_dominated():
    text = """func @f(%c: i1) -> i8 {
entry:
  condbr %c, a, b
a:
  %v = const.i8 1
  br b
b:
  ret %v
}"""
    with pytest.raises(ValidationError, match="use before def"):
        parse_mir(text)


def test_canonicalize_ignores_register_names():
    f = load_corpus()[0].reference
    renamed = rename_registers(f, {n: f"zz{n}" for n in f.register_types()})
    assert renamed != f
    assert canonicalize(renamed) == canonicalize(f)
