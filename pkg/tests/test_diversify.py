from __future__ import annotations

import json
import random

import httpx
import pytest
from hypothesis import given, settings, strategies as st

from nversion.corpus import FIXTURES, load_fixture
from nversion.diversify import (
    ProviderConfig, build_prompt, diversify, parse_variants, read_batch, request_variants,
    write_batch,
)
from nversion.diversify.prompt import extract_reference
from nversion.diversify.rewrite import BREAKING_RULES, PRESERVING_RULES
from nversion.equiv import check_equivalence
from nversion.errors import ProviderError
from nversion.frontends import lower_ast, parse_source
from nversion.validate import run_validation

NZ = load_fixture("nz16")
INTRO = "The following code is a reference implementation of a function in Cm."
REMARKS = ("Do not output any other text apart from code. Do not create auxiliary or helper "
           "functions. Maintain the original function's signature.")


def test_prompt_same_dialect():
    p = build_prompt(NZ.cm_source, ProviderConfig(n_variants=3))
    parts = p.rstrip("\n").split("\n\n")
    assert parts[0] == INTRO
    assert parts[1] == NZ.cm_source.strip("\n")
    assert parts[2].startswith("Create 3 substitute implementation(s) of the function, which are "
                               "different but equivalent.")
    assert parts[3] == REMARKS
    assert " language" not in p
    assert extract_reference(p) == NZ.cm_source


def test_prompt_cross_dialect():
    p = build_prompt(NZ.cm_source, ProviderConfig(n_variants=10, out_dialect="gm"))
    assert "Create 10 substitute implementation(s) of the function in the Gm language, which" in p


def test_mock_blocks_parse():
    cfg = ProviderConfig(n_variants=3, seed=1)
    raw = request_variants(cfg, build_prompt(NZ.cm_source, cfg))
    assert raw.count("```cm\n") == 3
    variants = parse_variants(raw, "nz16", 3, "cm")
    assert len(variants) == 3
    for v in variants:
        assert parse_source(v.source_text, "cm").name == "nz16"


def test_mock_is_seeded():
    def raw(seed):
        cfg = ProviderConfig(seed=seed)
        return request_variants(cfg, build_prompt(NZ.cm_source, cfg))
    assert raw(4) == raw(4)
    assert raw(4) != raw(5)


def test_prose_is_ignored():
    raw = ("Here are two versions.\n\n```c\nint16 nz16(int16 x) { return x ? -1 : 0; }\n```\n"
           "And another:\n\n```c\nint16 nz16(int16 x) { if (x) return -1; return 0; }\n```\nDone.\n")
    vs = parse_variants(raw, "nz16", 10, "cm")
    assert [v.index for v in vs] == [1, 2]
    assert not any(v.premarked for v in vs)


def test_unfenced_response_split_on_headers():
    raw = "int16 nz16(int16 x) {\n    return x;\n}\n\nint16 nz16(int16 x) {\n\n    return -x;\n}\n"
    vs = parse_variants(raw, "nz16", 10, "cm")
    assert len(vs) == 2 and "-x" in vs[1].source_text


def test_renamed_and_multi_function_candidates():
    raw = ("```c\nint16 nz16_v2(int16 x) { return x; }\n```\n\n"
           "```c\nint16 h(int16 x) { return x; }\nint16 nz16(int16 x) { return h(x); }\n```\n")
    renamed, multi = parse_variants(raw, "nz16", 10, "cm")
    assert renamed.premarked is None            # kept; a later filter rejects it
    assert multi.premarked.startswith("not a single function definition (2 found)")
    report = run_validation(NZ.project(), [renamed, multi])
    assert report.variants[0][1][-1].reason.startswith("name mismatch")
    assert report.variants[1][1][0].reason == multi.premarked


@settings(max_examples=80)
@given(st.sampled_from(FIXTURES), st.sampled_from(sorted(PRESERVING_RULES)), st.integers(0, 10**6))
def test_preserving_rules_preserve(name, rule, seed):
    fx = load_fixture(name)
    ast = parse_source(fx.cm_source, "cm")
    out = PRESERVING_RULES[rule](ast, random.Random(seed))
    if out is not None:
        assert check_equivalence(fx.reference, lower_ast(out, "cm")).kind == "equivalent"


def test_breaking_rule_breaks_somewhere():
    broken = 0
    for name in FIXTURES:
        fx = load_fixture(name)
        out = BREAKING_RULES["off_by_one"](parse_source(fx.cm_source, "cm"), random.Random(0))
        if out is not None and check_equivalence(fx.reference, lower_ast(out, "cm")).kind != "equivalent":
            broken += 1
    assert broken >= len(FIXTURES) // 2


def test_batch_round_trip(tmp_path):
    variants, _, _ = diversify(NZ.cm_source, "nz16", ProviderConfig(n_variants=4))
    report = run_validation(NZ.project(), variants)
    write_batch(tmp_path, "nz16", variants, report, {"k": 1})
    doc, again = read_batch(tmp_path, "nz16")
    assert [v.source_text for v in again] == [v.source_text for v in variants]
    assert doc["funnel"] == report.funnel
    assert all(len(e["filters"]) >= 1 for e in doc["variants"])


# -- http -----------------------------------------------------------------------

HTTP = ProviderConfig(kind="http", endpoint="http://llm.test/v1/chat", n_variants=2,
                      max_retries=3, backoff=0.5, timeout=2)


def completion(text):
    return httpx.Response(200, json={"choices": [{"message": {"role": "assistant", "content": text}}]})


def test_http_success_and_request_shape(monkeypatch):
    monkeypatch.setenv("NV_PROVIDER_TOKEN", "sekrit")
    seen = []

    def handler(req):
        seen.append(req)
        return completion("```c\nint16 nz16(int16 x) { return x; }\n```")
    out = request_variants(HTTP, "prompt text", transport=httpx.MockTransport(handler))
    assert "nz16" in out
    body = json.loads(seen[0].content)
    assert body["model"] == "gpt-4o" and body["temperature"] == 1.0
    assert body["messages"] == [{"role": "user", "content": "prompt text"}]
    assert seen[0].headers["authorization"] == "Bearer sekrit"


def test_http_retries_with_backoff():
    codes = iter([429, 503, 200])
    sleeps = []

    def handler(req):
        c = next(codes)
        return completion("ok") if c == 200 else httpx.Response(c)
    out = request_variants(HTTP, "p", transport=httpx.MockTransport(handler), sleep=sleeps.append)
    assert out == "ok" and sleeps == [0.5, 1.0]


def test_http_gives_up():
    sleeps = []
    with pytest.raises(ProviderError) as exc:
        request_variants(HTTP, "p", transport=httpx.MockTransport(lambda r: httpx.Response(500)),
                         sleep=sleeps.append)
    assert exc.value.kind == "http_status" and sleeps == [0.5, 1.0, 2.0]


def test_http_client_error_not_retried():
    calls = []

    def handler(req):
        calls.append(1)
        return httpx.Response(401)
    with pytest.raises(ProviderError):
        request_variants(HTTP, "p", transport=httpx.MockTransport(handler), sleep=lambda s: None)
    assert len(calls) == 1


def test_http_malformed_body():
    with pytest.raises(ProviderError) as exc:
        request_variants(HTTP, "p", transport=httpx.MockTransport(
            lambda r: httpx.Response(200, text="not json")))
    assert exc.value.kind == "malformed_response"


def test_http_unreachable_endpoint():
    cfg = ProviderConfig(kind="http", endpoint="http://127.0.0.1:9/v1", max_retries=1,
                         backoff=0.01, timeout=0.5)
    with pytest.raises(ProviderError) as exc:
        request_variants(cfg, "p", sleep=lambda s: None)
    assert exc.value.kind == "timeout"


def test_http_diversify_end_to_end():
    text = "```c\nint16 nz16(int16 x) { if (x != 0) return -1; return 0; }\n```\n"
    vs, raw, prompt = diversify(NZ.cm_source, "nz16", HTTP,
                                transport=httpx.MockTransport(lambda r: completion(text)))
    assert len(vs) == 1 and vs[0].provenance["provider"] == "http"
    assert run_validation(NZ.project(), vs).funnel["equivalence"] == 1
