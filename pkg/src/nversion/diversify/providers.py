"""Variant providers: an HTTP chat-completion client and a seeded mock."""

from __future__ import annotations

import hashlib
import os
import random
import time
from dataclasses import asdict, dataclass
from typing import Optional

import httpx

from ..errors import ProviderError
from ..frontends import parse_source
from ..frontends.printer import print_source
from .prompt import extract_reference
from .rewrite import BREAKING_RULES, PRESERVING_RULES

TOKEN_ENV = "NV_PROVIDER_TOKEN"
BREAK_PROBABILITY = 0.1


@dataclass(frozen=True)
class ProviderConfig:
    kind: str = "mock"                  # mock | http
    n_variants: int = 10
    in_dialect: str = "cm"
    out_dialect: str = "cm"
    seed: int = 1
    endpoint: Optional[str] = None
    model: str = "gpt-4o"
    temperature: float = 1.0
    timeout: float = 30.0
    max_retries: int = 3
    backoff: float = 0.5

    def __post_init__(self):
        if self.kind not in ("mock", "http"):
            raise ValueError(f"unknown provider kind {self.kind!r}")
        if self.n_variants < 1:
            raise ValueError("n_variants must be at least 1")
        if self.temperature < 0:
            raise ValueError("temperature must be non-negative")
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")
        for d in (self.in_dialect, self.out_dialect):
            if d not in ("cm", "gm"):
                raise ValueError(f"unknown dialect {d!r}")
        if self.kind == "http" and not self.endpoint:
            raise ValueError("http provider needs an endpoint")

    def to_json(self) -> dict:
        d = asdict(self)
        if self.kind == "mock":
            for k in ("endpoint", "model", "temperature", "timeout", "max_retries", "backoff"):
                d.pop(k)
        else:
            d.pop("seed")
        return d


def request_variants(cfg: ProviderConfig, prompt: str, transport=None, sleep=time.sleep) -> str:
    if cfg.kind == "mock":
        return mock_response(cfg, prompt)
    return http_response(cfg, prompt, transport=transport, sleep=sleep)


# -- http -----------------------------------------------------------------------

def _retryable(status: int) -> bool:
    return status in (408, 409, 429) or status >= 500


def http_response(cfg: ProviderConfig, prompt: str, transport=None, sleep=time.sleep) -> str:
    headers = {"Content-Type": "application/json"}
    token = os.environ.get(TOKEN_ENV)
    if token:
        headers["Authorization"] = f"Bearer {token}"
    body = {
        "model": cfg.model,
        "messages": [{"role": "user", "content": prompt}],
        "temperature": cfg.temperature,
    }
    last = None
    with httpx.Client(timeout=cfg.timeout, transport=transport) as client:
        for attempt in range(cfg.max_retries + 1):
            if attempt:
                sleep(cfg.backoff * 2 ** (attempt - 1))
            try:
                resp = client.post(cfg.endpoint, json=body, headers=headers)
            except httpx.TransportError as exc:
                # connect failures and read timeouts both mean "no answer in time"
                last = ProviderError("timeout", f"{type(exc).__name__}: {exc}")
                continue
            if resp.status_code != 200:
                last = ProviderError("http_status", f"HTTP {resp.status_code}")
                if _retryable(resp.status_code):
                    continue
                raise last
            try:
                content = resp.json()["choices"][0]["message"]["content"]
            except (ValueError, KeyError, IndexError, TypeError) as exc:
                raise ProviderError("malformed_response", f"unexpected response body: {exc}") from None
            if not isinstance(content, str):
                raise ProviderError("malformed_response", "message content is not text")
            return content
    raise ProviderError(last.kind, f"gave up after {cfg.max_retries + 1} attempts: {last}")


# -- mock -----------------------------------------------------------------------

def _variant_rng(cfg: ProviderConfig, reference: str, index: int) -> random.Random:
    key = f"{cfg.seed}|{cfg.in_dialect}|{cfg.out_dialect}|{index}|{reference}"
    return random.Random(int.from_bytes(hashlib.sha256(key.encode()).digest()[:8], "big"))


def mock_variant(ast, cfg: ProviderConfig, reference: str, index: int):
    """Return (typed AST, list of applied rule names) for variant ``index``."""
    rng = _variant_rng(cfg, reference, index)
    wanted = rng.choice([1, 1, 2, 2, 3])
    names = sorted(PRESERVING_RULES)
    rng.shuffle(names)
    applied = []
    for name in names:
        if len(applied) == wanted:
            break
        out = PRESERVING_RULES[name](ast, rng)
        if out is not None and out != ast:
            ast = out
            applied.append(name)
    if rng.random() < BREAK_PROBABILITY:
        out = BREAKING_RULES["off_by_one"](ast, rng)
        if out is not None:
            ast = out
            applied.append("off_by_one")
    return ast, applied


def mock_response(cfg: ProviderConfig, prompt: str) -> str:
    reference = extract_reference(prompt)
    try:
        ast = parse_source(reference, cfg.in_dialect)
    except Exception as exc:   # the mock can only rewrite code it understands
        raise ProviderError("malformed_response", f"mock cannot parse reference: {exc}") from None
    blocks = []
    for i in range(1, cfg.n_variants + 1):
        variant, _ = mock_variant(ast, cfg, reference, i)
        text = print_source(variant, cfg.out_dialect)
        blocks.append(f"```{cfg.out_dialect}\n{text}```")
    return "\n\n".join(blocks) + "\n"
