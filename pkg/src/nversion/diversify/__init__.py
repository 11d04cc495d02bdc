"""Diversification: prompt construction, providers and response parsing."""

from .prompt import LANGUAGE_NAMES, build_prompt, prompt_hash
from .providers import ProviderConfig, mock_variant, request_variants
from .variants import parse_variants, read_batch, write_batch


def diversify(reference_source: str, function_name: str, cfg: ProviderConfig, transport=None):
    """build_prompt + request_variants + parse_variants in one call."""
    prompt = build_prompt(reference_source, cfg)
    raw = request_variants(cfg, prompt, transport=transport)
    prov = {"provider": cfg.kind,
            "model_or_seed": cfg.seed if cfg.kind == "mock" else cfg.model,
            "prompt_hash": prompt_hash(prompt)}
    return parse_variants(raw, function_name, cfg.n_variants, cfg.out_dialect, prov), raw, prompt


__all__ = [
    "LANGUAGE_NAMES", "ProviderConfig", "build_prompt", "diversify", "mock_variant",
    "parse_variants", "prompt_hash", "read_batch", "request_variants", "write_batch",
]
