"""Prompt construction for the diversification request."""

from __future__ import annotations

import hashlib

LANGUAGE_NAMES = {"cm": "Cm", "gm": "Gm"}

INTRO = "The following code is a reference implementation of a function in {input}."
TASK = ("Create {number} substitute implementation(s) of the function{clause}, which are "
        "different but equivalent. It should be possible to directly replace the function "
        "with any substitute, and it should provide the same functionality.")
REMARKS = ("Do not output any other text apart from code. Do not create auxiliary or helper "
           "functions. Maintain the original function's signature.")


def build_prompt(reference_source: str, cfg) -> str:
    clause = ""
    if cfg.out_dialect != cfg.in_dialect:
        clause = f" in the {LANGUAGE_NAMES[cfg.out_dialect]} language"
    parts = [
        INTRO.format(input=LANGUAGE_NAMES[cfg.in_dialect]),
        reference_source.strip("\n"),
        TASK.format(number=cfg.n_variants, clause=clause),
        REMARKS,
    ]
    return "\n\n".join(parts) + "\n"


def extract_reference(prompt: str) -> str:
    """Recover the reference source embedded by build_prompt."""
    head, _, rest = prompt.partition("\n\n")
    code, marker, _ = rest.partition("\n\nCreate ")
    if not head.startswith(INTRO.split("{")[0]) or not marker:
        raise ValueError("prompt does not follow the diversification template")
    return code + "\n"


def prompt_hash(prompt: str) -> str:
    return hashlib.sha256(prompt.encode("utf-8")).hexdigest()
