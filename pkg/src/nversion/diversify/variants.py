"""Splitting provider responses into candidates and persisting batches."""

from __future__ import annotations

import json
import re
from pathlib import Path

from ..validate import ValidationReport, VariantSource

_FENCE = re.compile(r"^```[ \t]*([A-Za-z0-9_+-]*)[ \t]*\n(.*?)^```[ \t]*$", re.M | re.S)
_CM_HEADER = re.compile(r"^\s*(?:(?:static|inline|const)\s+)*[A-Za-z_]\w*\s+[A-Za-z_]\w*\s*\(", re.M)
_GM_HEADER = re.compile(r"^\s*func\s+[A-Za-z_]\w*\s*\(", re.M)


def _headers(text: str, dialect: str) -> int:
    pat = _GM_HEADER if dialect == "gm" else _CM_HEADER
    return sum(1 for m in pat.finditer(text)
               if not m.group().strip().startswith(("return", "if", "while", "for", "else")))


def _split_paragraphs(raw: str, dialect: str):
    pat = _GM_HEADER if dialect == "gm" else _CM_HEADER
    out = []
    current = None
    for para in re.split(r"\n[ \t]*\n", raw):
        if not para.strip():
            continue
        if pat.match(para) and (current is None or current.count("{") <= current.count("}")):
            current = para
            out.append(current)
        elif current is not None and current.count("{") > current.count("}"):
            current += "\n\n" + para
            out[-1] = current
        # anything else is prose
    return [p.strip("\n") + "\n" for p in out]


def parse_variants(raw: str, expected_name: str, n: int, dialect: str, provenance=None):
    """Extract up to ``n`` candidates from a provider response."""
    blocks = [m.group(2) for m in _FENCE.finditer(raw)]
    if not blocks:
        blocks = _split_paragraphs(raw, dialect)
    out = []
    for i, text in enumerate(blocks[:n], start=1):
        text = text if text.endswith("\n") else text + "\n"
        v = VariantSource(i, text, dialect, dict(provenance or {}))
        count = _headers(text, dialect)
        if count != 1:
            v.premarked = (f"not a single function definition ({count} found); "
                           f"expected one definition of {expected_name}")
        out.append(v)
    return out


def write_batch(root, function: str, variants, report: ValidationReport = None, config=None,
                provenance=None) -> Path:
    """Persist ``variants/<function>/<k>.<ext>`` and ``batch.json``."""
    d = Path(root) / "variants" / function
    d.mkdir(parents=True, exist_ok=True)
    for old in d.glob("*"):
        if old.is_file() and old.stem.isdigit():
            old.unlink()
    status = {}
    if report is not None:
        status = {i: rs for i, rs in report.variants}
    entries = []
    for v in variants:
        (d / f"{v.index}.{v.dialect}").write_text(v.source_text, encoding="utf-8")
        results = status.get(v.index, v.status)
        entries.append({
            "index": v.index,
            "file": f"{v.index}.{v.dialect}",
            "dialect": v.dialect,
            "provenance": v.provenance,
            "filters": [r.to_json() for r in results],
        })
    doc = {
        "function": function,
        "config": config or {},
        "provenance": provenance or {},
        "variants": entries,
        "funnel": report.funnel if report is not None else None,
    }
    path = d / "batch.json"
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def read_batch(root, function: str):
    """Load a persisted batch: (batch document, list of VariantSource)."""
    d = Path(root) / "variants" / function
    doc = json.loads((d / "batch.json").read_text(encoding="utf-8"))
    out = []
    for e in doc["variants"]:
        text = (d / e["file"]).read_text(encoding="utf-8")
        out.append(VariantSource(e["index"], text, e["dialect"], e.get("provenance", {})))
    return doc, out
