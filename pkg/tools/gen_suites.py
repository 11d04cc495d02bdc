"""Regenerate the frozen fixture test suites from the Cm references.

Run from the repository root:  python3 tools/gen_suites.py
The output is deterministic; tests check that the committed files match.
"""

from pathlib import Path

from nversion.corpus import FIXTURES, _compiled, generate_suite, param_signedness

DATA = Path(__file__).resolve().parents[1] / "src" / "nversion" / "corpus" / "data"

for name in FIXTURES:
    suite = generate_suite(name, _compiled(name, "cm"), param_signedness(name))
    (DATA / f"{name}.suite.json").write_text(suite.dumps(), encoding="utf-8")
    print(f"{name}: {len(suite.cases)} cases")
