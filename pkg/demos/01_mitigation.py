"""Walkthrough: a miscompiled function, single version vs. N versions.

Run with:  python3 demos/01_mitigation.py
"""

import tempfile
from pathlib import Path

from nversion.compiler import compile_mir
from nversion.corpus import WITNESSES, load_fixture
from nversion.demo import demo_mitigate
from nversion.execute import eval_mir, run_bytecode

# %% The witness for B2 is b2_mul3 at level 2.  The reference says 3 ...
name, level, inputs, n = WITNESSES["B2"]
ref = load_fixture(name).reference
print(name, inputs, "->", eval_mir(ref, list(inputs)))

# ... but the buggy optimizer quietly returns something else, with no diagnostic.
res = compile_mir(ref, level, "B2")
print("diagnostics:", res.diagnostics)
print("single version:", run_bytecode(res.unit, inputs)[0])

# %% Same thing through the whole pipeline: diversify, validate, harness.
# The bug only hits version 1, so the wrapper sees a disagreement and traps.
with tempfile.TemporaryDirectory() as tmp:
    for bug in sorted(WITNESSES):
        r = demo_mitigate(bug, Path(tmp) / bug)
        print(f"{bug}: N={r.n_versions:2d}  baseline {r.baseline}  hardened {r.hardened} "
              f"[{r.hardened.detail}]  mitigated={r.mitigated}")
    # the bundle stays on disk for `nv run`
    print(sorted(p.name for p in (Path(tmp) / "B3" / "bundle" / "b3_trunc").iterdir()))

# %% If the bug hit every version the wrapper would have nothing to compare
# against; the result reports how many variants would have been affected.
r = demo_mitigate("B1")
print("would be affected if everywhere:", r.affected_if_everywhere, "of", r.n_versions - 1)
