"""Walkthrough: executed-opcode profiles and Jaccard similarity.

Run with:  python3 demos/03_dynamic_profiles.py
"""

import numpy as np

from nversion.corpus import FIXTURES, load_fixture
from nversion.diversify import ProviderConfig, diversify
from nversion.metrics import dynamic_report
from nversion.validate import run_validation


def variants(name, out_dialect):
    fx = load_fixture(name)
    cfg = ProviderConfig(n_variants=10, seed=1, out_dialect=out_dialect)
    batch, _, _ = diversify(fx.cm_source, name, cfg)
    return [v.function for v in run_validation(fx.project(), batch).equivalent()]


# %% One function up close: counts per opcode for the reference and two variants.
fx = load_fixture("quot8")
rep = dynamic_report(fx.reference, variants("quot8", "cm")[:2], fx.suite.inputs())
print(rep.csv())

# %% Corpus-wide: variants written in the other dialect drift further from the
# reference's instruction mix than same-dialect rewrites do.
means = {}
for out in ("cm", "gm"):
    js = []
    for name in FIXTURES:
        f = load_fixture(name)
        js += dynamic_report(f.reference, variants(name, out), f.suite.inputs()).jaccards
    means[out] = np.mean(js)
    print(f"{out}: {len(js)} variants, mean jaccard {means[out]:.3f}, min {min(js):.3f}")
