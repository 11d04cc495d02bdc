"""Walkthrough: the validation funnel and static uniqueness over the corpus.

Run with:  python3 demos/02_funnel_and_uniqueness.py
"""

import numpy as np

from nversion.corpus import FIXTURES, load_fixture
from nversion.diversify import ProviderConfig, diversify
from nversion.metrics import COLUMNS, corpus_uniqueness
from nversion.validate import run_validation

# %% Ten mock variants per function; count survivors after each filter.
funnel = np.zeros((len(FIXTURES), 4), dtype=int)
survivors = {}
for i, name in enumerate(FIXTURES):
    fx = load_fixture(name)
    batch, _, _ = diversify(fx.cm_source, name, ProviderConfig(n_variants=10, seed=1))
    report = run_validation(fx.project(), batch)
    funnel[i] = list(report.funnel.values())
    survivors[name] = [v.function for v in report.equivalent()]

print("function     iso proj tests equiv")
for name, row in zip(FIXTURES, funnel):
    print(f"{name:10s} " + " ".join(f"{x:5d}" for x in row))
print("totals     " + " ".join(f"{x:5d}" for x in funnel.sum(axis=0)))

# %% Counts never grow down the funnel.
assert (np.diff(funnel, axis=1) <= 0).all()

# %% How many equivalent variants stay distinct once compiled?
# Source-level rewrites mostly collapse under optimization.
rep = corpus_uniqueness((n, load_fixture(n).reference, survivors[n]) for n in FIXTURES)
print("\n".join(f"{c:>3s}: {rep.totals[c]}" for c in COLUMNS), "of", rep.totals["total"])

# %% The hand-written Gm twin of each fixture is a different story.
pairs = corpus_uniqueness((n, load_fixture(n).reference, [load_fixture(n).gm_function])
                          for n in FIXTURES)
print("cm/gm pairs distinct at each column:", {c: pairs.totals[c] for c in COLUMNS})
