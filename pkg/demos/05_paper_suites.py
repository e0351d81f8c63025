"""
Reproduction suites
===================

Runs the five simulation studies with a reduced trial count and prints the
quantities the figures are read for: rate slopes, orderings and terminal
accuracy. The command-line equivalent is ``drgfmd suite <id> --out DIR``.
"""

# %%
import sys
import tempfile

from drgfmd.lab import SUITES, run_paper_suite, rate_slope

trials = int(sys.argv[1]) if len(sys.argv) > 1 else 5
out = tempfile.mkdtemp(prefix="drgfmd-suites-")

for suite in SUITES:
    result = run_paper_suite(suite, out, n_trials=trials)
    for s in result.summaries:
        m = s.metric(s.primary)
        try:
            slope = f"{rate_slope(m, 1e2, 1e4)[0]:.3f}"
        except ValueError:
            slope = "n/a"
        print(f"{suite:>22} {s.tags['tag']:>12}: {s.primary} final "
              f"{m.values[-1]:.3e}, slope {slope}")

print("CSV and SVG files in", out)
