"""
Time-varying networks and geometric mixing
==========================================

A periodic schedule splits the edges of a random geometric graph over B
rounds, so no single round is connected but every window of B rounds is.
Products of the Metropolis matrices still approach the uniform averaging
matrix 1/N geometrically, and the certificate checks that decay against
the constants Gamma and gamma.
"""

# %%
import numpy as np

from drgfmd.netgraph import (random_schedule, transition_product, mixing_bound_check,
                             is_connected)

rng = np.random.default_rng(0)
schedule = random_schedule(n_nodes=5, radius=0.6, period=3, window=3, rng=rng)

for k, (graph, W) in enumerate(schedule.rounds):
    print(f"round {k}: edges {sorted(graph.edges)}, "
          f"connected alone: {is_connected(5, graph.edges)}, zeta {W.zeta:.3f}")

# %% Distance of P(t, 0) from the averaging matrix
for t in (0, 5, 20, 80, 200):
    P = transition_product(schedule, t, 0)
    print(f"t = {t:>3}: max |P_ij - 1/N| = {np.abs(P - 0.2).max():.2e}")

# %% The certificate over a horizon of 200 rounds
cert = mixing_bound_check(schedule, horizon=200)
print(f"Gamma = {cert.gamma_big:.6f}, gamma = {cert.gamma:.6f}, "
      f"max violation {cert.max_violation:.3e}, holds: {cert.holds}")
# The constants are conservative: gamma sits within 1e-3 of one, while the
# observed decay is much faster.
