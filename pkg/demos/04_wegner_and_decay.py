# %% [markdown]
# # Eigenvalues near a fixed energy, and resolvent decay outside the band
#
# The probability that some eigenvalue falls within eta of E should scale
# like |Lambda| eta for small eta. Large eta saturates the probability at 1,
# which bends a log-log fit, so we print the raw numbers next to the slope.

# %%
import math

import numpy as np

from idslab import DisorderSpec, LatticeSpec, ModelSpec, combes_thomas_fit, wegner_probability
from idslab.analysis import fit_power_law

model = ModelSpec(LatticeSpec(1, 100), disorder=DisorderSpec("uniform", -1, 1, master_seed=11), lam=1.0)
etas = [1e-1, 3e-2, 1e-2, 3e-3, 1e-3]
w = wegner_probability(model, 0.0, etas, R=500)
for eta, p, se in zip(w.etas, w.prob, w.stderr):
    print(f"eta={eta:.0e}  P={p:.4f} +- {se:.4f}")
print("slope over all etas:", fit_power_law(np.column_stack([w.etas, w.prob])).exponent)
small = w.etas <= 1e-2
print("slope for eta <= 1e-2:", fit_power_law(np.column_stack([w.etas[small], w.prob[small]])).exponent)

# %% [markdown]
# Outside [-2d, 2d] the free resolvent decays exponentially. In one dimension
# the rate is arccosh(|E|/2), well above the bound d0/2.

# %%
for E in (2.01, 2.5, 3.0, 4.0):
    fit = combes_thomas_fit(1, E, 10, 512)
    print(f"E={E}: rate={fit.rate:.5f}  arccosh={math.acosh(E / 2):.5f}  bound={fit.d0 / 2:.4f}")
