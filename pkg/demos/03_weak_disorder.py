# %% [markdown]
# # Switching the disorder off
#
# As lambda shrinks, N_lambda(E) should approach the free IDS N_0(E). We look
# at the deviation at a few energies for a geometric ladder of lambdas.

# %%
from idslab import DisorderSpec, LatticeSpec, ModelSpec, estimate_surface, n0_exact_1d
from idslab.analysis import weak_disorder_table

model = ModelSpec(LatticeSpec(1, 2000), disorder=DisorderSpec("uniform", -1, 1, master_seed=3))
lams = [0.0, 0.125, 0.25, 0.5, 1.0]
energies = [-1.5, 0.0, 1.0]
surf = estimate_surface(model, energies, lams, R=100)

# %%
for E in energies:
    t = weak_disorder_table(surf, E, n0_ref=float(n0_exact_1d(E)))
    print(f"E={E:+.1f} converges={t.converges}")
    for lam, dev, se in t.rows:
        print(f"   lambda={lam:5.3f}  |N - N0|={dev:.5f}  se={se:.5f}")

# %% [markdown]
# Near the lower band edge the deviation at lambda = 1 is clearly resolved
# and falls off fast. At E = 1 the verdict fails, but the culprit is the
# lambda = 0 row: a box of 2000 sites sits about 1/(3L) off the infinite
# volume N_0 there. Measuring against the box's own free staircase removes
# that offset.

# %%
t = weak_disorder_table(surf, 1.0)
print("against the lambda = 0 row:", t.converges, [round(r[1], 5) for r in t.rows])
