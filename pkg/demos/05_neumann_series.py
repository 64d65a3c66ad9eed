# %% [markdown]
# # Expanding the averaged resolvent in the disorder
#
# Above the free band the resolvent of H0 + lambda V is a convergent Neumann
# series when lambda is small. Each order is averaged on the same
# realizations as a direct solve, so their difference is nearly noise-free.

# %%
import math

from idslab import DisorderSpec, LatticeSpec, ModelSpec, convergence_check, dos_series_run

law = DisorderSpec("truncated_gaussian", sigma=0.5, cutoff_k=3, master_seed=5)
model = ModelSpec(LatticeSpec(1, 512), disorder=law, lam=0.1)
print(convergence_check(model, 3.0))

# %%
r = dos_series_run(model, 3.0, epsilon=1e-3, K=4, L_box=512, R=400)
for k, (t, se) in enumerate(zip(r.orders, r.order_stderr)):
    print(f"T_{k} = {t.real:+.6e} {t.imag:+.3e}i   se={se:.1e}")
print("direct:", r.direct_value)
for K in range(len(r.orders)):
    print(f"K={K}  |partial - direct| = {r.gap(K):.2e}")

# %% [markdown]
# The odd orders vanish on average for a symmetric law, so the leading
# correction is second order in lambda. Dividing the imaginary part by pi
# gives the smoothed density of states, which is tiny this far from the band.

# %%
print("Im/pi of partial sum:", r.partial_sums[-1].imag / math.pi)
