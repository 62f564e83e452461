# %% [markdown]
# # A star graph: hub, leaves, and a two-state shadow
#
# From the hub the walk jumps to leaf ``i`` with probability ``a_i``; every
# leaf returns to the hub. Splitting hub from leaves lumps the chain exactly.

# %%
import numpy as np

from isogap import iso_profile, lump_two_state, make_star, spectral_report, star_weights

model = make_star(star_weights(0.3, 10))
print(np.asarray(model.kernel)[:3, :4].round(3))

# %% [markdown]
# The spectrum on mean-zero functions: eight zeros and one mode at ``a1 - 1``.

# %%
rep = spectral_report(model.kernel, model.pi)
print("rho =", rep.rho)
print("restricted spectrum:", np.sort(rep.restricted.real).round(12))

# %%
Q = lump_two_state(model, model.cuts[0])
print("lumped kernel (leaves first):\n", Q)
print("its eigenvalues:", np.linalg.eigvals(Q))

# %% [markdown]
# Isoperimetric profile: the leaves/hub cut alternates between flowing out
# completely and staying put, so ``k_n`` oscillates around 1.

# %%
prof = iso_profile(model.kernel, model.pi, 8)
for n, (lo, hi) in enumerate(zip(prof.k_inf, prof.k_sup), start=1):
    print(f"n={n}  k_inf={lo:.4f}  k_sup={hi:.4f}")
