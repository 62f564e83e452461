# %% [markdown]
# # Deterministic rotation on a prime cycle
#
# After ``p`` steps every state is back where it started, so every cut has
# zero flow at ``n = p`` while earlier flows stay large.

# %%
from isogap import gap_certificate, iso_profile, make_cycle, spectral_report

model = make_cycle(7)
prof = iso_profile(model.kernel, model.pi, 7)
print(prof.to_csv())

# %%
cert = gap_certificate(prof)
print("certificate found:", cert.m_nonempty, " horizon too short:", cert.insufficient_horizon)
print("eigenvalue moduli:", abs(spectral_report(model.kernel, model.pi).eigenvalues).round(12))

# %% [markdown]
# Adding a holding probability breaks the periodicity and opens a gap.

# %%
lazy = make_cycle(7, lazy=True)
print("lazy rho:", spectral_report(lazy.kernel, lazy.pi).rho)
