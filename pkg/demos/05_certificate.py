# %% [markdown]
# # Certifying a spectral gap from cut flows alone
#
# If the smallest flow stays above ``eps`` for long enough, the radius is at
# most ``r0(eps)``. The required horizon grows as ``eps`` shrinks.

# %%
from isogap import gap_certificate, iso_profile, make_star, spectral_report, star_weights
from isogap.bounds import certificate_horizon, certificate_radius

for eps in (0.99, 0.5, 1 / 3, 0.1):
    print(f"eps={eps:.3f}  horizon={certificate_horizon(eps):4d}  r0={certificate_radius(eps):.6f}")

# %%
model = make_star(star_weights(0.3, 10))
cert = gap_certificate(iso_profile(model.kernel, model.pi, 50))
print(cert.to_dict())
print("true rho:", spectral_report(model.kernel, model.pi).rho)
