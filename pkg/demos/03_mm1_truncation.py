# %% [markdown]
# # Queue length of a discrete M/M/1 chain
#
# Up with probability ``1 - p``, down with ``p``. On the infinite state space
# the radius on mean-zero functions is ``2 sqrt(p (1 - p))``; finite
# truncations approach it from below.

# %%
import math

from isogap import make_mm1, spectral_report
from isogap.models import mm1_tail_limit

p = 0.7
target = 2 * math.sqrt(p * (1 - p))
for N in (75, 150, 300, 600):
    rho = spectral_report(*make_mm1(p, N)[:2]).rho
    print(f"N={N:4d}  rho={rho:.7f}  gap to limit={target - rho:.2e}")

# %% [markdown]
# Far up the tail the boundary is invisible, and the flow out of a tail set
# matches a free walk started from the stationary tail profile.

# %%
model = make_mm1(p, 200)
from isogap import k_n_of_set

A = model.cuts[40]
for n in (1, 4, 10):
    print(n, k_n_of_set(model.kernel, model.pi, A, n) * A.complement_mass, mm1_tail_limit(p, n))
