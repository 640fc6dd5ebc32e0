# %% [markdown]
# # Two structured qutrit setups
#
# ## Rotation in a plane
# The measurement basis rotates by phi inside the plane spanned by psi and one
# perpendicular vector. Quantum mechanics predicts (cos^2 phi, sin^2 phi, 0).

# %%
import math

from lhvsim.scenarios import cglmp_study, deterministic_cglmp_values, phi_study

rep = phi_study("P1", n_phi=11, n_ini=50_000, seed=0)
for s, phi in zip(rep.setups, rep.extra["phi"]):
    p = s.empirical.probs
    print(f"phi={phi:.3f}  P=({p[0]:.3f}, {p[1]:.3f}, {p[2]:.3f})  cos^2={math.cos(phi) ** 2:.3f}")
print("mean delta:", rep.mean_delta)

# %% [markdown]
# ## CGLMP inequality
# Local models satisfy I3 <= 2. The maximally entangled qutrit reaches
# about 2.873 with the standard Fourier bases.

# %%
print("max over deterministic strategies:", deterministic_cglmp_values().max())
rep = cglmp_study("P1", n_ini=100_000, seed=0)
print("quantum I3:", rep.extra["I3_quantum"], " P1 I3:", rep.extra["I3"], " delta:", rep.mean_delta)
