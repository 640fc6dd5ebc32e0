# %% [markdown]
# # Haar sampling and Born-rule distributions
#
# Random unitaries come from a QR decomposition of a complex Ginibre matrix
# with the phases of R's diagonal pushed back into Q.

# %%
import numpy as np

from lhvsim import born_entangled, born_pm, random_basis, random_pure_state, random_unitaries
from lhvsim.sampling import RngStream

us = random_unitaries(3, RngStream(0, (1,)), 5_000)
resid = np.abs(np.conj(np.swapaxes(us, 1, 2)) @ us - np.eye(3)).max()
print("max |U^H U - I| :", resid)

# %% [markdown]
# For Haar U in dimension d, E|U_ij|^2 = 1/d.

# %%
print("mean |U_00|^2   :", (np.abs(us[:, 0, 0]) ** 2).mean(), "vs", 1 / 3)

# %% [markdown]
# Born rule for a prepare-and-measure pair and for the maximally entangled state.

# %%
gen = RngStream(0, (2,)).generator()
psi, meas = random_pure_state(3, gen), random_basis(3, gen)
print("P(b|psi,B)  :", born_pm(psi, meas))

joint = born_entangled(random_basis(3, gen), random_basis(3, gen))
print("joint P(a,b):\n", joint.probs)
print("marginals   :", joint.marginal_a(), joint.marginal_b())
