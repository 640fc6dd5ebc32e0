# %% [markdown]
# # P1 on a qubit
#
# For d = 2 the protocol reproduces the Born rule exactly: the distance to
# the quantum distribution is pure sampling noise and falls like N^-1/2.
# About half the trials are accepted.

# %%
import numpy as np

from lhvsim import P1Params, born_pm, random_basis, random_pure_state, simulate_pm
from lhvsim.sampling import RngStream
from lhvsim.scenarios import tvd

gen = RngStream(1, (0,)).generator()
psi, meas = random_pure_state(2, gen), random_basis(2, gen)
q = born_pm(psi, meas)
params = P1Params(2)
print(params)

# %% [markdown]
# A single run is noisy, so average the distance over 20 repetitions per size.

# %%
for n_ini in (2_000, 20_000, 200_000):
    deltas, acc = [], []
    for r in range(20):
        counts = simulate_pm(psi, meas, n_ini, params, RngStream(1, (n_ini, r, 0)), RngStream(1, (n_ini, r, 1)))
        deltas.append(tvd(counts[:2] / counts[:2].sum(), q))
        acc.append(counts[:2].sum() / n_ini)
    print(f"N_ini={n_ini:>7}  accepted={np.mean(acc):.3f}  mean delta={np.mean(deltas):.2e}")
