# %% [markdown]
# # The qubit reference protocol
#
# The reference protocol has two equivalent forms. One picks the better
# aligned of two shared Bloch vectors. The other accepts a single vector with
# probability |lambda . y|. Both reproduce (1 + x.y)/2, and so does P1 on a qubit.

# %%
import numpy as np

from lhvsim import P1Params, simulate_pm
from lhvsim.prtq import basis_from_bloch, prtq_equivalence_report, random_bloch_vectors, state_from_bloch
from lhvsim.sampling import RngStream
from lhvsim.scenarios import tvd

x, y = random_bloch_vectors(np.random.default_rng(3), 2)
rep = prtq_equivalence_report(x, y, 100_000, RngStream(3, (0,)))
print("quantum   :", (1 + x @ y) / 2)
print("choice    :", rep.choice)
print("rejection :", rep.rejection, "acceptance", rep.acceptance)
print("TVD       :", rep.tvd)

# %%
counts = simulate_pm(state_from_bloch(x), basis_from_bloch(y), 200_000, P1Params(2),
                     RngStream(3, (1,)), RngStream(3, (2,)))
print("P1        :", counts[:2] / counts[:2].sum())
print("TVD(P1, rejection):", tvd(counts[:2] / counts[:2].sum(), rep.rejection))
