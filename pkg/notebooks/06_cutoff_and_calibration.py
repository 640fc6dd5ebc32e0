# %% [markdown]
# # Cutoff sweep and scale calibration
#
# The distance is smallest near the default cutoff of 1/2 and grows on both
# sides.

# %%
from lhvsim.p1 import default_scale
from lhvsim.sampling import calibrate_scale
from lhvsim.scenarios import DEFAULT_CUTOFFS, delta_sweep, p1_weight_sampler

for row in delta_sweep(3, DEFAULT_CUTOFFS, n=10, n_ini=30_000, seed=0):
    print(f"cutoff={row.cutoff * 24:.0f}/24  delta={row.delta:.4f}  acceptance={row.report.accept_ratio:.3f}")

# %% [markdown]
# Each default scale M_d was chosen so that shrinking it by a factor of ten
# raises the acceptance rate tenfold. That means the ratio w/M almost never
# exceeds one, so clamping it rarely matters.

# %%
for d in (2, 3, 4):
    rep = calibrate_scale(p1_weight_sampler(d), default_scale(d), 10.0, n=1_000_000, rng=d)
    print(f"d={d}  M={default_scale(d)}  ratio={rep.ratio:.2f} +- {rep.ratio_stderr:.2f}  "
          f"clamped={rep.clamp_fraction:.1e}")
