"""Acceptance criteria at desk scale, one test per criterion.

Each test prints a ``[PASS]``/``[FAIL]`` line; the full list is repeated in
the pytest terminal summary.
"""

import math
import time

import numpy as np
import pytest
from scipy import stats

from lhvsim import p1, scenarios as sc
from lhvsim.p1 import P1Params, choi_pm_from_ent
from lhvsim.prtq import basis_from_bloch, prtq_equivalence_report, random_bloch_vectors, state_from_bloch
from lhvsim.qmath import born_entangled, born_pm
from lhvsim.sampling import RngStream, calibrate_scale, random_basis, random_pure_state, random_unitaries

SEED = 2024


@pytest.fixture(scope="module")
def studies():
    """Randomized studies shared by criteria 1, 2, 4 and 9."""
    out, timing = {}, {}
    for d, n, n_ini in ((2, 20, 40_000), (3, 20, 50_000), (4, 10, 150_000)):
        t0 = time.perf_counter()
        for scen in sc.SCENARIOS:
            out[d, scen] = sc.randomized_study("P1", scen, d, n, n_ini, SEED)
        timing[d] = time.perf_counter() - t0
    return out, timing


def _slope_fixed_input(reps: int = 40) -> tuple[float, list[float], list[float]]:
    gen = RngStream(SEED, (77,)).generator()
    state, meas = random_pure_state(2, gen), random_basis(2, gen)
    q = born_pm(state, meas)
    params = P1Params(2)
    n_outs, deltas = [], []
    for k, target in enumerate((1_000, 10_000, 100_000)):
        ds, ns = [], []
        for r in range(reps):
            counts = p1.simulate_pm(state, meas, 2 * target, params,
                                    RngStream(SEED, (78, k, r, 0)), RngStream(SEED, (78, k, r, 1)))
            emp = counts[:2]
            ns.append(emp.sum())
            ds.append(sc.tvd(emp / emp.sum(), q))
        n_outs.append(float(np.mean(ns)))
        deltas.append(float(np.mean(ds)))
    slope = np.polyfit(np.log(n_outs), np.log(deltas), 1)[0]
    return float(slope), n_outs, deltas


def test_c01_qubit_exactness(studies, criterion):
    reports, timing = studies
    rep = reports[2, "pm"]
    t0 = time.perf_counter()
    slope, n_outs, deltas = _slope_fixed_input()
    elapsed = timing[2] + time.perf_counter() - t0
    ok = rep.mean_delta < 0.01 and abs(slope + 0.5) <= 0.1 and elapsed < 120
    criterion("C1 d=2 exactness",
              ok, f"mean delta={rep.mean_delta:.2e} (<1e-2, N_out/setup~{rep.n_out / 20:.0f}); "
                  f"slope={slope:.3f} (-0.5+-0.1, deltas={['%.2e' % x for x in deltas]}); "
                  f"runtime {elapsed:.0f}s (<120s)")


def test_c02_qubit_acceptance(studies, criterion):
    reports, _ = studies
    ratios = {scen: reports[2, scen].accept_ratio for scen in sc.SCENARIOS}
    ok = all(abs(r - 0.5) <= 0.005 for r in ratios.values())
    criterion("C2 d=2 acceptance ratio", ok,
              ", ".join(f"{k}={v:.4f}" for k, v in ratios.items()) + " (0.500+-0.005)")


def test_c03_prtq_equivalence(criterion):
    gen = RngStream(SEED, (3,)).generator()
    worst_choice, worst_p1 = 0.0, 0.0
    for k in range(10):
        x, y = random_bloch_vectors(gen, 2)
        rep = prtq_equivalence_report(x, y, 100_000, RngStream(SEED, (3, k, 0)))
        counts = p1.simulate_pm(state_from_bloch(x), basis_from_bloch(y), 200_000, P1Params(2),
                                RngStream(SEED, (3, k, 1)), RngStream(SEED, (3, k, 2)))
        p_p1 = counts[:2] / counts[:2].sum()
        worst_choice = max(worst_choice, rep.tvd)
        worst_p1 = max(worst_p1, sc.tvd(p_p1, rep.rejection))
    ok = worst_choice < 0.01 and worst_p1 < 0.01
    criterion("C3 PRTQ equivalence", ok,
              f"max TVD choice-vs-rejection={worst_choice:.2e}, P1-vs-rejection={worst_p1:.2e} "
              f"(<1e-2, 10 inputs, N=1e5)")


def test_c04_qutrit_randomized(studies, criterion):
    reports, timing = studies
    parts, ok = [], timing[3] < 600
    for scen in sc.SCENARIOS:
        rep = reports[3, scen]
        floor, _ = sc.noise_floor(rep, SEED)
        ok &= 0.005 <= rep.mean_delta <= 0.03
        parts.append(f"{scen}: delta={rep.mean_delta:.2e}+-{rep.std_err:.1e} "
                     f"(floor {floor:.1e}, N_out/setup~{rep.n_out / 20:.0f})")
    criterion("C4 d=3 randomized", ok,
              "; ".join(parts) + f"; band [5e-3, 3e-2]; runtime {timing[3]:.0f}s (<600s)")


def test_c05_cutoff_sweep(criterion):
    rows = sc.delta_sweep(3, sc.DEFAULT_CUTOFFS, n=20, n_ini=60_000, seed=SEED)
    delta = {round(r.cutoff * 24): r.delta for r in rows}
    ok = (delta[12] < delta[11] < delta[10] and delta[12] < delta[13]
          and 0.005 <= delta[12] <= 0.03)
    criterion("C5 cutoff sweep d=3", ok,
              ", ".join(f"{k}/24: {v:.2e}" for k, v in sorted(delta.items())))


def test_c06_cglmp(criterion):
    a1, a2, b1, b2 = sc.cglmp_setup()
    analytic = sc.cglmp_value([born_entangled(x, y) for x, y in ((a1, b1), (a1, b2), (a2, b1), (a2, b2))])
    rep = sc.cglmp_study("P1", n_ini=150_000, seed=SEED)
    classical = sc.deterministic_cglmp_values().max()
    i3 = rep.extra["I3"]
    ok = (abs(analytic - 2.87) <= 0.005 and 2.85 <= i3 <= 3.10
          and 0.008 <= rep.mean_delta <= 0.025 and classical <= 2 + 1e-12)
    criterion("C6 CGLMP", ok,
              f"analytic I3={analytic:.4f} (2.87+-0.005); simulated I3={i3:.3f} ([2.85,3.10]); "
              f"delta={rep.mean_delta:.2e} ([8e-3,2.5e-2]); max deterministic I3={classical:.3f} (<=2)")


def test_c07_phi_setup(criterion):
    rep = sc.phi_study("P1", n_phi=11, n_ini=100_000, seed=SEED)
    phis = rep.extra["phi"]
    dev = max(abs(s.empirical.probs[0] - math.cos(phis[s.index]) ** 2) for s in rep.setups)
    p3 = max(s.empirical.probs[2] for s in rep.setups)
    ok = len(rep.setups) == 11 and dev <= 0.05 and p3 <= 0.03 and 0.008 <= rep.mean_delta <= 0.03
    criterion("C7 phi setup", ok,
              f"max |P(b=1)-cos^2| = {dev:.3f} (<=0.05); max P(b=3) = {p3:.3f} (<=0.03); "
              f"mean delta={rep.mean_delta:.2e} ([8e-3,3e-2])")


def test_c08_scale_calibration(criterion):
    parts, ok = [], True
    for d, n in ((2, 1_000_000), (3, 1_000_000), (4, 2_000_000)):
        rep = calibrate_scale(sc.p1_weight_sampler(d), p1.default_scale(d), 10.0, n=n,
                              rng=RngStream(SEED, (8, d)))
        ok &= abs(rep.ratio / 10 - 1) <= 0.05
        parts.append(f"d={d}: ratio={rep.ratio:.3f}+-{rep.ratio_stderr:.3f} "
                     f"(base {rep.base_rate:.4f}, clamped {rep.clamp_fraction:.1e})")
    criterion("C8 M_d calibration", ok, "; ".join(parts) + " (10 +- 5%)")


def test_c09_ququart_and_trend(studies, criterion):
    reports, _ = studies
    parts, ok = [], True
    for scen in sc.SCENARIOS:
        d4 = reports[4, scen].mean_delta
        trend = [reports[d, scen].mean_delta for d in (2, 3, 4)]
        ok &= 0.01 <= d4 <= 0.05 and trend[0] < trend[1] < trend[2]
        parts.append(f"{scen}: delta(d=4)={d4:.2e} ([1e-2,5e-2]); "
                     f"trend d=2,3,4: {', '.join('%.2e' % t for t in trend)}")
    criterion("C9 d=4 randomized + monotone trend", ok, "; ".join(parts))


def test_c10_choi_consistency(criterion):
    parts, ok = [], True
    for d in (2, 3):
        gen = RngStream(SEED, (10, d)).generator()
        state, meas = random_pure_state(d, gen), random_basis(d, gen)
        cond = choi_pm_from_ent(state, meas, P1Params(d), 10_000, RngStream(SEED, (10, d, 1)))
        n_ini = 20_000 if d == 2 else 50_000  # ~1e4 accepted
        counts = p1.simulate_pm(state, meas, n_ini, P1Params(d), RngStream(SEED, (10, d, 2)),
                                RngStream(SEED, (10, d, 3)))
        direct = counts[:d] / counts[:d].sum()
        dist = sc.tvd(cond.conditioned, direct)
        ok &= dist < 0.04
        parts.append(f"d={d}: TVD={dist:.3e} (conditioned n={cond.n_conditioned}, direct n={counts[:d].sum()})")
    criterion("C10 Choi consistency", ok, "; ".join(parts) + " (<0.04)")


def test_c11_haar_sampler(criterion):
    worst, moments = 0.0, []
    ok = True
    for d in (2, 3, 4):
        us = random_unitaries(d, RngStream(SEED, (11, d)), 10_000)
        resid = np.abs(np.conj(np.swapaxes(us, 1, 2)) @ us - np.eye(d)).max(axis=(1, 2))
        worst = max(worst, float(resid.max()))
        x = np.abs(us[:, 0, 0]) ** 2
        z = (x.mean() - 1 / d) / (x.std(ddof=1) / math.sqrt(x.size))
        ok &= abs(z) <= 3
        moments.append(f"d={d}: z={z:+.2f}")
    us2 = random_unitaries(2, RngStream(SEED, (11, 0)), 10_000)
    pval = stats.kstest(np.abs(us2[:, 0, 0]) ** 2, "uniform").pvalue
    ok &= worst < 1e-10 and pval > 0.01
    criterion("C11 Haar sampler", ok,
              f"max unitarity residual={worst:.1e} (<1e-10); E|U00|^2 {', '.join(moments)} (|z|<=3); "
              f"KS p={pval:.3f} (>0.01)")
