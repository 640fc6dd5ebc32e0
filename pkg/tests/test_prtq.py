import numpy as np
import pytest

from lhvsim import p1
from lhvsim.p1 import ABORT, P1Params
from lhvsim.prtq import (basis_from_bloch, bloch_from_state, prtq_choice_outcomes, prtq_choice_trial,
                         prtq_equivalence_report, prtq_rejection_outcomes, prtq_rejection_trial,
                         random_bloch_vectors, state_from_bloch)
from lhvsim.qmath import DimensionError, PureState, born_pm, overlap
from lhvsim.sampling import RngStream, random_pure_state
from lhvsim.scenarios import tvd


def test_bloch_examples():
    np.testing.assert_allclose(bloch_from_state(PureState([1, 0])), (0, 0, 1), atol=1e-15)
    np.testing.assert_allclose(bloch_from_state(PureState.from_unnormalized([1, 1])), (1, 0, 0),
                               atol=1e-15)
    with pytest.raises(DimensionError):
        bloch_from_state(PureState([1, 0, 0]))


def test_bloch_overlap_identity_and_round_trip():
    gen = np.random.default_rng(0)
    for _ in range(100):
        s, t = random_pure_state(2, gen), random_pure_state(2, gen)
        xs, xt = np.array(bloch_from_state(s)), np.array(bloch_from_state(t))
        assert overlap(s, t) == pytest.approx((1 + xs @ xt) / 2, abs=1e-10)
        back = state_from_bloch(xs)
        assert overlap(back, s) == pytest.approx(1.0, abs=1e-10)


def test_basis_from_bloch():
    y = random_bloch_vectors(1, 1)[0]
    b = basis_from_bloch(y)
    np.testing.assert_allclose(bloch_from_state(b[0]), y, atol=1e-12)
    np.testing.assert_allclose(bloch_from_state(b[1]), -y, atol=1e-12)


def _perp(y):
    v = np.cross(y, [1.0, 0, 0])
    if np.linalg.norm(v) < 1e-6:
        v = np.cross(y, [0, 1.0, 0])
    return v / np.linalg.norm(v)


def test_choice_deterministic_cases():
    y = random_bloch_vectors(2, 1)[0]
    assert prtq_choice_trial(y, y, y, _perp(y)) == 0
    assert prtq_choice_trial(-y, y, y, _perp(y)) == 1


def test_choice_picks_more_aligned_vector():
    # lam1 is the more aligned one; x sits on lam1's side so the outcome follows lam1
    y = np.array([0, 0, 1.0])
    lam0 = np.array([1.0, 0, 0.1]) / np.linalg.norm([1.0, 0, 0.1])
    lam1 = np.array([0, 0.1, -1.0]) / np.linalg.norm([0, 0.1, -1.0])
    x = np.array([0, 1.0, 0])
    assert prtq_choice_trial(x, y, lam0, lam1) == 1


def test_choice_matches_born():
    gen = RngStream(3, 0).generator()
    x, y = random_bloch_vectors(gen, 2)
    n = 100_000
    b = prtq_choice_outcomes(x, y, random_bloch_vectors(gen, n), random_bloch_vectors(gen, n))
    p0 = (1 + x @ y) / 2
    assert abs((b == 0).mean() - p0) < 4 * np.sqrt(p0 * (1 - p0) / n)


def test_rejection_cases():
    y = random_bloch_vectors(4, 1)[0]
    x = random_bloch_vectors(5, 1)[0]
    assert prtq_rejection_trial(x, y, _perp(y), 0.0) in (0, 1)  # H(0) = 1 at u = 0
    assert prtq_rejection_trial(x, y, _perp(y), 1e-12) == ABORT
    assert prtq_rejection_trial(x, y, y, 1 - 1e-9) != ABORT
    assert prtq_rejection_trial(x, y, -y, 1 - 1e-9) != ABORT


def test_rejection_acceptance_half():
    gen = RngStream(6, 0).generator()
    x, y = random_bloch_vectors(gen, 2)
    n = 100_000
    out = prtq_rejection_outcomes(x, y, random_bloch_vectors(gen, n), gen.random(n))
    assert abs((out != ABORT).mean() - 0.5) < 0.005


def test_equivalence_report():
    gen = RngStream(7, 0).generator()
    x, y = random_bloch_vectors(gen, 2)
    rep = prtq_equivalence_report(x, y, 100_000, RngStream(7, 1))
    assert rep.tvd < 0.01
    assert rep.choice.sum() == pytest.approx(1) and rep.rejection.sum() == pytest.approx(1)
    assert rep.acceptance == pytest.approx(0.5, abs=0.01)
    same = prtq_equivalence_report(y, y, 10_000, RngStream(7, 2))
    assert same.tvd >= 0
    assert same.choice[0] == pytest.approx(1.0) and same.rejection[0] == pytest.approx(1.0)


def test_p1_qubit_equals_prtq_rejection():
    gen = RngStream(8, 0).generator()
    for k in range(3):
        x, y = random_bloch_vectors(gen, 2)
        state, meas = state_from_bloch(x), basis_from_bloch(y)
        counts = p1.simulate_pm(state, meas, 200_000, P1Params(2), RngStream(8, (k, 1)), RngStream(8, (k, 2)))
        p_p1 = counts[:2] / counts[:2].sum()
        rep = prtq_equivalence_report(x, y, 100_000, RngStream(8, (k, 3)))
        assert tvd(p_p1, rep.rejection) < 0.01
        assert tvd(p_p1, born_pm(state, meas)) < 0.01
