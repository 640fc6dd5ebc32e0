"""Exact qubit reference protocol on the Bloch sphere, choice and rejection variants.

Bob's measurement is given by the Bloch vector ``y`` of outcome 0 (outcome 1
has ``-y``); Alice's state by ``x``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .p1 import ABORT
from .qmath import Basis, DimensionError, PureState, _vec
from .sampling import LOCAL, SHARED, as_generator

PAULI = np.array([
    [[0, 1], [1, 0]],
    [[0, -1j], [1j, 0]],
    [[1, 0], [0, -1]],
], dtype=complex)


class BlochVector(NamedTuple):
    x: float
    y: float
    z: float


def bloch_from_state(s: PureState) -> BlochVector:
    v = _vec(s)
    if v.shape[0] != 2:
        raise DimensionError(f"Bloch vectors need d=2, got d={v.shape[0]}")
    r = [float(np.real(np.vdot(v, p @ v))) for p in PAULI]
    return BlochVector(*r)


def state_from_bloch(r) -> PureState:
    """Pure qubit state with Bloch vector ``r`` (global phase: first amplitude real >= 0)."""
    x, y, z = np.asarray(r, dtype=float)
    n = np.sqrt(x * x + y * y + z * z)
    if abs(n - 1) > 1e-9:
        raise ValueError(f"Bloch vector must be unit length, got |r|={n}")
    theta = np.arccos(np.clip(z, -1.0, 1.0))
    phi = np.arctan2(y, x)
    return PureState([np.cos(theta / 2), np.exp(1j * phi) * np.sin(theta / 2)])


def basis_from_bloch(y) -> Basis:
    """Projective qubit measurement with outcome 0 along ``y`` and outcome 1 along ``-y``."""
    y = np.asarray(y, dtype=float)
    return Basis.from_vectors([state_from_bloch(y).amplitudes,
                               state_from_bloch(-y).amplitudes])


def random_bloch_vectors(rng, size: int) -> np.ndarray:
    """Uniform points on the unit sphere, shape ``(size, 3)``."""
    z = as_generator(rng).standard_normal((size, 3))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def _output(x, y, lam) -> np.ndarray:
    # flip lam towards x, then report the outcome whose vector lies on lam's side
    sign = np.where(lam @ x >= 0, 1.0, -1.0)
    return np.where(sign * (lam @ y) >= 0, 0, 1)


def prtq_choice_outcomes(x, y, lam0: np.ndarray, lam1: np.ndarray) -> np.ndarray:
    """Batch of choice-method runs; ``lam0``/``lam1`` have shape ``(N, 3)``.

    Bob keeps whichever shared vector is more aligned with ``y`` (ties go to
    ``lam0``), which makes the kept vector distributed as ``|lam . y|``.
    Keeping the less aligned one instead would not reproduce the Born rule,
    so that reading of the selection index is deliberately not used.
    """
    x, y = np.asarray(x, float), np.asarray(y, float)
    lam0, lam1 = np.atleast_2d(lam0), np.atleast_2d(lam1)
    pick_first = np.abs(lam0 @ y) >= np.abs(lam1 @ y)
    lam = np.where(pick_first[:, None], lam0, lam1)
    return _output(x, y, lam)


def prtq_choice_trial(x, y, lam0, lam1) -> int:
    return int(prtq_choice_outcomes(x, y, lam0, lam1)[0])


def prtq_rejection_outcomes(x, y, lam: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Batch of rejection-method runs: accept iff ``u <= |lam . y|``; ``ABORT`` otherwise."""
    x, y = np.asarray(x, float), np.asarray(y, float)
    lam = np.atleast_2d(lam)
    keep = np.abs(lam @ y) >= np.asarray(u)
    return np.where(keep, _output(x, y, lam), ABORT)


def prtq_rejection_trial(x, y, lam, u: float) -> int:
    return int(prtq_rejection_outcomes(x, y, lam, np.atleast_1d(u))[0])


@dataclass(frozen=True)
class EquivalenceReport:
    tvd: float
    choice: np.ndarray
    rejection: np.ndarray
    n: int
    acceptance: float


def _tvd(p, q) -> float:
    return 0.5 * float(np.abs(np.asarray(p) - np.asarray(q)).sum())


def prtq_equivalence_report(x, y, n: int, rng=0) -> EquivalenceReport:
    """Compare both variants at ``n`` accepted outcomes each."""
    root = rng if hasattr(rng, "child") else None
    g_choice = as_generator(root.child(SHARED, 0) if root else rng)
    g_rej = as_generator(root.child(SHARED, 1) if root else g_choice)
    g_u = as_generator(root.child(LOCAL) if root else g_choice)

    lam0 = random_bloch_vectors(g_choice, n)
    lam1 = random_bloch_vectors(g_choice, n)
    choice = np.bincount(prtq_choice_outcomes(x, y, lam0, lam1), minlength=2)

    rej = np.zeros(2, dtype=np.int64)
    tried = 0
    while rej.sum() < n:
        size = max(1024, 2 * (n - int(rej.sum())))
        out = prtq_rejection_outcomes(x, y, random_bloch_vectors(g_rej, size), g_u.random(size))
        acc = np.flatnonzero(out != ABORT)
        need = n - int(rej.sum())
        take = acc[:need]
        rej += np.bincount(out[take], minlength=2)
        tried += size if acc.size < need else int(take[-1]) + 1
    p_c, p_r = choice / n, rej / n
    return EquivalenceReport(tvd=_tvd(p_c, p_r), choice=p_c, rejection=p_r, n=n,
                             acceptance=n / tried)
