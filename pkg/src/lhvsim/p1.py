"""The P1 protocol: weighted sampling of a shared random basis by rejection.

Bob accepts a shared basis ``lam`` with probability proportional to
``(t* - cutoff) ** alpha`` where ``t*`` is the weakest best-match overlap
between ``lam`` and his measurement. On acceptance Alice sends the index of the
shared vector closest to her input, and Bob outputs the outcome closest to
that shared vector.

Every trial function has a vectorized counterpart (``*_outcomes``) operating
on a stack of shared bases; the two are tested against each other.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .qmath import Basis, PureState, _mat, _vec, complete_basis, conjugate_basis, overlap_table
from .sampling import SHARED, LOCAL, accept, accept_batch, as_generator, random_unitaries

ABORT = -1
"""Outcome label for an aborted run (the ``e`` symbol)."""

DEFAULT_SCALES = {2: 0.5, 3: 0.7, 4: 0.7}


def default_alpha(d: int) -> float:
    return 2.0 ** (2 - d)


def default_scale(d: int) -> float:
    # only d <= 4 was calibrated; larger d reuses the d=4 value
    return DEFAULT_SCALES.get(d, DEFAULT_SCALES[4])


@dataclass(frozen=True)
class P1Params:
    """Protocol parameters; ``None`` fields take the per-dimension defaults."""

    d: int
    alpha: float | None = None
    scale: float | None = None
    cutoff: float = 0.5

    def __post_init__(self):
        if self.d < 2:
            raise ValueError(f"dimension must be >= 2, got {self.d}")
        if self.alpha is None:
            object.__setattr__(self, "alpha", default_alpha(self.d))
        if self.scale is None:
            object.__setattr__(self, "scale", default_scale(self.d))
        if not 0 < self.cutoff < 1:
            raise ValueError(f"cutoff must lie in (0, 1), got {self.cutoff}")
        if not self.scale > 0:
            raise ValueError(f"scale must be positive, got {self.scale}")
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")


@dataclass(frozen=True)
class MatchTable:
    """Best shared-basis match for each measurement outcome.

    ``matched[j]`` is the index ``i`` maximizing ``|<lam_i|b_j>|**2`` and
    ``values[j]`` that maximum. The starred pair is the outcome whose best
    match is weakest.
    """

    matched: np.ndarray
    values: np.ndarray
    i_star: int
    j_star: int
    t_star: float

    @property
    def similarity(self) -> float:
        """``2 t* - 1``; non-negative exactly when the event is informative."""
        return 2.0 * self.t_star - 1.0


@dataclass(frozen=True)
class TrialRecord:
    """One protocol run. On abort ``c1 = 0``, ``c2 = d`` and ``b = ABORT``."""

    c1: int
    c2: int
    a: int
    b: int
    d: int = field(repr=False)

    @property
    def aborted(self) -> bool:
        return self.c1 == 0


def match_table(lam: Basis, meas: Basis) -> MatchTable:
    t = overlap_table(lam, meas)
    matched = np.argmax(t, axis=0)
    values = t[matched, np.arange(t.shape[1])]
    j_star = int(np.argmin(values))
    return MatchTable(matched=matched, values=values, i_star=int(matched[j_star]),
                      j_star=j_star, t_star=float(values[j_star]))


def _weight_from_tstar(t_star, params: P1Params):
    gap = np.asarray(t_star, dtype=float) - params.cutoff
    return np.where(gap >= 0, np.maximum(gap, 0.0) ** params.alpha, 0.0)


def p1_weight(mt: MatchTable, params: P1Params) -> float:
    """``(t* - cutoff) ** alpha`` if every best match reaches the cutoff, else 0."""
    return float(_weight_from_tstar(mt.t_star, params))


def p1_weights(lams: np.ndarray, meas, params: P1Params) -> np.ndarray:
    """Weights for a stack of shared bases ``lams`` of shape ``(N, d, d)``."""
    t = overlap_table(lams, meas)
    return _weight_from_tstar(t.max(axis=-2).min(axis=-1), params)


def _respond(lam_m: np.ndarray, alice_vec: np.ndarray, meas_m: np.ndarray) -> tuple[int, int]:
    c2 = int(np.argmax(np.abs(lam_m.conj().T @ alice_vec) ** 2))
    b = int(np.argmax(np.abs(meas_m.conj().T @ lam_m[:, c2]) ** 2))
    return c2, b


def _draw_u(rng, u):
    if u is not None:
        return float(u)
    return float(as_generator(rng).random())


def run_pm_trial(state: PureState, meas: Basis, lam: Basis, params: P1Params,
                 rng=None, *, u: float | None = None) -> TrialRecord:
    """One prepare-and-measure run. Pass ``u`` to fix Bob's uniform draw."""
    d = meas.dim
    w = p1_weight(match_table(lam, meas), params)
    c1 = accept(w, params.scale, _draw_u(rng, u))
    if c1 == 0:
        return TrialRecord(c1=0, c2=d, a=ABORT, b=ABORT, d=d)
    c2, b = _respond(_mat(lam), _vec(state), _mat(meas))
    return TrialRecord(c1=1, c2=c2, a=ABORT, b=b, d=d)


def run_ent_trial(meas_a: Basis, meas_b: Basis, lam: Basis, params: P1Params,
                  rng=None, *, u: float | None = None, a: int | None = None) -> TrialRecord:
    """One entanglement-mode run; Bob works with the conjugated basis.

    ``a`` fixes Alice's die roll, ``u`` Bob's uniform draw.
    """
    d = meas_b.dim
    bt = _mat(meas_b).conj()
    w = p1_weight(match_table(lam, bt), params)
    gen = as_generator(rng) if (u is None or a is None) else None
    c1 = accept(w, params.scale, u if u is not None else gen.random())
    if c1 == 0:
        return TrialRecord(c1=0, c2=d, a=ABORT, b=ABORT, d=d)
    if a is None:
        a = int(gen.integers(d))
    c2, b = _respond(_mat(lam), _mat(meas_a)[:, a], bt)
    return TrialRecord(c1=1, c2=c2, a=int(a), b=b, d=d)


def _argmax_response(lams: np.ndarray, alice_vecs: np.ndarray, meas_m: np.ndarray) -> np.ndarray:
    # alice_vecs: (N, d) or (d,)
    amp = np.einsum("nki,nk->ni", lams.conj(), np.broadcast_to(alice_vecs, lams.shape[:2]))
    c2 = np.argmax(amp.real**2 + amp.imag**2, axis=1)
    chosen = np.take_along_axis(lams, c2[:, None, None], axis=2)[:, :, 0]
    amp_b = chosen @ meas_m.conj()
    return c2, np.argmax(amp_b.real**2 + amp_b.imag**2, axis=1)


def pm_outcomes(state, meas, lams: np.ndarray, params: P1Params,
                u: np.ndarray) -> tuple[np.ndarray, int]:
    """Outcomes of a batch of PM runs, ``ABORT`` where rejected.

    Returns the outcome array and the number of clamped accept ratios.
    """
    m = _mat(meas)
    keep, clamped = accept_batch(p1_weights(lams, m, params), params.scale, u)
    out = np.full(lams.shape[0], ABORT, dtype=np.int64)
    if keep.any():
        _, b = _argmax_response(lams[keep], _vec(state), m)
        out[keep] = b
    return out, clamped


def ent_outcomes(meas_a, meas_b, lams: np.ndarray, params: P1Params,
                 u: np.ndarray, die: np.ndarray) -> tuple[np.ndarray, np.ndarray, int]:
    """Batch of entanglement-mode runs; ``die`` holds Alice's rolls.

    Returns ``(a, b, clamped)`` with ``ABORT`` in both arrays where rejected.
    """
    ma = _mat(meas_a)
    bt = _mat(meas_b).conj()
    keep, clamped = accept_batch(p1_weights(lams, bt, params), params.scale, u)
    a = np.full(lams.shape[0], ABORT, dtype=np.int64)
    b = np.full(lams.shape[0], ABORT, dtype=np.int64)
    if keep.any():
        rolls = np.asarray(die)[keep]
        _, bk = _argmax_response(lams[keep], ma[:, rolls].T, bt)
        a[keep] = rolls
        b[keep] = bk
    return a, b, clamped


CHUNK = 1 << 15


def _chunks(n: int):
    start = 0
    while start < n:
        stop = min(n, start + CHUNK)
        yield stop - start
        start = stop


def simulate_pm(state, meas, n_ini: int, params: P1Params, shared_rng, local_rng) -> np.ndarray:
    """Run ``n_ini`` PM trials; returns counts of length ``d + 1`` (last = aborts).

    Shared bases come from ``shared_rng`` and Bob's uniforms from
    ``local_rng``, so two setups given the same shared stream see the same
    pool of shared bases.
    """
    d = params.d
    shared, local = as_generator(shared_rng), as_generator(local_rng)
    counts = np.zeros(d + 1, dtype=np.int64)
    for size in _chunks(n_ini):
        lams = random_unitaries(d, shared, size)
        u = local.random(size)
        b, _ = pm_outcomes(state, meas, lams, params, u)
        counts += np.bincount(np.where(b == ABORT, d, b), minlength=d + 1)
    return counts


def simulate_ent(meas_a, meas_b, n_ini: int, params: P1Params, shared_rng, local_rng) -> np.ndarray:
    """Run ``n_ini`` entanglement trials; returns ``(d*d + 1)`` counts, joint flattened row-major, last = aborts."""
    d = params.d
    shared, local = as_generator(shared_rng), as_generator(local_rng)
    counts = np.zeros(d * d + 1, dtype=np.int64)
    for size in _chunks(n_ini):
        lams = random_unitaries(d, shared, size)
        u = local.random(size)
        die = local.integers(d, size=size)
        a, b, _ = ent_outcomes(meas_a, meas_b, lams, params, u, die)
        flat = np.where(a == ABORT, d * d, a * d + b)
        counts += np.bincount(flat, minlength=d * d + 1)
    return counts


@dataclass(frozen=True)
class ChoiReport:
    conditioned: np.ndarray
    n_conditioned: int
    n_accepted: int
    n_ini: int


def choi_pm_from_ent(state: PureState, meas: Basis, params: P1Params, n_conditioned: int,
                     rng=0, max_trials: int = 50_000_000) -> ChoiReport:
    """PM statistics recovered from entanglement mode by conditioning on ``a = 0``.

    The entanglement protocol is driven with inputs ``(A, B^T)`` where ``A`` is
    ``state`` completed to a basis, so that ``P(a=0, b) = P(b | state, B) / d``.
    Runs continue until ``n_conditioned`` accepted trials with ``a = 0`` have
    been collected.
    """
    d = params.d
    meas_a = complete_basis(state)
    meas_bt = conjugate_basis(meas)
    root = rng if hasattr(rng, "child") else None
    shared = as_generator(root.child(SHARED) if root else rng)
    local = as_generator(root.child(LOCAL) if root else shared)
    counts = np.zeros(d, dtype=np.int64)
    got = accepted = total = 0
    while got < n_conditioned:
        if total >= max_trials:
            raise RuntimeError(f"only {got} conditioned samples after {total} trials")
        size = CHUNK
        lams = random_unitaries(d, shared, size)
        a, b, _ = ent_outcomes(meas_a, meas_bt, lams, params, local.random(size),
                               local.integers(d, size=size))
        hit = np.flatnonzero(a == 0)[: n_conditioned - got]
        # stop counting at the trial that completed the quota
        used = size if got + np.count_nonzero(a == 0) < n_conditioned else int(hit[-1]) + 1
        counts += np.bincount(b[hit], minlength=d)
        accepted += int(np.count_nonzero(a[:used] != ABORT))
        total += used
        got += hit.size
    return ChoiReport(conditioned=counts / counts.sum(), n_conditioned=got,
                      n_accepted=accepted, n_ini=total)
