"""Experiment harness: randomized TVD studies, structured setups and CGLMP."""

from __future__ import annotations

import logging
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import p1
from .qmath import Basis, JointDistribution, PureState, _mat, born_entangled, born_pm, complete_basis
from .sampling import INPUTS, LOCAL, SHARED, RngStream, as_generator, random_unitaries, random_states

logger = logging.getLogger(__name__)

PM = "pm"
ENT = "ent"
SCENARIOS = (PM, ENT)


class StatisticalFailure(RuntimeError):
    """A run produced no usable statistics (e.g. every trial was rejected)."""


@dataclass(frozen=True)
class EmpiricalDistribution:
    """Outcome counts of one setup; aborted runs are kept apart and excluded from ``probs``.

    ``counts`` has shape ``(d,)`` in the PM scenario and ``(d, d)`` in the
    entanglement scenario.
    """

    counts: np.ndarray
    n_abort: int = 0

    @property
    def n_out(self) -> int:
        return int(self.counts.sum())

    @property
    def n_ini(self) -> int:
        return self.n_out + int(self.n_abort)

    @property
    def accept_ratio(self) -> float:
        return self.n_out / self.n_ini if self.n_ini else float("nan")

    @property
    def probs(self) -> np.ndarray:
        if self.n_out == 0:
            raise StatisticalFailure("no accepted runs")
        return self.counts / self.n_out

    @classmethod
    def from_pm_counts(cls, counts: np.ndarray) -> EmpiricalDistribution:
        """From ``d + 1`` counts whose last entry counts aborts."""
        counts = np.asarray(counts, dtype=np.int64)
        return cls(counts[:-1].copy(), int(counts[-1]))

    @classmethod
    def from_ent_counts(cls, counts: np.ndarray) -> EmpiricalDistribution:
        """From ``d*d + 1`` row-major joint counts whose last entry counts aborts."""
        counts = np.asarray(counts, dtype=np.int64)
        d = math.isqrt(counts.shape[0] - 1)
        return cls(counts[:-1].reshape(d, d).copy(), int(counts[-1]))


def _probs_of(x) -> np.ndarray:
    if isinstance(x, EmpiricalDistribution):
        return x.probs
    if isinstance(x, JointDistribution):
        return x.probs
    return np.asarray(x, dtype=float)


def tvd(p, q) -> float:
    """Total variation distance ``0.5 * sum |p - q|`` over a common outcome space."""
    a, b = _probs_of(p), _probs_of(q)
    if a.shape != b.shape:
        raise ValueError(f"outcome spaces differ: {a.shape} vs {b.shape}")
    if a.size == 0:
        raise ValueError("empty distribution")
    return 0.5 * float(np.abs(a - b).sum())


def tvd_pm(empirical, quantum) -> float:
    if _probs_of(empirical).ndim != 1:
        raise ValueError("PM distributions are one-dimensional")
    return tvd(empirical, quantum)


def tvd_ent(empirical, quantum) -> float:
    if _probs_of(empirical).ndim != 2:
        raise ValueError("entanglement distributions are d x d")
    return tvd(empirical, quantum)


# --- protocol plugin point -------------------------------------------------

PMRunner = Callable[..., EmpiricalDistribution]
EntRunner = Callable[..., EmpiricalDistribution]


@dataclass(frozen=True)
class ProtocolHandle:
    """A simulation protocol usable by the harness.

    ``pm(state, meas, n_ini, shared_rng, local_rng, **options)`` and
    ``ent(meas_a, meas_b, n_ini, shared_rng, local_rng, **options)`` each
    return an :class:`EmpiricalDistribution`. Either may be ``None`` if the
    protocol does not support that scenario.
    """

    name: str
    pm: PMRunner | None = None
    ent: EntRunner | None = None

    def runner(self, scenario: str):
        fn = self.pm if scenario == PM else self.ent if scenario == ENT else None
        if fn is None:
            raise ValueError(f"protocol {self.name!r} does not support scenario {scenario!r}")
        return fn


def _p1_params(d: int, params: p1.P1Params | None, **overrides) -> p1.P1Params:
    if params is not None:
        return params
    return p1.P1Params(d=d, **{k: v for k, v in overrides.items() if v is not None})


def _p1_pm(state, meas, n_ini, shared_rng, local_rng, params=None):
    d = _mat(meas).shape[0]
    counts = p1.simulate_pm(state, meas, n_ini, _p1_params(d, params), shared_rng, local_rng)
    return EmpiricalDistribution.from_pm_counts(counts)


def _p1_ent(meas_a, meas_b, n_ini, shared_rng, local_rng, params=None):
    d = _mat(meas_b).shape[0]
    counts = p1.simulate_ent(meas_a, meas_b, n_ini, _p1_params(d, params), shared_rng, local_rng)
    return EmpiricalDistribution.from_ent_counts(counts)


PROTOCOLS: dict[str, ProtocolHandle] = {"P1": ProtocolHandle("P1", pm=_p1_pm, ent=_p1_ent)}


def register_protocol(handle: ProtocolHandle, *, replace: bool = False) -> None:
    if handle.name in PROTOCOLS and not replace:
        raise ValueError(f"protocol {handle.name!r} already registered")
    PROTOCOLS[handle.name] = handle


def get_protocol(protocol) -> ProtocolHandle:
    if isinstance(protocol, ProtocolHandle):
        return protocol
    try:
        return PROTOCOLS[protocol]
    except KeyError:
        raise KeyError(f"unknown protocol {protocol!r}; known: {sorted(PROTOCOLS)}") from None


# --- reports ---------------------------------------------------------------


@dataclass(frozen=True)
class SetupResult:
    index: int
    empirical: EmpiricalDistribution
    quantum: np.ndarray
    delta: float
    label: str = ""

    @property
    def n_ini(self) -> int:
        return self.empirical.n_ini

    @property
    def n_out(self) -> int:
        return self.empirical.n_out

    @property
    def accept_ratio(self) -> float:
        return self.empirical.accept_ratio


@dataclass(frozen=True)
class StudyReport:
    """Per-setup TVDs and their aggregate; flagged setups had no accepted run."""

    protocol: str
    scenario: str
    d: int
    seed: int
    setups: tuple[SetupResult, ...]
    flagged: tuple[int, ...] = ()
    extra: dict = field(default_factory=dict)

    @property
    def deltas(self) -> np.ndarray:
        return np.array([s.delta for s in self.setups])

    @property
    def mean_delta(self) -> float:
        return float(self.deltas.mean())

    @property
    def std_err(self) -> float:
        """``std_n / sqrt(n)`` over setups (sample std, ``ddof=1``); 0 for a single setup."""
        n = len(self.setups)
        return float(self.deltas.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0

    @property
    def n_ini(self) -> int:
        return sum(s.n_ini for s in self.setups)

    @property
    def n_out(self) -> int:
        return sum(s.n_out for s in self.setups)

    @property
    def accept_ratio(self) -> float:
        return self.n_out / self.n_ini if self.n_ini else float("nan")


def _quantum(scenario: str, inputs) -> np.ndarray:
    if scenario == PM:
        return born_pm(*inputs)
    return born_entangled(*inputs).probs


def _run_setups(handle: ProtocolHandle, scenario: str, setups: Sequence[tuple], n_ini: int,
                seed: int, shared_pool: bool, threads: int, options: dict,
                labels: Sequence[str] | None = None) -> tuple[list[SetupResult], list[int]]:
    runner = handle.runner(scenario)

    def one(i):
        inputs = setups[i]
        shared = RngStream(seed, (0 if shared_pool else i, SHARED))
        local = RngStream(seed, (i, LOCAL))
        emp = runner(*inputs, n_ini, shared, local, **options)
        return emp

    idx = range(len(setups))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            emps = list(pool.map(one, idx))
    else:
        emps = [one(i) for i in idx]

    results, flagged = [], []
    for i, emp in zip(idx, emps):
        if emp.n_out == 0:
            warnings.warn(f"setup {i}: no accepted trials out of {emp.n_ini}; excluded",
                          RuntimeWarning, stacklevel=3)
            flagged.append(i)
            continue
        q = _quantum(scenario, setups[i])
        results.append(SetupResult(index=i, empirical=emp, quantum=q, delta=tvd(emp, q),
                                   label=labels[i] if labels else ""))
    if not results:
        raise StatisticalFailure("every setup was rejected entirely")
    return results, flagged


def _check_counts(n: int, n_ini: int):
    if n < 1:
        raise ValueError(f"need at least one setup, got n={n}")
    if n_ini < 1:
        raise ValueError(f"need at least one trial per setup, got n_ini={n_ini}")


def random_inputs(scenario: str, d: int, n: int, seed: int) -> list[tuple]:
    """Haar-random setups, one independent input stream per setup index."""
    out = []
    for i in range(n):
        gen = RngStream(seed, (i, INPUTS)).generator()
        if scenario == PM:
            state = PureState(random_states(d, gen, 1)[0])
            out.append((state, Basis(random_unitaries(d, gen, 1)[0])))
        elif scenario == ENT:
            us = random_unitaries(d, gen, 2)
            out.append((Basis(us[0]), Basis(us[1])))
        else:
            raise ValueError(f"unknown scenario {scenario!r}")
    return out


def randomized_study(protocol, scenario: str, d: int, n: int, n_ini: int, seed: int = 0, *,
                     shared_pool: bool = False, threads: int = 1, **options) -> StudyReport:
    """Run ``protocol`` on ``n`` Haar-random setups with ``n_ini`` trials each.

    Extra keyword ``options`` (e.g. ``params=P1Params(...)``) go to the runner.
    With ``shared_pool`` every setup draws the same sequence of shared bases.
    """
    _check_counts(n, n_ini)
    handle = get_protocol(protocol)
    setups = random_inputs(scenario, d, n, seed)
    results, flagged = _run_setups(handle, scenario, setups, n_ini, seed, shared_pool,
                                   threads, options)
    return StudyReport(protocol=handle.name, scenario=scenario, d=d, seed=seed,
                       setups=tuple(results), flagged=tuple(flagged))


def noise_floor(report: StudyReport, seed: int = 0) -> tuple[float, float]:
    """TVD of the exact distribution against its own multinomial samples.

    Each setup is resampled at its own ``N_out``. Returns ``(mean, std_err)``;
    this is the TVD an exact simulator would report at the same sample sizes.
    """
    gen = RngStream(seed, (0x7F100,)).generator()
    vals = []
    for s in report.setups:
        q = np.asarray(s.quantum, dtype=float).ravel()
        q = np.clip(q, 0, None)
        sample = gen.multinomial(s.n_out, q / q.sum())
        vals.append(tvd(sample / s.n_out, q))
    vals = np.array(vals)
    se = vals.std(ddof=1) / math.sqrt(len(vals)) if len(vals) > 1 else 0.0
    return float(vals.mean()), float(se)


# --- phi-parameterized setup --------------------------------------------------


def phi_setup(psi: PureState, phi: float, perps: Sequence | None = None) -> Basis:
    """Qutrit measurement with ``P(b) = (cos^2 phi, sin^2 phi, 0)`` on ``psi``.

    ``perps`` are two vectors completing ``psi`` to an orthonormal basis; when
    omitted they come from :func:`complete_basis`.
    """
    v = psi.amplitudes if isinstance(psi, PureState) else np.asarray(psi, complex)
    if v.shape[0] != 3:
        raise ValueError(f"phi setup needs d=3, got d={v.shape[0]}")
    if perps is None:
        full = complete_basis(PureState(v)).matrix
        p2, p3 = full[:, 1], full[:, 2]
    else:
        p2, p3 = (np.asarray(p, complex) for p in perps)
    c, s = math.cos(phi), math.sin(phi)
    return Basis.from_vectors([c * v + s * p2, s * v - c * p2, p3])


def phi_grid(n_phi: int = 11) -> np.ndarray:
    return np.linspace(0.0, math.pi / 2, n_phi)


def phi_inputs(n_phi: int, seed: int) -> list[tuple[PureState, Basis]]:
    """A random ``psi`` (with random complement) per grid point."""
    out = []
    for i, phi in enumerate(phi_grid(n_phi)):
        u = random_unitaries(3, RngStream(seed, (i, INPUTS)), 1)[0]
        psi = PureState(u[:, 0])
        out.append((psi, phi_setup(psi, phi, (u[:, 1], u[:, 2]))))
    return out


def phi_study(protocol="P1", n_phi: int = 11, n_ini: int = 100_000, seed: int = 0, *,
              shared_pool: bool = False, threads: int = 1, **options) -> StudyReport:
    """PM study over ``phi`` in ``[0, pi/2]``; ``extra['phi']`` holds the grid."""
    _check_counts(n_phi, n_ini)
    handle = get_protocol(protocol)
    grid = phi_grid(n_phi)
    setups = phi_inputs(n_phi, seed)
    results, flagged = _run_setups(handle, PM, setups, n_ini, seed, shared_pool, threads,
                                   options, labels=[f"{p!r}" for p in grid])
    return StudyReport(protocol=handle.name, scenario=PM, d=3, seed=seed, setups=tuple(results),
                       flagged=tuple(flagged), extra={"phi": grid})


# --- CGLMP -------------------------------------------------------------------

CGLMP_QUANTUM = 2.8729340511723365
ALICE_PHASES = (0.0, 0.5)
BOB_PHASES = (0.25, -0.25)


class SetupCheckError(RuntimeError):
    """The CGLMP measurements fail to reproduce the known quantum value."""


def _phase_fourier(param: float, sign: int, d: int = 3) -> Basis:
    # column k: sum_j exp(2 pi i j (sign * k + param) / d) |j> / sqrt(d)
    j = np.arange(d)[:, None]
    k = np.arange(d)[None, :]
    return Basis(np.exp(2j * np.pi * j * (sign * k + param) / d) / np.sqrt(d))


def cglmp_value(joints: Sequence) -> float:
    """CGLMP expression for ``d = 3`` from four joints ordered ``(A1B1, A1B2, A2B1, A2B2)``.

    ``P(A_i = B_j + k)`` sums ``P(a, b)`` over ``a = b + k mod 3``.
    """
    ps = [_probs_of(j) for j in joints]
    if len(ps) != 4:
        raise ValueError(f"need four joint distributions, got {len(ps)}")
    if any(p.shape != (3, 3) for p in ps):
        raise ValueError("CGLMP value is defined here for d=3 joints only")
    p = {(0, 0): ps[0], (0, 1): ps[1], (1, 0): ps[2], (1, 1): ps[3]}
    b = np.arange(3)

    def eq(i, j, k):
        return float(p[(i, j)][(b + k) % 3, b].sum())

    return (eq(0, 0, 0) + eq(1, 0, -1) + eq(1, 1, 0) + eq(0, 1, 0)
            - eq(0, 0, -1) - eq(1, 0, 0) - eq(1, 1, -1) - eq(0, 1, 1))


CGLMP_PAIRS = ((0, 0), (0, 1), (1, 0), (1, 1))


def cglmp_setup(check: bool = True) -> tuple[Basis, Basis, Basis, Basis]:
    """Maximally violating qutrit measurements ``(A1, A2, B1, B2)``.

    Each is a phase shift followed by a discrete Fourier transform (inverse
    transform on Bob's side). The setup validates itself against the known
    quantum value before it is returned.
    """
    a1, a2 = (_phase_fourier(x, +1) for x in ALICE_PHASES)
    b1, b2 = (_phase_fourier(x, -1) for x in BOB_PHASES)
    if check:
        alice, bob = (a1, a2), (b1, b2)
        value = cglmp_value([born_entangled(alice[i], bob[j]) for i, j in CGLMP_PAIRS])
        if abs(value - 2.87) > 0.005:
            raise SetupCheckError(f"CGLMP self-check failed: I3={value:.4f}, expected 2.87")
    return a1, a2, b1, b2


def cglmp_study(protocol="P1", n_ini: int = 100_000, seed: int = 0, *, threads: int = 1,
                shared_pool: bool = False, **options) -> StudyReport:
    """Entanglement study on the four CGLMP setups.

    ``extra`` holds ``I3`` (simulated) and ``I3_quantum``.
    """
    _check_counts(4, n_ini)
    handle = get_protocol(protocol)
    a1, a2, b1, b2 = cglmp_setup()
    alice, bob = (a1, a2), (b1, b2)
    setups = [(alice[i], bob[j]) for i, j in CGLMP_PAIRS]
    labels = [f"A{i + 1}B{j + 1}" for i, j in CGLMP_PAIRS]
    results, flagged = _run_setups(handle, ENT, setups, n_ini, seed, shared_pool, threads,
                                   options, labels=labels)
    if flagged:
        raise StatisticalFailure(f"CGLMP setups {flagged} had no accepted trials")
    i3 = cglmp_value([r.empirical for r in results])
    i3_q = cglmp_value([r.quantum for r in results])
    return StudyReport(protocol=handle.name, scenario=ENT, d=3, seed=seed, setups=tuple(results),
                       extra={"I3": i3, "I3_quantum": i3_q})


def deterministic_cglmp_values() -> np.ndarray:
    """CGLMP value of every deterministic local strategy (3**4 of them)."""
    vals = []
    for a1 in range(3):
        for a2 in range(3):
            for b1 in range(3):
                for b2 in range(3):
                    alice, bob = (a1, a2), (b1, b2)
                    joints = []
                    for i, j in CGLMP_PAIRS:
                        m = np.zeros((3, 3))
                        m[alice[i], bob[j]] = 1.0
                        joints.append(m)
                    vals.append(cglmp_value(joints))
    return np.array(vals)


# --- cutoff sweep --------------------------------------------------------------

DEFAULT_CUTOFFS = (10 / 24, 11 / 24, 1 / 2, 13 / 24, 14 / 24)


@dataclass(frozen=True)
class SweepRow:
    cutoff: float
    report: StudyReport

    @property
    def delta(self) -> float:
        return self.report.mean_delta

    @property
    def std_err(self) -> float:
        return self.report.std_err

    @property
    def n_out(self) -> int:
        return self.report.n_out

    @property
    def n_ini(self) -> int:
        return self.report.n_ini


def delta_sweep(d: int, cutoffs: Sequence[float] = DEFAULT_CUTOFFS, n: int = 20,
                n_ini: int = 50_000, seed: int = 0, *, scenario: str = PM,
                threads: int = 1, scale: float | None = None,
                alpha: float | None = None) -> list[SweepRow]:
    """P1 studies over a list of cutoffs, all on the same random setups."""
    rows = []
    for c in cutoffs:
        params = p1.P1Params(d=d, cutoff=c, scale=scale, alpha=alpha)
        rep = randomized_study("P1", scenario, d, n, n_ini, seed, threads=threads, params=params)
        rows.append(SweepRow(cutoff=c, report=rep))
    return rows


# --- scale calibration ---------------------------------------------------------


def p1_weight_sampler(d: int, params: p1.P1Params | None = None, meas=None):
    """Weight sampler for :func:`~lhvsim.sampling.calibrate_scale`.

    Each draw pairs a fresh Haar shared basis with a fresh Haar measurement
    unless ``meas`` is fixed.
    """
    params = params or p1.P1Params(d=d)

    def sample(gen, n):
        lams = random_unitaries(d, gen, n)
        if meas is not None:
            return p1.p1_weights(lams, meas, params)
        bs = random_unitaries(d, gen, n)
        return p1.p1_weights(lams, bs, params)

    return sample
