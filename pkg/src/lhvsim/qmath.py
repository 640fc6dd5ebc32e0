"""Small dense linear algebra and Born-rule oracles for rank-1 projective measurements.

States and projectors are kept as unit vectors. A basis is stored as a
``d x d`` complex matrix whose *columns* are the basis vectors, so a stack of
bases is simply an array of shape ``(..., d, d)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

NORM_TOL = 1e-9
ORTHO_TOL = 1e-9
PROB_SUM_TOL = 1e-8


class DimensionError(ValueError):
    """Raised when objects of incompatible dimension are combined."""


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class PureState:
    """Unit vector of ``d >= 2`` complex amplitudes."""

    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.ndim != 1:
            raise ValueError(f"amplitudes must be 1-D, got shape {amps.shape}")
        if amps.shape[0] < 2:
            raise DimensionError(f"dimension must be >= 2, got {amps.shape[0]}")
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"state is not normalized (norm={norm!r})")
        object.__setattr__(self, "amplitudes", _readonly(amps))

    @classmethod
    def from_unnormalized(cls, amplitudes) -> PureState:
        amps = np.asarray(amplitudes, dtype=complex)
        return cls(amps / np.linalg.norm(amps))

    @property
    def dim(self) -> int:
        return self.amplitudes.shape[0]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.amplitudes, dtype=dtype)

    def __repr__(self):
        return f"PureState({np.array2string(self.amplitudes, precision=4)})"


@dataclass(frozen=True, eq=False)
class Basis:
    """Ordered orthonormal basis; column ``k`` of ``matrix`` is the k-th vector.

    Doubles as a projective measurement (outcome ``k`` is the projector onto
    column ``k``) and as the shared random basis of the protocols.
    """

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"basis matrix must be square, got shape {m.shape}")
        if m.shape[0] < 2:
            raise DimensionError(f"dimension must be >= 2, got {m.shape[0]}")
        gram = m.conj().T @ m
        err = np.max(np.abs(gram - np.eye(m.shape[0])))
        if err > ORTHO_TOL:
            raise ValueError(f"vectors are not orthonormal (max Gram error {err:.3g})")
        object.__setattr__(self, "matrix", _readonly(m))

    @classmethod
    def from_vectors(cls, vectors) -> Basis:
        cols = [np.asarray(v, dtype=complex) for v in vectors]
        return cls(np.stack(cols, axis=1))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def vectors(self) -> tuple[PureState, ...]:
        return tuple(self[k] for k in range(self.dim))

    def __len__(self):
        return self.dim

    def __getitem__(self, k: int) -> PureState:
        return PureState(self.matrix[:, k])

    def __iter__(self):
        return iter(self.vectors)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.matrix, dtype=dtype)

    def __repr__(self):
        return f"Basis(d={self.dim})"


@dataclass(frozen=True, eq=False)
class JointDistribution:
    """Joint outcome probabilities ``probs[a, b]`` of a two-party measurement."""

    probs: np.ndarray

    def __post_init__(self):
        p = np.array(self.probs, dtype=float, copy=True)
        if p.ndim != 2 or p.shape[0] != p.shape[1]:
            raise ValueError(f"joint distribution must be d x d, got {p.shape}")
        if np.any(p < -1e-15):
            raise ValueError("negative probability")
        if abs(p.sum() - 1.0) > 1e-12:
            raise ValueError(f"probabilities sum to {p.sum()!r}")
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    @property
    def dim(self) -> int:
        return self.probs.shape[0]

    def marginal_a(self) -> np.ndarray:
        return self.probs.sum(axis=1)

    def marginal_b(self) -> np.ndarray:
        return self.probs.sum(axis=0)


def _vec(x) -> np.ndarray:
    if isinstance(x, PureState):
        return x.amplitudes
    return np.asarray(x, dtype=complex)


def _mat(x) -> np.ndarray:
    if isinstance(x, Basis):
        return x.matrix
    return np.asarray(x, dtype=complex)


def _check_dims(*dims: int):
    if len(set(dims)) != 1:
        raise DimensionError(f"dimension mismatch: {dims}")


def overlap(u: PureState, v: PureState) -> float:
    """Transition probability ``|<u|v>|**2``."""
    a, b = _vec(u), _vec(v)
    _check_dims(a.shape[-1], b.shape[-1])
    return float(abs(np.vdot(a, b)) ** 2)


def overlap_table(lam, meas) -> np.ndarray:
    """All pairwise overlaps ``T[..., i, j] = |<lam_i|meas_j>|**2``.

    Both arguments are bases (or stacks of bases) in column convention. Rows
    index ``lam``, columns index ``meas``; every row and column sums to one.
    """
    lm, mm = _mat(lam), _mat(meas)
    _check_dims(lm.shape[-1], mm.shape[-1])
    amp = np.swapaxes(lm, -1, -2).conj() @ mm
    return amp.real**2 + amp.imag**2


def born_pm(state: PureState, meas: Basis) -> np.ndarray:
    """Outcome probabilities of measuring ``state`` in ``meas``."""
    v, m = _vec(state), _mat(meas)
    _check_dims(v.shape[-1], m.shape[-1])
    amp = m.conj().T @ v
    return amp.real**2 + amp.imag**2


def conjugate_basis(meas: Basis) -> Basis:
    """Basis of the transposed projectors, i.e. entrywise complex conjugates."""
    return Basis(_mat(meas).conj())


def born_entangled(meas_a: Basis, meas_b: Basis) -> JointDistribution:
    """Joint statistics of local measurements on the maximally entangled state.

    ``P(a, b) = Tr[A_a B_b^T] / d = |<conj(b_b)|a_a>|**2 / d``.
    """
    ma, mb = _mat(meas_a), _mat(meas_b)
    _check_dims(ma.shape[0], mb.shape[0])
    d = ma.shape[0]
    amp = ma.T @ mb
    probs = (amp.real**2 + amp.imag**2) / d
    return JointDistribution(probs / probs.sum())


def computational_basis(d: int) -> Basis:
    return Basis(np.eye(d, dtype=complex))


def fourier_basis(d: int) -> Basis:
    """Columns ``exp(2 pi i j k / d) / sqrt(d)``."""
    j = np.arange(d)
    return Basis(np.exp(2j * np.pi * np.outer(j, j) / d) / np.sqrt(d))


def complete_basis(first: PureState) -> Basis:
    """Orthonormal basis with ``first`` as its leading vector.

    The remaining vectors come from Gram-Schmidt on the computational basis
    vectors taken in index order, skipping any that are (numerically) in the
    span already built.
    """
    v = _vec(first)
    d = v.shape[0]
    cols = [v / np.linalg.norm(v)]
    for k in range(d):
        if len(cols) == d:
            break
        w = np.zeros(d, dtype=complex)
        w[k] = 1.0
        for c in cols:
            w = w - np.vdot(c, w) * c
        # second pass for numerical orthogonality
        for c in cols:
            w = w - np.vdot(c, w) * c
        nrm = np.linalg.norm(w)
        if nrm > 1e-6:
            cols.append(w / nrm)
    return Basis(np.stack(cols, axis=1))


def is_orthonormal(meas, tol: float = ORTHO_TOL) -> bool:
    m = _mat(meas)
    return bool(np.max(np.abs(m.conj().T @ m - np.eye(m.shape[0]))) <= tol)
