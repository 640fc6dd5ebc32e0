"""Seeded random streams, Haar sampling and the rejection-sampling core."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .qmath import Basis, PureState

logger = logging.getLogger(__name__)

# purpose tags used as the second component of a stream key
INPUTS = 0
SHARED = 1
LOCAL = 2


@dataclass(frozen=True)
class RngStream:
    """Key for one independent, reproducible random stream.

    Streams with equal ``(seed, stream_id)`` produce bit-identical draws. The
    stream id may be an integer or a tuple of integers, e.g. ``(setup, purpose)``.
    Draws come from a Philox counter-based generator keyed through
    :class:`numpy.random.SeedSequence`, so streams never overlap and the result
    does not depend on the order in which streams are consumed.
    """

    seed: int
    stream_id: int | tuple[int, ...] = 0

    def generator(self) -> np.random.Generator:
        key = self.stream_id if isinstance(self.stream_id, tuple) else (self.stream_id,)
        ss = np.random.SeedSequence(self.seed, spawn_key=tuple(int(k) for k in key))
        return np.random.Generator(np.random.Philox(ss))

    def child(self, *key: int) -> RngStream:
        base = self.stream_id if isinstance(self.stream_id, tuple) else (self.stream_id,)
        return RngStream(self.seed, base + tuple(key))


def as_generator(rng) -> np.random.Generator:
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def random_unitaries(d: int, rng, size: int) -> np.ndarray:
    """Stack of ``size`` Haar-random ``d x d`` unitaries, shape ``(size, d, d)``.

    QR of a complex Ginibre matrix with the phases of ``diag(R)`` moved into Q.
    """
    if d < 2:
        raise ValueError(f"dimension must be >= 2, got {d}")
    gen = as_generator(rng)
    z = gen.standard_normal((size, d, d)) + 1j * gen.standard_normal((size, d, d))
    q, r = np.linalg.qr(z)
    diag = np.diagonal(r, axis1=-2, axis2=-1)
    phases = diag / np.abs(diag)
    return q * phases[:, None, :]


def random_unitary(d: int, rng) -> np.ndarray:
    return random_unitaries(d, rng, 1)[0]


def random_basis(d: int, rng) -> Basis:
    return Basis(random_unitary(d, rng))


def random_states(d: int, rng, size: int) -> np.ndarray:
    """``size`` Haar-random unit vectors, shape ``(size, d)``."""
    if d < 2:
        raise ValueError(f"dimension must be >= 2, got {d}")
    gen = as_generator(rng)
    z = gen.standard_normal((size, d)) + 1j * gen.standard_normal((size, d))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def random_pure_state(d: int, rng) -> PureState:
    return PureState(random_states(d, rng, 1)[0])


@dataclass(frozen=True)
class RejectionConfig:
    """Scale ``M`` of the accept test ``u <= w / M`` and an optional weight function."""

    scale: float
    weight: Callable | None = None

    def __post_init__(self):
        if not self.scale > 0:
            raise ValueError(f"scale must be positive, got {self.scale}")


def _scale_of(cfg) -> float:
    scale = cfg.scale if isinstance(cfg, RejectionConfig) else float(cfg)
    if not scale > 0:
        raise ValueError(f"scale must be positive, got {scale}")
    return scale


def accept(weight, cfg, u):
    """Accept bit ``H(min(w / M, 1) - u)`` with ``H(0) = 1``.

    Works elementwise on arrays. Ratios above one are clamped, which makes the
    accept probability ``min(w / M, 1)``.
    """
    w = np.asarray(weight, dtype=float)
    if np.any(w < 0):
        raise ValueError("weights must be non-negative")
    ratio = np.minimum(w / _scale_of(cfg), 1.0)
    bits = (ratio - np.asarray(u, dtype=float) >= 0).astype(np.int8)
    return int(bits) if bits.ndim == 0 else bits


def accept_batch(weights: np.ndarray, cfg, u: np.ndarray) -> tuple[np.ndarray, int]:
    """Vectorized :func:`accept` that also reports how many ratios were clamped."""
    scale = _scale_of(cfg)
    w = np.asarray(weights, dtype=float)
    if np.any(w < 0):
        raise ValueError("weights must be non-negative")
    ratio = w / scale
    clamped = int(np.count_nonzero(ratio > 1.0))
    if clamped:
        logger.debug("clamped %d of %d accept ratios above 1", clamped, w.size)
    return np.minimum(ratio, 1.0) >= u, clamped


@dataclass(frozen=True)
class CalibrationReport:
    scale: float
    alpha: float
    n: int
    base_rate: float
    scaled_rate: float
    ratio: float
    ratio_stderr: float
    clamp_fraction: float


def calibrate_scale(weight_sampler: Callable[[np.random.Generator, int], np.ndarray],
                    scale: float, alpha: float = 10.0, n: int = 200_000,
                    rng=0, max_rel_err: float = 0.05) -> CalibrationReport:
    """Check a rejection scale by inflating it ``alpha``-fold.

    If ``scale`` bounds the weights, acceptance at ``alpha * scale`` is exactly
    ``1 / alpha`` of the acceptance at ``scale``. Both acceptance tests share
    the same weights and uniforms, which keeps the ratio estimate tight.
    ``weight_sampler(gen, n)`` must return ``n`` non-negative weights.
    """
    if not alpha > 1:
        raise ValueError(f"alpha must be > 1, got {alpha}")
    gen = as_generator(rng)
    w = np.asarray(weight_sampler(gen, n), dtype=float)
    u = gen.random(w.shape[0])
    base, clamped = accept_batch(w, scale, u)
    scaled, _ = accept_batch(w, alpha * scale, u)
    k1, k2 = int(base.sum()), int(scaled.sum())
    if k2 == 0:
        raise ValueError(f"no acceptances at the inflated scale with n={n}; increase n")
    p1, p2 = k1 / w.shape[0], k2 / w.shape[0]
    ratio = p1 / p2
    # acceptances at alpha*M are a subset of those at M: k2 | k1 ~ Binomial(k1, q)
    q = k2 / k1
    rel = math.sqrt((1 - q) / (k1 * q))
    ratio_stderr = ratio * rel
    if rel > max_rel_err / 3:
        raise ValueError(
            f"n={n} too small: relative error of the ratio is {rel:.3g}, "
            f"need <= {max_rel_err / 3:.3g} to resolve a {max_rel_err:.0%} deviation")
    return CalibrationReport(scale=scale, alpha=alpha, n=int(w.shape[0]),
                             base_rate=p1, scaled_rate=p2, ratio=ratio,
                             ratio_stderr=ratio_stderr,
                             clamp_fraction=clamped / w.shape[0])
