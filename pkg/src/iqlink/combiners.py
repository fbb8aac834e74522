"""Per-subcarrier LMMSE, augmented LMMSE and MRC combiners."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .core import EffectiveChannels, SubcarrierScenario, effective_channels
from .signal import AugmentedSnapshot, CovariancePair, Snapshot, covariance

__all__ = [
    "CombinerKind",
    "CombinerWeights",
    "SingularCovarianceError",
    "cross_correlation",
    "hermitian_solve",
    "lmmse_weights",
    "augmented_lmmse_weights",
    "mrc_weights",
    "compute_weights",
    "combine",
]


class CombinerKind(enum.Enum):
    LMMSE = "lmmse"
    AUGMENTED_LMMSE = "augmented_lmmse"
    MRC = "mrc"

    @property
    def augmented(self) -> bool:
        return self is CombinerKind.AUGMENTED_LMMSE


class SingularCovarianceError(np.linalg.LinAlgError):
    pass


@dataclass(frozen=True, eq=False)
class CombinerWeights:
    """Weight matrix with one column per stream at the desired subcarrier.

    Columns are ordered as ``streams`` (``(user, stream)`` pairs); the row
    count is N, or 2N for the augmented combiner.
    """

    kind: CombinerKind
    matrix: np.ndarray
    streams: tuple

    def __post_init__(self):
        if self.matrix.ndim != 2 or self.matrix.shape[1] != len(self.streams):
            raise ValueError("weight matrix must have one column per stream")
        if self.kind.augmented and self.matrix.shape[0] % 2:
            raise ValueError("augmented weights must have an even length")

    @property
    def per_stream(self) -> list:
        return [self.matrix[:, s] for s in range(self.matrix.shape[1])]

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def column(self, user: int, stream: int) -> int:
        try:
            return self.streams.index((user, stream))
        except ValueError:
            raise KeyError(f"no stream {stream} for user {user}") from None

    def __getitem__(self, key) -> np.ndarray:
        return self.matrix[:, self.column(*key)]


def cross_correlation(
    scn: SubcarrierScenario, augmented: bool, channels: EffectiveChannels = None
) -> np.ndarray:
    """``V`` with columns ``p_u * Xi_u G_u e_q`` (top N rows for linear)."""
    ch = channels if channels is not None else effective_channels(scn)
    mats = ch.xi if augmented else ch.psi
    cols = [u.stream_power * (m @ u.precoder) for u, m in zip(scn.users_c, mats)]
    return np.hstack(cols)


def hermitian_solve(r: np.ndarray, v: np.ndarray, return_condition: bool = False):
    """Solve ``R W = V`` for Hermitian positive definite ``R`` via Cholesky.

    With ``return_condition`` also returns ``(max l_ii / min l_ii)^2`` from
    the Cholesky diagonal, a cheap lower estimate of cond(R).
    """
    try:
        factor = linalg.cho_factor(r, lower=True, check_finite=False)
    except linalg.LinAlgError as exc:
        raise SingularCovarianceError("covariance is not positive definite") from exc
    w = linalg.cho_solve(factor, v, check_finite=False)
    if not return_condition:
        return w
    d = np.abs(np.diag(factor[0]))
    return w, float((d.max() / d.min()) ** 2)


def _lmmse(scn, augmented, cov, channels, max_condition=None):
    ch = channels if channels is not None else effective_channels(scn)
    cov = cov if cov is not None else covariance(scn, ch)
    r = cov.r_aug if augmented else cov.r_lin
    w, cond = hermitian_solve(r, cross_correlation(scn, augmented, ch), return_condition=True)
    if max_condition is not None and cond > max_condition:
        raise SingularCovarianceError(f"covariance condition estimate {cond:.3g} exceeds {max_condition:.3g}")
    kind = CombinerKind.AUGMENTED_LMMSE if augmented else CombinerKind.LMMSE
    return CombinerWeights(kind, w, tuple(scn.stream_index()))


def lmmse_weights(
    scn: SubcarrierScenario, cov: CovariancePair = None, channels: EffectiveChannels = None
) -> CombinerWeights:
    """Per-subcarrier Wiener weights ``R^-1 V`` using the linear covariance."""
    return _lmmse(scn, False, cov, channels)


def augmented_lmmse_weights(
    scn: SubcarrierScenario, cov: CovariancePair = None, channels: EffectiveChannels = None
) -> CombinerWeights:
    """Augmented Wiener weights, jointly over ``c`` and the conjugated ``c'``."""
    return _lmmse(scn, True, cov, channels)


def mrc_weights(scn: SubcarrierScenario, channels: EffectiveChannels = None) -> CombinerWeights:
    """Weights matched to each stream's own effective channel ``Psi_u G_u e_q``.

    Unnormalised; SINR does not depend on a per-stream scale.
    """
    ch = channels if channels is not None else effective_channels(scn)
    w = np.hstack([psi @ u.precoder for u, psi in zip(scn.users_c, ch.psi)])
    return CombinerWeights(CombinerKind.MRC, w, tuple(scn.stream_index()))


def compute_weights(
    kind: CombinerKind,
    scn: SubcarrierScenario,
    cov: CovariancePair = None,
    channels: EffectiveChannels = None,
    max_condition: float = None,
) -> CombinerWeights:
    """Dispatch on ``kind``; LMMSE kinds raise :class:`SingularCovarianceError`
    when the covariance condition estimate exceeds ``max_condition``."""
    kind = CombinerKind(kind)
    if kind is CombinerKind.MRC:
        return mrc_weights(scn, channels)
    return _lmmse(scn, kind.augmented, cov, channels, max_condition)


def combine(weights: CombinerWeights, snapshot) -> np.ndarray:
    """Combiner output ``W^H r``; shape ``(S,)`` or ``(S, K)``.

    Augmented weights need an :class:`AugmentedSnapshot`, the others a
    :class:`Snapshot` or a bare array of matching length.
    """
    if isinstance(snapshot, AugmentedSnapshot):
        if not weights.kind.augmented:
            raise ValueError(f"{weights.kind.value} weights cannot combine an augmented snapshot")
        r = snapshot.r_aug
    elif isinstance(snapshot, Snapshot):
        if weights.kind.augmented:
            raise ValueError("augmented weights need augment(snapshot)")
        r = snapshot.r_c
    else:
        r = np.asarray(snapshot)
    if r.shape[0] != weights.dim:
        raise ValueError(f"snapshot length {r.shape[0]} does not match weight length {weights.dim}")
    return weights.matrix.conj().T @ r
