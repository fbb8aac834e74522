"""Received-signal synthesis and analytic second-order statistics.

Snapshots are generated from the physical chain (precoding, TX imbalance,
propagation, interference plus noise, RX imbalance) rather than from the
effective channels, so Monte Carlo statistics of :func:`rx_snapshot` give an
independent check on :func:`covariance`.

All snapshot arrays are ``(N, K)``: one column per snapshot.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import SubcarrierScenario, UserConfig, effective_channels

__all__ = [
    "Snapshot",
    "AugmentedSnapshot",
    "CovariancePair",
    "qam_constellation",
    "gaussian_symbols",
    "qam_symbols",
    "transmit",
    "tx_snapshot",
    "interference_plus_noise",
    "rx_snapshot",
    "augment",
    "interference_covariance",
    "covariance",
]


def qam_constellation(order: int = 16) -> np.ndarray:
    """Square QAM alphabet normalised to unit average energy."""
    side = int(round(np.sqrt(order)))
    if side * side != order or side < 2:
        raise ValueError(f"order must be a square >= 4, got {order}")
    levels = np.arange(-(side - 1), side, 2, dtype=float)
    points = (levels[:, None] + 1j * levels[None, :]).ravel()
    return points / np.sqrt(np.mean(np.abs(points) ** 2))


def gaussian_symbols(rng: np.random.Generator, shape) -> np.ndarray:
    """Unit-variance circular complex Gaussian samples."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def qam_symbols(rng: np.random.Generator, shape, order: int = 16):
    """Uniform QAM symbols; returns ``(symbols, indices)``."""
    alphabet = qam_constellation(order)
    idx = rng.integers(0, order, size=shape)
    return alphabet[idx], idx


@dataclass(frozen=True, eq=False)
class Snapshot:
    """Received vectors at ``c`` and ``c'`` with the data that produced them.

    ``x_c[u]`` is ``(Q_u, K)`` and already includes the stream power.
    """

    r_c: np.ndarray
    r_cp: np.ndarray
    x_c: tuple
    x_cp: tuple


@dataclass(frozen=True, eq=False)
class AugmentedSnapshot:
    r_aug: np.ndarray

    @property
    def n_rx(self) -> int:
        return self.r_aug.shape[0] // 2


@dataclass(frozen=True, eq=False)
class CovariancePair:
    r_lin: np.ndarray
    r_aug: np.ndarray
    r_z_c: np.ndarray
    r_z_cp: np.ndarray


def transmit(user: UserConfig, x_c=None, x_cp=None, precoder_cp=None):
    """TX-imbalanced antenna signals ``(s_c, s_cp)`` of one device.

    ``x_c``/``x_cp`` are ``(Q, K)`` stream blocks at each subcarrier, or None
    when the device has no data there; a missing block contributes neither
    a direct term nor an image term.  ``precoder_cp`` defaults to
    ``user.precoder``.
    """
    g_cp = user.precoder if precoder_cp is None else precoder_cp
    k = next(x.shape[1] for x in (x_c, x_cp) if x is not None)
    a_c = user.precoder @ x_c if x_c is not None else np.zeros((user.m_tx, k), complex)
    a_cp = g_cp @ x_cp if x_cp is not None else np.zeros((user.m_tx, k), complex)
    s_c = user.tx_iq_c.k1[:, None] * a_c + user.tx_iq_c.k2[:, None] * np.conj(a_cp)
    s_cp = user.tx_iq_cp.k1[:, None] * a_cp + user.tx_iq_cp.k2[:, None] * np.conj(a_c)
    return s_c, s_cp


def tx_snapshot(
    user: UserConfig,
    subcarrier: str,
    rng: np.random.Generator,
    n_snapshots: int = 1,
    occupies_image: bool = False,
) -> np.ndarray:
    """Transmitted vector ``(M, K)`` of ``user`` at ``subcarrier`` ('c' or 'cp').

    Streams are unit-variance Gaussian scaled by ``sqrt(stream_power)``.
    Unless ``occupies_image`` the device carries no data at the other
    subcarrier and the conjugate leakage term vanishes.
    """
    if subcarrier not in ("c", "cp"):
        raise ValueError("subcarrier must be 'c' or 'cp'")
    amp = np.sqrt(user.stream_power)
    shape = (user.q_streams, n_snapshots)
    here = amp * gaussian_symbols(rng, shape)
    there = amp * gaussian_symbols(rng, shape) if occupies_image else None
    if subcarrier == "c":
        return transmit(user, here, there)[0]
    return transmit(user, there, here)[1]


def interference_plus_noise(
    scn: SubcarrierScenario, subcarrier: str, rng: np.random.Generator, n_snapshots: int = 1
) -> np.ndarray:
    """External interference plus receiver noise ``z`` at one subcarrier, ``(N, K)``."""
    if subcarrier not in ("c", "cp"):
        raise ValueError("subcarrier must be 'c' or 'cp'")
    interferers = scn.interferers_c if subcarrier == "c" else scn.interferers_cp
    z = np.sqrt(scn.noise_power) * gaussian_symbols(rng, (scn.n_rx, n_snapshots))
    for it in interferers:
        s = np.sqrt(it.power) * gaussian_symbols(rng, (it.n_tx, n_snapshots))
        z += it.channel @ s
    return z


def rx_snapshot(
    scn: SubcarrierScenario,
    rng: np.random.Generator,
    n_snapshots: int = 1,
    constellation: np.ndarray = None,
) -> Snapshot:
    """Draw ``n_snapshots`` received vectors at ``c`` and ``c'``.

    Data symbols are circular Gaussian, or uniform over ``constellation``
    (assumed unit energy) when given.  Interferers are always Gaussian.
    """
    k = n_snapshots

    def draw(u):
        shape = (u.q_streams, k)
        if constellation is None:
            d = gaussian_symbols(rng, shape)
        else:
            d = constellation[rng.integers(0, constellation.size, size=shape)]
        return np.sqrt(u.stream_power) * d

    x_c = tuple(draw(u) for u in scn.users_c)
    x_cp = tuple(draw(v) for v in scn.users_cp)

    # channel outputs before RX imbalance
    y_c = interference_plus_noise(scn, "c", rng, k)
    y_cp = interference_plus_noise(scn, "cp", rng, k)

    def radiate(dev, xc, xcp, g_cp=None):
        s_c, s_cp = transmit(dev, xc, xcp, g_cp)
        return dev.channel_c @ s_c, dev.channel_cp @ s_cp

    for i, u in enumerate(scn.users_c):
        if scn.mirror_aliasing:
            a, b = radiate(u, x_c[i], x_cp[i], scn.users_cp[i].precoder)
        else:
            a, b = radiate(u, x_c[i], None)
        y_c += a
        y_cp += b
    if not scn.mirror_aliasing:
        for v, xv in zip(scn.users_cp, x_cp):
            a, b = radiate(v, None, xv)
            y_c += a
            y_cp += b

    rx_c, rx_cp = scn.rx_iq_c, scn.rx_iq_cp
    r_c = rx_c.k1[:, None] * y_c + rx_c.k2[:, None] * np.conj(y_cp)
    r_cp = rx_cp.k1[:, None] * y_cp + rx_cp.k2[:, None] * np.conj(y_c)
    return Snapshot(r_c=r_c, r_cp=r_cp, x_c=x_c, x_cp=x_cp)


def augment(snap: Snapshot) -> AugmentedSnapshot:
    """Stack ``[r_c; conj(r_cp)]``."""
    if not isinstance(snap, Snapshot):
        raise TypeError(f"augment expects a Snapshot, got {type(snap).__name__}")
    return AugmentedSnapshot(np.concatenate([snap.r_c, np.conj(snap.r_cp)], axis=0))


def interference_covariance(scn: SubcarrierScenario, subcarrier: str) -> np.ndarray:
    """``R_z = sum_l p_l H_l H_l^H + noise_power I``."""
    interferers = scn.interferers_c if subcarrier == "c" else scn.interferers_cp
    r = scn.noise_power * np.eye(scn.n_rx, dtype=complex)
    for it in interferers:
        r += it.power * (it.channel @ it.channel.conj().T)
    return r


def _gram(a: np.ndarray, power: float) -> np.ndarray:
    return power * (a @ a.conj().T)


def covariance(scn: SubcarrierScenario, channels=None) -> CovariancePair:
    """Analytic covariance of the augmented received vector.

    Sum of the direct-user terms ``p Xi G G^H Xi^H``, the mirror-user terms
    ``p Phi G* G^T Phi^H`` and the interference-plus-noise terms
    ``K_A R_z,c K_A^H + K_B R*_z,c' K_B^H``.  The linear covariance is the
    top-left N x N block.
    """
    ch = channels if channels is not None else effective_channels(scn)
    n = scn.n_rx
    r_z_c = interference_covariance(scn, "c")
    r_z_cp = interference_covariance(scn, "cp")
    # K_A R K_A^H for K_A = [diag(a1); diag(a2)] is outer(a, a*) * [[R, R], [R, R]]
    r = np.outer(ch.rx_a, np.conj(ch.rx_a)) * np.tile(r_z_c, (2, 2))
    r += np.outer(ch.rx_b, np.conj(ch.rx_b)) * np.tile(np.conj(r_z_cp), (2, 2))
    for u, xi in zip(scn.users_c, ch.xi):
        r += _gram(xi @ u.precoder, u.stream_power)
    for v, phi in zip(scn.users_cp, ch.phi):
        r += _gram(phi @ np.conj(v.precoder), v.stream_power)
    # remove rounding asymmetry so Cholesky sees an exactly Hermitian matrix
    r = 0.5 * (r + r.conj().T)
    return CovariancePair(r_lin=r[:n, :n], r_aug=r, r_z_c=r_z_c, r_z_cp=r_z_cp)
