"""I/Q imbalance coefficients, scenario containers and effective channels.

Every quantity here is defined at the subcarrier level: a desired subcarrier
``c`` and its image ``c' = -c``.  Devices transmitting at ``c`` are called
*direct* users, devices transmitting at ``c'`` are *mirror* users.

Imbalance coefficients follow the usual direct/image decomposition

    Tx:  k1 = (1 + g e^{+j phi}) / 2,   k2 = (1 - g e^{+j phi}) / 2
    Rx:  k1 = (1 + g e^{-j phi}) / 2,   k2 = (1 - g e^{+j phi}) / 2

so that a perfectly matched branch (g=1, phi=0) has k1 = 1 and k2 = 0.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from typing import Sequence, Union

import numpy as np

__all__ = [
    "Side",
    "ImbalanceMode",
    "IqBranchParams",
    "IqCoeffPair",
    "IqBank",
    "UserConfig",
    "InterfererConfig",
    "SubcarrierScenario",
    "EffectiveChannels",
    "iq_coeffs",
    "iq_coeff_arrays",
    "irr_db",
    "phase_limit",
    "gain_limits",
    "sample_imbalance",
    "sample_imbalance_bank",
    "stack_iq_matrices",
    "effective_channels",
]


class Side(enum.Enum):
    TX = "tx"
    RX = "rx"


class ImbalanceMode(enum.Enum):
    """Which transceivers are impaired.

    The unimpaired side gets K1 = I and K2 = 0.
    """

    NONE = "none"
    TX_ONLY = "tx"
    RX_ONLY = "rx"
    TX_RX = "txrx"

    @property
    def tx_impaired(self) -> bool:
        return self in (ImbalanceMode.TX_ONLY, ImbalanceMode.TX_RX)

    @property
    def rx_impaired(self) -> bool:
        return self in (ImbalanceMode.RX_ONLY, ImbalanceMode.TX_RX)


@dataclass(frozen=True)
class IqBranchParams:
    """Gain and phase imbalance of one transceiver branch at one subcarrier."""

    gain: float = 1.0
    phase: float = 0.0
    side: Side = Side.TX

    def __post_init__(self):
        if not self.gain > 0:
            raise ValueError(f"gain must be positive, got {self.gain}")
        if not -math.pi < self.phase <= math.pi:
            raise ValueError(f"phase must lie in (-pi, pi], got {self.phase}")


@dataclass(frozen=True)
class IqCoeffPair:
    k1: complex
    k2: complex


def iq_coeff_arrays(gain, phase, side: Side):
    """Vectorised ``(k1, k2)`` for arrays of gains and phases."""
    gain = np.asarray(gain, dtype=float)
    phase = np.asarray(phase, dtype=float)
    rot = gain * np.exp(1j * phase)
    if side is Side.TX:
        return (1 + rot) / 2, (1 - rot) / 2
    return (1 + gain * np.exp(-1j * phase)) / 2, (1 - rot) / 2


def iq_coeffs(params: IqBranchParams) -> IqCoeffPair:
    k1, k2 = iq_coeff_arrays(params.gain, params.phase, params.side)
    return IqCoeffPair(complex(k1), complex(k2))


def irr_db(pair: IqCoeffPair) -> float:
    """Image rejection ratio ``10 log10(|k1|^2 / |k2|^2)``; ``inf`` if k2 == 0."""
    p2 = abs(pair.k2) ** 2
    if p2 == 0.0:
        return math.inf
    return 10.0 * math.log10(abs(pair.k1) ** 2 / p2)


def phase_limit(irr_min_db: float) -> float:
    """Largest |phase| meeting ``irr_min_db`` when there is no gain error.

    With g = 1 the IRR equals cot^2(phi/2), hence
    ``alpha = 2 arctan(10^(-irr_min_db/20))``.
    """
    if not irr_min_db > 0:
        raise ValueError(f"irr_min_db must be > 0 dB, got {irr_min_db}")
    return 2.0 * math.atan(10.0 ** (-irr_min_db / 20.0))


def gain_limits(phase, irr_min_db: float):
    """Gains ``(g_min, g_max)`` at which IRR(g, phase) == irr_min_db.

    The IRR constraint is the quadratic ``g^2 - 2 beta g + 1 = 0`` with
    ``beta = |cos phase| (rho + 1) / (rho - 1)``; its roots are reciprocal.
    Requires ``|phase| <= phase_limit(irr_min_db)``.
    """
    if not irr_min_db > 0:
        raise ValueError(f"irr_min_db must be > 0 dB, got {irr_min_db}")
    rho = 10.0 ** (irr_min_db / 10.0)
    beta = np.abs(np.cos(phase)) * (rho + 1.0) / (rho - 1.0)
    # beta dips a hair below 1 at |phase| == alpha through rounding
    root = np.sqrt(np.maximum(beta * beta - 1.0, 0.0))
    return beta - root, beta + root


def _draw(irr_min_db: float, size, rng: np.random.Generator, exact: bool):
    alpha = phase_limit(irr_min_db)
    phase = rng.uniform(-alpha, alpha, size=size)
    g_min, g_max = gain_limits(phase, irr_min_db)
    if exact:
        gain = np.where(rng.random(size=size) < 0.5, g_min, g_max)
    else:
        gain = rng.uniform(g_min, g_max)
    return gain, phase


def sample_imbalance(irr_min_db: float, side: Side, rng: np.random.Generator) -> IqBranchParams:
    """Draw one branch whose IRR is at least ``irr_min_db``.

    The phase is uniform on (-alpha, alpha) with alpha from
    :func:`phase_limit`; the gain is then uniform between the two roots of
    the IRR equation for that phase.
    """
    gain, phase = _draw(irr_min_db, None, rng, exact=False)
    return IqBranchParams(float(gain), float(phase), side)


@dataclass(frozen=True, eq=False)
class IqBank:
    """Imbalance parameters of a group of branches (one device, one subcarrier).

    Stored as parallel arrays so the diagonal K matrices never have to be
    materialised; ``k1``/``k2`` give their diagonals.
    """

    gain: np.ndarray
    phase: np.ndarray
    side: Side

    def __post_init__(self):
        gain = np.atleast_1d(np.asarray(self.gain, dtype=float))
        phase = np.atleast_1d(np.asarray(self.phase, dtype=float))
        if gain.shape != phase.shape or gain.ndim != 1:
            raise ValueError("gain and phase must be 1-D arrays of equal length")
        if np.any(gain <= 0):
            raise ValueError("gains must be positive")
        if np.any(phase <= -math.pi) or np.any(phase > math.pi):
            raise ValueError("phases must lie in (-pi, pi]")
        gain.setflags(write=False)
        phase.setflags(write=False)
        object.__setattr__(self, "gain", gain)
        object.__setattr__(self, "phase", phase)
        k1, k2 = iq_coeff_arrays(gain, phase, self.side)
        # exact for perfect branches: (1 + 1)/2 and (1 - 1)/2
        object.__setattr__(self, "_k", (k1, k2))

    @classmethod
    def perfect(cls, n: int, side: Side) -> "IqBank":
        return cls(np.ones(n), np.zeros(n), side)

    @classmethod
    def from_params(cls, params: Sequence[IqBranchParams]) -> "IqBank":
        if not params:
            raise ValueError("need at least one branch")
        sides = {p.side for p in params}
        if len(sides) != 1:
            raise ValueError("all branches must be on the same side")
        return cls(
            np.array([p.gain for p in params]),
            np.array([p.phase for p in params]),
            params[0].side,
        )

    def __len__(self) -> int:
        return self.gain.shape[0]

    def branch(self, i: int) -> IqBranchParams:
        return IqBranchParams(float(self.gain[i]), float(self.phase[i]), self.side)

    @property
    def k1(self) -> np.ndarray:
        return self._k[0]

    @property
    def k2(self) -> np.ndarray:
        return self._k[1]

    @property
    def is_perfect(self) -> bool:
        return bool(np.all(self.gain == 1.0) and np.all(self.phase == 0.0))

    def irr_db(self) -> np.ndarray:
        p2 = np.abs(self.k2) ** 2
        with np.errstate(divide="ignore"):
            return np.where(p2 == 0, np.inf, 10 * np.log10(np.abs(self.k1) ** 2 / np.where(p2 == 0, 1, p2)))


def sample_imbalance_bank(
    irr_min_db: float,
    n: int,
    side: Side,
    rng: np.random.Generator,
    exact: bool = False,
) -> IqBank:
    """Draw ``n`` independent branches.

    With ``exact=True`` the gain is put on one of the two IRR roots (chosen
    at random) so every branch has IRR equal to ``irr_min_db``.
    """
    gain, phase = _draw(irr_min_db, n, rng, exact)
    return IqBank(gain, phase, side)


def stack_iq_matrices(branches: Union[IqBank, Sequence[IqBranchParams]]):
    """Diagonal ``(K1, K2)`` matrices for a list of branches."""
    bank = branches if isinstance(branches, IqBank) else IqBank.from_params(list(branches))
    return np.diag(bank.k1), np.diag(bank.k2)


# ---------------------------------------------------------------------------
# Scenario containers
# ---------------------------------------------------------------------------


def _readonly(a, dtype=complex) -> np.ndarray:
    # arrays frozen here earlier are shared, not copied, when a config is replaced
    if isinstance(a, np.ndarray) and a.dtype == dtype and not a.flags.writeable and a.base is None:
        return a
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class UserConfig:
    """One transmitting device as seen from one of the two subcarriers.

    ``precoder`` and ``stream_power`` refer to the data this entry carries
    (at ``c`` for direct users, at ``c'`` for mirror users).  Channels and TX
    imbalance are given at both subcarriers, because imbalance makes every
    device radiate at the image frequency as well.
    """

    precoder: np.ndarray
    stream_power: float
    channel_c: np.ndarray
    channel_cp: np.ndarray
    tx_iq_c: IqBank
    tx_iq_cp: IqBank

    def __post_init__(self):
        for name in ("precoder", "channel_c", "channel_cp"):
            object.__setattr__(self, name, _readonly(getattr(self, name)))
        g = self.precoder
        if g.ndim != 2:
            raise ValueError("precoder must be a 2-D (M, Q) matrix")
        m, q = g.shape
        if not m >= q >= 1:
            raise ValueError(f"need M >= Q >= 1, got M={m}, Q={q}")
        if np.linalg.matrix_rank(g) < q:
            raise ValueError("precoder must have full column rank")
        if not self.stream_power > 0:
            raise ValueError("stream_power must be positive")
        if self.channel_c.ndim != 2 or self.channel_c.shape[1] != m:
            raise ValueError(f"channel_c must be (N, {m}), got {self.channel_c.shape}")
        if self.channel_cp.shape != self.channel_c.shape:
            raise ValueError("channel_c and channel_cp must have the same shape")
        for bank in (self.tx_iq_c, self.tx_iq_cp):
            if len(bank) != m or bank.side is not Side.TX:
                raise ValueError(f"TX imbalance tables must hold {m} TX branches")

    @property
    def m_tx(self) -> int:
        return self.precoder.shape[0]

    @property
    def q_streams(self) -> int:
        return self.precoder.shape[1]

    @property
    def n_rx(self) -> int:
        return self.channel_c.shape[0]


@dataclass(frozen=True, eq=False)
class InterfererConfig:
    """External interferer active on one subcarrier.

    ``power`` is the per-antenna variance of its circular Gaussian signal.
    """

    channel: np.ndarray
    power: float

    def __post_init__(self):
        object.__setattr__(self, "channel", _readonly(self.channel))
        if self.channel.ndim != 2:
            raise ValueError("interferer channel must be (N, J)")
        if not self.power > 0:
            raise ValueError("interferer power must be positive")

    @property
    def n_tx(self) -> int:
        return self.channel.shape[1]


@dataclass(frozen=True, eq=False)
class SubcarrierScenario:
    """Everything needed to describe one mirror-subcarrier pair.

    With ``mirror_aliasing`` the i-th mirror user is the same device as the
    i-th direct user (plain OFDM: every UE uses both subcarriers), so they
    must share channels and TX imbalance.
    """

    n_rx: int
    users_c: tuple
    users_cp: tuple
    interferers_c: tuple = ()
    interferers_cp: tuple = ()
    noise_power: float = 1.0
    rx_iq_c: IqBank = None
    rx_iq_cp: IqBank = None
    mirror_aliasing: bool = False

    def __post_init__(self):
        n = self.n_rx
        for name in ("users_c", "users_cp", "interferers_c", "interferers_cp"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        if self.rx_iq_c is None:
            object.__setattr__(self, "rx_iq_c", IqBank.perfect(n, Side.RX))
        if self.rx_iq_cp is None:
            object.__setattr__(self, "rx_iq_cp", IqBank.perfect(n, Side.RX))
        if not self.noise_power >= 0:
            raise ValueError("noise_power must be non-negative")
        for bank in (self.rx_iq_c, self.rx_iq_cp):
            if len(bank) != n or bank.side is not Side.RX:
                raise ValueError(f"RX imbalance tables must hold exactly {n} RX branches")
        for u in self.users_c + self.users_cp:
            if u.n_rx != n:
                raise ValueError(f"user channel has {u.n_rx} rows, expected {n}")
        for it in self.interferers_c + self.interferers_cp:
            if it.channel.shape[0] != n:
                raise ValueError(f"interferer channel has {it.channel.shape[0]} rows, expected {n}")
        if self.mirror_aliasing:
            if len(self.users_c) != len(self.users_cp):
                raise ValueError("mirror aliasing needs U == V")
            for a, b in zip(self.users_c, self.users_cp):
                same = (
                    np.array_equal(a.channel_c, b.channel_c)
                    and np.array_equal(a.channel_cp, b.channel_cp)
                    and np.array_equal(a.tx_iq_c.gain, b.tx_iq_c.gain)
                    and np.array_equal(a.tx_iq_c.phase, b.tx_iq_c.phase)
                    and np.array_equal(a.tx_iq_cp.gain, b.tx_iq_cp.gain)
                    and np.array_equal(a.tx_iq_cp.phase, b.tx_iq_cp.phase)
                )
                if not same:
                    raise ValueError("aliased users must share channels and TX imbalance")

    @property
    def n_streams(self) -> int:
        """Total number of streams S at the desired subcarrier."""
        return sum(u.q_streams for u in self.users_c)

    def stream_index(self) -> list:
        """``(user, stream)`` pairs in weight-matrix column order."""
        return [(i, q) for i, u in enumerate(self.users_c) for q in range(u.q_streams)]

    def with_mode(self, mode: ImbalanceMode) -> "SubcarrierScenario":
        """Replace the unimpaired side's tables by perfect ones."""
        mode = ImbalanceMode(mode)
        changes = {}
        if not mode.rx_impaired:
            changes["rx_iq_c"] = IqBank.perfect(self.n_rx, Side.RX)
            changes["rx_iq_cp"] = IqBank.perfect(self.n_rx, Side.RX)
        if not mode.tx_impaired:
            def clean(u):
                return replace(
                    u,
                    tx_iq_c=IqBank.perfect(u.m_tx, Side.TX),
                    tx_iq_cp=IqBank.perfect(u.m_tx, Side.TX),
                )
            changes["users_c"] = tuple(clean(u) for u in self.users_c)
            changes["users_cp"] = tuple(clean(u) for u in self.users_cp)
        return replace(self, **changes) if changes else self


@dataclass(frozen=True, eq=False)
class EffectiveChannels:
    """Effective channels of every user, linear (N rows) and augmented (2N rows).

    ``psi[u]``/``xi[u]`` carry direct user u's data ``x_{u,c}``;
    ``omega[v]``/``phi[v]`` carry the conjugated mirror data ``x*_{v,c'}``.
    The augmented RX matrices ``k_rx_a``/``k_rx_b`` (2N x N) map ``z_c`` and
    ``z*_{c'}`` into the augmented observation; both are two stacked
    diagonals, kept as the length-2N vectors ``rx_a``/``rx_b``.
    """

    psi: tuple
    omega: tuple
    xi: tuple
    phi: tuple
    rx_a: np.ndarray
    rx_b: np.ndarray

    @staticmethod
    def _expand(d: np.ndarray) -> np.ndarray:
        n = d.shape[0] // 2
        return np.vstack([np.diag(d[:n]), np.diag(d[n:])])

    @property
    def k_rx_a(self) -> np.ndarray:
        return self._expand(self.rx_a)

    @property
    def k_rx_b(self) -> np.ndarray:
        return self._expand(self.rx_b)

    @property
    def k_rx1(self) -> np.ndarray:
        return np.diag(self.rx_a[: self.rx_a.shape[0] // 2])

    @property
    def k_rx2(self) -> np.ndarray:
        return np.diag(self.rx_b[: self.rx_b.shape[0] // 2])


def _stacked(r1c, r2c, r2cp, r1cp, h_c, h_cp, t_c, t_cp):
    # [K_Rx1,c   K_Rx2,c ] [H_c  0    ] [T_c  ]
    # [K*_Rx2,c' K*_Rx1,c'] [0    H*_c'] [T*_c']
    hc = h_c * t_c[None, :]
    hcp = np.conj(h_cp) * np.conj(t_cp)[None, :]
    top = r1c[:, None] * hc + r2c[:, None] * hcp
    bottom = np.conj(r2cp)[:, None] * hc + np.conj(r1cp)[:, None] * hcp
    return np.vstack([top, bottom])


def effective_channels(scn: SubcarrierScenario) -> EffectiveChannels:
    """Combine TX imbalance, propagation and RX imbalance into effective channels.

    For a direct user u::

        Psi_u = K_Rx1,c H_u,c K_Tx1,u,c + K_Rx2,c H*_u,c' K*_Tx2,u,c'

    and for a mirror user v::

        Omega_v = K_Rx1,c H_v,c K_Tx2,v,c + K_Rx2,c H*_v,c' K*_Tx1,v,c'

    ``Xi``/``Phi`` append the conjugated image-subcarrier rows below.
    """
    r1c, r2c = scn.rx_iq_c.k1, scn.rx_iq_c.k2
    r1cp, r2cp = scn.rx_iq_cp.k1, scn.rx_iq_cp.k2
    n = scn.n_rx
    xi = tuple(
        _stacked(r1c, r2c, r2cp, r1cp, u.channel_c, u.channel_cp, u.tx_iq_c.k1, u.tx_iq_cp.k2)
        for u in scn.users_c
    )
    phi = tuple(
        _stacked(r1c, r2c, r2cp, r1cp, v.channel_c, v.channel_cp, v.tx_iq_c.k2, v.tx_iq_cp.k1)
        for v in scn.users_cp
    )
    return EffectiveChannels(
        psi=tuple(x[:n] for x in xi),
        omega=tuple(p[:n] for p in phi),
        xi=xi,
        phi=phi,
        rx_a=np.concatenate([r1c, np.conj(r2cp)]),
        rx_b=np.concatenate([r2c, np.conj(r1cp)]),
    )
