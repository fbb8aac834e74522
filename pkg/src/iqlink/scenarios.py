"""Random scenario generation: Rayleigh channels, imbalance draws, power setup.

Power bookkeeping (noise variance per branch fixed by ``noise_power``):

* SNR is the received power per RX branch from all streams of one user over
  the noise power; with unit-variance channel entries this gives a stream
  power ``snr * noise_power / trace(G G^H)``.
* SIR compares the same per-user received power with the total received
  power of all external interferers, split equally over all interferer
  antennas.
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace
from typing import Optional

import numpy as np

from .core import (
    ImbalanceMode,
    InterfererConfig,
    Side,
    SubcarrierScenario,
    UserConfig,
    sample_imbalance_bank,
)
from .signal import gaussian_symbols

__all__ = ["ScenarioTemplate", "FixedScenario", "rayleigh"]


def rayleigh(rng: np.random.Generator, shape) -> np.ndarray:
    """I.i.d. CN(0, 1) channel coefficients."""
    return gaussian_symbols(rng, shape)


def db2lin(x: float) -> float:
    return 10.0 ** (x / 10.0)


@dataclass(frozen=True)
class ScenarioTemplate:
    """Distribution over :class:`SubcarrierScenario` instances.

    Defaults are the basic multiuser setup (20 RX antennas, 5 + 5 two-antenna
    UEs with two streams each, 8 single-antenna interferers per subcarrier,
    SNR 20 dB, SIR -20 dB, IRR_min 25 dB).
    """

    n_rx: int = 20
    n_users: int = 5
    n_users_cp: int = 5
    n_tx: int = 2
    n_streams: int = 2
    n_interferers: int = 8
    n_interferers_cp: Optional[int] = None
    interferer_antennas: int = 1
    snr_db: float = 20.0
    sir_db: float = -20.0
    sir_cp_db: Optional[float] = None
    irr_min_db: float = 25.0
    irr_fixed: bool = False
    mirror_aliasing: bool = False
    noise_power: float = 1.0
    mode: ImbalanceMode = ImbalanceMode.TX_RX

    def __post_init__(self):
        object.__setattr__(self, "mode", ImbalanceMode(self.mode))
        for name in ("n_rx", "n_tx", "n_streams", "interferer_antennas"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        for name in ("n_users", "n_users_cp", "n_interferers"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if self.n_interferers_cp is not None and self.n_interferers_cp < 0:
            raise ValueError("n_interferers_cp must be >= 0")
        if self.n_streams > self.n_tx:
            raise ValueError("n_streams cannot exceed n_tx")
        if self.irr_min_db <= 0:
            raise ValueError("irr_min_db must be > 0 dB")
        if self.mirror_aliasing and self.n_users != self.n_users_cp:
            raise ValueError("mirror aliasing needs n_users == n_users_cp")

    @classmethod
    def massive_mimo(cls, **overrides) -> "ScenarioTemplate":
        """Large-array OFDM setup: 100 antennas, 5 single-antenna UEs using
        both subcarriers, no interferers, IRR fixed at 20 dB."""
        base = cls(
            n_rx=100,
            n_users=5,
            n_users_cp=5,
            n_tx=1,
            n_streams=1,
            n_interferers=0,
            snr_db=20.0,
            irr_min_db=20.0,
            irr_fixed=True,
            mirror_aliasing=True,
        )
        return replace(base, **overrides)

    @classmethod
    def field_names(cls) -> list:
        return [f.name for f in fields(cls)]

    @property
    def precoder(self) -> np.ndarray:
        # one-to-one stream-to-antenna mapping
        return np.eye(self.n_tx, self.n_streams, dtype=complex)

    @property
    def stream_power(self) -> float:
        g = self.precoder
        return db2lin(self.snr_db) * self.noise_power / float(np.real(np.trace(g @ g.conj().T)))

    def interferer_power(self, cp: bool = False) -> float:
        count = self.n_interferers_cp if (cp and self.n_interferers_cp is not None) else self.n_interferers
        sir = self.sir_cp_db if (cp and self.sir_cp_db is not None) else self.sir_db
        if count == 0:
            return 0.0
        user_power = db2lin(self.snr_db) * self.noise_power
        return user_power / (db2lin(sir) * count * self.interferer_antennas)

    def _bank(self, n, side, rng):
        return sample_imbalance_bank(self.irr_min_db, n, side, rng, exact=self.irr_fixed)

    def draw(self, rng: np.random.Generator) -> SubcarrierScenario:
        """One realisation of channels and imbalance, with ``mode`` applied."""
        n, m = self.n_rx, self.n_tx
        g = self.precoder
        p = self.stream_power

        def user():
            return UserConfig(
                precoder=g,
                stream_power=p,
                channel_c=rayleigh(rng, (n, m)),
                channel_cp=rayleigh(rng, (n, m)),
                tx_iq_c=self._bank(m, Side.TX, rng),
                tx_iq_cp=self._bank(m, Side.TX, rng),
            )

        users_c = tuple(user() for _ in range(self.n_users))
        if self.mirror_aliasing:
            users_cp = users_c
        else:
            users_cp = tuple(user() for _ in range(self.n_users_cp))

        def interferers(count, power):
            return tuple(
                InterfererConfig(rayleigh(rng, (n, self.interferer_antennas)), power)
                for _ in range(count)
            )

        l_cp = self.n_interferers if self.n_interferers_cp is None else self.n_interferers_cp
        scn = SubcarrierScenario(
            n_rx=n,
            users_c=users_c,
            users_cp=users_cp,
            interferers_c=interferers(self.n_interferers, self.interferer_power()),
            interferers_cp=interferers(l_cp, self.interferer_power(cp=True)),
            noise_power=self.noise_power,
            rx_iq_c=self._bank(n, Side.RX, rng),
            rx_iq_cp=self._bank(n, Side.RX, rng),
            mirror_aliasing=self.mirror_aliasing,
        )
        return scn.with_mode(self.mode)


@dataclass(frozen=True, eq=False)
class FixedScenario:
    """Degenerate template that always returns the same scenario."""

    scenario: SubcarrierScenario

    def draw(self, rng: np.random.Generator) -> SubcarrierScenario:
        return self.scenario
