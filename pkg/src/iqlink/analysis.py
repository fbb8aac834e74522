"""Output power decomposition, SINR and Monte Carlo SER.

The combiner output power of stream ``q`` of user ``u`` splits into six
independent parts::

    P = P_signal + P_isi + P_iui_c + P_iui_cp + P_z_c + P_z_cp

(desired stream, other streams of the same user, other users at ``c``,
users at ``c'`` leaking through imbalance, interference plus noise at ``c``
and leaking from ``c'``).  Linear N-length weights are evaluated with the
top N rows of the augmented quantities, which are exactly the linear ones.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .combiners import (
    CombinerKind,
    CombinerWeights,
    SingularCovarianceError,
    combine,
    compute_weights,
    cross_correlation,
)
from .core import EffectiveChannels, SubcarrierScenario, effective_channels
from .signal import augment, covariance, qam_constellation, rx_snapshot

__all__ = [
    "PowerDecomposition",
    "StreamSelector",
    "SinrReport",
    "SerResult",
    "stream_powers",
    "power_decomposition",
    "sinr",
    "stream_sinr",
    "stream_mse",
    "trial_sinr",
    "average_sinr",
    "summarise_sinr",
    "ser_trial",
    "ser_montecarlo",
    "qam_ser_awgn",
    "MAX_CONDITION",
]

MAX_CONDITION = 1e12

_TERMS = ("p_signal", "p_isi", "p_iui_c", "p_iui_cp", "p_z_c", "p_z_cp")


@dataclass(frozen=True)
class PowerDecomposition:
    p_signal: float
    p_isi: float
    p_iui_c: float
    p_iui_cp: float
    p_z_c: float
    p_z_cp: float

    @property
    def total(self) -> float:
        return sum(getattr(self, t) for t in _TERMS)

    @property
    def interference(self) -> float:
        return self.total - self.p_signal

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, t) for t in _TERMS])


@dataclass(frozen=True, eq=False)
class StreamSelector:
    """``gamma = diag(e_q)`` picks stream q, ``delta = I - gamma`` the rest."""

    gamma: np.ndarray
    delta: np.ndarray

    @classmethod
    def for_stream(cls, q: int, n_streams: int) -> "StreamSelector":
        if not 0 <= q < n_streams:
            raise KeyError(f"stream {q} out of range for {n_streams} streams")
        gamma = np.zeros((n_streams, n_streams))
        gamma[q, q] = 1.0
        return cls(gamma, np.eye(n_streams) - gamma)


def _row_energy(a: np.ndarray) -> np.ndarray:
    return np.einsum("ij,ij->i", a.real, a.real) + np.einsum("ij,ij->i", a.imag, a.imag)


def stream_powers(
    scn: SubcarrierScenario, weights: CombinerWeights, channels: EffectiveChannels = None
) -> np.ndarray:
    """All six power terms for every weight column, shape ``(S, 6)``.

    Every term is accumulated as a sum of squared magnitudes, so each is
    non-negative by construction.  The interference-plus-noise terms expand
    ``R_z`` into ``noise_power I + sum_l p_l H_l H_l^H``.
    """
    ch = channels if channels is not None else effective_channels(scn)
    d = weights.dim
    wh = weights.matrix.conj().T
    n_cols = wh.shape[0]
    users = np.array([u for u, _ in weights.streams])
    qs = np.array([q for _, q in weights.streams])
    out = np.zeros((n_cols, 6))

    for u, (usr, xi) in enumerate(zip(scn.users_c, ch.xi)):
        p = usr.stream_power * np.abs(wh @ (xi[:d] @ usr.precoder)) ** 2
        own = users == u
        if np.any(own):
            rows = np.flatnonzero(own)
            out[rows, 0] = p[rows, qs[rows]]
            rest = p[rows].copy()
            rest[np.arange(rows.size), qs[rows]] = 0.0
            out[rows, 1] = rest.sum(axis=1)
        out[~own, 2] += p[~own].sum(axis=1)

    for v, phi in zip(scn.users_cp, ch.phi):
        out[:, 3] += v.stream_power * _row_energy(wh @ (phi[:d] @ np.conj(v.precoder)))

    n = scn.n_rx
    for col, diag, interferers in (
        (4, ch.rx_a, scn.interferers_c),
        (5, ch.rx_b, scn.interferers_cp),
    ):
        # w^H K for K = [diag(top); diag(bottom)] truncated to d rows
        b = wh[:, :n] * diag[:n]
        if d == 2 * n:
            b = b + wh[:, n:] * diag[n:]
        out[:, col] = scn.noise_power * _row_energy(b)
        for it in interferers:
            h = it.channel if col == 4 else np.conj(it.channel)
            out[:, col] += it.power * _row_energy(b @ h)
    return out


def power_decomposition(
    scn: SubcarrierScenario,
    weights: CombinerWeights,
    user: int,
    stream: int,
    channels: EffectiveChannels = None,
) -> PowerDecomposition:
    """Six-term output power split for one ``(user, stream)``."""
    col = weights.column(user, stream)
    single = CombinerWeights(weights.kind, weights.matrix[:, [col]], ((user, stream),))
    return PowerDecomposition(*map(float, stream_powers(scn, single, channels)[0]))


def _ratio(p: np.ndarray) -> np.ndarray:
    den = p[..., 1:].sum(axis=-1)
    if np.any(den <= 0):
        raise ValueError("SINR undefined: interference-plus-noise power is zero")
    return p[..., 0] / den


def sinr(decomp: PowerDecomposition) -> float:
    """SINR in dB."""
    return 10.0 * math.log10(float(_ratio(decomp.as_array())))


def stream_sinr(
    scn: SubcarrierScenario, weights: CombinerWeights, channels: EffectiveChannels = None
) -> np.ndarray:
    """Linear SINR of every stream."""
    return _ratio(stream_powers(scn, weights, channels))


def stream_mse(
    scn: SubcarrierScenario, weights: CombinerWeights, channels: EffectiveChannels = None, cov=None
) -> np.ndarray:
    """``E|x_q - w_q^H r|^2 = p - 2 Re(w^H v) + w^H R w`` per stream."""
    ch = channels if channels is not None else effective_channels(scn)
    cov = cov if cov is not None else covariance(scn, ch)
    aug = weights.dim == 2 * scn.n_rx
    r = cov.r_aug if aug else cov.r_lin
    v = cross_correlation(scn, aug, ch)
    w = weights.matrix
    p = np.array([scn.users_c[u].stream_power for u, _ in weights.streams])
    quad = np.real(np.einsum("is,ij,js->s", w.conj(), r, w))
    return p - 2 * np.real(np.einsum("is,is->s", w.conj(), v)) + quad


def trial_sinr(
    scn: SubcarrierScenario,
    kinds,
    modes,
    max_condition: float = MAX_CONDITION,
) -> np.ndarray:
    """Per-stream linear SINR for each (mode, receiver) pair on one draw.

    ``scn`` should carry full TX+RX imbalance; each mode is derived from it
    by substitution so all pairs see the same channels.  Returns an array of
    shape ``(len(modes), len(kinds), S)``.
    """
    out = np.empty((len(modes), len(kinds), scn.n_streams))
    for i, mode in enumerate(modes):
        s = scn.with_mode(mode)
        ch = effective_channels(s)
        cov = None
        if any(CombinerKind(k) is not CombinerKind.MRC for k in kinds):
            cov = covariance(s, ch)
        for j, kind in enumerate(kinds):
            w = compute_weights(kind, s, cov, ch, max_condition)
            out[i, j] = stream_sinr(s, w, ch)
    return out


def _to_db(x):
    return 10.0 * np.log10(x)


@dataclass(frozen=True, eq=False)
class SinrReport:
    """Fading-averaged SINR.

    ``per_stream_sinr_db`` follows the weight column order;
    ``mean_sinr_db`` averages over streams, users and trials.  Averaging is
    done on linear power unless the report was built with ``db_average``.
    """

    per_stream_sinr_db: np.ndarray
    mean_sinr_db: float
    stderr_db: float
    n_trials: int
    rejected: int = 0
    trial_means_db: np.ndarray = field(default=None, repr=False)


def summarise_sinr(values: np.ndarray, db_average: bool = False):
    """Reduce a ``(trials, streams)`` array of linear SINRs.

    Returns ``(per_stream_db, mean_db, stderr_db, per_trial_db)``.  The
    linear-domain standard error is mapped to dB with the delta method.
    """
    if db_average:
        v = _to_db(values)
        per_trial = v.mean(axis=1)
        mean = float(per_trial.mean())
        se = float(per_trial.std(ddof=1) / math.sqrt(len(per_trial))) if len(per_trial) > 1 else 0.0
        return v.mean(axis=0), mean, se, per_trial
    per_trial = values.mean(axis=1)
    m = float(per_trial.mean())
    se_lin = float(per_trial.std(ddof=1) / math.sqrt(len(per_trial))) if len(per_trial) > 1 else 0.0
    # delta method
    se = 10.0 / math.log(10.0) * se_lin / m
    return _to_db(values.mean(axis=0)), float(_to_db(m)), se, _to_db(per_trial)


def average_sinr(
    template,
    n_trials: int,
    rng: np.random.Generator,
    receiver: CombinerKind = CombinerKind.AUGMENTED_LMMSE,
    db_average: bool = False,
    max_condition: float = MAX_CONDITION,
    max_redraws: int = 100,
) -> SinrReport:
    """Monte Carlo average of per-stream SINR over channel and imbalance draws.

    ``template`` is anything with ``draw(rng) -> SubcarrierScenario``.
    Draws whose covariance is too ill-conditioned are discarded and redrawn;
    the count is reported in ``rejected``.
    """
    if n_trials < 1:
        raise ValueError("n_trials must be >= 1")
    kind = CombinerKind(receiver)
    rows = []
    rejected = 0
    while len(rows) < n_trials:
        scn = template.draw(rng)
        ch = effective_channels(scn)
        try:
            w = compute_weights(kind, scn, None, ch, max_condition)
        except SingularCovarianceError:
            rejected += 1
            if rejected > max_redraws:
                raise
            continue
        rows.append(stream_sinr(scn, w, ch))
    per_stream, mean, se, per_trial = summarise_sinr(np.array(rows), db_average)
    return SinrReport(per_stream, mean, se, n_trials, rejected, per_trial)


# ---------------------------------------------------------------------------
# Symbol error rate
# ---------------------------------------------------------------------------


def qam_ser_awgn(snr_db, order: int = 16):
    """Closed-form square-QAM SER on AWGN at symbol SNR ``snr_db``."""
    gamma = 10.0 ** (np.asarray(snr_db, dtype=float) / 10.0)
    m = float(order)
    q = 0.5 * special.erfc(np.sqrt(3.0 * gamma / (m - 1.0)) / math.sqrt(2.0))
    p = 2.0 * (1.0 - 1.0 / math.sqrt(m)) * q
    return 1.0 - (1.0 - p) ** 2


def _nearest(points: np.ndarray, alphabet: np.ndarray) -> np.ndarray:
    return np.argmin(np.abs(points[..., None] - alphabet), axis=-1)


@dataclass
class SerResult:
    """Pooled symbol error count; ``stderr`` treats trials as clusters."""

    errors: int = 0
    symbols: int = 0
    trial_errors: list = field(default_factory=list)
    symbols_per_trial: int = 0

    @property
    def ser(self) -> float:
        return self.errors / self.symbols if self.symbols else float("nan")

    @property
    def stderr(self) -> float:
        e = np.asarray(self.trial_errors, dtype=float)
        if e.size < 2:
            p = self.ser
            return math.sqrt(p * (1 - p) / self.symbols) if self.symbols else float("nan")
        return float((e / self.symbols_per_trial).std(ddof=1) / math.sqrt(e.size))

    def add(self, errors: int, symbols: int):
        self.errors += int(errors)
        self.symbols += int(symbols)
        self.trial_errors.append(int(errors))
        self.symbols_per_trial = symbols


def ser_trial(
    scn: SubcarrierScenario,
    weights_list,
    rng: np.random.Generator,
    n_symbols: int,
    order: int = 16,
    channels: EffectiveChannels = None,
) -> np.ndarray:
    """Symbol errors for each weight set on one shared batch of snapshots.

    Each combiner output is divided by its complex gain ``w^H v / p`` and
    sliced to the nearest QAM point.  Returns an error count per weight set;
    the number of symbols is ``S * n_symbols``.
    """
    alphabet = qam_constellation(order)
    ch = channels if channels is not None else effective_channels(scn)
    snap = rx_snapshot(scn, rng, n_symbols, constellation=alphabet)
    aug = None
    amp = np.array([math.sqrt(scn.users_c[u].stream_power) for u, _ in scn.stream_index()])[:, None]
    x = np.vstack(snap.x_c)
    truth = _nearest(x / amp, alphabet)
    errors = np.zeros(len(weights_list), dtype=np.int64)
    for i, w in enumerate(weights_list):
        if w.kind.augmented:
            aug = aug if aug is not None else augment(snap)
            y = combine(w, aug)
        else:
            y = combine(w, snap)
        v = cross_correlation(scn, w.dim == 2 * scn.n_rx, ch)
        p = amp[:, 0] ** 2
        gain = np.einsum("is,is->s", w.matrix.conj(), v) / p
        est = y / gain[:, None] / amp
        errors[i] = np.count_nonzero(_nearest(est, alphabet) != truth)
    return errors


def ser_montecarlo(
    template,
    n_trials: int,
    rng: np.random.Generator,
    receivers=(CombinerKind.LMMSE, CombinerKind.AUGMENTED_LMMSE),
    n_symbols: int = 100,
    order: int = 16,
) -> dict:
    """Uncoded SER per receiver, pooled over streams, users and trials."""
    kinds = [CombinerKind(k) for k in receivers]
    results = {k: SerResult() for k in kinds}
    for _ in range(n_trials):
        scn = template.draw(rng)
        ch = effective_channels(scn)
        cov = covariance(scn, ch)
        ws = [compute_weights(k, scn, cov, ch) for k in kinds]
        errs = ser_trial(scn, ws, rng, n_symbols, order, ch)
        for k, e in zip(kinds, errs):
            results[k].add(e, scn.n_streams * n_symbols)
    return results
