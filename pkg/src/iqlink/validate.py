"""Quick self-checks on small instances: closed-form oracles and invariants.

Each check returns a :class:`CheckResult`; :func:`run_checks` runs them all
in a second or two and is what ``iqlink validate`` prints.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import complexity
from .analysis import stream_mse, stream_powers, stream_sinr
from .combiners import CombinerKind, CombinerWeights, compute_weights, cross_correlation
from .core import ImbalanceMode, Side, effective_channels, irr_db, iq_coeffs, sample_imbalance
from .harness import derive_trial_seed, format_config, load_preset, parse_config, preset_names
from .scenarios import ScenarioTemplate
from .signal import augment, covariance, rx_snapshot

__all__ = ["CheckResult", "CHECKS", "run_checks"]

_SMALL = ScenarioTemplate(n_rx=6, n_users=2, n_users_cp=2, n_interferers=1, irr_min_db=15.0)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name}: {self.detail}"


def _fft_oracle(rng):
    got = (complexity.fft_flops(64), complexity.fft_flops(1024))
    return got == (1152.0, 33968.0), f"fft_flops(64, 1024) = {got}"


def _table2(rng):
    tab = complexity.table2()
    worst = 0
    for algo, printed in complexity.TABLE2_PRINTED.items():
        for row_c, row_p in zip(tab[algo], printed):
            worst += sum(round(c, 2) != p for c, p in zip(row_c, row_p))
    return worst == 0, f"{40 - worst}/40 ratios match to two decimals"


def _irr_floor(rng):
    lows = []
    for side in Side:
        for _ in range(200):
            lows.append(irr_db(iq_coeffs(sample_imbalance(25.0, side, rng))))
    low = min(lows)
    return low >= 25.0 - 1e-9, f"min sampled IRR {low:.4f} dB (floor 25 dB)"


def _power_identity(rng):
    worst = 0.0
    for _ in range(20):
        scn = _SMALL.draw(rng)
        ch = effective_channels(scn)
        cov = covariance(scn, ch)
        for aug in (False, True):
            d = 2 * scn.n_rx if aug else scn.n_rx
            w = rng.standard_normal((d, scn.n_streams)) + 1j * rng.standard_normal((d, scn.n_streams))
            kind = CombinerKind.AUGMENTED_LMMSE if aug else CombinerKind.LMMSE
            cw = CombinerWeights(kind, w, tuple(scn.stream_index()))
            terms = stream_powers(scn, cw, ch).sum(axis=1)
            r = cov.r_aug if aug else cov.r_lin
            quad = np.real(np.einsum("is,ij,js->s", w.conj(), r, w))
            worst = max(worst, float(np.max(np.abs(terms - quad) / quad)))
    return worst < 1e-10, f"max relative gap {worst:.2e} between six-term sum and w^H R w"


def _orthogonality(rng):
    worst = 0.0
    for _ in range(20):
        scn = _SMALL.draw(rng)
        ch = effective_channels(scn)
        cov = covariance(scn, ch)
        for kind in (CombinerKind.LMMSE, CombinerKind.AUGMENTED_LMMSE):
            w = compute_weights(kind, scn, cov, ch)
            r = cov.r_aug if kind.augmented else cov.r_lin
            v = cross_correlation(scn, kind.augmented, ch)
            worst = max(worst, float(np.linalg.norm(r @ w.matrix - v) / np.linalg.norm(v)))
    return worst < 1e-10, f"max ||Rw - v|| / ||v|| = {worst:.2e}"


def _mse_dominance(rng):
    worst = -np.inf
    for _ in range(20):
        scn = _SMALL.draw(rng)
        ch = effective_channels(scn)
        cov = covariance(scn, ch)
        lin = stream_mse(scn, compute_weights(CombinerKind.LMMSE, scn, cov, ch), ch, cov)
        aug = stream_mse(scn, compute_weights(CombinerKind.AUGMENTED_LMMSE, scn, cov, ch), ch, cov)
        worst = max(worst, float(np.max((aug - lin) / lin)))
    return worst <= 1e-9, f"max (MSE_aug - MSE_lin) / MSE_lin = {worst:.2e}"


def _ideal_equivalence(rng):
    worst = 0.0
    for _ in range(10):
        scn = _SMALL.draw(rng).with_mode(ImbalanceMode.NONE)
        ch = effective_channels(scn)
        cov = covariance(scn, ch)
        a = stream_sinr(scn, compute_weights(CombinerKind.LMMSE, scn, cov, ch), ch)
        b = stream_sinr(scn, compute_weights(CombinerKind.AUGMENTED_LMMSE, scn, cov, ch), ch)
        worst = max(worst, float(np.max(np.abs(10 * np.log10(a / b)))))
    return worst < 1e-8, f"without imbalance augmented and linear LMMSE differ by {worst:.1e} dB"


def _sample_covariance(rng):
    scn = ScenarioTemplate(n_rx=3, n_users=1, n_users_cp=1, n_tx=1, n_streams=1, n_interferers=1,
                           irr_min_db=10.0).draw(rng)
    k = 40000
    r = augment(rx_snapshot(scn, rng, k)).r_aug
    sample = r @ r.conj().T / k
    model = covariance(scn).r_aug
    scale = np.sqrt(np.outer(np.diag(model).real, np.diag(model).real))
    err = float(np.max(np.abs(sample - model) / scale))
    return err < 0.05, f"max normalised deviation {err:.3f} over {k} snapshots"


def _seeds(rng):
    a = derive_trial_seed(7, 1, 2)
    ok = a == derive_trial_seed(7, 1, 2) and a != derive_trial_seed(8, 1, 2) and a != derive_trial_seed(7, 2, 1)
    seeds = {derive_trial_seed(7, s, t) for s in range(10) for t in range(1000)}
    ok = ok and len(seeds) == 10000
    return ok, f"deterministic, {len(seeds)} distinct seeds from 10000 inputs"


def _config_round_trip(rng):
    names = preset_names()
    bad = [n for n in names if parse_config(format_config(load_preset(n))) != load_preset(n)]
    return not bad, f"{len(names) - len(bad)}/{len(names)} presets round-trip" + (f" (failed: {bad})" if bad else "")


CHECKS = (
    ("fft flop oracle", _fft_oracle),
    ("complexity table", _table2),
    ("imbalance IRR floor", _irr_floor),
    ("power conservation", _power_identity),
    ("LMMSE orthogonality", _orthogonality),
    ("augmented MSE dominance", _mse_dominance),
    ("ideal-hardware equivalence", _ideal_equivalence),
    ("covariance vs sample estimate", _sample_covariance),
    ("trial seed derivation", _seeds),
    ("config round trip", _config_round_trip),
)


def run_checks(seed: int = 0) -> list:
    """Run every check with its own generator seeded from ``seed``."""
    out = []
    for i, (name, fn) in enumerate(CHECKS):
        rng = np.random.default_rng([seed, i])
        try:
            ok, detail = fn(rng)
        except Exception as exc:  # a crashing check is a failed check
            ok, detail = False, f"raised {type(exc).__name__}: {exc}"
        out.append(CheckResult(name, bool(ok), detail))
    return out
