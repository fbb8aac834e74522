import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from conftest import random_template
from iqlink.analysis import (
    PowerDecomposition,
    SerResult,
    StreamSelector,
    average_sinr,
    power_decomposition,
    qam_ser_awgn,
    ser_montecarlo,
    sinr,
    stream_mse,
    stream_powers,
    stream_sinr,
    summarise_sinr,
    trial_sinr,
)
from iqlink.combiners import CombinerKind, CombinerWeights, compute_weights
from iqlink.core import ImbalanceMode, IqBank, Side, SubcarrierScenario, UserConfig, effective_channels
from iqlink.scenarios import FixedScenario, ScenarioTemplate
from iqlink.signal import covariance

seeds = st.integers(0, 2**32 - 1)
LMMSE, AUG, MRC = CombinerKind.LMMSE, CombinerKind.AUGMENTED_LMMSE, CombinerKind.MRC


def _random_weights(scn, rng, augmented):
    d = scn.n_rx * (2 if augmented else 1)
    w = rng.standard_normal((d, scn.n_streams)) + 1j * rng.standard_normal((d, scn.n_streams))
    return CombinerWeights(AUG if augmented else LMMSE, w, tuple(scn.stream_index()))


def _siso(h=1.0, power=1.0, noise=1.0):
    user = UserConfig(np.eye(1), power, np.array([[h]]), np.array([[h]]),
                      IqBank.perfect(1, Side.TX), IqBank.perfect(1, Side.TX))
    return SubcarrierScenario(1, (user,), (), noise_power=noise)


class TestPowerDecomposition:
    @given(seeds, st.booleans())
    def test_six_terms_sum_to_output_power(self, seed, augmented):
        rng = np.random.default_rng(seed)
        scn = random_template(seed).draw(rng)
        w = _random_weights(scn, rng, augmented)
        cov = covariance(scn)
        r = cov.r_aug if augmented else cov.r_lin
        quad = np.real(np.einsum("is,ij,js->s", w.matrix.conj(), r, w.matrix))
        np.testing.assert_allclose(stream_powers(scn, w).sum(axis=1), quad, rtol=1e-10)

    @given(seeds)
    def test_terms_non_negative(self, seed):
        rng = np.random.default_rng(seed)
        scn = random_template(seed).draw(rng)
        assert np.all(stream_powers(scn, _random_weights(scn, rng, True)) >= 0)

    def test_ideal_hardware_has_no_image_terms(self, small_scenario, rng):
        scn = small_scenario.with_mode(ImbalanceMode.NONE)
        p = stream_powers(scn, _random_weights(scn, rng, False))
        assert np.all(p[:, 3] == 0) and np.all(p[:, 5] == 0)

    def test_single_stream_view(self, small_scenario):
        w = compute_weights(AUG, small_scenario)
        d = power_decomposition(small_scenario, w, 1, 0)
        np.testing.assert_allclose(d.as_array(), stream_powers(small_scenario, w)[2])
        assert d.total == pytest.approx(d.p_signal + d.interference)

    def test_stream_selector(self):
        sel = StreamSelector.for_stream(1, 3)
        np.testing.assert_array_equal(sel.gamma + sel.delta, np.eye(3))
        with pytest.raises(KeyError):
            StreamSelector.for_stream(3, 3)


class TestSinr:
    def test_unit_siso_is_zero_db(self):
        scn = _siso()
        w = CombinerWeights(LMMSE, np.ones((1, 1), complex), ((0, 0),))
        assert sinr(power_decomposition(scn, w, 0, 0)) == pytest.approx(0.0, abs=1e-12)

    def test_zero_denominator(self):
        with pytest.raises(ValueError):
            sinr(PowerDecomposition(1.0, 0, 0, 0, 0, 0))

    @given(seeds, st.complex_numbers(min_magnitude=1e-3, max_magnitude=1e3))
    def test_scale_invariance(self, seed, c):
        rng = np.random.default_rng(seed)
        scn = random_template(seed).draw(rng)
        w = _random_weights(scn, rng, True)
        scaled = CombinerWeights(w.kind, c * w.matrix, w.streams)
        np.testing.assert_allclose(stream_sinr(scn, scaled), stream_sinr(scn, w), rtol=1e-9)

    @given(seeds)
    def test_augmented_dominates_linear(self, seed):
        rng = np.random.default_rng(seed)
        scn = random_template(seed).draw(rng)
        ch = effective_channels(scn)
        cov = covariance(scn, ch)
        lin = stream_sinr(scn, compute_weights(LMMSE, scn, cov, ch), ch)
        aug = stream_sinr(scn, compute_weights(AUG, scn, cov, ch), ch)
        assert np.all(10 * np.log10(aug) >= 10 * np.log10(lin) - 1e-9)

    @given(seeds)
    def test_mmse_sinr_relation(self, seed):
        # for Wiener weights MSE/p = 1 / (1 + SINR)
        rng = np.random.default_rng(seed)
        scn = random_template(seed).draw(rng)
        w = compute_weights(AUG, scn)
        p = np.array([scn.users_c[u].stream_power for u, _ in w.streams])
        np.testing.assert_allclose(stream_mse(scn, w) / p, 1 / (1 + stream_sinr(scn, w)), rtol=1e-7)

    def test_mrc_array_gain(self):
        # matched filter: mean SINR = SNR * N with no interference
        rng = np.random.default_rng(7)
        ns = [8, 16, 32, 64, 128, 256]
        means = []
        for n in ns:
            t = ScenarioTemplate(n_rx=n, n_users=1, n_users_cp=0, n_tx=1, n_streams=1,
                                 n_interferers=0, snr_db=10.0, mode="none")
            means.append(average_sinr(t, 200, rng, receiver=MRC).mean_sinr_db)
        slope = np.polyfit(np.log10(ns), means, 1)[0]
        assert slope == pytest.approx(10.0, abs=0.3)
        np.testing.assert_allclose(means, 10.0 + 10 * np.log10(ns), atol=0.3)

    def test_mrc_ceiling_is_tx_irr(self):
        t = ScenarioTemplate.massive_mimo(n_rx=512, n_users=1, n_users_cp=1)
        rep = average_sinr(t, 20, np.random.default_rng(2), receiver=MRC)
        assert 18.5 < rep.mean_sinr_db < 20.0 + 3 * rep.stderr_db


class TestAverageSinr:
    def test_fixed_channel_matches_single_draw(self, small_scenario):
        rep = average_sinr(FixedScenario(small_scenario), 3, np.random.default_rng(0), receiver=AUG)
        single = stream_sinr(small_scenario, compute_weights(AUG, small_scenario))
        np.testing.assert_allclose(rep.per_stream_sinr_db, 10 * np.log10(single))
        assert rep.stderr_db == pytest.approx(0.0, abs=1e-12)
        assert rep.mean_sinr_db == pytest.approx(10 * np.log10(single.mean()))

    def test_standard_error_scaling(self, small_template):
        ses = []
        for n in (40, 160, 640):
            ses.append(average_sinr(small_template, n, np.random.default_rng(n)).stderr_db)
        slope = np.polyfit(np.log([40, 160, 640]), np.log(ses), 1)[0]
        assert slope == pytest.approx(-0.5, abs=0.15)

    def test_db_average_is_below_linear(self, small_template):
        lin = average_sinr(small_template, 50, np.random.default_rng(1))
        db = average_sinr(small_template, 50, np.random.default_rng(1), db_average=True)
        assert db.mean_sinr_db <= lin.mean_sinr_db  # Jensen

    def test_trials_validated(self, small_template, rng):
        with pytest.raises(ValueError):
            average_sinr(small_template, 0, rng)

    def test_trial_sinr_shares_draw(self, small_scenario):
        out = trial_sinr(small_scenario, [LMMSE, AUG], list(ImbalanceMode))
        assert out.shape == (4, 2, 4)
        np.testing.assert_allclose(out[0, 0], out[0, 1])  # ideal: both receivers agree

    def test_summarise_shapes(self):
        per_stream, mean, se, per_trial = summarise_sinr(np.full((5, 3), 10.0))
        assert mean == pytest.approx(10.0) and se == 0.0 and per_trial.shape == (5,)


class TestSer:
    def test_closed_form_matches_q_function_form(self):
        gamma = 10 ** (np.array([5.0, 10.0, 15.0, 20.0]) / 10)
        q = stats.norm.sf(np.sqrt(3 * gamma / 15))
        expected = 4 * 0.75 * q - 4 * 0.75**2 * q**2
        np.testing.assert_allclose(qam_ser_awgn([5, 10, 15, 20]), expected, rtol=1e-10)

    def test_noiseless_is_error_free(self, rng):
        t = ScenarioTemplate(n_rx=16, n_users=2, n_users_cp=2, n_interferers=0, snr_db=70.0, mode="none")
        res = ser_montecarlo(t, 5, rng, receivers=(LMMSE, AUG))
        assert all(r.errors == 0 for r in res.values())
        assert res[LMMSE].symbols == 5 * 4 * 100

    def test_rx_imbalance_hurts_linear_receiver(self, rng):
        t = ScenarioTemplate(snr_db=30.0, mode="rx")
        res = ser_montecarlo(t, 10, rng)
        assert res[LMMSE].ser > 10 * max(res[AUG].ser, 1e-4)

    def test_result_stderr(self):
        r = SerResult()
        for e in (3, 5, 4, 6):
            r.add(e, 100)
        assert r.ser == pytest.approx(18 / 400)
        assert r.stderr == pytest.approx(np.std([0.03, 0.05, 0.04, 0.06], ddof=1) / 2)
        assert math.isnan(SerResult().ser)
