import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import random_template
from iqlink.analysis import stream_mse
from iqlink.combiners import (
    CombinerKind,
    CombinerWeights,
    SingularCovarianceError,
    augmented_lmmse_weights,
    combine,
    compute_weights,
    cross_correlation,
    hermitian_solve,
    lmmse_weights,
    mrc_weights,
)
from iqlink.core import ImbalanceMode, effective_channels
from iqlink.scenarios import ScenarioTemplate
from iqlink.signal import augment, covariance, rx_snapshot

seeds = st.integers(0, 2**32 - 1)


class TestLmmse:
    @given(seeds)
    def test_orthogonality(self, seed):
        scn = random_template(seed).draw(np.random.default_rng(seed))
        cov = covariance(scn)
        for aug in (False, True):
            w = augmented_lmmse_weights(scn, cov) if aug else lmmse_weights(scn, cov)
            r = cov.r_aug if aug else cov.r_lin
            v = cross_correlation(scn, aug)
            assert np.linalg.norm(r @ w.matrix - v) <= 1e-10 * np.linalg.norm(v)

    def test_dimensions(self, small_scenario):
        assert lmmse_weights(small_scenario).matrix.shape == (6, 4)
        assert augmented_lmmse_weights(small_scenario).matrix.shape == (12, 4)

    def test_ideal_hardware_augmented_equals_linear(self, small_scenario):
        scn = small_scenario.with_mode(ImbalanceMode.NONE)
        wl = lmmse_weights(scn).matrix
        wa = augmented_lmmse_weights(scn).matrix
        np.testing.assert_allclose(wa[:6], wl, atol=1e-12)
        np.testing.assert_allclose(wa[6:], 0, atol=1e-12)

    @given(seeds)
    def test_weights_minimise_mse(self, seed):
        rng = np.random.default_rng(seed)
        scn = random_template(seed).draw(rng)
        w = lmmse_weights(scn)
        base = stream_mse(scn, w)
        bump = 1e-3 * (rng.standard_normal(w.matrix.shape) + 1j * rng.standard_normal(w.matrix.shape))
        worse = stream_mse(scn, CombinerWeights(w.kind, w.matrix + bump, w.streams))
        assert np.all(worse >= base - 1e-9 * np.abs(base))

    def test_empirical_wiener_solution(self, rng):
        # weights solved from sample statistics converge to the analytic ones
        scn = ScenarioTemplate(n_rx=3, n_users=1, n_users_cp=1, n_tx=1, n_streams=1,
                               n_interferers=0, irr_min_db=12.0).draw(rng)
        snap = rx_snapshot(scn, rng, 100_000)
        r = augment(snap).r_aug
        d = snap.x_c[0]
        w_hat = np.linalg.solve(r @ r.conj().T, r @ d.conj().T)
        w = augmented_lmmse_weights(scn).matrix
        assert np.linalg.norm(w_hat - w) / np.linalg.norm(w) < 0.05


class TestMrc:
    def test_matched_to_effective_channel(self, small_scenario):
        w = mrc_weights(small_scenario)
        ch = effective_channels(small_scenario)
        np.testing.assert_array_equal(w[(1, 0)], ch.psi[1][:, 0])
        assert w.kind is CombinerKind.MRC


class TestWeightsContainer:
    def test_column_lookup(self, small_scenario):
        w = lmmse_weights(small_scenario)
        assert w.column(1, 1) == 3
        with pytest.raises(KeyError):
            w.column(5, 0)
        assert len(w.per_stream) == 4

    def test_shape_validation(self):
        with pytest.raises(ValueError):
            CombinerWeights(CombinerKind.LMMSE, np.zeros((4, 2)), ((0, 0),))
        with pytest.raises(ValueError):
            CombinerWeights(CombinerKind.AUGMENTED_LMMSE, np.zeros((5, 1)), ((0, 0),))

    def test_dispatch(self, small_scenario):
        for kind in CombinerKind:
            assert compute_weights(kind.value, small_scenario).kind is kind


class TestCombine:
    def test_output(self, small_scenario, rng):
        snap = rx_snapshot(small_scenario, rng, 5)
        wl = lmmse_weights(small_scenario)
        wa = augmented_lmmse_weights(small_scenario)
        np.testing.assert_allclose(combine(wl, snap), wl.matrix.conj().T @ snap.r_c)
        np.testing.assert_allclose(combine(wa, augment(snap)), wa.matrix.conj().T @ augment(snap).r_aug)
        assert combine(wl, snap.r_c[:, 0]).shape == (4,)

    def test_kind_mismatch(self, small_scenario, rng):
        snap = rx_snapshot(small_scenario, rng, 2)
        with pytest.raises(ValueError):
            combine(augmented_lmmse_weights(small_scenario), snap)
        with pytest.raises(ValueError):
            combine(lmmse_weights(small_scenario), augment(snap))
        with pytest.raises(ValueError):
            combine(lmmse_weights(small_scenario), np.zeros(3))


class TestHermitianSolve:
    def test_solution_and_condition(self, rng):
        a = rng.standard_normal((5, 5)) + 1j * rng.standard_normal((5, 5))
        r = a @ a.conj().T + np.eye(5)
        v = rng.standard_normal((5, 2)) + 0j
        w, cond = hermitian_solve(r, v, return_condition=True)
        np.testing.assert_allclose(r @ w, v, atol=1e-10)
        assert 1.0 <= cond <= np.linalg.cond(r) * (1 + 1e-9)

    def test_not_positive_definite(self):
        with pytest.raises(SingularCovarianceError):
            hermitian_solve(np.diag([1.0, -1.0]), np.ones(2))

    def test_condition_limit(self, small_scenario):
        with pytest.raises(SingularCovarianceError, match="condition"):
            compute_weights(CombinerKind.LMMSE, small_scenario, max_condition=1.0)
