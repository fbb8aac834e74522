import math

import numpy as np
import pytest
from hypothesis import example, given
from hypothesis import strategies as st

from iqlink.core import (
    ImbalanceMode,
    InterfererConfig,
    IqBank,
    IqBranchParams,
    Side,
    SubcarrierScenario,
    UserConfig,
    effective_channels,
    gain_limits,
    iq_coeffs,
    irr_db,
    phase_limit,
    sample_imbalance,
    sample_imbalance_bank,
    stack_iq_matrices,
)
from iqlink.scenarios import ScenarioTemplate

gains = st.floats(0.5, 2.0)
phases = st.floats(-0.5, 0.5)
sides = st.sampled_from(list(Side))
irr_floors = st.floats(5.0, 45.0)


def _user(rng, n, m=2, q=2, tx=None):
    tx = tx or (IqBank.perfect(m, Side.TX), IqBank.perfect(m, Side.TX))
    return UserConfig(
        precoder=np.eye(m, q),
        stream_power=1.0,
        channel_c=rng.standard_normal((n, m)) + 1j * rng.standard_normal((n, m)),
        channel_cp=rng.standard_normal((n, m)) + 1j * rng.standard_normal((n, m)),
        tx_iq_c=tx[0],
        tx_iq_cp=tx[1],
    )


class TestIqCoeffs:
    def test_perfect_branch(self):
        for side in Side:
            pair = iq_coeffs(IqBranchParams(1.0, 0.0, side))
            assert pair.k1 == 1.0 and pair.k2 == 0.0
            assert irr_db(pair) == math.inf

    def test_tx_values(self):
        pair = iq_coeffs(IqBranchParams(1.1, 0.1, Side.TX))
        rot = 1.1 * np.exp(0.1j)
        assert pair.k1 == pytest.approx((1 + rot) / 2)
        assert pair.k2 == pytest.approx((1 - rot) / 2)

    def test_rx_conjugates_only_the_direct_term(self):
        pair = iq_coeffs(IqBranchParams(1.1, 0.1, Side.RX))
        assert pair.k1 == pytest.approx((1 + 1.1 * np.exp(-0.1j)) / 2)
        assert pair.k2 == pytest.approx((1 - 1.1 * np.exp(0.1j)) / 2)

    @given(gains, phases)
    def test_tx_coefficients_sum_to_one(self, g, p):
        pair = iq_coeffs(IqBranchParams(g, p, Side.TX))
        assert pair.k1 + pair.k2 == pytest.approx(1.0)

    @given(gains, phases)
    def test_rx_direct_plus_conjugate_image_is_one(self, g, p):
        pair = iq_coeffs(IqBranchParams(g, p, Side.RX))
        assert pair.k1 + np.conj(pair.k2) == pytest.approx(1.0)

    @given(gains, phases, sides)
    @example(0.99999, 0.0, Side.TX)
    def test_irr_closed_form(self, g, p, side):
        if g == 1.0 and p == 0.0:
            return
        # 1 + g^2 -+ 2g cos p, written without cancellation near g = 1, p = 0
        s2 = 4 * g * math.sin(p / 2) ** 2
        expected = 10 * math.log10(((1 + g) ** 2 - s2) / ((1 - g) ** 2 + s2))
        assert irr_db(iq_coeffs(IqBranchParams(g, p, side))) == pytest.approx(expected, rel=1e-9)

    def test_invalid_params(self):
        with pytest.raises(ValueError):
            IqBranchParams(0.0, 0.0, Side.TX)
        with pytest.raises(ValueError):
            IqBranchParams(1.0, 4.0, Side.TX)


class TestImbalanceSampling:
    @given(irr_floors)
    def test_phase_limit_hits_floor_at_unit_gain(self, irr):
        a = phase_limit(irr)
        assert irr_db(iq_coeffs(IqBranchParams(1.0, a, Side.TX))) == pytest.approx(irr, abs=1e-9)

    @given(irr_floors, st.floats(0.0, 1.0))
    def test_gain_roots_are_on_the_floor(self, irr, frac):
        phase = frac * phase_limit(irr)
        g_min, g_max = gain_limits(phase, irr)
        assert g_min * g_max == pytest.approx(1.0)
        for g in (g_min, g_max):
            assert irr_db(iq_coeffs(IqBranchParams(float(g), phase, Side.TX))) == pytest.approx(irr, abs=1e-6)

    @given(irr_floors, sides, st.integers(0, 2**32 - 1))
    def test_samples_respect_floor(self, irr, side, seed):
        rng = np.random.default_rng(seed)
        p = sample_imbalance(irr, side, rng)
        assert abs(p.phase) <= phase_limit(irr)
        assert irr_db(iq_coeffs(p)) >= irr - 1e-9

    def test_exact_bank_sits_on_floor(self, rng):
        bank = sample_imbalance_bank(20.0, 500, Side.TX, rng, exact=True)
        np.testing.assert_allclose(bank.irr_db(), 20.0, atol=1e-6)
        # both roots get used
        assert np.any(bank.gain > 1) and np.any(bank.gain < 1)

    def test_bank_spread_covers_range(self, rng):
        bank = sample_imbalance_bank(25.0, 4000, Side.RX, rng)
        irr = bank.irr_db()
        assert irr.min() >= 25.0 - 1e-9
        assert np.percentile(irr, 5) < 28.0  # draws reach close to the floor

    def test_nonpositive_floor_rejected(self):
        with pytest.raises(ValueError):
            phase_limit(0.0)


class TestIqBank:
    def test_perfect(self):
        bank = IqBank.perfect(3, Side.RX)
        assert bank.is_perfect and len(bank) == 3
        np.testing.assert_array_equal(bank.k1, 1.0)
        np.testing.assert_array_equal(bank.k2, 0.0)

    def test_round_trip_through_params(self, rng):
        bank = sample_imbalance_bank(20.0, 4, Side.TX, rng)
        again = IqBank.from_params([bank.branch(i) for i in range(4)])
        np.testing.assert_array_equal(again.k1, bank.k1)

    def test_mixed_sides_rejected(self):
        with pytest.raises(ValueError):
            IqBank.from_params([IqBranchParams(1, 0, Side.TX), IqBranchParams(1, 0, Side.RX)])

    def test_read_only(self):
        bank = IqBank.perfect(2, Side.TX)
        with pytest.raises(ValueError):
            bank.gain[0] = 2.0

    def test_stack_matrices(self, rng):
        bank = sample_imbalance_bank(20.0, 3, Side.RX, rng)
        k1, k2 = stack_iq_matrices(bank)
        np.testing.assert_array_equal(np.diag(k1), bank.k1)
        assert np.count_nonzero(k2 - np.diag(np.diag(k2))) == 0


class TestContainers:
    def test_user_needs_m_at_least_q(self, rng):
        with pytest.raises(ValueError, match="M >= Q"):
            _user(rng, 4, m=1, q=2)

    def test_user_channel_shape(self, rng):
        u = _user(rng, 4)
        with pytest.raises(ValueError):
            UserConfig(u.precoder, 1.0, np.ones((4, 3)), np.ones((4, 3)), u.tx_iq_c, u.tx_iq_cp)

    def test_user_power_positive(self, rng):
        u = _user(rng, 4)
        with pytest.raises(ValueError):
            UserConfig(u.precoder, 0.0, u.channel_c, u.channel_cp, u.tx_iq_c, u.tx_iq_cp)

    def test_interferer_power_positive(self):
        with pytest.raises(ValueError):
            InterfererConfig(np.ones((3, 1)), 0.0)

    def test_rx_table_length(self, rng):
        with pytest.raises(ValueError, match="exactly 4"):
            SubcarrierScenario(4, (_user(rng, 4),), (), rx_iq_c=IqBank.perfect(3, Side.RX))

    def test_channel_rows_must_match(self, rng):
        with pytest.raises(ValueError):
            SubcarrierScenario(5, (_user(rng, 4),), ())

    def test_aliasing_requires_shared_devices(self, rng):
        with pytest.raises(ValueError, match="share"):
            SubcarrierScenario(4, (_user(rng, 4),), (_user(rng, 4),), mirror_aliasing=True)

    def test_stream_index(self, rng):
        users = (_user(rng, 4, 2, 2), _user(rng, 4, 2, 1))
        scn = SubcarrierScenario(4, users, ())
        assert scn.stream_index() == [(0, 0), (0, 1), (1, 0)]
        assert scn.n_streams == 3

    @pytest.mark.parametrize("mode", list(ImbalanceMode))
    def test_with_mode(self, small_scenario, mode):
        s = small_scenario.with_mode(mode)
        assert s.rx_iq_c.is_perfect is (not mode.rx_impaired)
        assert all(u.tx_iq_c.is_perfect is (not mode.tx_impaired) for u in s.users_c + s.users_cp)
        # channels are untouched
        assert s.users_c[0].channel_c is small_scenario.users_c[0].channel_c


def _dense_effective(scn):
    """Effective channels from explicit diagonal matrices."""
    r1c, r2c = stack_iq_matrices(scn.rx_iq_c)
    r1p, r2p = stack_iq_matrices(scn.rx_iq_cp)
    ka = np.vstack([r1c, r2p.conj()])
    kb = np.vstack([r2c, r1p.conj()])
    xi, phi = [], []
    for u in scn.users_c:
        t1c, _ = stack_iq_matrices(u.tx_iq_c)
        _, t2p = stack_iq_matrices(u.tx_iq_cp)
        xi.append(ka @ u.channel_c @ t1c + kb @ u.channel_cp.conj() @ t2p.conj())
    for v in scn.users_cp:
        _, t2c = stack_iq_matrices(v.tx_iq_c)
        t1p, _ = stack_iq_matrices(v.tx_iq_cp)
        phi.append(ka @ v.channel_c @ t2c + kb @ v.channel_cp.conj() @ t1p.conj())
    return xi, phi, ka, kb


class TestEffectiveChannels:
    def test_matches_dense_products(self, small_scenario):
        ch = effective_channels(small_scenario)
        xi, phi, ka, kb = _dense_effective(small_scenario)
        n = small_scenario.n_rx
        for a, b in zip(ch.xi, xi):
            np.testing.assert_allclose(a, b, atol=1e-12)
        for a, b in zip(ch.phi, phi):
            np.testing.assert_allclose(a, b, atol=1e-12)
        for a, b in zip(ch.psi, xi):
            np.testing.assert_allclose(a, b[:n], atol=1e-12)
        np.testing.assert_allclose(ch.k_rx_a, ka)
        np.testing.assert_allclose(ch.k_rx_b, kb)

    def test_ideal_hardware(self, small_scenario):
        s = small_scenario.with_mode(ImbalanceMode.NONE)
        ch = effective_channels(s)
        for u, psi in zip(s.users_c, ch.psi):
            np.testing.assert_array_equal(psi, u.channel_c)
        for om in ch.omega:
            assert not np.any(om)

    def test_rx_only_leaks_image_channel(self, small_scenario):
        s = small_scenario.with_mode(ImbalanceMode.RX_ONLY)
        ch = effective_channels(s)
        v = s.users_cp[0]
        expected = s.rx_iq_c.k2[:, None] * v.channel_cp.conj()
        np.testing.assert_allclose(ch.omega[0], expected, atol=1e-14)

    def test_massive_aliasing_shares_devices(self, rng):
        scn = ScenarioTemplate.massive_mimo(n_rx=8).draw(rng)
        assert scn.users_c is scn.users_cp
        ch = effective_channels(scn)
        assert len(ch.phi) == len(ch.xi) == 5
