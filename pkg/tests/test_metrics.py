import numpy as np
import pytest

from src.metrics import (BeamformingState, Protocol, achievable_rate, combined_channel, decode_rate,
                         decoding_order_ok, eve_passive, secrecy_energy_efficiency, sf_mask, state_from_amplitudes,
                         stream_rates, total_power, ts_decode_rate)
from tests.conftest import crandn


def _es_state(rng, N=2, M=4, users=(2, 1)):
    alpha = tuple(np.full(J, 1 / np.sqrt(J)) for J in users)
    f = (crandn(rng, N), crandn(rng, N))
    return state_from_amplitudes(Protocol.ES, alpha, f, np.full(M, 0.5), rng.uniform(0, 6, M), rng.uniform(0, 6, M))


class TestRates:
    def test_combined_channel(self, rng):
        h, G, u = crandn(rng, 3), crandn(rng, 4, 3), crandn(rng, 4)
        np.testing.assert_allclose(combined_channel(h, G, u), h.conj() + u.conj() @ G)
        with pytest.raises(ValueError):
            combined_channel(h, G, crandn(rng, 3))

    def test_decode_rate(self):
        hbar = np.array([1.0, 0.0])
        w = np.array([np.sqrt(3.0), 0.0])
        assert decode_rate(hbar, w, None, 1.0) == pytest.approx(2.0)
        interferer = np.array([[np.sqrt(1.0)], [0.0]])
        # SINR = 3 / (1 + 1)
        assert decode_rate(hbar, w, interferer, 1.0) == pytest.approx(np.log2(2.5))
        with pytest.raises(ValueError):
            decode_rate(hbar, w, None, 0.0)

    def test_ts_rate_scales_noise(self):
        hbar = np.array([1.0])
        w = np.array([1.0])
        assert ts_decode_rate(hbar, w, None, 1.0, 0.5) == pytest.approx(0.5 * np.log2(1 + 2.0))
        assert ts_decode_rate(hbar, w, None, 1.0, 1.0) == pytest.approx(1.0)
        with pytest.raises(ValueError):
            ts_decode_rate(hbar, w, None, 1.0, 0.0)

    def test_achievable_rate_is_minimum(self):
        assert achievable_rate([2.0, 1.5, 3.0]) == 1.5
        with pytest.raises(ValueError):
            achievable_rate([])


class TestState:
    def test_interference_columns(self, rng):
        s = _es_state(rng)
        assert s.interference(0, 0).shape == (2, 1)
        assert s.interference(0, 1).shape == (2, 2)
        assert s.interference(0, 0, ts=True).shape == (2, 0)

    def test_check_accepts_valid_and_rejects_broken(self, rng):
        s = _es_state(rng)
        s.check()
        with pytest.raises(ValueError):
            s.with_(alpha=(np.array([1.0, 1.0]), np.array([1.0]))).check()
        with pytest.raises(ValueError):
            s.with_(u=(s.u[0], s.u[1] * 2)).check()

    def test_sf_and_ms_binary(self, rng):
        mask = sf_mask(5)
        assert mask.tolist() == [True, True, False, False, False]
        s = _es_state(rng)
        u = (mask * np.exp(1j * rng.uniform(0, 6, 5)), (~mask) * np.exp(1j * rng.uniform(0, 6, 5)))
        s.with_(protocol=Protocol.SF, u=u).check()
        with pytest.raises(ValueError):
            s.with_(protocol=Protocol.MS).check()

    def test_ts_needs_split(self, rng):
        s = _es_state(rng)
        u = tuple(np.exp(1j * rng.uniform(0, 6, 4)) for _ in range(2))
        s.with_(protocol=Protocol.TS, u=u, tau=(0.3, 0.7)).check()
        with pytest.raises(ValueError):
            s.with_(protocol=Protocol.TS, u=u, tau=(0.3, 0.3)).check()

    def test_eve_passive_visibility(self, rng):
        s = _es_state(rng)
        assert eve_passive(s, 1, 0) is s.u[1]
        ts = s.with_(protocol=Protocol.TS, tau=(0.5, 0.5))
        assert np.all(eve_passive(ts, 1, 0) == 0)
        np.testing.assert_array_equal(eve_passive(ts, 0, 0), ts.u[0])


class TestSecrecy:
    def test_power(self, params, rng):
        s = _es_state(rng, users=(1, 1))
        expected = params.amplifier_efficiency * sum(np.linalg.norm(f) ** 2 for f in s.f) + params.static_power
        assert total_power(s, params) == pytest.approx(expected)

    def test_see_is_ssr_over_power(self, params_noma, channels_noma, rng):
        s = _es_state(rng, N=3, users=(2, 2))
        s = s.with_(f=tuple(f * 3.0 for f in s.f))
        report = secrecy_energy_efficiency(s, channels_noma, params_noma)
        assert report.see == pytest.approx(report.ssr / report.power, rel=1e-12)
        assert set(report.rates) == {(0, 0), (0, 1), (1, 0), (1, 1)}
        assert len(report.leakage) == 8
        assert all(v >= 0 for v in report.secrecy.values())

    def test_ts_zero_split_carries_no_rate(self, params, channels, rng):
        s = _es_state(rng, users=(1, 1))
        u = tuple(np.exp(1j * rng.uniform(0, 6, 4)) for _ in range(2))
        ts = s.with_(protocol=Protocol.TS, u=u, tau=(1.0, 0.0))
        rates, leakage = stream_rates(ts, channels, params)
        assert rates[(1, 0)] == 0.0
        assert leakage[(1, 0, 0)] == 0.0

    def test_truth_evaluation_differs(self, params, channels, rng):
        s = _es_state(rng, users=(1, 1))
        est = secrecy_energy_efficiency(s, channels, params)
        true = secrecy_energy_efficiency(s, channels, params, truth=True)
        assert est.rates != true.rates

    def test_decoding_order_margins(self, channels_noma, rng):
        s = _es_state(rng, N=3, users=(2, 2))
        ok, margins = decoding_order_ok(s, channels_noma)
        assert len(margins) == 2
        assert ok == all(m >= 0 for m in margins)
