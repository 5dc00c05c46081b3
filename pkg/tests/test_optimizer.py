from dataclasses import replace
from types import SimpleNamespace

import numpy as np
import pytest
from pydantic import ValidationError

from src.channel import Geometry, SystemParams, UncertaintyConfig, generate_realization
from src.config import PROFILES
from src.metrics import Protocol, combined_channel, decoding_order_ok, secrecy_energy_efficiency, total_power
from src.optimizer import (AOConfig, AlternatingOptimizer, BlockKind, InfeasibleInstanceError, PassiveOptions,
                           PccpConfig, SubproblemBuilder, TimeSwitchingSearch, TsSearchConfig, active_subproblem,
                           ao_run, backoff, block_inventory, bounded_max, closed_form_families, complexity_estimate,
                           cross_check, export_trace, init_state, initialize, is_unimodal, ms_penalty_value,
                           ms_target, nominal_workspace, normalize_channels, oma_baseline, passive_mask,
                           power_subproblem, project_passive, slot_instance, ts_two_layer, zero_forcing_beams)


class TestSettings:
    def test_defaults(self):
        cfg = AOConfig()
        assert cfg.pccp.lambda0 < cfg.pccp.lambda_max
        assert cfg.ts.floor == pytest.approx(0.05)
        assert cfg.ms_binary_tol == pytest.approx(1e-3)
        assert cfg.max_iterations == 60

    def test_lambda_schedule_checked(self):
        with pytest.raises(ValidationError):
            PccpConfig(lambda0=10.0, lambda_max=1.0)
        with pytest.raises(ValidationError):
            PccpConfig(scaling=1.0)

    def test_unknown_field_rejected(self):
        with pytest.raises(ValidationError):
            AOConfig(tolerence=1e-3)

    def test_ts_floor_bounds(self):
        with pytest.raises(ValidationError):
            TsSearchConfig(floor=0.5)


class TestPassiveHelpers:
    def test_ms_target(self):
        np.testing.assert_allclose(ms_target(np.array([0.0, 1.0, 0.5])), [0.0, 1.0, 0.6])

    def test_ms_penalty_vanishes_on_binary_targets(self):
        b = (np.array([0.0, 1.0]), np.array([1.0, 0.0]))
        assert ms_penalty_value(b, b) == pytest.approx(0.0)
        assert ms_penalty_value((np.array([0.5]), np.array([0.5])), (np.array([0.6]), np.array([0.6]))) > 0

    def test_project_es(self, es_point):
        state = es_point[0]
        projected = project_passive(state, (np.full(4, 0.3), np.full(4, 0.1)))
        np.testing.assert_allclose(projected.beta[0], 0.75)
        np.testing.assert_allclose(projected.beta[1], 0.25)
        np.testing.assert_allclose(np.angle(projected.u[0]), np.angle(state.u[0]))
        projected.check()

    def test_project_ms_rounds(self, es_point):
        state = es_point[0].with_(protocol=Protocol.MS)
        projected = project_passive(state, (np.array([0.9, 0.2, 0.5, 0.0]), np.array([0.1, 0.8, 0.5, 1.0])))
        np.testing.assert_allclose(projected.beta[0], [1.0, 0.0, 1.0, 0.0])
        projected.check()

    def test_project_sf_masks(self, es_point):
        state = es_point[0].with_(protocol=Protocol.SF)
        projected = project_passive(state)
        np.testing.assert_allclose(np.abs(projected.u[0]), [1, 1, 0, 0])
        np.testing.assert_allclose(np.abs(projected.u[1]), [0, 0, 1, 1])
        projected.check()

    def test_passive_mask(self):
        assert passive_mask(Protocol.ES, 1, 3).all()
        assert passive_mask(Protocol.SF, 0, 4).tolist() == [True, True, False, False]
        assert passive_mask(Protocol.SF, 1, 4).tolist() == [False, False, True, True]


class TestTimeSwitchingHelpers:
    def test_bounded_max_finds_peak(self):
        for peak in (0.1, 0.37, 0.5, 0.82):
            assert abs(bounded_max(lambda x: -(x - peak) ** 2, 0.0, 1.0, 1e-5) - peak) < 1e-3

    def test_bounded_max_accepts_reversed_bounds(self):
        assert abs(bounded_max(lambda x: -(x - 0.3) ** 2, 1.0, 0.0, 1e-5) - 0.3) < 1e-3

    def test_bounded_max_short_interval(self):
        assert bounded_max(lambda x: x, 0.2, 0.2001, 1e-3) == pytest.approx(0.20005)

    @pytest.mark.parametrize("values,expected", [
        ([1, 2, 3, 2, 1], True),
        ([3, 2, 1], True),
        ([1, 1, 2, 2], True),
        ([1, 3, 2, 3], False),
        ([2, 1, 2], False),
    ])
    def test_is_unimodal(self, values, expected):
        assert is_unimodal(values) is expected

    def test_search_uses_cache(self, channels, params, monkeypatch):
        calls = []

        class Stub:
            def __init__(self, see):
                self.see = see

        def fake_run(protocol, ch, p, cfg, tau):
            calls.append(tau[0])
            return Stub(1.0 - (tau[0] - 0.4) ** 2)

        monkeypatch.setattr("src.optimizer.ts_search.ao_run", fake_run)
        search = TimeSwitchingSearch(channels, params, AOConfig())
        result = search.run()
        assert not result.fallback
        assert abs(result.tau_r - 0.4) < 0.05
        assert len(calls) == len(set(round(t, 6) for t in calls))

    def test_search_falls_back_on_multimodal(self, channels, params, monkeypatch):
        class Stub:
            def __init__(self, see):
                self.see = see

        def fake_run(protocol, ch, p, cfg, tau):
            return Stub(np.cos(12 * np.pi * tau[0]) + 2)

        monkeypatch.setattr("src.optimizer.ts_search.ao_run", fake_run)
        result = TimeSwitchingSearch(channels, params, AOConfig()).run()
        assert result.fallback
        assert len(result.evaluations) >= 40

    def test_search_all_infeasible(self, channels, params, monkeypatch):
        def fake_run(*args):
            raise InfeasibleInstanceError("no")

        monkeypatch.setattr("src.optimizer.ts_search.ao_run", fake_run)
        with pytest.raises(InfeasibleInstanceError):
            TimeSwitchingSearch(channels, params, AOConfig()).run()


class TestComplexity:
    def test_reference_sizes(self):
        est = complexity_estimate(5, 20, 2, 2)
        assert est.sigma == 6
        assert est.a1 == 106
        assert est.a2 == (12, 13)
        assert est.a3 == 12
        assert est.a4 == 11
        assert est.n1 == 4 and est.n2 == 10 and est.n3 == 40
        assert est.order_pairs == 2
        assert est.eve_blocks == 8

    def test_inventory_totals(self):
        blocks = block_inventory(5, 20, 2, 2)
        assert len(blocks) == 32
        est = complexity_estimate(5, 20, 2, 2)
        assert est.inventory_f[0] == sum(blocks.values()) == 1132
        assert est.inventory_f[2] == sum(size ** 3 for size in blocks.values())

    def test_closed_form_totals(self):
        est = complexity_estimate(5, 20, 2, 2)
        a1, a3, J = est.a1, est.a3, 4
        per_space = sum(j * (a1 + a2) + 2 * (a2 + a3) for j, a2 in zip((1, 2), est.a2))
        assert est.f1 == 2 * per_space + (J - 2) * (a1 + a3) == 1144
        assert est.f2 == sum(s ** 2 for sizes in closed_form_families(5, 20, 2, 2).values() for s in sizes)

    def test_mismatch_is_the_eve_interference_family(self):
        est = complexity_estimate(5, 20, 2, 2)
        assert len(est.mismatches) == 1
        assert est.mismatches[0].startswith("eve_interference")
        assert "11" in est.mismatches[0] and "12" in est.mismatches[0]
        assert est.f1 - est.inventory_f[0] == 2 * sum(a2 - est.a4 for a2 in est.a2) * 2

    @pytest.mark.parametrize("N,M,J_r,J_t", [(2, 2, 1, 1), (3, 4, 2, 1), (4, 6, 1, 3), (2, 8, 3, 2)])
    def test_other_families_match_built_sizes(self, N, M, J_r, J_t):
        est = complexity_estimate(N, M, J_r, J_t)
        assert all(m.startswith("eve_interference") for m in est.mismatches)

    def test_perfect_csi_inventory(self):
        blocks = block_inventory(2, 4, 1, 1, h_error=False, g_error=False)
        assert set(blocks) == {"bob_interference[0,0,0]", "bob_interference[1,0,0]", "eve_signal[0,0,0]",
                               "eve_signal[0,0,1]", "eve_signal[1,0,0]", "eve_signal[1,0,1]"}
        assert all(size == 2 for size in blocks.values())

    def test_growth(self):
        small, large = complexity_estimate(3, 8, 2, 2), complexity_estimate(3, 16, 2, 2)
        assert large.O_Phi > small.O_Phi
        assert large.f3 > small.f3

    def test_needs_a_bob(self):
        with pytest.raises(ValueError):
            complexity_estimate(2, 2, 0, 0)

    @pytest.mark.parametrize("kind", [BlockKind.ACTIVE, BlockKind.POWER, BlockKind.CERTIFY])
    def test_built_programs_match_inventory(self, es_point, params_noma, kind):
        state, ws, scaled = es_point
        program, _ = SubproblemBuilder(kind, state, ws, scaled, params_noma).build()
        assert cross_check(program, block_inventory(3, 4, 2, 2)) == []

    def test_passive_program_matches_inventory(self, es_point, params_noma):
        state, ws, scaled = es_point
        program, _ = SubproblemBuilder(BlockKind.PASSIVE, state, ws, scaled, params_noma,
                                       PassiveOptions(1e-3)).build()
        assert cross_check(program, block_inventory(3, 4, 2, 2)) == []

    def test_ts_program_matches_inventory(self, channels_noma, params_noma):
        scaled = normalize_channels(channels_noma, params_noma)
        state = init_state(Protocol.TS, scaled, params_noma, seed=0)
        ws = nominal_workspace(state, scaled, params_noma)
        program, _ = SubproblemBuilder(BlockKind.ACTIVE, state, ws, scaled, params_noma).build()
        assert cross_check(program, block_inventory(3, 4, 2, 2, Protocol.TS)) == []

    def test_cross_check_reports_differences(self, es_point, params_noma):
        state, ws, scaled = es_point
        program, _ = SubproblemBuilder(BlockKind.CERTIFY, state, ws, scaled, params_noma).build()
        expected = dict(block_inventory(3, 4, 2, 2))
        expected["bob_signal[0,0,0]"] += 1
        assert len(cross_check(program, expected)) == 1


class TestStartingPoint:
    @pytest.mark.parametrize("protocol", list(Protocol))
    def test_init_state_invariants(self, channels_noma, params_noma, protocol):
        scaled = normalize_channels(channels_noma, params_noma)
        state = init_state(protocol, scaled, params_noma, seed=0)
        for k in range(2):
            assert np.sum(state.alpha[k] ** 2) == pytest.approx(1.0)
        assert sum(np.linalg.norm(f) ** 2 for f in state.f) == pytest.approx(params_noma.p_max)
        if protocol in (Protocol.ES, Protocol.MS):
            np.testing.assert_allclose(state.beta[0] + state.beta[1], 1.0)
        if protocol is Protocol.TS:
            assert state.tau == (0.5, 0.5)
        if protocol is not Protocol.MS:
            state.check()

    def test_single_space_gets_full_power(self, geometry):
        params = SystemParams(N=2, M=4, J_r=2, J_t=0)
        ch = generate_realization(params, geometry, UncertaintyConfig(), seed=5)
        state = init_state(Protocol.ES, ch, params, seed=0)
        assert np.linalg.norm(state.f[0]) ** 2 == pytest.approx(params.p_max)
        assert np.linalg.norm(state.f[1]) == 0

    def test_nominal_workspace(self, es_point, channels_noma, params_noma):
        state, ws, scaled = es_point
        assert ws.rho == pytest.approx(total_power(state, params_noma))
        assert ws.t == pytest.approx(ws.rho / ws.psi)
        report = secrecy_energy_efficiency(state, channels_noma, params_noma)
        for (k, j), r in ws.r.items():
            assert r == pytest.approx(report.rates[(k, j)], rel=1e-9)

    def test_workspace_copy_is_independent(self, es_point):
        ws = es_point[1]
        other = ws.copy()
        other.r[(0, 0)] = -1.0
        assert ws.r[(0, 0)] != -1.0

    def test_passive_builder_requires_options(self, es_point, params_noma):
        state, ws, scaled = es_point
        with pytest.raises(ValueError):
            SubproblemBuilder(BlockKind.PASSIVE, state, ws, scaled, params_noma)

    def test_passive_blocks_freeze_surface_energy(self, es_point, params_noma):
        state, ws, scaled = es_point
        passive = SubproblemBuilder(BlockKind.PASSIVE, state, ws, scaled, params_noma, PassiveOptions(1e-3))
        assert passive._u_norm2(0) == pytest.approx(np.linalg.norm(state.u[0]) ** 2)
        assert passive._u_norm2(1) == pytest.approx(2.0)
        assert SubproblemBuilder(BlockKind.ACTIVE, state, ws, scaled, params_noma)._u_norm2(0) is None

    def test_zero_forcing_nulls_the_other_space(self, channels, params):
        scaled = normalize_channels(channels, params)
        state = init_state(Protocol.ES, scaled, params, seed=0)
        pointed = zero_forcing_beams(state, scaled)
        for k in range(2):
            assert np.linalg.norm(pointed.f[k]) == pytest.approx(np.linalg.norm(state.f[k]))
            link = scaled.bob(1 - k, 0)
            row = combined_channel(link.h_hat, link.G_hat, state.u[1 - k])
            assert abs(row @ pointed.f[k]) < 1e-9 * np.linalg.norm(row) * np.linalg.norm(pointed.f[k])

    def test_zero_forcing_leaves_ts_alone(self, channels, params):
        scaled = normalize_channels(channels, params)
        state = init_state(Protocol.TS, scaled, params, seed=0)
        assert zero_forcing_beams(state, scaled) is state

    def test_backoff_stops_at_first_certified_scale(self, channels, params, monkeypatch):
        scaled = normalize_channels(channels, params)
        state = init_state(Protocol.ES, scaled, params, seed=0)

        def fake_certify(candidate, *args):
            return "certified" if total_power(candidate, params) <= 0.05 * params.p_max + params.static_power else None

        monkeypatch.setattr("src.optimizer.initialization.certify", fake_certify)
        found, ws = backoff(state, scaled, params, AOConfig())
        assert ws == "certified"
        transmit = sum(np.linalg.norm(f) ** 2 for f in found.f)
        assert transmit == pytest.approx(params.p_max * 10 ** (-1.5))

    def test_backoff_without_certificate_returns_a_scaled_candidate(self, channels, params, monkeypatch):
        scaled = normalize_channels(channels, params)
        state = init_state(Protocol.ES, scaled, params, seed=0)
        monkeypatch.setattr("src.optimizer.initialization.certify", lambda *args: None)
        cfg = AOConfig(backoff_steps=4)
        found, ws = backoff(state, scaled, params, cfg)
        assert ws is None
        ratio = sum(np.linalg.norm(f) ** 2 for f in found.f) / params.p_max
        assert any(ratio == pytest.approx(10 ** (-cfg.backoff_db * i / 10)) for i in range(cfg.backoff_steps + 1))


class TestDriverBlocks:
    @pytest.fixture
    def start(self, channels, params):
        scaled = normalize_channels(channels, params)
        state = init_state(Protocol.MS, scaled, params, seed=0)
        return state, nominal_workspace(state, scaled, params)

    def test_active_step_certifies(self, channels, params, start, monkeypatch):
        state, ws = start
        better = ws.copy()
        better.psi = ws.psi + 1.0
        moved = state.with_(f=tuple(2 * f for f in state.f))
        monkeypatch.setattr("src.optimizer.ao.active_subproblem",
                            lambda *args: SimpleNamespace(ok=True, state=moved, workspace=better, status="optimal"))
        monkeypatch.setattr("src.optimizer.ao.certify", lambda *args: None)
        kept, kept_ws, status = AlternatingOptimizer(Protocol.ES, channels, params).active_step(state, ws)
        assert status == "rejected"
        assert kept is state and kept_ws is ws

    def test_active_step_uses_the_certificate(self, channels, params, start, monkeypatch):
        state, ws = start
        cert = ws.copy()
        cert.psi = ws.psi + 0.5
        stale = ws.copy()
        stale.psi = ws.psi + 9.0
        monkeypatch.setattr("src.optimizer.ao.active_subproblem",
                            lambda *args: SimpleNamespace(ok=True, state=state, workspace=stale, status="optimal"))
        monkeypatch.setattr("src.optimizer.ao.certify", lambda *args: cert)
        _, new_ws, status = AlternatingOptimizer(Protocol.ES, channels, params).active_step(state, ws)
        assert status == "optimal"
        assert new_ws is cert

    def test_near_binary_amplitudes_are_kept(self, channels, params, start, monkeypatch):
        state, ws = start
        phases = [np.exp(1j * np.angle(u)) for u in state.u]
        near = state.with_(u=(np.sqrt(1 - 4e-4) * phases[0], np.sqrt(4e-4) * phases[1]))
        monkeypatch.setattr("src.optimizer.ao.certify", lambda *args: pytest.fail("no rounding expected"))
        kept, kept_ws, certified = AlternatingOptimizer(Protocol.MS, channels, params)._finalize_ms(near, ws)
        assert kept is near and kept_ws is ws and certified

    def test_tighter_binary_tolerance_rounds(self, channels, params, start, monkeypatch):
        state, ws = start
        phases = [np.exp(1j * np.angle(u)) for u in state.u]
        near = state.with_(u=(np.sqrt(1 - 4e-4) * phases[0], np.sqrt(4e-4) * phases[1]))
        monkeypatch.setattr("src.optimizer.ao.certify", lambda *args: ws)
        driver = AlternatingOptimizer(Protocol.MS, channels, params, AOConfig(ms_binary_tol=1e-6))
        rounded, _, certified = driver._finalize_ms(near, ws)
        np.testing.assert_allclose(rounded.beta[0], 1.0)
        assert certified

    def test_uncertified_rounding_is_not_converged(self, channels, params, start, monkeypatch):
        state, ws = start
        outcome = SimpleNamespace(penalty=0.0, ms_penalty=0.0)
        monkeypatch.setattr("src.optimizer.ao.initialize", lambda *args: (state, ws.copy()))
        monkeypatch.setattr("src.optimizer.ao.certify", lambda *args: None)
        monkeypatch.setattr(AlternatingOptimizer, "power_step", lambda self, s, w: (s, w, "skipped"))
        monkeypatch.setattr(AlternatingOptimizer, "active_step", lambda self, s, w: (s, w, "optimal"))
        monkeypatch.setattr(AlternatingOptimizer, "passive_step", lambda self, s, w: (s, w, "optimal", outcome))
        result = AlternatingOptimizer(Protocol.MS, channels, params).run()
        assert result.iterations == 1
        assert not result.converged
        assert set(np.round(result.state.beta[0], 9)) <= {0.0, 1.0}


class TestOma:
    def test_slot_instance(self, channels_noma, params_noma):
        slot_params, slot_channels = slot_instance(channels_noma, params_noma, 1, 1)
        assert (slot_params.J_r, slot_params.J_t) == (0, 1)
        assert slot_channels.bobs[0] == ()
        assert slot_channels.bob(1, 0) is channels_noma.bob(1, 1)
        assert slot_channels.eves is channels_noma.eves

    def test_baseline_averages_slots(self, channels, params, monkeypatch):
        class Report:
            ssr = 2.0

        class Result:
            report = Report()
            converged = True
            iterations = 3

            def __init__(self, f):
                self.state = type("S", (), {"f": f})

        seen = []

        def fake_run(protocol, ch, p, cfg, tau):
            seen.append(tau)
            return Result((np.ones(2), np.zeros(2)))

        monkeypatch.setattr("src.optimizer.oma.ao_run", fake_run)
        out = oma_baseline(Protocol.TS, channels, params)
        assert seen == [(1.0, 0.0), (0.0, 1.0)]
        assert out.ssr == pytest.approx(2.0)
        assert out.power == pytest.approx(params.amplifier_efficiency * 2.0 + params.static_power)
        assert out.see == pytest.approx(out.ssr / out.power)
        assert out.converged and out.iterations == 6

    def test_infeasible_slot_is_recorded(self, channels, params, monkeypatch):
        def fake_run(*args):
            raise InfeasibleInstanceError("slot")

        monkeypatch.setattr("src.optimizer.oma.ao_run", fake_run)
        out = oma_baseline(Protocol.ES, channels, params)
        assert [s.ok for s in out.slots] == [False, False]
        assert out.ssr == 0.0
        assert not out.converged


@pytest.fixture
def loose_params():
    return SystemParams(N=2, M=4, J_r=1, J_t=1, min_rate=0.2, max_leakage=0.1)


@pytest.fixture
def loose_channels(loose_params, geometry):
    return generate_realization(loose_params, geometry, UncertaintyConfig(), seed=7)


DESK = PROFILES['desk']


def _desk_params(**changes) -> SystemParams:
    return SystemParams(**{**DESK['system'], **changes})


def _desk_channels(params, seed, uncertainty=None):
    return generate_realization(params, Geometry(), uncertainty or UncertaintyConfig(), seed=seed)


def _attempt(protocol, channels, params, cfg=None, tau=None):
    try:
        return ao_run(protocol, channels, params, cfg or AOConfig(), tau)
    except InfeasibleInstanceError:
        return None


def _mean_see(results):
    return float(np.mean([r.see for r in results if r is not None]))


@pytest.fixture(scope="module")
def desk_runs():
    """ES, MS and SF runs on the desk profile keyed by seed; None marks an infeasible drop."""
    params = _desk_params()
    runs = {}
    for seed in range(DESK['seeds']):
        ch = _desk_channels(params, seed)
        runs[seed] = {'channels': ch, **{p: _attempt(p, ch, params) for p in (Protocol.ES, Protocol.MS, Protocol.SF)}}
    return params, runs


@pytest.mark.slow
class TestAlternatingOptimization:
    @pytest.mark.parametrize("protocol", [Protocol.ES, Protocol.SF])
    def test_trace_is_monotone(self, loose_channels, loose_params, ao_config, protocol, tmp_path):
        result = ao_run(protocol, loose_channels, loose_params, ao_config)
        psis = [r.psi for r in result.trace]
        assert all(b >= a - 3 * ao_config.monotonicity_slack for a, b in zip(psis, psis[1:]))
        assert result.iterations == len(result.trace) - 1
        result.state.check()
        assert result.see == pytest.approx(result.report.ssr / result.report.power)
        path = tmp_path / "trace.txt"
        export_trace(result.trace, str(path))
        assert len(path.read_text().splitlines()) == len(result.trace) + 1

    def test_ms_output_is_binary(self, loose_channels, loose_params, ao_config):
        result = ao_run(Protocol.MS, loose_channels, loose_params, ao_config)
        beta_r = result.state.beta[0]
        assert np.all(np.minimum(beta_r, 1 - beta_r) <= ao_config.ms_binary_tol)

    def test_ts_fixed_split(self, loose_channels, loose_params, ao_config):
        result = ao_run(Protocol.TS, loose_channels, loose_params, ao_config, (0.5, 0.5))
        assert result.state.tau == (0.5, 0.5)
        result.state.check()

    def test_oma_single_bob(self, loose_channels, loose_params, ao_config):
        out = oma_baseline(Protocol.ES, loose_channels, loose_params, ao_config)
        assert len(out.slots) == 2
        assert all(s.ok for s in out.slots)
        assert out.see > 0

    def test_single_block_steps(self, loose_channels, loose_params, ao_config):
        scaled = normalize_channels(loose_channels, loose_params)
        state, ws = initialize(Protocol.ES, scaled, loose_params, ao_config)
        active = active_subproblem(state, ws, scaled, loose_params, ao_config)
        assert active.ok
        assert active.workspace.psi >= ws.psi - 1e-4 * max(1.0, ws.psi)
        power = power_subproblem(state, ws, scaled, loose_params, ao_config)
        assert power.ok
        assert [a.shape for a in power.state.alpha] == [a.shape for a in state.alpha]


@pytest.mark.slow
class TestDeskProfile:
    def test_most_drops_are_feasible(self, desk_runs):
        _, runs = desk_runs
        assert sum(r[Protocol.ES] is not None for r in runs.values()) >= DESK['seeds'] - 1

    def test_es_traces_are_monotone_and_converge(self, desk_runs):
        _, runs = desk_runs
        cfg = AOConfig()
        for seed, r in runs.items():
            result = r[Protocol.ES]
            if result is None:
                continue
            psis = [t.psi for t in result.trace]
            # up to three accepted blocks per iteration
            assert all(b >= a - 3 * cfg.monotonicity_slack for a, b in zip(psis, psis[1:])), seed
            assert result.converged, seed
            assert result.iterations <= cfg.max_iterations

    def test_imperfect_csi_needs_at_least_as_many_iterations(self, desk_runs):
        params, runs = desk_runs
        pairs = []
        for seed, r in runs.items():
            perfect = _attempt(Protocol.ES, _desk_channels(params, seed, UncertaintyConfig.perfect()), params)
            if r[Protocol.ES] is not None and perfect is not None:
                pairs.append(r[Protocol.ES].iterations >= perfect.iterations)
        assert pairs
        assert 2 * sum(pairs) > len(pairs)

    def test_converged_states_survive_sampled_errors(self, desk_runs):
        params, runs = desk_runs
        for seed, r in runs.items():
            result = r[Protocol.ES]
            if result is None or not result.converged:
                continue
            for draw in range(1000):
                truth = r['channels'].resample_truth(1000 * seed + draw)
                report = secrecy_energy_efficiency(result.state, truth, params, truth=True)
                assert min(report.rates.values()) >= params.min_rate - 1e-3
                assert max(report.leakage.values()) <= params.max_leakage + 1e-3

    def test_decoding_order_holds(self, geometry):
        params = _desk_params(J_t=2)
        uncertainty = UncertaintyConfig(kappa_h_bob=0.1, kappa_g_bob=0.1, kappa_h_eve=0.1, kappa_g_eve=0.1)
        feasible = 0
        for seed in range(DESK['seeds']):
            ch = _desk_channels(params, seed, uncertainty)
            result = _attempt(Protocol.ES, ch, params)
            if result is None:
                continue
            feasible += 1
            holds, margins = decoding_order_ok(result.state, ch)
            assert holds, margins
            assert len(margins) == 1
        assert feasible >= 3

    def test_ms_is_a_special_case_of_es(self, desk_runs):
        _, runs = desk_runs
        for seed, r in runs.items():
            es, ms = r[Protocol.ES], r[Protocol.MS]
            if es is not None and ms is not None:
                assert ms.see <= es.see * (1 + 1e-2), seed

    def test_ms_rounding_barely_moves_see(self, desk_runs):
        _, runs = desk_runs
        for seed, r in runs.items():
            ms = r[Protocol.MS]
            if ms is None:
                continue
            beta_r = ms.state.beta[0]
            assert np.all(np.minimum(beta_r, 1 - beta_r) <= AOConfig().ms_binary_tol)
            before = ms.trace[-1].see
            assert abs(ms.see - before) < 1e-2 * before, seed

    def test_protocol_ordering(self, desk_runs):
        _, runs = desk_runs
        es, ms, sf = (_mean_see([r[p] for r in runs.values()]) for p in (Protocol.ES, Protocol.MS, Protocol.SF))
        assert es >= ms * (1 - 1e-2)
        assert ms >= sf * (1 - 1e-2)

    @pytest.mark.parametrize("protocol", [Protocol.ES, Protocol.SF])
    def test_noma_beats_oma(self, desk_runs, protocol):
        params, runs = desk_runs
        noma, oma = [], []
        for r in runs.values():
            if r[protocol] is None:
                continue
            noma.append(r[protocol].see)
            oma.append(oma_baseline(protocol, r['channels'], params, AOConfig()).see)
        assert noma
        assert np.mean(noma) > np.mean(oma)

    def test_see_saturates_in_power(self, desk_runs):
        _, runs = desk_runs
        loud = _desk_params(p_max='50 dBm')
        base, high = [], []
        for seed, r in runs.items():
            result = _attempt(Protocol.ES, _desk_channels(loud, seed), loud)
            if r[Protocol.ES] is not None and result is not None:
                base.append(r[Protocol.ES].see)
                high.append(result.see)
        assert base
        assert np.mean(high) - np.mean(base) <= 0.15 * np.mean(base)


@pytest.mark.slow
class TestTimeSwitchingSymmetry:
    @pytest.fixture(scope="class")
    def mirrored(self):
        params = _desk_params()
        ch = _desk_channels(params, 0)
        return params, replace(ch, bobs=(ch.bobs[0], ch.bobs[0]), eves=(ch.eves[0], ch.eves[0]))

    def test_mirror_splits_match(self, mirrored):
        params, ch = mirrored
        left = ao_run(Protocol.TS, ch, params, AOConfig(), (0.3, 0.7))
        right = ao_run(Protocol.TS, ch, params, AOConfig(), (0.7, 0.3))
        assert left.see == pytest.approx(right.see, rel=2e-2)

    def test_search_lands_in_the_middle(self, mirrored):
        params, ch = mirrored
        result = ts_two_layer(ch, params, AOConfig())
        assert not result.fallback
        assert 0.275 - 1e-9 <= result.tau_r <= 0.725 + 1e-9
        assert result.evaluations[0.275] == pytest.approx(result.evaluations[0.725], rel=2e-2)
