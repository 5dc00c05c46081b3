import os

import numpy as np
import pandas as pd
import pytest

from src.experiments import (ConfigError, ResultRow, amplitude_table, campaign_tasks, load_config,
                             normalize_scheme, parse_config, row_key, run_campaign, split_scheme, summarize,
                             summary_table)
from src.metrics import Protocol

BASE = """
[system]
N = 2
M = 4
J_r = 1
J_t = 1

[campaign]
schemes = ES, OMA-sf, noma-ms
sweep = p_max
values = 20 dBm, 30 dBm, 40 dBm   # budget sweep
seeds = 2

[optimizer]
max_iterations = 12
pccp_lambda0 = 0.01
ts_grid_points = 7
"""


def _write(tmp_path, text, name="exp.ini"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def _row(scheme, value, seed, see=0.1, status='ok', converged=True, beta_r='0.5000 0.5000'):
    beta_t = ' '.join(f"{1 - float(b):.4f}" for b in beta_r.split())
    return ResultRow(scheme=scheme, sweep='p_max', value=value, seed=seed, see=see, ssr=see * 20, power=20.0,
                     iterations=4, converged=converged, status=status, mean_beta_r=0.5, mean_beta_t=0.5,
                     beta_r=beta_r, beta_t=beta_t, wall_ms=1.0)


class TestSchemes:
    def test_normalize(self):
        assert normalize_scheme("es") == "NOMA-ES"
        assert normalize_scheme(" oma-ts ") == "OMA-TS"
        with pytest.raises(ValueError):
            normalize_scheme("NOMA-XX")

    def test_split(self):
        assert split_scheme("OMA-SF") == ("OMA", Protocol.SF)


class TestConfigLoading:
    def test_load(self, tmp_path):
        config = load_config(_write(tmp_path, BASE))
        assert config.campaign.schemes == ("NOMA-ES", "OMA-SF", "NOMA-MS")
        np.testing.assert_allclose(config.campaign.values, [0.1, 1.0, 10.0])
        assert config.campaign.seed_list == [0, 1]
        assert config.optimizer.max_iterations == 12
        assert config.optimizer.pccp.lambda0 == pytest.approx(0.01)
        assert config.optimizer.ts.grid_points == 7

    def test_defaults_fill_missing_sections(self, tmp_path):
        config = load_config(_write(tmp_path, "[system]\nN = 2\nM = 2\nJ_r = 1\nJ_t = 0\n"))
        assert config.campaign.sweep == 'none'
        assert config.campaign.points == [None]
        assert config.system.p_max == pytest.approx(10.0)
        assert config.geometry.ris == (0.0, 30.0, 20.0)

    def test_missing_field_is_named(self, tmp_path):
        with pytest.raises(ConfigError) as err:
            load_config(_write(tmp_path, "[system]\nN = 2\nJ_r = 1\nJ_t = 1\n"))
        assert "system.M" in str(err.value)

    def test_unknown_key_rejected(self, tmp_path):
        with pytest.raises(ConfigError) as err:
            load_config(_write(tmp_path, BASE.replace("N = 2", "N = 2\nantennas = 4")))
        assert "system.antennas" in str(err.value)

    def test_unknown_section_rejected(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(_write(tmp_path, BASE + "\n[plots]\nstyle = dark\n"))

    def test_unsorted_values_rejected(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(_write(tmp_path, BASE.replace("20 dBm, 30 dBm", "30 dBm, 20 dBm")))

    def test_integer_sweep(self):
        with pytest.raises(ConfigError):
            parse_config({'system': {'N': 2, 'M': 4, 'J_r': 1, 'J_t': 1},
                          'campaign': {'sweep': 'M', 'values': '4, 6.5'}})

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(str(tmp_path / "absent.ini"))

    def test_overrides(self, tmp_path):
        config = load_config(_write(tmp_path, BASE), profile='paper', seeds=3, output=str(tmp_path / "out"))
        assert (config.system.N, config.system.M) == (5, 20)
        assert config.campaign.seeds == 3
        assert config.output_dir == str(tmp_path / "out")
        with pytest.raises(ConfigError):
            load_config(_write(tmp_path, BASE), profile='huge')

    def test_at_sweep_values(self, tmp_path):
        config = load_config(_write(tmp_path, BASE))
        params, _, _ = config.at(1.0)
        assert params.p_max == pytest.approx(1.0)
        assert config.system.p_max == pytest.approx(10.0)

    def test_at_other_axes(self):
        base = {'system': {'N': 2, 'M': 4, 'J_r': 1, 'J_t': 1}}
        config = parse_config({**base, 'campaign': {'sweep': 'ris_x', 'values': '-5, 5'}})
        assert config.at(5.0)[1].ris == (5.0, 30.0, 20.0)
        config = parse_config({**base, 'campaign': {'sweep': 'kappa_g', 'values': '0.1, 0.3'}})
        unc = config.at(0.3)[2]
        assert unc.kappa_g_bob == unc.kappa_g_eve == pytest.approx(0.3)
        config = parse_config({**base, 'campaign': {'sweep': 'M', 'values': '4, 8'}})
        assert config.at(8.0)[0].M == 8

    @pytest.mark.parametrize("name", sorted(os.listdir(os.path.join(os.path.dirname(__file__), "..", "configs"))))
    def test_shipped_configs_load(self, name):
        path = os.path.join(os.path.dirname(__file__), "..", "configs", name)
        config = load_config(path)
        assert config.campaign.schemes


class TestCampaign:
    @pytest.fixture
    def config(self, tmp_path):
        return load_config(_write(tmp_path, BASE), output=str(tmp_path / "results"))

    def test_tasks_cover_the_grid(self, config):
        tasks = list(campaign_tasks(config))
        assert len(tasks) == 3 * 3 * 2
        assert len({row_key(*t) for t in tasks}) == 18

    def test_row_key(self):
        assert row_key("NOMA-ES", 10.0, 1) == row_key("NOMA-ES", 10, 1.0)
        assert row_key("NOMA-ES", None, 0) == row_key("NOMA-ES", float('nan'), 0)

    def test_run_and_resume(self, config, monkeypatch):
        calls = []

        def fake_point(cfg, scheme, value, seed):
            calls.append((scheme, value, seed))
            return _row(scheme, value, seed, see=0.01 * seed + value / 100)

        monkeypatch.setattr("src.experiments.campaign.run_point", fake_point)
        rows = run_campaign(config, workers=1)
        assert len(rows) == 18
        assert len(calls) == 18
        keys = [(r.scheme, r.value, r.seed) for r in rows]
        assert keys == sorted(keys)
        assert rows[0].beta_r == '0.5000 0.5000'

        first = pd.read_csv(os.path.join(config.output_dir, "results.csv"))
        calls.clear()
        again = run_campaign(config, workers=1)
        assert calls == []
        assert len(again) == 18
        pd.testing.assert_frame_equal(first, pd.read_csv(os.path.join(config.output_dir, "results.csv")))
        timings = pd.read_csv(os.path.join(config.output_dir, "timings.csv"))
        assert list(timings.columns) == ['scheme', 'value', 'seed', 'wall_ms']

    def test_partial_file_is_completed(self, config, monkeypatch):
        monkeypatch.setattr("src.experiments.campaign.run_point",
                            lambda cfg, scheme, value, seed: _row(scheme, value, seed))
        os.makedirs(config.output_dir)
        path = os.path.join(config.output_dir, "results.csv")
        pd.DataFrame([_row("NOMA-ES", 0.1, 0).record()]).to_csv(path, index=False)
        rows = run_campaign(config, workers=1)
        assert len(rows) == 18
        assert len({(r.scheme, r.value, r.seed) for r in rows}) == 18


class TestSummary:
    def test_mean_and_sem(self):
        rows = [_row("NOMA-ES", 10.0, 0, see=0.1), _row("NOMA-ES", 10.0, 1, see=0.3),
                _row("NOMA-MS", 10.0, 0, see=0.2)]
        table = summary_table(rows)
        es = table[table['scheme'] == "NOMA-ES"].iloc[0]
        assert es['see_mean'] == pytest.approx(0.2)
        assert es['see_sem'] == pytest.approx(0.1)
        assert es['seeds'] == 2
        ms = table[table['scheme'] == "NOMA-MS"].iloc[0]
        assert ms['see_sem'] == 0.0

    def test_empty_rows_rejected(self):
        with pytest.raises(ValueError):
            summary_table([])

    def test_amplitudes_skip_failed_runs(self):
        rows = [_row("NOMA-ES", 10.0, 0, beta_r='0.2000 0.8000'),
                _row("NOMA-ES", 10.0, 1, beta_r='0.4000 0.6000'),
                _row("NOMA-ES", 10.0, 2, beta_r='1.0000 1.0000', status='infeasible', converged=False)]
        table = amplitude_table(rows)
        np.testing.assert_allclose(table['beta_r'], [0.3, 0.7])
        np.testing.assert_allclose(table['beta_t'], [0.7, 0.3])

    def test_summarize_writes_outputs(self, tmp_path):
        rows = [_row(s, v, seed, see=0.1 + seed) for s in ("NOMA-ES", "OMA-ES") for v in (1.0, 10.0)
                for seed in (0, 1)]
        pd.DataFrame([r.record() for r in rows]).to_csv(tmp_path / "results.csv", index=False)
        summary = summarize(str(tmp_path / "results.csv"))
        assert len(summary) == 4
        for name in ("summary.csv", "see_vs_p_max.svg", "amplitudes.csv", "amplitudes.svg"):
            assert (tmp_path / name).exists()
