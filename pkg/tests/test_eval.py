import numpy as np
import pytest

from isac_tsde.channel import ScenarioSpec
from isac_tsde.estimator import StopRule, build_bank
from isac_tsde.eval import (
    MonteCarloReport,
    MonteCarloRow,
    SweepConfig,
    detection_probability,
    nmse,
    oracle_exhaustive,
    run_sweep,
    run_trial,
)


@pytest.fixture
def sweep(cfg):
    spec = ScenarioSpec(2, 31 * cfg.T_s, 96 * cfg.T_s, min_separation=cfg.T_s)
    return SweepConfig(cfg, spec, snr_grid=(0.0, 10.0), trials=8, master_seed=5)


class TestMetrics:
    def test_detection_probability(self):
        assert detection_probability([(2, 2), (1, 2), (3, 2), (2, 2)]) == 0.5

    def test_detection_probability_empty(self):
        with pytest.raises(ValueError):
            detection_probability([])

    def test_nmse_exact(self):
        assert nmse([1e-7, 2e-7], [2e-7, 1e-7]) == 0.0

    def test_nmse_one_sample_off(self, cfg):
        assert nmse([100 * cfg.T_s], [101 * cfg.T_s]) == pytest.approx(1e-4)

    def test_nmse_half_exact(self):
        assert nmse([1.0, 2.0], [1.0, 2.2]) == pytest.approx(0.005)

    def test_nmse_value(self):
        # ((0.1/1)^2 + (0.2/2)^2) / 2
        assert nmse([1.0, 2.0], [1.1, 1.8]) == pytest.approx(0.01)

    def test_hungarian_never_worse(self, rng):
        for _ in range(50):
            tau = np.sort(rng.uniform(1, 2, 3))
            est = tau + rng.normal(0, 0.3, 3)
            assert nmse(tau, est, "hungarian") <= nmse(tau, est) + 1e-15

    @pytest.mark.parametrize("tau, est, pairing", [
        ([1.0], [1.0, 2.0], "sorted"),
        ([], [], "sorted"),
        ([0.0, 1.0], [0.0, 1.0], "sorted"),
        ([1.0], [1.0], "greedy"),
    ])
    def test_nmse_invalid(self, tau, est, pairing):
        with pytest.raises(ValueError):
            nmse(tau, est, pairing)


class TestOracle:
    def test_finds_support(self, small_cfg):
        bank = build_bank(1, small_cfg)
        r = bank.matrix[:, 3] + 0.5 * bank.matrix[:, 11]
        assert sorted(oracle_exhaustive(r, bank, 2)) == [3, 11]

    def test_limits(self, small_cfg):
        bank = build_bank(1, small_cfg)
        with pytest.raises(ValueError):
            oracle_exhaustive(np.ones(small_cfg.K1), bank, 3)
        with pytest.raises(ValueError, match="too large"):
            oracle_exhaustive(np.ones(small_cfg.K1), bank, 1, region=range(300))


class TestSweepConfig:
    @pytest.mark.parametrize("kw", [dict(trials=0), dict(snr_grid=()), dict(methods=()),
                                    dict(methods=("music",)), dict(gamma_th=1.5)])
    def test_invalid(self, sweep, kw):
        base = dict(cfg=sweep.cfg, scenario=sweep.scenario)
        with pytest.raises(ValueError):
            SweepConfig(**base, **kw)

    def test_detection_rule(self, sweep):
        assert sweep.detection_rule(10.0).mode == "noise_floor"
        assert sweep.detection_rule(None) == StopRule.threshold()
        assert sweep.detection_rule(np.inf) == StopRule.threshold()
        fixed = SweepConfig(sweep.cfg, sweep.scenario, gamma_th=0.05)
        assert fixed.detection_rule(10.0) == StopRule.threshold(0.05)

    def test_grid_normalized(self, sweep):
        assert sweep.snr_grid == (0.0, 10.0)
        assert isinstance(sweep.methods, tuple)


class TestTrials:
    def test_trial_reproducible(self, sweep):
        assert run_trial(sweep, "tsde", 1, 3) == run_trial(sweep, "tsde", 1, 3)

    def test_methods_share_channel(self, sweep, monkeypatch):
        import isac_tsde.eval as ev

        seen = {}
        real = ev.generate_channel

        def spy(spec, cfg, rng):
            ch = real(spec, cfg, rng)
            seen.setdefault("channels", []).append(ch)
            return ch

        monkeypatch.setattr(ev, "generate_channel", spy)
        for method in ("tsde", "collocated", "fullband"):
            run_trial(sweep, method, 0, 2)
        a, b, c = seen["channels"]
        assert a == b == c

    def test_single_trial_single_path(self, cfg):
        spec = ScenarioSpec(1, 100 * cfg.T_s, 10 * cfg.T_s)
        row = run_sweep(SweepConfig(cfg, spec, snr_grid=(np.inf,), trials=1,
                                    methods=("tsde",))).rows[0]
        assert (row.pd, row.nmse, row.failures) == (1.0, 0.0, 0)

    def test_fullband_high_snr(self, cfg):
        spec = ScenarioSpec(2, 100 * cfg.T_s, 10 * cfg.T_s, min_separation=cfg.T_s)
        row = run_sweep(SweepConfig(cfg, spec, snr_grid=(30.0,), trials=200,
                                    methods=("fullband",))).rows[0]
        assert row.pd >= 0.99

    def test_fullband_noiseless_perfect(self, cfg):
        spec = ScenarioSpec(3, 100 * cfg.T_s, 10 * cfg.T_s, min_separation=cfg.T_s)
        sc = SweepConfig(cfg, spec, snr_grid=(np.inf,), trials=5, methods=("fullband",))
        row = run_sweep(sc).rows[0]
        assert row.pd == 1.0 and row.nmse == 0.0


class TestReport:
    def test_csv_format(self):
        rows = [MonteCarloRow("tsde", 10.0, 100, 0.93, 1.25e-4, 2.0),
                MonteCarloRow("fullband", -5.0, 100, 1.0, 0.0, 2.0)]
        text = MonteCarloReport(rows).to_csv()
        assert text == ("method,snr_db,trials,pd,nmse\n"
                        "tsde,10.00,100,0.930000,1.250000e-04\n"
                        "fullband,-5.00,100,1.000000,0.000000e+00\n")

    def test_row_lookup(self, sweep):
        report = run_sweep(SweepConfig(sweep.cfg, sweep.scenario, snr_grid=(5.0,), trials=2,
                                       methods=("collocated",)))
        assert report.row("collocated", 5).trials == 2
        with pytest.raises(KeyError):
            report.row("tsde", 5)

    def test_rows_and_threads(self, sweep):
        serial = run_sweep(sweep)
        parallel = run_sweep(sweep, threads=3)
        assert [(r.method, r.snr_db) for r in serial.rows] == [
            (m, s) for m in ("tsde", "collocated", "fullband") for s in (0.0, 10.0)]
        assert serial.to_csv() == parallel.to_csv()
        for row in serial.rows:
            assert row.correct.shape == (sweep.trials,)
            assert row.failures == int(np.isnan(row.errors).sum())
