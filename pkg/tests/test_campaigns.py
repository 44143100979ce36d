import pytest

from specflow.exceptions import ParameterError
from specflow.services.campaigns import (
    SUITES,
    CampaignRunner,
    check_difference_counterexample,
    difference_counterexample,
    run_suite,
    run_suites,
)


class TestSuites:
    @pytest.mark.parametrize("suite", ["metric", "sum-diff", "bhatia-sinha", "hoffman-wielandt", "kato"])
    def test_small_campaign_passes(self, suite):
        report = run_suite(suite, seed=11, count=24)
        assert report.passed, report.failures
        assert report.count == 24
        assert report.min_slack >= -1e-9

    def test_flow_agreement(self):
        report = run_suite("flow-agreement", seed=5, count=2, steps=256)
        assert report.passed, report.failures

    def test_reproducible(self):
        first = run_suite("bhatia-sinha", seed=3, count=10)
        second = run_suite("bhatia-sinha", seed=3, count=10)
        assert first.min_slack == second.min_slack
        assert first.max_slack == second.max_slack

    def test_summary_line(self):
        report = run_suite("kato", seed=1, count=3)
        assert report.summary().startswith("kato: PASS count=3")

    def test_all_names(self):
        assert len(run_suites("all", seed=2, count=0)) == len(SUITES)

    def test_unknown_suite(self):
        with pytest.raises(ParameterError):
            run_suite("nope")
        with pytest.raises(ParameterError):
            run_suite("kato", count=-1)


class TestCampaignRunner:
    def test_matches_module_functions(self):
        runner = CampaignRunner(seed=3)
        report = runner.run_suite("bhatia-sinha", 10)
        assert report.min_slack == run_suite("bhatia-sinha", seed=3, count=10).min_slack

    def test_worker_count_does_not_change_results(self):
        serial = CampaignRunner(seed=7, max_workers=1).run_suite("metric", 12)
        pooled = CampaignRunner(seed=7, max_workers=4).run_suite("metric", 12)
        assert serial.min_slack == pooled.min_slack
        assert serial.max_slack == pooled.max_slack

    def test_statistics(self):
        runner = CampaignRunner(seed=2)
        runner.run_suites("all", 0)
        runner.run_suite("kato", 3)
        stats = runner.get_statistics()
        assert stats["suites"] == list(SUITES) + ["kato"]
        assert stats["instances"] == 3
        assert stats["failed_suites"] == []
        assert stats["failures"] == 0


class TestCounterexample:
    def test_fixture_shape(self):
        S, S_inner, T, T_inner = difference_counterexample(16)
        assert S.rank == 16 and T_inner.rank == 15
        assert S == S_inner == T

    def test_naive_bound_fails(self):
        lhs, naive = check_difference_counterexample(16)
        assert lhs == pytest.approx(1.0, abs=1e-12)
        assert naive <= 0.25 + 1e-12

    def test_small_n_rejected(self):
        with pytest.raises(ParameterError):
            difference_counterexample(1)
