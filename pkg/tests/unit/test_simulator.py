"""Unit tests for fleet/simulator.py and fleet/models.py."""

import pytest
from pydantic import ValidationError

from core.exceptions import InvalidArgumentError, UnsupportedPolicyError
from fleet.models import SimConfig
from fleet.simulator import convergence_study, run_replication, simulate
from policies.models import Discipline, PolicySpec
from tests.factories import make_sim_config

# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------


class TestSimConfig:
    def test_parses_policy_text_and_alias(self):
        config = SimConfig.model_validate(
            {"policy": "lldk:d=4,k=2", "lambda": 0.6, "n_servers": 10, "horizon": 5.0}
        )
        assert config.policy == PolicySpec.lldk(4, 2)
        assert config.lam == 0.6

    def test_sorts_ccdf_points(self):
        assert make_sim_config(ccdf_points=[2.0, 0.0, 1.0]).ccdf_points == [0.0, 1.0, 2.0]

    def test_rejects_negative_ccdf_point(self):
        with pytest.raises(ValidationError):
            make_sim_config(ccdf_points=[-1.0])

    def test_warmup_below_horizon(self):
        with pytest.raises(ValidationError):
            make_sim_config(horizon=10.0, warmup=10.0)

    def test_probe_count_fits_fleet(self):
        with pytest.raises(ValidationError):
            make_sim_config(policy=PolicySpec.ll(5), n_servers=4)

    @pytest.mark.parametrize(
        "fields", [{"lam": 1.0}, {"seed": -1}, {"seed": 2**64}, {"n_servers": 1}]
    )
    def test_rejects_out_of_range(self, fields):
        with pytest.raises(ValidationError):
            make_sim_config(**fields)

    def test_forbids_unknown_fields(self):
        with pytest.raises(ValidationError):
            make_sim_config(servers=10)


# ---------------------------------------------------------------------------
# Replications
# ---------------------------------------------------------------------------


class TestRunReplication:
    def test_counts_and_balance(self):
        config = make_sim_config(n_servers=100, horizon=50.0, warmup=10.0)
        result = run_replication(config, 0)
        # about lambda N (horizon - warmup) measured jobs
        assert 1600 < result.n_jobs < 2400
        assert sum(result.batch_counts) == result.n_jobs
        assert len(result.batch_sums) == 10
        balance = result.arrived_work - result.busy_time - result.remaining_work
        assert abs(balance) < 1e-8 * result.arrived_work

    def test_reproducible(self):
        config = make_sim_config()
        assert run_replication(config, 3) == run_replication(config, 3)

    def test_replications_differ(self):
        config = make_sim_config()
        assert run_replication(config, 0).mean_wait != run_replication(config, 1).mean_wait

    def test_snapshot_at_horizon_when_none_taken(self):
        config = make_sim_config(snapshot_every=10**9)
        result = run_replication(config, 0)
        assert result.n_snapshots == 1

    def test_batches_of_k(self):
        config = make_sim_config(policy=PolicySpec.lldk(3, 2), n_servers=100, horizon=40.0)
        result = run_replication(config, 0)
        assert result.n_jobs % 2 == 0

    def test_debug_mode(self):
        config = make_sim_config(policy=PolicySpec.mix([1, 3], [0.5, 0.5]), debug=True)
        assert run_replication(config, 0).n_jobs > 0


class TestSimulate:
    def test_random_routing_matches_mm1(self):
        config = make_sim_config(
            policy=PolicySpec.ll(1), n_servers=200, horizon=200.0, warmup=40.0
        )
        report = simulate(config, max_workers=1)
        assert report.mean_wait == pytest.approx(1.0, abs=0.2)

    def test_ll2_near_mean_field(self, ll2):
        config = make_sim_config(policy=ll2, n_servers=300, horizon=100.0, warmup=20.0)
        report = simulate(config, max_workers=1)
        assert report.mean_wait == pytest.approx(0.1507, abs=0.04)
        busy = report.empirical_ccdf[0]
        assert busy.w == 0.0
        assert busy.fraction == pytest.approx(0.5, abs=0.05)

    def test_report_fields(self):
        config = make_sim_config(replications=3, seed=77)
        report = simulate(config, max_workers=1)
        assert report.seed_echo == 77
        assert report.replications == 3
        assert len(report.replication_means) == 3
        assert report.ci_low < report.mean_wait < report.ci_high
        assert report.stderr > 0
        assert report.work_balance.relative_error < 1e-9
        assert report.model_dump(by_alias=True)["lambda"] == 0.5

    def test_single_replication_uses_batch_means(self):
        report = simulate(make_sim_config(), max_workers=1)
        assert report.stderr > 0
        assert report.ci_low < report.ci_high

    def test_independent_of_worker_count(self):
        config = make_sim_config(replications=2)
        assert simulate(config, max_workers=1) == simulate(config, max_workers=2)

    def test_ccdf_is_nonincreasing(self):
        report = simulate(make_sim_config(lam=0.9), max_workers=1)
        fractions = [sample.fraction for sample in report.empirical_ccdf]
        assert fractions == sorted(fractions, reverse=True)

    @pytest.mark.parametrize(
        "policy",
        [PolicySpec.red(2), PolicySpec.mem(2, 1), PolicySpec.ll(2, Discipline.QUEUE_LENGTH)],
        ids=lambda p: p.label,
    )
    def test_unsupported(self, policy):
        with pytest.raises(UnsupportedPolicyError):
            simulate(make_sim_config(policy=policy))


class TestConvergenceStudy:
    def test_rows(self, ll2):
        config = make_sim_config(policy=ll2, horizon=40.0, warmup=10.0)
        rows = convergence_study(config, [100, 20], max_workers=1)
        assert [row.n_servers for row in rows] == [20, 100]
        assert rows[0].mean_field == pytest.approx(0.150728, rel=1e-5)
        assert rows[1].gap == pytest.approx(abs(rows[1].mean_wait - rows[1].mean_field))

    def test_rejects_small_fleet(self):
        config = make_sim_config(policy=PolicySpec.ll(3))
        with pytest.raises(InvalidArgumentError):
            convergence_study(config, [2, 50])
