"""Unit tests for limits/heavy_traffic.py and limits/low_load.py."""

import math

import pytest

from core.exceptions import ExtrapolationUnstableError, UnsupportedPolicyError
from limits import heavy_traffic
from limits.heavy_traffic import (
    extrapolate_heavy,
    heavy_lambdas,
    heavy_traffic_constants,
    heavy_traffic_limit,
    limit_report,
    log_p_ratio,
    numeric_A,
    numeric_B,
)
from limits.low_load import extrapolate_low_load, low_load_limit, scaled_low_value
from policies.models import Discipline, PolicyKind, PolicySpec

# ---------------------------------------------------------------------------
# Closed-form constants
# ---------------------------------------------------------------------------


class TestHeavyTrafficConstants:
    @pytest.mark.parametrize(
        "policy,expected",
        [
            (PolicySpec.ll(3), (3.0, 1.0)),
            (PolicySpec.red(2), (2.0, 1.0)),
            (PolicySpec.lldk(4, 2), (2.0, 1.0)),
            (PolicySpec.mix([1, 2], [0.5, 0.5]), (1.5, 1.0)),
            (PolicySpec.mem(2, 3), (2.0, 0.25)),
        ],
        ids=lambda v: getattr(v, "label", None),
    )
    def test_table(self, policy, expected):
        assert heavy_traffic_constants(policy) == pytest.approx(expected)

    def test_single_probe_unsupported(self, ll1):
        with pytest.raises(UnsupportedPolicyError) as exc_info:
            heavy_traffic_constants(ll1)
        assert exc_info.value.details["A"] == 1.0


class TestHeavyTrafficLimit:
    @pytest.mark.parametrize(
        "policy,expected",
        [
            (PolicySpec.ll(3), 0.5),
            (PolicySpec.lldk(4, 2), 1.0),
            (PolicySpec.mix([1, 2], [0.5, 0.5]), 2.0),
            (PolicySpec.mem(2, 1), 0.5),
        ],
    )
    def test_workload(self, policy, expected):
        assert heavy_traffic_limit(policy) == pytest.approx(expected)

    def test_queue_length(self):
        policy = PolicySpec.ll(2, Discipline.QUEUE_LENGTH)
        assert heavy_traffic_limit(policy) == pytest.approx(1 / math.log(2))

    def test_queue_length_is_larger(self):
        for d in (2, 3, 5):
            sq = heavy_traffic_limit(PolicySpec.ll(d, Discipline.QUEUE_LENGTH))
            assert sq >= heavy_traffic_limit(PolicySpec.ll(d))

    @pytest.mark.parametrize(
        "policy",
        [
            PolicySpec.mem(2, 1, Discipline.QUEUE_LENGTH),
            PolicySpec.build(kind=PolicyKind.RED_D, d=2, discipline=Discipline.QUEUE_LENGTH),
        ],
    )
    def test_queue_length_unsupported(self, policy):
        with pytest.raises(UnsupportedPolicyError):
            heavy_traffic_limit(policy)


def test_heavy_lambdas():
    assert heavy_lambdas(2, 4) == pytest.approx([0.99, 0.999, 0.9999])


# ---------------------------------------------------------------------------
# Numeric A and B
# ---------------------------------------------------------------------------


class TestNumericConstants:
    @pytest.mark.parametrize(
        "policy,expected",
        [
            (PolicySpec.ll(2), 2.0),
            (PolicySpec.ll(3), 3.0),
            (PolicySpec.mix([1, 2], [0.5, 0.5]), 1.5),
        ],
        ids=lambda v: getattr(v, "label", None),
    )
    def test_numeric_a(self, policy, expected):
        result = numeric_A(policy, 0)
        assert result.value == pytest.approx(expected, rel=1e-4)
        assert len(result.samples) == 9

    def test_numeric_b(self, ll2):
        assert numeric_B(ll2, 0).value == pytest.approx(1.0, abs=1e-3)

    def test_unstable_fit(self, ll2, monkeypatch):
        monkeypatch.setattr(heavy_traffic, "UNSTABLE_RESIDUAL", -1.0)
        with pytest.raises(ExtrapolationUnstableError):
            numeric_A(ll2, 0)


class TestExtrapolateHeavy:
    def test_ll2(self, ll2):
        result = extrapolate_heavy(ll2)
        assert result.value == pytest.approx(1.0, rel=0.02)
        assert [lam for lam, _ in result.samples] == heavy_lambdas(2, 8)

    def test_log_p_ratio_tends_to_one(self, ll2):
        assert log_p_ratio(ll2, 1 - 1e-6) == pytest.approx(1.0, rel=0.1)


class TestLimitReport:
    def test_ll2(self, ll2):
        report = limit_report(ll2)
        assert report.b == 0
        assert report.A == pytest.approx(2.0, rel=1e-3)
        assert report.closed_form_reference == 1.0
        assert report.heavy_limit == pytest.approx(1.0, rel=0.02)
        assert report.low_load_limit == 0.5
        assert report.within_tolerance is True

    def test_memory_has_no_low_load_limit(self):
        report = limit_report(PolicySpec.mem(2, 1))
        assert report.low_load_limit is None
        assert report.closed_form_reference == pytest.approx(0.5)


# ---------------------------------------------------------------------------
# Low load
# ---------------------------------------------------------------------------


class TestLowLoad:
    @pytest.mark.parametrize(
        "policy,expected",
        [
            (PolicySpec.ll(3), 1 / 3),
            (PolicySpec.lldk(3, 2), 1 / 2),
            (PolicySpec.lldk(5, 3), 1 / 3),
            (PolicySpec.mix([1, 2], [0.5, 0.5]), 1.0),
            (PolicySpec.mix([1, 3], [0.0, 1.0]), 1 / 3),
        ],
    )
    def test_limit(self, policy, expected):
        assert low_load_limit(policy) == pytest.approx(expected)

    @pytest.mark.parametrize(
        "policy",
        [PolicySpec.red(2), PolicySpec.mem(2, 1), PolicySpec.ll(2, Discipline.QUEUE_LENGTH)],
        ids=lambda p: p.label,
    )
    def test_unsupported(self, policy):
        with pytest.raises(UnsupportedPolicyError):
            low_load_limit(policy)

    def test_scaled_value(self, ll2):
        assert scaled_low_value(ll2, 1e-3) == pytest.approx(0.5, rel=1e-2)

    def test_extrapolation_matches_limit(self, ll2):
        result = extrapolate_low_load(ll2)
        assert result.value == pytest.approx(0.5, rel=1e-3)
        assert len(result.samples) == 3
