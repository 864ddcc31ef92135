"""Unit tests for verification/assumptions.py and verification/models.py."""

import pytest
from pydantic import ValidationError

from cavity import ode
from core.exceptions import InvalidArgumentError
from policies.models import PolicySpec
from verification import assumptions
from verification.assumptions import check_assumption, h_decreasing_witness
from verification.models import AssumptionReport, Status, Witness

SHORT_GRID = [0.9, 0.99]


class TestAssumptionReport:
    def test_fail_needs_witness(self, ll2):
        with pytest.raises(ValidationError):
            AssumptionReport(
                assumption_id="1", policy=ll2, lambda_grid=[0.9], status=Status.FAIL
            )

    def test_from_witnesses(self, ll2):
        passed = AssumptionReport.from_witnesses(3, ll2, [0.9], [])
        assert passed.status == Status.PASS
        assert passed.assumption_id == "3"
        failed = AssumptionReport.from_witnesses(
            3, ll2, [0.9], [Witness(lam=0.9, point=0.1, observed=1e-3)]
        )
        assert failed.status == Status.FAIL

    def test_skipped(self, ll2):
        report = AssumptionReport.skipped("zeta_agreement", ll2, [0.9], "not LL(d,K)")
        assert report.status == Status.SKIPPED
        assert report.detail == "not LL(d,K)"
        assert report.witnesses == []


class TestCheckAssumption:
    @pytest.mark.parametrize("assumption_id", [1, 2, 3, 4, 5, 6, 7])
    def test_ll2_passes(self, ll2, assumption_id):
        report = check_assumption(ll2, assumption_id, SHORT_GRID)
        assert report.status == Status.PASS, report.detail
        assert report.assumption_id == str(assumption_id)

    def test_single_probe_fails_fixed_point(self, ll1):
        report = check_assumption(ll1, 1, SHORT_GRID)
        assert report.status == Status.FAIL
        assert {w.lam for w in report.witnesses} >= set(SHORT_GRID)

    def test_single_probe_skips_dependent_checks(self, ll1):
        assert check_assumption(ll1, 3, SHORT_GRID).status == Status.SKIPPED

    def test_single_probe_constants_skipped(self, ll1):
        # A = 1 has no heavy-traffic limit
        assert check_assumption(ll1, 5, SHORT_GRID).status == Status.SKIPPED

    def test_plateau_exit_reports_inconsistent_curves(self, ll2, monkeypatch):
        monkeypatch.setattr(ode, "integral_identity_residual", lambda policy, curve: 1e-3)
        report = check_assumption(ll2, 4, SHORT_GRID)
        assert "integral identity residual too large at lambda = 0.9 (0.001)" in report.detail

    def test_lldk_records_b(self, ll32):
        report = check_assumption(ll32, 3, SHORT_GRID)
        assert report.status == Status.PASS
        assert report.b is not None

    def test_explicit_b(self, ll2):
        assert check_assumption(ll2, 3, SHORT_GRID, b=2).b == 2

    def test_mix_iterated_limit(self, mix12):
        report = check_assumption(mix12, 7)
        assert report.status == Status.PASS
        assert "A = 1.5" in report.detail

    def test_unknown_id(self, ll2):
        with pytest.raises(InvalidArgumentError):
            check_assumption(ll2, 8)

    def test_grid_is_sorted(self, ll2):
        assert check_assumption(ll2, 2, [0.99, 0.9]).lambda_grid == [0.9, 0.99]

    def test_tight_tolerance_fails_constant(self, ll2, monkeypatch):
        monkeypatch.setattr(assumptions, "heavy_traffic_constants", lambda policy: (2.5, 1.0))
        report = check_assumption(ll2, 5, SHORT_GRID)
        assert report.status == Status.FAIL
        assert report.witnesses[0].observed == pytest.approx(2.0, rel=1e-3)


class TestHDecreasingWitness:
    def test_none_when_decreasing(self, ll2):
        assert h_decreasing_witness(ll2, 0.9, 0) is None

    def test_reports_increase(self, ll2, monkeypatch):
        monkeypatch.setattr(assumptions, "h", lambda policy, lam, xs: xs)
        witness = h_decreasing_witness(ll2, 0.9, 0)
        assert witness is not None
        assert witness.lam == 0.9
        assert witness.observed > 0
