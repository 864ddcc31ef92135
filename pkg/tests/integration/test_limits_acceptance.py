"""Integration tests for heavy-traffic and low-load limits."""

import numpy as np
import pytest

from limits.curves import scaled_curve
from limits.heavy_traffic import (
    DEFAULT_B_GRID,
    extrapolate_heavy,
    heavy_traffic_limit,
    numeric_A,
    numeric_B,
)
from limits.low_load import extrapolate_low_load, low_load_limit
from limits.models import Scaling
from policies.kernels import choose_b
from policies.models import PolicySpec
from tests.factories import LL_DK_POLICIES, MIX_POLICIES

pytestmark = pytest.mark.integration

HEAVY_POLICIES = (
    [PolicySpec.ll(d) for d in (2, 3, 4)]
    + [PolicySpec.lldk(d, k) for d, k in ((3, 2), (4, 2), (5, 3))]
    + MIX_POLICIES
)
LOW_LOAD_POLICIES = [PolicySpec.ll(d) for d in (2, 3, 4)] + LL_DK_POLICIES + MIX_POLICIES
CONSTANT_POLICIES = [PolicySpec.ll(d) for d in (2, 3, 4, 5)] + LL_DK_POLICIES + MIX_POLICIES


def _label(policy):
    return policy.label


class TestHeavyTrafficExtrapolation:
    @pytest.mark.parametrize("policy", HEAVY_POLICIES, ids=_label)
    def test_matches_closed_form(self, policy):
        fit = extrapolate_heavy(policy)
        assert fit.value == pytest.approx(heavy_traffic_limit(policy), rel=0.02)
        assert [lam for lam, _ in fit.samples] == sorted(lam for lam, _ in fit.samples)


class TestLowLoadExtrapolation:
    @pytest.mark.parametrize("policy", LOW_LOAD_POLICIES, ids=_label)
    def test_matches_closed_form(self, policy):
        assert extrapolate_low_load(policy).value == pytest.approx(
            low_load_limit(policy), rel=0.05
        )


class TestHeavyTrafficConstants:
    @pytest.mark.parametrize("policy", CONSTANT_POLICIES, ids=_label)
    def test_numeric_constants(self, policy):
        b = choose_b(policy, DEFAULT_B_GRID)
        assert numeric_A(policy, b).value == pytest.approx(policy.mean_probes, rel=0.01)
        assert numeric_B(policy, b).value == pytest.approx(1.0, rel=0.01)


class TestIdleProbabilityScaling:
    @pytest.mark.parametrize("d", [3, 4, 5])
    def test_two_job_batches_stay_flat(self, d):
        grid = [round(0.1 * i, 1) for i in range(1, 10)]
        rows = scaled_curve(PolicySpec.lldk(d, 2), grid, scaling=Scaling.LOG_P_LAMBDA)
        scaled = np.array([row.scaled for row in rows])
        assert all(row.error is None for row in rows)
        assert np.all(scaled > 0)
        assert scaled.max() / scaled.min() <= 2.0
