import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from equalloc import (
    Allocation,
    AnalyticCurve,
    CostModel,
    UtilitySpec,
    build_batch_ledger,
    eval_perf,
    is_separable,
    marginal_batch,
)
from equalloc.errors import DomainError


class TestEvalPerf:
    def test_equal_allocation_performances(self, four_group_curve):
        perf = eval_perf(four_group_curve, Allocation([200, 200, 200, 200]))
        expected = [19.49, 16.73, 19.49, 19.49]
        assert np.allclose(perf.values, expected, atol=0.01)

    def test_concentrated_allocation_performances(self, four_group_curve):
        perf = eval_perf(four_group_curve, Allocation([500, 0, 0, 500]))
        assert np.allclose(perf.values, [25.50, 17.32, 17.32, 25.50], atol=0.01)

    def test_zero_allocation_is_zero(self, four_group_curve):
        perf = eval_perf(four_group_curve, Allocation.zeros(4))
        assert np.allclose(perf.values, 0.0)

    def test_offset_shifts_argument(self):
        curve = AnalyticCurve(gamma=np.eye(2), form="sqrt", offset=4.0)
        perf = eval_perf(curve, Allocation([0, 5]))
        assert np.allclose(perf.values, [2.0, 3.0])

    def test_log1p_defined_at_zero(self):
        curve = AnalyticCurve(gamma=np.eye(2), form="log1p")
        assert np.allclose(eval_perf(curve, Allocation.zeros(2)).values, 0.0)

    def test_power_form(self):
        curve = AnalyticCurve(gamma=np.eye(1), form="power", power_exponent=0.25)
        assert eval_perf(curve, Allocation([16.0])).values[0] == pytest.approx(2.0)

    def test_gamma_validation(self):
        with pytest.raises(DomainError):
            AnalyticCurve(gamma=[[1.0, 0.0], [0.0, 0.0]])  # empty second row
        with pytest.raises(DomainError):
            AnalyticCurve(gamma=[[1.0, -0.1], [0.0, 1.0]])


class TestMarginalBatch:
    def test_expensive_group_gains_less_per_dollar(
        self, four_group_curve, four_group_cost, u_equal
    ):
        zero = Allocation.zeros(4)
        gain_cheap = marginal_batch(
            four_group_curve, u_equal, zero, 0, 100.0, four_group_cost
        )
        gain_expensive = marginal_batch(
            four_group_curve, u_equal, zero, 2, 100.0, four_group_cost
        )
        # same spend buys group 2 only 50 samples (cost 2), so less gain
        assert gain_expensive < gain_cheap

    def test_symmetric_groups_gain_equally(self):
        curve = AnalyticCurve(gamma=np.eye(2), form="sqrt")
        cost = CostModel(costs=[1, 1], budget=10)
        util = UtilitySpec(weights=[1, 1])
        zero = Allocation.zeros(2)
        g0 = marginal_batch(curve, util, zero, 0, 1.0, cost)
        g1 = marginal_batch(curve, util, zero, 1, 1.0, cost)
        assert g0 == pytest.approx(1.0)
        assert g1 == pytest.approx(1.0)

    def test_concavity_shrinks_later_gains(self):
        curve = AnalyticCurve(gamma=np.eye(2), form="sqrt")
        cost = CostModel(costs=[1, 1], budget=10)
        util = UtilitySpec(weights=[1, 1])
        gain = marginal_batch(curve, util, Allocation([1.0, 0.0]), 0, 1.0, cost)
        assert gain == pytest.approx(np.sqrt(2) - 1.0)
        assert gain < 1.0

    def test_bad_group_index(self, four_group_curve, four_group_cost, u_equal):
        with pytest.raises(DomainError):
            marginal_batch(
                four_group_curve, u_equal, Allocation.zeros(4), 7, 1.0, four_group_cost
            )


class TestSeparability:
    def test_identity_gamma_is_separable(self):
        assert is_separable(AnalyticCurve(gamma=np.eye(3), form="sqrt"))

    def test_cross_effects_not_separable(self, four_group_curve):
        assert not is_separable(four_group_curve)

    def test_scaled_diagonal_is_separable(self):
        assert is_separable(AnalyticCurve(gamma=np.diag([0.5, 2.0]), form="sqrt"))


def _random_curve(rng, k, form):
    gamma = rng.uniform(0, 1, (k, k)) + 0.01
    return AnalyticCurve(gamma=gamma, form=form)


class TestCurveProperties:
    @given(
        st.integers(min_value=1, max_value=5),
        st.sampled_from(["sqrt", "log1p", "power"]),
        st.integers(min_value=0, max_value=2**32 - 1),
    )
    @settings(max_examples=60, deadline=None)
    def test_monotone_in_every_count(self, k, form, seed):
        rng = np.random.default_rng(seed)
        curve = _random_curve(rng, k, form)
        n = rng.uniform(0, 50, k)
        bigger = n + rng.uniform(0, 20, k)
        m_low = eval_perf(curve, Allocation(n)).values
        m_high = eval_perf(curve, Allocation(bigger)).values
        assert np.all(m_high >= m_low - 1e-12)

    @given(
        st.integers(min_value=1, max_value=5),
        st.sampled_from(["sqrt", "log1p", "power"]),
        st.integers(min_value=0, max_value=2**32 - 1),
    )
    @settings(max_examples=60, deadline=None)
    def test_concave_along_rays(self, k, form, seed):
        rng = np.random.default_rng(seed)
        curve = _random_curve(rng, k, form)
        n = rng.uniform(0, 50, k)
        d = rng.uniform(0, 20, k)
        t = rng.uniform(0, 1)
        m_mid = eval_perf(curve, Allocation(n + t * d)).values
        m_lo = eval_perf(curve, Allocation(n)).values
        m_hi = eval_perf(curve, Allocation(n + d)).values
        assert np.all(m_mid >= (1 - t) * m_lo + t * m_hi - 1e-9)

    def test_batch_ledger_rows_nonincreasing_for_separable(self):
        rng = np.random.default_rng(7)
        for form in ("sqrt", "log1p"):
            for _ in range(20):
                k = int(rng.integers(1, 5))
                curve = AnalyticCurve(gamma=np.diag(rng.uniform(0.1, 2, k)), form=form)
                cost = CostModel(costs=rng.uniform(0.2, 2, k), budget=100)
                util = UtilitySpec(weights=rng.uniform(0.1, 1, k))
                ledger = build_batch_ledger(curve, util, cost, rng.uniform(0.5, 3), 8)
                for i in range(k):
                    row = ledger.row(i)
                    assert np.all(np.diff(row) <= 1e-12)

    def test_diminishing_marginals_same_group(self):
        rng = np.random.default_rng(11)
        curve = AnalyticCurve(gamma=np.diag([1.0, 0.7]), form="sqrt")
        cost = CostModel(costs=[1.0, 1.5], budget=100)
        util = UtilitySpec(weights=[1.0, 0.5])
        for _ in range(30):
            base = rng.uniform(0, 10, 2)
            more = base + rng.uniform(0, 10, 2)
            g = int(rng.integers(0, 2))
            lo = marginal_batch(curve, util, Allocation(base), g, 1.0, cost)
            hi = marginal_batch(curve, util, Allocation(more), g, 1.0, cost)
            assert hi <= lo + 1e-12
