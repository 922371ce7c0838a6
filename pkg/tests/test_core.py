import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from profitbandit.core import (
    Action,
    DemandVector,
    DimensionError,
    ParameterError,
    ProfitBreakdown,
    RangeError,
    compute_profit,
    make_price_grid,
    normalize_loss,
)


def profit_of(price, costs, demands):
    return compute_profit(Action(costs=np.array(costs), price=price), DemandVector(np.array(demands)))


class TestComputeProfit:
    def test_single_market(self):
        out = profit_of(0.5, [0.2], [1.0])
        np.testing.assert_allclose(out.per_market, [0.3])
        assert out.total == pytest.approx(0.3)

    def test_zero_price_zero_cost(self):
        out = profit_of(0.0, [0.0, 0.0], [1.0, 0.5])
        np.testing.assert_array_equal(out.per_market, [0.0, 0.0])
        assert out.total == 0.0

    def test_minimum_profit_corner(self):
        out = profit_of(1.0, [1.0], [0.0])
        assert out.per_market.tolist() == [-1.0]
        assert out.total == -1.0

    def test_length_mismatch(self):
        with pytest.raises(DimensionError):
            profit_of(0.5, [0.1, 0.2], [1.0])

    @pytest.mark.parametrize("price", [-0.1, 1.5, np.nan])
    def test_price_out_of_range(self, price):
        with pytest.raises(RangeError):
            Action(costs=np.array([0.1]), price=price)

    def test_cost_out_of_range(self):
        with pytest.raises(RangeError):
            Action(costs=np.array([0.1, 1.2]), price=0.5)

    def test_demand_out_of_range(self):
        with pytest.raises(RangeError):
            DemandVector(np.array([-0.01]))


class TestNormalizeLoss:
    def _loss(self, per_market):
        pm = np.array(per_market)
        return normalize_loss(ProfitBreakdown(per_market=pm, total=float(pm.sum())))

    def test_max_profit(self):
        assert self._loss([1.0]).per_market.tolist() == [0.0]

    def test_min_profit(self):
        assert self._loss([-1.0]).per_market.tolist() == [1.0]

    def test_two_markets(self):
        out = self._loss([0.3, -0.5])
        np.testing.assert_allclose(out.per_market, [0.35, 0.75])
        assert out.total == pytest.approx(1.1)

    def test_out_of_range_is_an_error(self):
        with pytest.raises(RangeError):
            self._loss([1.2])


class TestPriceGrid:
    def test_k1(self):
        assert make_price_grid(1).points.tolist() == [0.0, 1.0]

    def test_k4(self):
        assert make_price_grid(4).points.tolist() == [0.0, 0.25, 0.5, 0.75, 1.0]

    def test_cardinality(self):
        assert len(make_price_grid(2)) == 3

    def test_zero_rejected(self):
        with pytest.raises(ParameterError):
            make_price_grid(0)

    @given(st.integers(1, 500))
    def test_spacing(self, K):
        pts = make_price_grid(K).points
        assert pts[0] == 0.0 and pts[-1] == 1.0
        assert np.all(np.abs(np.diff(pts) - 1.0 / K) <= 1e-15)

    def test_index_of(self):
        grid = make_price_grid(8)
        assert grid.index_of(0.375) == 3


unit = st.floats(0.0, 1.0, allow_nan=False)


@settings(max_examples=200)
@given(st.integers(1, 6).flatmap(lambda n: st.tuples(
    unit, st.lists(unit, min_size=n, max_size=n), st.lists(unit, min_size=n, max_size=n))))
def test_loss_round_trip_and_range(args):
    price, costs, demands = args
    loss = normalize_loss(profit_of(price, costs, demands))
    expected = (1.0 - price * np.array(demands) + np.array(costs)) / 2.0
    np.testing.assert_allclose(loss.per_market, expected, atol=1e-12)
    assert np.all((loss.per_market >= 0) & (loss.per_market <= 1))
    assert 0.0 <= loss.total <= len(costs)
    assert loss.total == pytest.approx(loss.per_market.sum(), abs=1e-12)
