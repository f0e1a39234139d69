import numpy as np
import pytest

from rs_chain import corpus
from rs_chain.exceptions import ArgumentError, CoreMembershipError, PriceBoundError
from rs_chain.models import ALTRUISTIC, PRICES, Allocation, PriceVector, mask_of
from rs_chain.services.core_analysis import (
    COALITION,
    EFFICIENCY,
    UPPER_BOUND,
    allocation_from_prices,
    altruistic,
    describe_core,
    in_core_full,
    in_core_full_many,
    in_core_reduced,
    in_core_reduced_many,
    price_bounds,
    prices_from_allocation,
    slack,
)
from rs_chain.services.rs_game import build_game
from rs_chain.services.solutions import shapley

# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------


def _x(*payoffs):
    return Allocation(payoffs=payoffs)


class TestMembership:

    def test_reference_core_allocation(self, convex_game):
        x = _x(0.0, 6.25, 9.0)
        assert in_core_reduced(convex_game, x).member
        assert in_core_full(convex_game, x).member

    def test_efficiency_violation(self, convex_game):
        verdict = in_core_full(convex_game, _x(1.0, 6.25, 9.0))
        assert not verdict.member
        assert verdict.condition == EFFICIENCY
        assert verdict.residual == pytest.approx(1.0)
        assert verdict.witness() == "payoffs sum to v(N0) +1"

    def test_upper_bound_and_coalition_witnesses(self, convex_game):
        x = _x(-1.0, 7.25, 9.0)
        reduced, full = in_core_reduced(convex_game, x), in_core_full(convex_game, x)
        assert not reduced.member and not full.member
        assert reduced.condition == UPPER_BOUND
        assert reduced.coalition == mask_of([0, 1])
        assert reduced.witness() == "payoff exceeds v({0,1}) by 1"
        assert full.condition == COALITION
        assert full.coalition == mask_of([0])

    def test_retailer_coalition_short(self, convex_game):
        x = _x(6.0, 3.25, 6.0)
        for verdict in (in_core_reduced(convex_game, x), in_core_full(convex_game, x)):
            assert not verdict.member
            assert verdict.coalition == mask_of([1, 2])
            assert verdict.residual == pytest.approx(-3.0)
            assert verdict.witness() == "coalition {1,2} receives -3 relative to its value"

    def test_wrong_length(self, convex_game):
        with pytest.raises(ArgumentError):
            in_core_full(convex_game, _x(1.0, 2.0))

    def test_batch_agrees_with_single(self, convex_game):
        rows = np.array([
            [0.0, 6.25, 9.0],
            [3.0, 4.75, 7.5],
            [6.0, 3.25, 6.0],
            [1.0, 6.25, 9.0],
            [-1.0, 7.25, 9.0],
        ])
        expected = [True, True, False, False, False]
        assert list(in_core_reduced_many(convex_game, rows)) == expected
        assert list(in_core_full_many(convex_game, rows)) == expected
        assert [in_core_full(convex_game, Allocation(tuple(r))).member for r in rows] == expected

    @pytest.mark.parametrize(
        "over, gap, member",
        [(-1.5, 0.0, False), (-0.5, 0.5, True), (0.5, -0.5, True), (1.5, 0.0, False), (0.9, 0.9, True)],
    )
    def test_tests_agree_near_the_boundary(self, convex_game, over, gap, member):
        # retailer 2 sits `over` slacks above its cap v({0,2}) = 9, payoffs sum `gap` slacks off v(N0)
        s = slack(convex_game)
        x2 = 9.0 + over * s
        x = _x(15.25 - 3.25 - x2 + gap * s, 3.25, x2)
        assert in_core_reduced(convex_game, x).member is member
        assert in_core_full(convex_game, x).member is member
        rows = np.array([x.payoffs])
        assert bool(in_core_reduced_many(convex_game, rows)[0]) is member
        assert bool(in_core_full_many(convex_game, rows)[0]) is member

    def test_slack_scales_with_grand_value(self, convex_game, symmetric_game):
        assert slack(convex_game) == pytest.approx(1e-7 * 15.25)
        assert slack(symmetric_game) == pytest.approx(1e-7 * 2323.24, rel=1e-6)

    def test_shapley_outside_core(self, symmetric_game):
        verdict = in_core_full(symmetric_game, shapley(symmetric_game))
        assert not verdict.member
        assert not in_core_reduced(symmetric_game, shapley(symmetric_game)).member


class TestAltruistic:

    @pytest.mark.parametrize("example", corpus.games(), ids=lambda ex: ex.name)
    def test_reference_and_in_core(self, example):
        game = build_game(example.situation)
        x = altruistic(game)
        assert x.label == ALTRUISTIC
        assert x.payoffs == pytest.approx(example.altruistic, rel=1e-6)
        assert in_core_full(game, x).member


class TestDescription:

    def test_symmetric_pair(self, symmetric_game):
        description = describe_core(symmetric_game)
        assert description.efficiency == pytest.approx(2323.24, rel=1e-6)
        for interval in description.intervals:
            assert interval.lower == pytest.approx(1100.5, rel=1e-6)
            assert interval.upper == pytest.approx(1161.62, rel=1e-6)
        assert len(description.coalition_bounds) == 1
        mask, bound = description.coalition_bounds[0]
        assert mask == mask_of([1, 2])
        assert bound == pytest.approx(2301.0, rel=1e-6)

    def test_single_retailer_has_no_coalition_bounds(self):
        description = describe_core(build_game(corpus.LONE_RETAILER.situation))
        assert description.coalition_bounds == ()
        assert [(i.lower, i.upper) for i in description.intervals] == [pytest.approx((3.25, 6.25))]


class TestPriceBounds:

    def test_symmetric_pair_caps(self, symmetric_pair, symmetric_game):
        bounds = price_bounds(symmetric_pair, symmetric_game)
        q = corpus.SYMMETRIC_PAIR_COOPERATIVE_QUANTITY
        assert bounds.quantities == pytest.approx((q, q))
        for lo, hi in bounds.intervals:
            assert lo == pytest.approx(1.8)
            assert hi == pytest.approx(corpus.SYMMETRIC_PAIR_PRICE_CAP, rel=1e-6)
        joint = next(b for b in bounds.coalitions if b.coalition == mask_of([1, 2]))
        assert joint.rhs / q == pytest.approx(corpus.SYMMETRIC_PAIR_JOINT_PRICE_CAP, rel=1e-6)

    def test_situation_must_match_game(self, symmetric_pair):
        lone = build_game(corpus.LONE_RETAILER.situation)
        with pytest.raises(ArgumentError):
            price_bounds(symmetric_pair, lone)


class TestPriceCorrespondence:

    def test_cost_prices_give_altruistic(self, symmetric_pair, symmetric_game):
        x = allocation_from_prices(symmetric_pair, symmetric_game, PriceVector((1.8, 1.8)))
        assert x.label == PRICES
        assert x.payoffs == pytest.approx(altruistic(symmetric_game).payoffs, rel=1e-6)

    def test_roundtrip_from_allocation(self, symmetric_pair, symmetric_game):
        x = Allocation(corpus.SYMMETRIC_PAIR.mgpc)
        prices = prices_from_allocation(symmetric_pair, symmetric_game, x)
        assert prices.price(1) == pytest.approx(prices.price(2))
        assert 1.8 < prices.price(1) < corpus.SYMMETRIC_PAIR_PRICE_CAP
        back = allocation_from_prices(symmetric_pair, symmetric_game, prices)
        assert back.payoffs == pytest.approx(x.payoffs, rel=1e-6)

    def test_small_supplier_payoff_within_slack(self, symmetric_pair, symmetric_game):
        x = _x(1e-4, symmetric_game.pair_value(1), symmetric_game.pair_value(2))
        assert in_core_full(symmetric_game, x).member
        prices = prices_from_allocation(symmetric_pair, symmetric_game, x)
        assert prices.prices == pytest.approx((1.8, 1.8), abs=1e-6)

    def test_non_core_allocation_has_no_prices(self, symmetric_pair, symmetric_game):
        with pytest.raises(CoreMembershipError) as exc:
            prices_from_allocation(symmetric_pair, symmetric_game, shapley(symmetric_game))
        assert exc.value.exit_code == 1

    def test_price_below_cost(self, symmetric_pair, symmetric_game):
        with pytest.raises(PriceBoundError) as exc:
            allocation_from_prices(symmetric_pair, symmetric_game, PriceVector((1.5, 1.8)))
        assert exc.value.details["retailers"] == [1]

    def test_price_above_cap(self, symmetric_pair, symmetric_game):
        with pytest.raises(PriceBoundError) as exc:
            allocation_from_prices(symmetric_pair, symmetric_game, PriceVector((3.5, 1.8)))
        assert exc.value.details["coalition"] == "{1}"

    def test_joint_cap(self, symmetric_pair, symmetric_game):
        # each price under its own cap, their sum over the joint one
        with pytest.raises(PriceBoundError) as exc:
            allocation_from_prices(symmetric_pair, symmetric_game, PriceVector((3.0, 3.0)))
        assert exc.value.details["coalition"] == "{1,2}"

    def test_wrong_length(self, symmetric_pair, symmetric_game):
        with pytest.raises(ArgumentError):
            allocation_from_prices(symmetric_pair, symmetric_game, PriceVector((1.8,)))
