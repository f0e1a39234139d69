import pytest

from rs_chain import corpus
from rs_chain.exceptions import ArgumentError, ModelAssumptionError
from rs_chain.models import RSProblem, RSSituation
from rs_chain.services.piecewise import INF, PiecewiseCurve, Segment, affine_curve, constant_curve
from rs_chain.services.rs_model import (
    check_cooperation_margins,
    cooperative_maximum,
    ensure_valid_problem,
    ensure_valid_situation,
    maximize_margin,
    order_interval,
    problem_violations,
    random_situation,
    retailer_profit,
    situation_violations,
    solve_coalition,
    solve_retailer,
    solve_with_supplier,
    supplier_profit,
)

# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------

STEP = corpus.LONE_RETAILER.situation.w


def _lone():
    return corpus.LONE_RETAILER.situation.problem(1)


def _tied():
    return corpus.TIED_OPTIMA.situation.problem(1)


class TestProfit:

    def test_retailer_profit(self):
        assert retailer_profit(affine_curve(7.0, -1.0), 2.5, 3.2) == pytest.approx(3.25)

    def test_retailer_profit_at_zero(self):
        assert retailer_profit(affine_curve(7.0, -1.0), 0.0, 3.2) == 0.0

    def test_supplier_profit(self):
        assert supplier_profit(2.5, 3.2, 2.0) == pytest.approx(3.0)

    def test_supplier_profit_rejects_negative_order(self):
        with pytest.raises(ArgumentError):
            supplier_profit(-1.0, 3.0, 2.0)


class TestAssumptions:

    @pytest.mark.parametrize("example", list(corpus.EXAMPLES.values()), ids=lambda ex: ex.name)
    def test_corpus_situations_are_valid(self, example):
        assert situation_violations(example.situation) == []
        ensure_valid_situation(example.situation)

    def test_price_must_start_above_wholesale(self):
        prob = RSProblem(c=2.0, w=STEP, p=affine_curve(4.0, -1.0))
        assert problem_violations(prob) == ["p(0) = 4 must exceed w(0) = 5"]

    def test_wholesale_must_stay_above_cost(self):
        prob = RSProblem(c=3.0, w=STEP, p=affine_curve(7.0, -1.0))
        violations = problem_violations(prob)
        assert len(violations) == 1
        assert violations[0].startswith("w falls to 2.75")

    def test_price_never_reaching_cost(self):
        prob = RSProblem(c=2.0, w=STEP, p=constant_curve(9.0))
        assert problem_violations(prob) == ["p never falls to the production cost c = 2"]

    def test_curve_violations_are_prefixed(self):
        bad = PiecewiseCurve(segments=(Segment(0.0, INF, 1.0, beta=1.0),))
        prob = RSProblem(c=2.0, w=bad, p=affine_curve(7.0, -1.0))
        assert problem_violations(prob) == ["w: segment 0: increasing on [0.0, inf]"]

    def test_ensure_valid_problem_lists_violations(self):
        prob = RSProblem(c=2.0, w=STEP, p=affine_curve(4.0, -1.0))
        with pytest.raises(ModelAssumptionError) as exc:
            ensure_valid_problem(prob)
        assert exc.value.violations == ["p(0) = 4 must exceed w(0) = 5"]
        assert exc.value.exit_code == 2

    def test_situation_violation_names_the_retailer(self):
        sit = RSSituation(c=2.0, w=STEP, prices=(affine_curve(7.0, -1.0), affine_curve(4.0, -1.0)))
        assert situation_violations(sit) == ["retailer 2: p(0) = 4 must exceed w(0) = 5"]
        with pytest.raises(ModelAssumptionError):
            ensure_valid_situation(sit)


class TestMargin:

    def test_interior_vertex(self):
        best = maximize_margin(affine_curve(7.0, -1.0), constant_curve(2.0), 5.0)
        assert best.value == pytest.approx(6.25)
        assert best.points == pytest.approx((2.5,))

    def test_empty_interval(self):
        best = maximize_margin(affine_curve(7.0, -1.0), constant_curve(2.0), 0.0)
        assert best.value == 0.0
        assert best.points == (0.0,)

    def test_order_interval(self):
        lo, hi = order_interval(_lone())
        assert lo == 0.0
        assert hi == pytest.approx((5.0 + 13.0 ** 0.5) / 2.0)

    def test_cooperative_maximum(self):
        best = cooperative_maximum(affine_curve(50.0, -0.5), 1.8)
        assert best.points[0] == pytest.approx(corpus.SYMMETRIC_PAIR_COOPERATIVE_QUANTITY)


class TestSolveRetailer:

    def test_unique_optimum(self):
        sol = solve_retailer(_lone())
        assert sol.quantities == pytest.approx((2.5,))
        assert sol.value == pytest.approx(3.25)
        assert sol.unit_price == pytest.approx(3.2)
        assert supplier_profit(sol.quantities[0], sol.unit_price, 2.0) == pytest.approx(3.0)
        assert len(sol.alternates) == 1

    def test_two_optima(self):
        sol = solve_retailer(_tied())
        expected = corpus.TIED_OPTIMA.retailer
        assert [a[0] for a in sol.alternates] == pytest.approx(list(expected.quantities))
        assert sol.value == pytest.approx(expected.value)
        assert sol.quantities == pytest.approx((1.5,))
        profits = [supplier_profit(a[0], _tied().w(a[0]), 1.0) for a in sol.alternates]
        assert profits == pytest.approx(list(expected.supplier_profits))

    def test_retailer_label(self):
        assert solve_retailer(_lone(), retailer=3).members == (3,)

    def test_invalid_problem(self):
        with pytest.raises(ModelAssumptionError):
            solve_retailer(RSProblem(c=2.0, w=STEP, p=affine_curve(4.0, -1.0)))


class TestCoalitions:

    def test_with_supplier_is_separable(self, convex_pair):
        sol = solve_with_supplier(convex_pair, [1, 2])
        assert sol.with_supplier
        assert sol.quantities == pytest.approx((2.5, 3.0))
        assert sol.value == pytest.approx(15.25)
        assert sol.unit_price == 2.0

    def test_supplier_alone(self, convex_pair):
        sol = solve_with_supplier(convex_pair, [])
        assert sol.members == ()
        assert sol.value == 0.0

    def test_singleton_matches_retailer_solve(self, convex_pair):
        assert solve_coalition(convex_pair, [2]).value == pytest.approx(6.0)

    @pytest.mark.parametrize(
        "example, value",
        [(corpus.CONVEX_PAIR, 12.25), (corpus.STEEP_DISCOUNT_PAIR, 4.125), (corpus.SYMMETRIC_PAIR, 2301.0)],
        ids=lambda v: getattr(v, "name", str(v)),
    )
    def test_pair_coalition_value(self, example, value):
        sol = solve_coalition(example.situation, [1, 2])
        assert sol.value == pytest.approx(value, rel=1e-6)
        assert not sol.with_supplier

    def test_symmetric_pair_quantities(self, symmetric_pair):
        sol = solve_coalition(symmetric_pair, [2, 1])
        q = corpus.SYMMETRIC_PAIR_COALITION_QUANTITY
        assert sol.members == (1, 2)
        assert sol.quantities == pytest.approx((q, q), rel=1e-6)
        assert sol.quantity(2) == pytest.approx(q, rel=1e-6)

    def test_empty_coalition_rejected(self, convex_pair):
        with pytest.raises(ArgumentError):
            solve_coalition(convex_pair, [])

    def test_unknown_retailer_rejected(self, convex_pair):
        with pytest.raises(ArgumentError) as exc:
            solve_coalition(convex_pair, [1, 3])
        assert exc.value.details["ids"] == [3]

    def test_non_concave_prices_use_grid_path(self, caplog):
        tied = corpus.TIED_OPTIMA.situation
        sit = RSSituation(c=tied.c, w=tied.w, prices=(tied.price(1), tied.price(1)))
        with caplog.at_level("WARNING"):
            sol = solve_coalition(sit, [1, 2])
        assert "grid allocation" in caplog.text
        # The pair does at least as well as its members apart.
        assert sol.value >= 2 * 1.25 - 1e-6


class TestCooperationMargins:

    @pytest.mark.parametrize("members", [[1], [2], [1, 2]])
    def test_convex_pair(self, convex_pair, members):
        report = check_cooperation_margins(convex_pair, members)
        assert report.ok, report.failures()

    def test_identity_per_member(self, steep_pair):
        report = check_cooperation_margins(steep_pair, [1, 2])
        for row in report.rows:
            assert row.identity_residual == pytest.approx(0.0, abs=1e-9)
            assert row.optimality_margin >= 0
            assert min(row.dominance_margins) > 0


class TestRandomSituation:

    def test_seeded_and_valid(self):
        a, b = random_situation(3, 7), random_situation(3, 7)
        assert a == b
        assert a.n == 3
        assert situation_violations(a) == []

    def test_different_seeds_differ(self):
        assert random_situation(2, 1) != random_situation(2, 2)

    @pytest.mark.parametrize("n", [0, 7])
    def test_size_limits(self, n):
        with pytest.raises(ArgumentError):
            random_situation(n, 1)
