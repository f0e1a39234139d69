import numpy as np
import pytest

from rs_chain import corpus
from rs_chain.exceptions import DomainError, NoCrossingError
from rs_chain.services.piecewise import (
    INF,
    PiecewiseCurve,
    Segment,
    affine_curve,
    constant_curve,
    crossing,
    evaluate,
    evaluate_many,
    infimum,
    is_concave_revenue,
    marginal_revenue,
    merged_breakpoints,
    solve_level,
    sup_level_many,
    validate,
)

# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------

STEP = PiecewiseCurve(
    segments=(
        Segment(lo=0.0, hi=1.0, alpha=5.0),
        Segment(lo=1.0, hi=INF, alpha=2.0, gamma=3.0),
    )
)


def _tied_price():
    return corpus.TIED_OPTIMA.situation.price(1)


def _random_curve(rng, strict=False, flat_tail=False):
    """Continuous non-increasing curve of up to four affine or reciprocal segments."""
    knots = sorted(float(k) for k in rng.uniform(0.5, 20.0, size=int(rng.integers(0, 4))))
    bounds = [0.0, *knots, INF]
    value = float(rng.uniform(5.0, 15.0))
    segments = []
    for lo, hi in zip(bounds[:-1], bounds[1:]):
        if hi == INF and flat_tail:
            seg = Segment(lo=lo, hi=hi, alpha=value)
        elif lo > 0 and hi != INF and rng.uniform() < 0.5:
            gamma = float(rng.uniform(0.5, 5.0))
            seg = Segment(lo=lo, hi=hi, alpha=value - gamma / lo, gamma=gamma)
        else:
            beta = -float(rng.uniform(0.2, 2.0) if strict else rng.uniform(0.0, 2.0))
            seg = Segment(lo=lo, hi=hi, alpha=value - beta * lo, beta=beta)
        segments.append(seg)
        if hi != INF:
            value = seg.value(hi)
    return PiecewiseCurve(segments=tuple(segments))


class TestEvaluate:

    def test_affine(self):
        assert evaluate(affine_curve(7.0, -1.0), 2.0) == pytest.approx(5.0)

    def test_flat_then_hyperbolic(self):
        assert evaluate(STEP, 0.5) == pytest.approx(5.0)
        assert evaluate(STEP, 1.0) == pytest.approx(5.0)
        assert evaluate(STEP, 2.0) == pytest.approx(3.5)

    def test_constant_extension_below_domain(self):
        w = corpus.CONVEX_PAIR.situation.w
        assert evaluate(w, 0.0) == pytest.approx(5.0)
        assert evaluate(w, 0.1) == pytest.approx(5.0)
        assert w.breakpoints == [0.25, 1.0]

    def test_negative_quantity_rejected(self):
        with pytest.raises(DomainError):
            evaluate(STEP, -0.1)

    def test_evaluate_many_matches_scalar(self):
        qs = np.array([0.0, 0.3, 1.0, 1.7, 4.0, 120.0])
        expected = [evaluate(STEP, q) for q in qs]
        assert evaluate_many(STEP, qs) == pytest.approx(expected)

    def test_evaluate_many_rejects_negative(self):
        with pytest.raises(DomainError):
            evaluate_many(STEP, np.array([1.0, -2.0]))

    def test_callable(self):
        assert STEP(3.0) == pytest.approx(3.0)


class TestValidate:

    @pytest.mark.parametrize("example", list(corpus.EXAMPLES.values()), ids=lambda ex: ex.name)
    def test_corpus_curves_are_valid(self, example):
        sit = example.situation
        assert validate(sit.w) == []
        for p in sit.prices:
            assert validate(p) == []

    def test_gap_between_segments(self):
        curve = PiecewiseCurve(segments=(Segment(0.0, 1.0, 5.0), Segment(1.5, INF, 5.0)))
        assert any("gap between segments 0 and 1" in v for v in validate(curve))

    def test_upward_jump(self):
        curve = PiecewiseCurve(segments=(Segment(0.0, 1.0, 2.0), Segment(1.0, INF, 3.0)))
        violations = validate(curve)
        assert any(v.startswith("discontinuity at q=1.0") for v in violations)
        assert any(v.startswith("increase at q=1.0") for v in violations)

    def test_increasing_segment(self):
        curve = PiecewiseCurve(segments=(Segment(0.0, INF, 1.0, beta=1.0),))
        assert validate(curve) == ["segment 0: increasing on [0.0, inf]"]

    def test_bounded_last_segment(self):
        curve = PiecewiseCurve(segments=(Segment(0.0, 4.0, 3.0, beta=-0.5),))
        assert any("must extend to inf" in v for v in validate(curve))

    def test_reciprocal_at_zero(self):
        curve = PiecewiseCurve(segments=(Segment(0.0, INF, 1.0, gamma=2.0),))
        assert validate(curve) == ["segment 0: reciprocal term requires lo > 0"]

    def test_direction_change(self):
        # 1 + q/4 + 4/q bottoms out at q = 4
        curve = PiecewiseCurve(segments=(Segment(1.0, INF, 1.0, beta=0.25, gamma=4.0),), domain_lo=1.0)
        assert any("stationary point q=4.0" in v for v in validate(curve))

    def test_no_segments(self):
        assert validate(PiecewiseCurve(segments=())) == ["curve has no segments"]


class TestLevels:

    def test_solve_level_affine(self):
        assert solve_level(affine_curve(7.0, -1.0), 5.0) == pytest.approx(2.0)

    def test_solve_level_hyperbolic_piece(self):
        assert solve_level(STEP, 3.5) == pytest.approx(2.0)

    def test_solve_level_symmetric_pair_price(self):
        p = corpus.SYMMETRIC_PAIR.situation.price(1)
        assert solve_level(p, 1.8) == pytest.approx(96.4)

    def test_solve_level_on_last_tied_segment(self):
        # 5 - q/2 = 1
        assert solve_level(_tied_price(), 1.0) == pytest.approx(8.0)

    def test_solve_level_at_start_is_zero(self):
        assert solve_level(STEP, 5.0) == 0.0

    def test_solve_level_just_past_a_shallow_piece(self):
        # 8.02 - q/100 on [0, 2], then 6 + 4/q; the level lies within tolerance of the first piece's end
        curve = PiecewiseCurve(
            segments=(Segment(0.0, 2.0, 8.02, beta=-0.01), Segment(2.0, INF, 6.0, gamma=4.0))
        )
        q = solve_level(curve, 8.0 - 5e-9)
        assert q == pytest.approx(2.0, abs=1e-8)
        assert evaluate(curve, q) == pytest.approx(8.0 - 5e-9, abs=1e-12)

    def test_solve_level_above_curve(self):
        with pytest.raises(NoCrossingError):
            solve_level(affine_curve(7.0, -1.0), 9.0)

    def test_solve_level_asymptote_is_never_reached(self):
        with pytest.raises(NoCrossingError):
            solve_level(STEP, 2.0)

    def test_sup_level_many(self):
        out = sup_level_many(affine_curve(7.0, -1.0), np.array([5.0, 8.0, -1.0]))
        assert out == pytest.approx([2.0, 0.0, 8.0])

    def test_sup_level_many_on_flat_piece(self):
        assert sup_level_many(STEP, np.array([5.0]))[0] == pytest.approx(1.0)

    def test_infimum(self):
        assert infimum(affine_curve(7.0, -1.0), 3.0) == pytest.approx(4.0)
        assert infimum(STEP) == pytest.approx(2.0)


class TestCrossing:

    def test_sup_where_price_covers_wholesale(self):
        # 7 - q = 2 + 3/q  =>  q^2 - 5q + 3 = 0
        expected = (5.0 + 13.0 ** 0.5) / 2.0
        assert crossing(affine_curve(7.0, -1.0), STEP) == pytest.approx(expected)

    def test_tied_optima(self):
        sit = corpus.TIED_OPTIMA.situation
        assert crossing(sit.price(1), sit.w) == pytest.approx(3.5)

    def test_touching_at_origin(self):
        assert crossing(affine_curve(7.0, -1.0), constant_curve(7.0)) == pytest.approx(0.0, abs=1e-12)

    def test_window_without_crossing(self):
        assert crossing(affine_curve(7.0, -1.0), STEP, upper=2.0) is None

    def test_constant_never_below(self):
        assert crossing(constant_curve(9.0), STEP) is None


class TestRevenue:

    def test_marginal_revenue_of_affine(self):
        assert evaluate(marginal_revenue(affine_curve(7.0, -1.0)), 1.0) == pytest.approx(5.0)

    def test_affine_revenue_is_concave(self):
        assert is_concave_revenue(affine_curve(8.0, -1.0))

    def test_kinked_price_revenue_is_not_concave(self):
        assert not is_concave_revenue(_tied_price())

    def test_merged_breakpoints(self):
        tied_w = corpus.TIED_OPTIMA.situation.w
        assert merged_breakpoints([STEP, tied_w], 2.2) == [1.0, 2.0]


class TestCurveProperties:

    @pytest.mark.parametrize("seed", range(5))
    def test_evaluation_is_exact_inside_a_segment(self, seed):
        rng = np.random.default_rng(seed)
        for alpha, beta, gamma, q in zip(
            rng.uniform(-10, 10, 40), rng.uniform(-3, 0, 40), rng.uniform(0, 5, 40), rng.uniform(0.05, 100, 40)
        ):
            segment = Segment(lo=0.01, hi=INF, alpha=alpha, beta=beta, gamma=gamma)
            curve = PiecewiseCurve(segments=(segment,), domain_lo=0.01)
            expected = alpha + beta * q + gamma / q
            assert abs(evaluate(curve, q) - expected) <= 1e-12 * max(1.0, abs(expected))

    @pytest.mark.parametrize("seed", range(20))
    def test_validated_curves_never_increase(self, seed):
        rng = np.random.default_rng(seed)
        curve = _random_curve(rng)
        assert validate(curve) == []
        qs = np.sort(rng.uniform(0.0, 40.0, 200))
        values = [evaluate(curve, q) for q in qs]
        for left, right in zip(values[:-1], values[1:]):
            assert left >= right - 1e-9

    @pytest.mark.parametrize("seed", range(20))
    def test_solve_level_inverts_evaluate(self, seed):
        rng = np.random.default_rng(100 + seed)
        curve = _random_curve(rng, strict=True)
        for q in rng.uniform(0.0, 30.0, 25):
            assert solve_level(curve, evaluate(curve, q)) == pytest.approx(q, rel=1e-7, abs=1e-7)

    @pytest.mark.parametrize("seed", range(20))
    def test_price_meets_wholesale_at_crossing(self, seed):
        rng = np.random.default_rng(200 + seed)
        w = _random_curve(rng, flat_tail=True)
        p = affine_curve(evaluate(w, 0.0) + rng.uniform(0.5, 3.0), -rng.uniform(0.5, 2.0))
        q = crossing(p, w)
        assert q is not None and q > 0
        assert abs(evaluate(p, q) - evaluate(w, q)) <= 1e-7 * max(1.0, abs(evaluate(w, q)))
