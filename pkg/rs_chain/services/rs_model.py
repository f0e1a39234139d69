"""
Order-quantity optimization for retailers, retailer coalitions and coalitions
that include the supplier.

Single-retailer problems are solved exactly: on every piece between merged
breakpoints the objective ``(p(q) - u(q)) * q`` is a quadratic in q, so the
global maximum is among the piece endpoints and the quadratic vertices.

Coalition problems are searched over the coalition's total order T. Once T
is fixed so is the unit price w(T), and what remains is a separable
allocation of T among the members subject to ``p_i(q_i) >= w(T)``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import minimize_scalar

from rs_chain.core.config import settings
from rs_chain.core.logging import get_logger
from rs_chain.exceptions import ArgumentError, ConstructionError, ModelAssumptionError, NoCrossingError
from rs_chain.models import CoalitionSolution, RSProblem, RSSituation
from rs_chain.services.base import BaseService
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

logger = get_logger(__name__)

MAX_RANDOM_RETAILERS = 6
MAX_RESAMPLES = 1000
MAX_ALTERNATES = 64
PEAKS_REFINED = 4
GRID_PATH_OUTER_POINTS = 128


# ---------------------------------------------------------------------------
# Profit functions
# ---------------------------------------------------------------------------

def retailer_profit(p: PiecewiseCurve, q: float, unit_price: float) -> float:
    if q == 0:
        return 0.0
    return (evaluate(p, q) - unit_price) * q


def supplier_profit(q: float, unit_price: float, c: float) -> float:
    if not q >= 0:
        raise ArgumentError(f"order quantity must be non-negative, got {q!r}", {"q": q})
    return (unit_price - c) * q


# ---------------------------------------------------------------------------
# Model assumptions
# ---------------------------------------------------------------------------

def problem_violations(prob: RSProblem) -> List[str]:
    """Every standing assumption the problem violates. Empty when valid."""
    violations = [f"w: {m}" for m in validate(prob.w)]
    violations.extend(f"p: {m}" for m in validate(prob.p))
    if not math.isfinite(prob.c):
        violations.append(f"c must be finite, got {prob.c}")
    if violations:
        return violations

    p0, w0 = evaluate(prob.p, 0.0), evaluate(prob.w, 0.0)
    if not p0 > w0:
        violations.append(f"p(0) = {p0:g} must exceed w(0) = {w0:g}")
    try:
        q_star = solve_level(prob.p, prob.c)
    except NoCrossingError:
        violations.append(f"p never falls to the production cost c = {prob.c:g}")
        return violations
    if q_star <= 0:
        violations.append(f"p(0) = {p0:g} must exceed the production cost c = {prob.c:g}")
        return violations
    floor = infimum(prob.w, q_star)
    if not floor > prob.c:
        violations.append(f"w falls to {floor:g} on [0, {q_star:g}], not above c = {prob.c:g}")
    return violations


def situation_violations(sit: RSSituation) -> List[str]:
    if sit.n < 1:
        return ["a situation needs at least one retailer"]
    violations: List[str] = []
    for i in sit.retailers:
        violations.extend(f"retailer {i}: {m}" for m in problem_violations(sit.problem(i)))
    if violations:
        return violations
    # The joint search domain is wider than any single retailer's.
    upper = sum(solve_level(p, sit.c) for p in sit.prices)
    floor = infimum(sit.w, upper)
    if not floor > sit.c:
        violations.append(f"w falls to {floor:g} on [0, {upper:g}], not above c = {sit.c:g}")
    return violations


@lru_cache(maxsize=128)
def _cached_violations(sit: RSSituation) -> Tuple[str, ...]:
    return tuple(situation_violations(sit))


def ensure_valid_problem(prob: RSProblem) -> None:
    violations = problem_violations(prob)
    if violations:
        raise ModelAssumptionError("invalid RS-problem", violations)


def ensure_valid_situation(sit: RSSituation) -> None:
    violations = _cached_violations(sit)
    if violations:
        raise ModelAssumptionError("invalid RS-situation", list(violations))


def _member_ids(sit: RSSituation, members: Iterable[int], allow_empty: bool = False) -> Tuple[int, ...]:
    ids = tuple(sorted(set(int(i) for i in members)))
    if not ids and not allow_empty:
        raise ArgumentError("coalition must contain at least one retailer")
    unknown = [i for i in ids if not 1 <= i <= sit.n]
    if unknown:
        raise ArgumentError(f"unknown retailer ids {unknown}", {"ids": unknown, "n": sit.n})
    return ids


# ---------------------------------------------------------------------------
# One-dimensional margin maximization
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MarginMaximum:
    value: float
    points: Tuple[float, ...]


def maximize_margin(p: PiecewiseCurve, cost: PiecewiseCurve, upper: float) -> MarginMaximum:
    """Global maximum of (p(q) - cost(q)) * q over [0, upper] and all its maximizers."""
    if upper <= 0:
        return MarginMaximum(0.0, (0.0,))

    knots = [0.0, *merged_breakpoints([p, cost], upper), upper]
    candidates = set(knots)
    for a, b in zip(knots[:-1], knots[1:]):
        mid = 0.5 * (a + b)
        sp, sc = p.piece_at(mid), cost.piece_at(mid)
        # q * (alpha + beta*q + gamma/q) = alpha*q + beta*q**2 + gamma
        alpha, beta = sp.alpha - sc.alpha, sp.beta - sc.beta
        if beta < 0:
            vertex = -alpha / (2.0 * beta)
            if a < vertex < b:
                candidates.add(vertex)

    def objective(q: float) -> float:
        return (evaluate(p, q) - evaluate(cost, q)) * q

    scored = {q: objective(q) for q in candidates}
    best = max(scored.values())
    slack = settings.tolerance * max(1.0, abs(best))
    near = sorted(q for q, v in scored.items() if v >= best - slack)

    # Points joined by a ridge that never dips below the optimum are one optimum.
    distinct: List[float] = []
    for q in near:
        if distinct and objective(0.5 * (distinct[-1] + q)) >= best - slack:
            if scored[q] > scored[distinct[-1]]:
                distinct[-1] = q
            continue
        distinct.append(q)
    return MarginMaximum(best, tuple(distinct))


def order_interval(prob: RSProblem) -> Tuple[float, float]:
    """Feasible order set [0, q-bar] of a lone retailer: p(q) >= w(q)."""
    cap = solve_level(prob.p, prob.c)
    upper = crossing(prob.p, prob.w, upper=cap)
    return 0.0, cap if upper is None else upper


@lru_cache(maxsize=1024)
def cooperative_maximum(p: PiecewiseCurve, c: float) -> MarginMaximum:
    """Joint retailer-supplier optimum max (p(q) - c) q over [0, solve_level(p, c)]."""
    return maximize_margin(p, constant_curve(c), solve_level(p, c))


# ---------------------------------------------------------------------------
# Solvers
# ---------------------------------------------------------------------------

def solve_retailer(prob: RSProblem, retailer: int = 1) -> CoalitionSolution:
    ensure_valid_problem(prob)
    _, upper = order_interval(prob)
    best = maximize_margin(prob.p, prob.w, upper)
    q = best.points[0]
    price = evaluate(prob.w, q)
    return CoalitionSolution(
        members=(retailer,),
        with_supplier=False,
        quantities=(q,),
        total=q,
        unit_price=price,
        value=retailer_profit(prob.p, q, price),
        alternates=tuple((x,) for x in best.points),
    )


def solve_with_supplier(sit: RSSituation, members: Iterable[int]) -> CoalitionSolution:
    ensure_valid_situation(sit)
    ids = _member_ids(sit, members, allow_empty=True)
    options = [cooperative_maximum(sit.price(i), sit.c).points for i in ids]
    quantities = tuple(points[0] for points in options)
    value = sum(retailer_profit(sit.price(i), q, sit.c) for i, q in zip(ids, quantities))
    return CoalitionSolution(
        members=ids,
        with_supplier=True,
        quantities=quantities,
        total=float(sum(quantities)),
        unit_price=sit.c,
        value=value,
        alternates=tuple(itertools.islice(itertools.product(*options), MAX_ALTERNATES)),
    )


def solve_coalition(sit: RSSituation, members: Iterable[int]) -> CoalitionSolution:
    ensure_valid_situation(sit)
    ids = _member_ids(sit, members)
    if len(ids) == 1:
        return solve_retailer(sit.problem(ids[0]), retailer=ids[0])
    return CoalitionSolver().solve(sit, ids)


class _WaterFilling:
    """Exact inner allocation when every member's revenue q*p_i(q) is concave.

    For each total T the optimal split equalizes marginal revenue at a
    common multiplier, with each member capped where p_i falls to w(T). The
    multiplier is bisected for the whole T grid at once.
    """

    def __init__(self, w: PiecewiseCurve, prices: Sequence[PiecewiseCurve], iterations: int):
        self.w = w
        self.prices = list(prices)
        self.marginals = [marginal_revenue(p) for p in prices]
        self.iterations = iterations

    def caps(self, levels: np.ndarray) -> np.ndarray:
        return np.vstack([sup_level_many(p, levels) for p in self.prices])

    def _take(self, caps: np.ndarray, mu: np.ndarray) -> np.ndarray:
        demand = np.vstack([sup_level_many(mr, mu) for mr in self.marginals])
        return np.minimum(caps, demand)

    def allocations(self, totals: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """(values, quantities) for every total; infeasible totals get -inf."""
        totals = np.asarray(totals, dtype=float)
        levels = evaluate_many(self.w, totals)
        caps = self.caps(levels)
        feasible = caps.sum(axis=0) >= totals * (1.0 - 1e-12) - 1e-12

        mu_hi = max(evaluate(mr, 0.0) for mr in self.marginals) + 1.0
        mu_lo = min(float(np.min(evaluate_many(mr, row))) for mr, row in zip(self.marginals, caps)) - 1.0
        lo = np.full_like(totals, mu_lo)
        hi = np.full_like(totals, mu_hi)
        for _ in range(self.iterations):
            mid = 0.5 * (lo + hi)
            enough = self._take(caps, mid).sum(axis=0) >= totals
            lo = np.where(enough, mid, lo)
            hi = np.where(enough, hi, mid)

        q_hi, q_lo = self._take(caps, hi), self._take(caps, lo)
        s_hi, s_lo = q_hi.sum(axis=0), q_lo.sum(axis=0)
        gap = s_lo - s_hi
        frac = np.divide(totals - s_hi, gap, out=np.zeros_like(totals), where=gap > 0)
        quantities = q_hi + (q_lo - q_hi) * np.clip(frac, 0.0, 1.0)

        revenue = sum(evaluate_many(p, row) * row for p, row in zip(self.prices, quantities))
        values = np.where(feasible, revenue - levels * totals, -np.inf)
        return values, quantities

    def allocate(self, total: float) -> np.ndarray:
        _, quantities = self.allocations(np.array([total]))
        return quantities[:, 0]


class _GridAllocation:
    """Inner allocation by exhaustive search over a discretized split of T.

    Used when some revenue curve is not concave. The best split on the grid
    is polished by pairwise exchanges between members.
    """

    def __init__(self, w: PiecewiseCurve, prices: Sequence[PiecewiseCurve], points: int):
        self.w = w
        self.prices = list(prices)
        self.points = points

    def _revenue(self, k: int, q: float) -> float:
        return evaluate(self.prices[k], q) * q if q > 0 else 0.0

    def _grid_split(self, total: float, caps: np.ndarray) -> Optional[np.ndarray]:
        m = self.points
        h = total / (m - 1)
        units = np.arange(m) * h
        idx = np.arange(m)
        shift = idx[:, None] - idx[None, :]
        valid = shift >= 0
        shift = np.where(valid, shift, 0)

        tables = []
        for p, cap in zip(self.prices, caps):
            rev = evaluate_many(p, units) * units
            tables.append(np.where(units <= cap * (1.0 + 1e-12), rev, -np.inf))

        acc = tables[0]
        choices = []
        for table in tables[1:]:
            cand = np.where(valid, acc[shift] + table[None, :], -np.inf)
            pick = np.argmax(cand, axis=1)
            choices.append(pick)
            acc = cand[idx, pick]
        if not np.isfinite(acc[-1]):
            return None

        split = np.zeros(len(tables))
        left = m - 1
        for k in range(len(tables) - 1, 0, -1):
            j = int(choices[k - 1][left])
            split[k] = j * h
            left -= j
        split[0] = left * h
        return split

    def _polish(self, split: np.ndarray, caps: np.ndarray, rounds: int = 3) -> np.ndarray:
        q = split.copy()
        for _ in range(rounds):
            for i, j in itertools.combinations(range(len(q)), 2):
                lo, hi = max(-q[i], q[j] - caps[j]), min(caps[i] - q[i], q[j])
                if hi - lo <= 1e-12:
                    continue

                def loss(d: float, i: int = i, j: int = j) -> float:
                    return -(self._revenue(i, max(q[i] + d, 0.0)) + self._revenue(j, max(q[j] - d, 0.0)))

                res = minimize_scalar(loss, bounds=(lo, hi), method="bounded", options={"xatol": 1e-12})
                if res.success and res.fun < loss(0.0):
                    q[i] += res.x
                    q[j] -= res.x
        return q

    def _solve(self, total: float, polish: bool) -> Tuple[float, Optional[np.ndarray]]:
        level = evaluate(self.w, total)
        caps = np.array([float(sup_level_many(p, np.array([level]))[0]) for p in self.prices])
        if caps.sum() < total * (1.0 - 1e-12) - 1e-12:
            return -np.inf, None
        if total == 0:
            return 0.0, np.zeros(len(self.prices))
        split = self._grid_split(total, caps)
        if split is None:
            return -np.inf, None
        if polish:
            split = self._polish(split, caps)
        revenue = sum(self._revenue(k, q) for k, q in enumerate(split))
        return revenue - level * total, split

    def allocations(self, totals: np.ndarray) -> Tuple[np.ndarray, None]:
        values = np.array([self._solve(float(t), polish=False)[0] for t in totals])
        return values, None

    def allocate(self, total: float) -> np.ndarray:
        _, split = self._solve(total, polish=True)
        return split if split is not None else np.zeros(len(self.prices))


class CoalitionSolver(BaseService):
    """Joint order optimization for a retailer coalition without the supplier."""

    def solve(self, sit: RSSituation, members: Tuple[int, ...]) -> CoalitionSolution:
        cfg = self.settings
        prices = [sit.price(i) for i in members]
        t_max = float(sum(solve_level(p, sit.c) for p in prices))

        if all(is_concave_revenue(p) for p in prices):
            inner = _WaterFilling(sit.w, prices, cfg.bisection_iterations)
            points = cfg.outer_grid_points
        else:
            self.logger.warning("coalition=%s non-concave revenue, using grid allocation", list(members))
            inner = _GridAllocation(sit.w, prices, cfg.inner_grid_points)
            points = min(cfg.outer_grid_points, GRID_PATH_OUTER_POINTS)

        grid = self._grid(sit.w, 0.0, t_max, points)
        values, _ = inner.allocations(grid)
        optima = [self._refine(inner, sit.w, t_max, t, points) for t in _local_peaks(grid, values, PEAKS_REFINED)]

        best = max(v for _, v in optima)
        slack = cfg.tolerance * max(1.0, abs(best))
        totals: List[float] = []
        for t, v in sorted(o for o in optima if o[1] >= best - slack):
            if totals and self._same_optimum(inner, totals[-1], t, best - slack):
                continue
            totals.append(t)

        allocations = [self._quantities(inner, t) for t in totals]
        quantities = allocations[0]
        total = float(sum(quantities))
        price = evaluate(sit.w, total)
        value = sum(retailer_profit(p, q, price) for p, q in zip(prices, quantities))

        self.logger.debug(
            "coalition=%s total=%.9g value=%.9g optima=%d", list(members), total, value, len(totals)
        )
        return CoalitionSolution(
            members=tuple(members),
            with_supplier=False,
            quantities=quantities,
            total=total,
            unit_price=price,
            value=value,
            alternates=tuple(allocations),
        )

    # -----------------------------------------------------------------------
    # Helpers
    # -----------------------------------------------------------------------

    @staticmethod
    def _grid(w: PiecewiseCurve, lo: float, hi: float, points: int, extra: Sequence[float] = ()) -> np.ndarray:
        knots = [q for q in w.breakpoints if lo < q < hi]
        return np.union1d(np.linspace(lo, hi, points), np.asarray([*knots, *extra], dtype=float))

    def _refine(self, inner, w: PiecewiseCurve, t_max: float, start: float, points: int) -> Tuple[float, float]:
        cfg = self.settings
        t_best = start
        v_best = float(inner.allocations(np.array([start]))[0][0])
        half = 0.5 * t_max
        for sweep in range(cfg.refine_passes):
            half /= cfg.refine_factor
            grid = self._grid(w, max(0.0, t_best - half), min(t_max, t_best + half), points, extra=(t_best,))
            values, _ = inner.allocations(grid)
            k = int(np.argmax(values))
            if values[k] > v_best:
                t_best, v_best = float(grid[k]), float(values[k])
            self.logger.debug("refine pass=%d total=%.12g value=%.12g", sweep + 1, t_best, v_best)
        return t_best, v_best

    @staticmethod
    def _same_optimum(inner, a: float, b: float, floor: float) -> bool:
        if b - a <= 1e-6 * max(1.0, b):
            return True
        mid = float(inner.allocations(np.array([0.5 * (a + b)]))[0][0])
        return mid >= floor

    @staticmethod
    def _quantities(inner, total: float) -> Tuple[float, ...]:
        return tuple(float(max(q, 0.0)) for q in inner.allocate(total))


def _local_peaks(grid: np.ndarray, values: np.ndarray, limit: int) -> List[float]:
    finite = np.isfinite(values)
    if not finite.any():
        return [0.0]
    left = np.concatenate(([-np.inf], values[:-1]))
    right = np.concatenate((values[1:], [-np.inf]))
    idx = np.flatnonzero(finite & (values >= left) & (values >= right))
    order = idx[np.argsort(-values[idx], kind="stable")][:limit]
    return [float(grid[k]) for k in order]


# ---------------------------------------------------------------------------
# Cooperation margins
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MarginCheck:
    retailer: int
    coalition_quantity: float
    cooperative_quantity: float
    unit_price: float
    retailer_part: float
    supplier_part: float
    joint_at_coalition: float
    joint_optimum: float

    @property
    def identity_residual(self) -> float:
        return self.joint_at_coalition - (self.retailer_part + self.supplier_part)

    @property
    def optimality_margin(self) -> float:
        return self.joint_optimum - self.joint_at_coalition

    @property
    def dominance_margins(self) -> Tuple[float, float]:
        return (self.joint_optimum - self.retailer_part, self.joint_optimum - self.supplier_part)

    @property
    def identity_holds(self) -> bool:
        return abs(self.identity_residual) <= settings.continuity_tolerance * max(1.0, abs(self.joint_at_coalition))

    @property
    def optimality_holds(self) -> bool:
        return self.optimality_margin >= -settings.tolerance * max(1.0, abs(self.joint_optimum))

    @property
    def dominance_holds(self) -> bool:
        return min(self.dominance_margins) > 0


@dataclass(frozen=True)
class MarginReport:
    members: Tuple[int, ...]
    rows: Tuple[MarginCheck, ...]

    @property
    def ok(self) -> bool:
        return all(r.identity_holds and r.optimality_holds and r.dominance_holds for r in self.rows)

    def failures(self) -> List[str]:
        out = []
        for r in self.rows:
            if not r.identity_holds:
                out.append(f"profit split identity, retailer {r.retailer}: residual {r.identity_residual:.3e}")
            if not r.optimality_holds:
                out.append(f"joint optimality, retailer {r.retailer}: margin {r.optimality_margin:.3e}")
            if not r.dominance_holds:
                out.append(f"strict dominance, retailer {r.retailer}: margins {r.dominance_margins}")
        return out


def check_cooperation_margins(sit: RSSituation, members: Iterable[int], solution: Optional[CoalitionSolution] = None) -> MarginReport:
    """Compare each member's coalition order against its joint order with the supplier."""
    ids = _member_ids(sit, members)
    coalition = solution or solve_coalition(sit, ids)
    u = coalition.unit_price
    rows = []
    for i in ids:
        p = sit.price(i)
        q_s = coalition.quantity(i)
        q_c = cooperative_maximum(p, sit.c).points[0]
        rows.append(
            MarginCheck(
                retailer=i,
                coalition_quantity=q_s,
                cooperative_quantity=q_c,
                unit_price=u,
                retailer_part=retailer_profit(p, q_s, u),
                supplier_part=supplier_profit(q_s, u, sit.c),
                joint_at_coalition=retailer_profit(p, q_s, sit.c),
                joint_optimum=retailer_profit(p, q_c, sit.c),
            )
        )
    return MarginReport(members=ids, rows=tuple(rows))


# ---------------------------------------------------------------------------
# Random instances
# ---------------------------------------------------------------------------

def random_situation(n: int, seed: int) -> RSSituation:
    """Seeded situation with affine prices and a flat-then-hyperbolic wholesale curve."""
    if not 1 <= n <= MAX_RANDOM_RETAILERS:
        raise ArgumentError(f"random situations have 1..{MAX_RANDOM_RETAILERS} retailers, got {n}", {"n": n})
    rng = np.random.default_rng(seed)
    for attempt in range(MAX_RESAMPLES):
        c = float(rng.uniform(1.0, 3.0))
        w0 = c + float(rng.uniform(1.0, 4.0))
        q0 = float(rng.uniform(0.5, 3.0))
        w = PiecewiseCurve(
            segments=(
                Segment(lo=0.0, hi=q0, alpha=w0),
                Segment(lo=q0, hi=INF, alpha=c, gamma=(w0 - c) * q0),
            )
        )
        intercepts = rng.uniform(w0 - 1.0, w0 + 8.0, size=n)
        slopes = rng.uniform(0.2, 2.0, size=n)
        sit = RSSituation(c=c, w=w, prices=tuple(affine_curve(float(a), -float(b)) for a, b in zip(intercepts, slopes)))
        if not situation_violations(sit):
            if attempt:
                logger.debug("random situation n=%d seed=%d accepted after %d resamples", n, seed, attempt)
            return sit
    logger.warning("random situation n=%d seed=%d: no valid draw in %d attempts", n, seed, MAX_RESAMPLES)
    raise ConstructionError(
        f"no valid situation for n={n}, seed={seed} after {MAX_RESAMPLES} draws",
        {"n": n, "seed": seed},
    )
