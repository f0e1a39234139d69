"""Core membership, the altruistic allocation and the allocation/price correspondence.

For an RS-game the core reduces to three families of constraints: efficiency,
``x_i <= v({0,i})`` for every retailer and ``sum_{i in S} x_i >= v(S)`` for
retailer coalitions. Core allocations correspond one-to-one with per-retailer
wholesale prices charged at the cooperative order quantities.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, List, Optional, Tuple

import numpy as np

from rs_chain.core.config import settings
from rs_chain.core.logging import get_logger
from rs_chain.exceptions import (
    ArgumentError,
    CoreMembershipError,
    DegenerateRetailerError,
    PriceBoundError,
)
from rs_chain.models import (
    ALTRUISTIC,
    PRICES,
    SUPPLIER_BIT,
    Allocation,
    PriceVector,
    RSGame,
    RSSituation,
    coalition_label,
    members_of,
    ordered_masks,
    popcount,
)
from rs_chain.services.piecewise import evaluate
from rs_chain.services.rs_model import cooperative_maximum

logger = get_logger(__name__)

EFFICIENCY = "efficiency"
UPPER_BOUND = "upper_bound"
COALITION = "coalition"

BATCH_ROWS = 1024


@dataclass(frozen=True)
class CoreVerdict:
    member: bool
    condition: Optional[str] = None
    coalition: Optional[int] = None
    residual: float = 0.0

    def witness(self, labels: Optional[Tuple[int, ...]] = None) -> str:
        if self.member:
            return ""
        if self.condition == EFFICIENCY:
            return f"payoffs sum to v(N0) {self.residual:+.6g}"
        if self.condition == UPPER_BOUND:
            name = coalition_label(self.coalition, labels)
            return f"payoff exceeds v({name}) by {self.residual:.6g}"
        name = coalition_label(self.coalition, labels)
        return f"coalition {name} receives {self.residual:+.6g} relative to its value"


def slack(game: RSGame) -> float:
    """Tolerance granted to every core constraint, scaled by v(N0)."""
    return settings.tolerance * max(1.0, abs(game.values[game.grand]))


def _check_length(game: RSGame, payoffs) -> None:
    if len(payoffs) != game.players:
        raise ArgumentError(
            f"allocation has {len(payoffs)} payoffs, game has {game.players} players",
            {"expected": game.players, "got": len(payoffs)},
        )


def _efficiency(game: RSGame, x: Allocation) -> Optional[CoreVerdict]:
    residual = float(sum(x.payoffs)) - game.values[game.grand]
    if abs(residual) > slack(game):
        return CoreVerdict(False, EFFICIENCY, game.grand, residual)
    return None


def _coalition_sum(payoffs, mask: int) -> float:
    return float(sum(payoffs[k] for k in members_of(mask)))


def _outsiders(game: RSGame, mask: int) -> int:
    return game.players - popcount(mask)


def in_core_reduced(game: RSGame, x: Allocation) -> CoreVerdict:
    """Membership through the retailer-only constraint system of an RS-game."""
    _check_length(game, x.payoffs)
    if not game.has_supplier:
        raise ArgumentError(
            "the reduced core test needs the supplier; use the full test", {"players": list(game.labels)}
        )
    verdict = _efficiency(game, x)
    if verdict:
        return verdict
    s = slack(game)
    for i in range(1, game.players):
        residual = x.payoffs[i] - game.pair_value(i)
        if residual > s:
            return CoreVerdict(False, UPPER_BOUND, SUPPLIER_BIT | (1 << i), residual)
    for mask in ordered_masks(game.n):
        if mask & SUPPLIER_BIT:
            continue
        residual = _coalition_sum(x.payoffs, mask) - game.values[mask]
        if residual < -s:
            return CoreVerdict(False, COALITION, mask, residual)
    return CoreVerdict(True)


def in_core_full(game: RSGame, x: Allocation) -> CoreVerdict:
    """Membership by the textbook definition: every proper coalition is satisfied.

    With a supplier, coalitions that contain it are checked on the allocation
    with the efficiency gap moved onto the supplier, and with one slack per
    retailer left outside. The verdict then coincides with the reduced test
    on any decomposable game.
    """
    _check_length(game, x.payoffs)
    verdict = _efficiency(game, x)
    if verdict:
        return verdict
    s = slack(game)
    payoffs = list(x.payoffs)
    if game.has_supplier:
        payoffs[0] -= sum(x.payoffs) - game.values[game.grand]
    for mask in ordered_masks(game.n):
        if mask == game.grand:
            continue
        residual = _coalition_sum(payoffs, mask) - game.values[mask]
        allowed = s * _outsiders(game, mask) if game.has_supplier and mask & SUPPLIER_BIT else s
        if residual < -allowed:
            return CoreVerdict(False, COALITION, mask, residual)
    return CoreVerdict(True)


# ---------------------------------------------------------------------------
# Batch membership
# ---------------------------------------------------------------------------

def _rows(payoffs: np.ndarray) -> Iterator[Tuple[int, np.ndarray]]:
    for start in range(0, payoffs.shape[0], BATCH_ROWS):
        yield start, payoffs[start:start + BATCH_ROWS]


def _as_matrix(game: RSGame, payoffs) -> np.ndarray:
    matrix = np.atleast_2d(np.asarray(payoffs, dtype=float))
    _check_length(game, matrix[0])
    return matrix


def _efficient(game: RSGame, matrix: np.ndarray) -> np.ndarray:
    return np.abs(matrix.sum(axis=1) - game.values[game.grand]) <= slack(game)


def in_core_reduced_many(game: RSGame, payoffs) -> np.ndarray:
    """Vectorized in_core_reduced over the rows of a payoff matrix."""
    matrix = _as_matrix(game, payoffs)
    if not game.has_supplier:
        raise ArgumentError(
            "the reduced core test needs the supplier; use the full test", {"players": list(game.labels)}
        )
    s = slack(game)
    retailer_masks = np.arange(2, game.grand + 1, 2)
    members = game.membership[retailer_masks]
    floors = game.value_array[retailer_masks] - s
    caps = np.array([game.pair_value(i) for i in range(1, game.players)]) + s

    out = _efficient(game, matrix)
    for start, block in _rows(matrix):
        ok = np.all(block[:, 1:] <= caps, axis=1)
        ok &= np.all(block @ members.T >= floors, axis=1)
        out[start:start + len(block)] &= ok
    return out


def in_core_full_many(game: RSGame, payoffs) -> np.ndarray:
    matrix = _as_matrix(game, payoffs)
    s = slack(game)
    proper = np.arange(1, game.grand)
    members = game.membership[proper]
    allowed = np.full(len(proper), s)
    if game.has_supplier:
        with_supplier = (proper & SUPPLIER_BIT) == 1
        allowed[with_supplier] = s * (game.players - members[with_supplier].sum(axis=1))
    floors = game.value_array[proper] - allowed

    out = _efficient(game, matrix)
    for start, block in _rows(matrix):
        if game.has_supplier:
            block = block.copy()
            block[:, 0] -= block.sum(axis=1) - game.values[game.grand]
        out[start:start + len(block)] &= np.all(block @ members.T >= floors, axis=1)
    return out


# ---------------------------------------------------------------------------
# Core description
# ---------------------------------------------------------------------------

def altruistic(game: RSGame) -> Allocation:
    """Supplier gets nothing; every retailer its joint profit with the supplier."""
    return Allocation(payoffs=(0.0, *(game.pair_value(i) for i in range(1, game.players))), label=ALTRUISTIC)


@dataclass(frozen=True)
class RetailerInterval:
    retailer: int
    lower: float
    upper: float


@dataclass(frozen=True)
class CoreDescription:
    efficiency: float
    intervals: Tuple[RetailerInterval, ...]
    coalition_bounds: Tuple[Tuple[int, float], ...]


def describe_core(game: RSGame) -> CoreDescription:
    intervals = tuple(
        RetailerInterval(retailer=i, lower=game.values[1 << i], upper=game.pair_value(i))
        for i in range(1, game.players)
    )
    bounds = tuple(
        (mask, game.values[mask])
        for mask in ordered_masks(game.n)
        if not mask & SUPPLIER_BIT and popcount(mask) >= 2
    )
    return CoreDescription(efficiency=game.values[game.grand], intervals=intervals, coalition_bounds=bounds)


# ---------------------------------------------------------------------------
# Allocation <-> price correspondence
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PriceBound:
    """sum_{i in coalition} weights_i * w_i <= rhs."""

    coalition: int
    weights: Tuple[float, ...]
    rhs: float


@dataclass(frozen=True)
class PriceBounds:
    cost: float
    quantities: Tuple[float, ...]
    intervals: Tuple[Tuple[float, float], ...]
    coalitions: Tuple[PriceBound, ...]


def _cooperative(sit: RSSituation, game: RSGame) -> Tuple[np.ndarray, np.ndarray]:
    """Cooperative quantities q_i^c and revenues p_i(q_i^c) q_i^c in retailer order."""
    if sit.n != game.n:
        raise ArgumentError(f"situation has {sit.n} retailers, game has {game.n}", {"situation": sit.n, "game": game.n})
    quantities = np.array([cooperative_maximum(p, sit.c).points[0] for p in sit.prices])
    revenues = np.array([evaluate(p, q) * q for p, q in zip(sit.prices, quantities)])
    return quantities, revenues


def _require_positive(quantities: np.ndarray) -> None:
    for k, q in enumerate(quantities):
        if not q > 0:
            raise DegenerateRetailerError(k + 1)


def price_bounds(sit: RSSituation, game: RSGame) -> PriceBounds:
    quantities, revenues = _cooperative(sit, game)
    _require_positive(quantities)
    coalitions = []
    for mask in ordered_masks(game.n):
        if mask & SUPPLIER_BIT:
            continue
        ids = members_of(mask)
        coalitions.append(
            PriceBound(
                coalition=mask,
                weights=tuple(float(quantities[i - 1]) for i in ids),
                rhs=float(sum(revenues[i - 1] for i in ids) - game.values[mask]),
            )
        )
    intervals = tuple(
        (sit.c, float((revenues[k] - game.values[1 << (k + 1)]) / quantities[k])) for k in range(sit.n)
    )
    return PriceBounds(
        cost=sit.c, quantities=tuple(float(q) for q in quantities), intervals=intervals, coalitions=tuple(coalitions)
    )


def _bound_violation(bounds: PriceBounds, prices: np.ndarray, allowed: float) -> Optional[Tuple[int, float]]:
    for bound in bounds.coalitions:
        ids = members_of(bound.coalition)
        lhs = sum(weight * prices[i - 1] for weight, i in zip(bound.weights, ids))
        if lhs - bound.rhs > allowed:
            return bound.coalition, lhs - bound.rhs
    return None


def prices_from_allocation(sit: RSSituation, game: RSGame, x: Allocation) -> PriceVector:
    """Per-retailer wholesale prices that reproduce a core allocation at cooperative quantities."""
    verdict = in_core_full(game, x)
    if not verdict.member:
        raise CoreMembershipError(
            f"allocation is not in the core: {verdict.witness(game.labels)}",
            {"condition": verdict.condition, "coalition": coalition_label(verdict.coalition, game.labels),
             "residual": verdict.residual},
        )
    quantities, revenues = _cooperative(sit, game)
    _require_positive(quantities)
    payoffs = x.as_array()
    prices = (revenues - payoffs[1:]) / quantities

    # the efficiency gap of x plus rounding
    residual = float(payoffs[0] - np.sum((prices - sit.c) * quantities))
    logger.debug("prices from allocation: supplier residual=%.3e", residual)
    if abs(residual) > 2 * slack(game):
        raise PriceBoundError(
            f"supplier payoff differs from its price income by {residual:.6g}", {"residual": residual}
        )
    return PriceVector(prices=tuple(float(w) for w in prices))


def allocation_from_prices(sit: RSSituation, game: RSGame, prices: PriceVector) -> Allocation:
    """Payoffs generated by per-retailer wholesale prices at cooperative quantities."""
    if len(prices.prices) != sit.n:
        raise ArgumentError(
            f"price vector has {len(prices.prices)} entries, situation has {sit.n} retailers",
            {"expected": sit.n, "got": len(prices.prices)},
        )
    w = np.asarray(prices.prices, dtype=float)
    quantities, revenues = _cooperative(sit, game)
    _require_positive(quantities)
    s = slack(game)
    below: List[int] = [k + 1 for k, price in enumerate(w) if price < sit.c - s / quantities[k]]
    if below:
        raise PriceBoundError(
            f"prices below the production cost c = {sit.c:g} for retailers {below}",
            {"retailers": below, "c": sit.c},
        )
    bounds = price_bounds(sit, game)
    violation = _bound_violation(bounds, w, s)
    if violation:
        mask, excess = violation
        name = coalition_label(mask, game.labels)
        raise PriceBoundError(
            f"prices leave coalition {name} short of its value by {excess:.6g}",
            {"coalition": name, "excess": excess},
        )
    retailers = revenues - w * quantities
    supplier = float(np.sum((w - sit.c) * quantities))
    return Allocation(payoffs=(supplier, *(float(x) for x in retailers)), label=PRICES)
