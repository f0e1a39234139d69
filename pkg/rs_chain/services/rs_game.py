"""The cooperative game of an RS-situation and its structural checks."""
from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Tuple

from rs_chain.core.config import settings
from rs_chain.exceptions import ArgumentError, CapacityError
from rs_chain.models import (
    SUPPLIER,
    SUPPLIER_BIT,
    CoalitionSolution,
    RSGame,
    RSSituation,
    coalition_label,
    mask_of,
    members_of,
    ordered_masks,
    submasks,
)
from rs_chain.services.base import BaseService
from rs_chain.services.rs_model import (
    ensure_valid_situation,
    retailer_profit,
    solve_coalition,
    solve_with_supplier,
)

SUPPLIER_ALONE = "supplier alone"
POSITIVE = "positive"
SUPERADDITIVE = "superadditive"
MONOTONE = "monotone"
DECOMPOSITION = "decomposition"


def _scaled(tol: float, *values: float) -> float:
    return tol * max(1.0, *(abs(v) for v in values))


class GameBuilder(BaseService):
    """Solves every coalition of a situation into a characteristic function."""

    def build(self, sit: RSSituation) -> RSGame:
        ensure_valid_situation(sit)
        if sit.n > self.settings.max_retailers:
            raise CapacityError("build_game", sit.n, self.settings.max_retailers)

        started = time.perf_counter()
        size = 1 << (sit.n + 1)
        values = [0.0] * size
        provenance: Dict[int, CoalitionSolution] = {SUPPLIER_BIT: solve_with_supplier(sit, ())}

        for mask in range(2, size, 2):
            ids = members_of(mask)
            solution = solve_coalition(sit, ids)
            values[mask] = solution.value
            provenance[mask] = solution
            # Per-member cooperative optima are cached, so this is a sum of n one-dimensional solves.
            joint = solve_with_supplier(sit, ids)
            values[mask | SUPPLIER_BIT] = joint.value
            provenance[mask | SUPPLIER_BIT] = joint

        self.logger.info(
            "game n=%d coalitions=%d elapsed=%.3fs", sit.n, size - 1, time.perf_counter() - started
        )
        return RSGame(n=sit.n, values=tuple(values), provenance=provenance)


def build_game(sit: RSSituation) -> RSGame:
    return GameBuilder().build(sit)


def replay_value(sit: RSSituation, solution: CoalitionSolution) -> float:
    """Recompute a coalition's value from its stored quantities."""
    unit_price = sit.c if solution.with_supplier else solution.unit_price
    return sum(retailer_profit(sit.price(i), q, unit_price) for i, q in zip(solution.members, solution.quantities))


# ---------------------------------------------------------------------------
# Structure
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StructureFinding:
    check: str
    coalitions: Tuple[int, ...]
    residual: float

    def describe(self, labels: Optional[Tuple[int, ...]] = None) -> str:
        names = ", ".join(coalition_label(m, labels) for m in self.coalitions)
        return f"{self.check} fails at {names} (residual {self.residual:.6g})"


@dataclass(frozen=True)
class StructureReport:
    supplier_alone: bool
    positive: bool
    superadditive: bool
    monotone: bool
    decomposition: bool
    monotone_margin: float
    findings: Tuple[StructureFinding, ...]

    @property
    def ok(self) -> bool:
        return self.supplier_alone and self.positive and self.superadditive and self.monotone and self.decomposition


def check_structure(game: RSGame) -> StructureReport:
    tol = settings.tolerance
    v = game.values
    findings: List[StructureFinding] = []

    if game.has_supplier and abs(v[SUPPLIER_BIT]) > tol:
        findings.append(StructureFinding(SUPPLIER_ALONE, (SUPPLIER_BIT,), v[SUPPLIER_BIT]))

    first = 2 if game.has_supplier else 1
    for mask in range(first, game.grand + 1):
        if not v[mask] > 0:
            findings.append(StructureFinding(POSITIVE, (mask,), v[mask]))

    for union in range(1, game.grand + 1):
        for left in submasks(union):
            right = union ^ left
            # each unordered pair once
            if right == 0 or left < right:
                continue
            residual = v[union] - v[left] - v[right]
            if residual < -_scaled(tol, v[union]):
                findings.append(StructureFinding(SUPERADDITIVE, (left, right), residual))

    margin = float("inf")
    for mask in range(1, game.grand + 1):
        for player in range(game.players):
            bit = 1 << player
            if mask & bit:
                continue
            step = v[mask | bit] - v[mask]
            margin = min(margin, step)
            if not step > 0:
                findings.append(StructureFinding(MONOTONE, (mask, mask | bit), step))

    for mask in game.retailer_coalitions() if game.has_supplier else ():
        split = sum(game.pair_value(i) for i in members_of(mask))
        residual = v[mask | SUPPLIER_BIT] - split
        if abs(residual) > _scaled(tol, split):
            findings.append(StructureFinding(DECOMPOSITION, (mask | SUPPLIER_BIT,), residual))

    failed = {f.check for f in findings}
    return StructureReport(
        supplier_alone=SUPPLIER_ALONE not in failed,
        positive=POSITIVE not in failed,
        superadditive=SUPERADDITIVE not in failed,
        monotone=MONOTONE not in failed,
        decomposition=DECOMPOSITION not in failed,
        monotone_margin=margin,
        findings=tuple(findings),
    )


@dataclass(frozen=True)
class ConvexityViolation:
    player: int
    smaller: int
    larger: int
    residual: float


@dataclass(frozen=True)
class ConvexityReport:
    convex: bool
    violations: Tuple[ConvexityViolation, ...]


def check_convexity(game: RSGame) -> ConvexityReport:
    """Supermodularity test: marginal contributions never shrink as coalitions grow.

    Checked on adjacent pairs S and S+{j}, which is equivalent to the full
    condition.
    """
    tol = settings.tolerance
    v = game.values
    violations = []
    for i in range(game.players):
        bi = 1 << i
        for j in range(i + 1, game.players):
            bj = 1 << j
            for mask in range(game.grand + 1):
                if mask & (bi | bj):
                    continue
                residual = (v[mask | bi | bj] - v[mask | bj]) - (v[mask | bi] - v[mask])
                if residual < -_scaled(tol, v[mask | bi | bj]):
                    violations.append(ConvexityViolation(i, mask, mask | bj, residual))
    return ConvexityReport(convex=not violations, violations=tuple(violations))


def supplier_gain(game: RSGame) -> Dict[int, float]:
    """v(S + supplier) - v(S) for every nonempty retailer coalition S."""
    return {mask: game.values[mask | SUPPLIER_BIT] - game.values[mask] for mask in game.retailer_coalitions()}


# ---------------------------------------------------------------------------
# Subgames and export
# ---------------------------------------------------------------------------

def subgame(game: RSGame, players: Iterable[int]) -> RSGame:
    keep = sorted(set(int(p) for p in players))
    unknown = [p for p in keep if not 0 <= p <= game.n]
    if unknown:
        raise ArgumentError(f"unknown players {unknown}", {"players": unknown, "n": game.n})
    if not keep:
        raise ArgumentError("a subgame needs at least one player")
    has_supplier = game.has_supplier and SUPPLIER in keep

    size = 1 << len(keep)
    values = []
    provenance = {}
    for local in range(size):
        original = mask_of(keep[k] for k in members_of(local))
        values.append(game.values[original])
        if original in game.provenance:
            provenance[local] = game.provenance[original]
    labels = tuple(game.labels[p] for p in keep)
    return RSGame(
        n=len(keep) - 1, values=tuple(values), provenance=provenance, labels=labels, has_supplier=has_supplier
    )


def export_game(game: RSGame) -> dict:
    """Game document: every nonempty coalition, by size then ids."""
    rows = []
    for mask in ordered_masks(game.n):
        rows.append({"coalition": [game.labels[k] for k in members_of(mask)], "v": game.values[mask]})
    return {"n": game.n, "values": rows}


def game_from_values(n: int, entries: Iterable[Tuple[Iterable[int], float]]) -> RSGame:
    """Build a game from (coalition ids, value) pairs; every nonempty coalition is required."""
    size = 1 << (n + 1)
    values: List[Optional[float]] = [None] * size
    values[0] = 0.0
    for ids, value in entries:
        ids = list(ids)
        unknown = [i for i in ids if not 0 <= i <= n]
        if unknown:
            raise ArgumentError(f"coalition {ids} names unknown players", {"coalition": ids, "n": n})
        mask = mask_of(ids)
        if mask == 0:
            raise ArgumentError("the empty coalition has no entry; its value is 0")
        if values[mask] is not None:
            raise ArgumentError(f"coalition {sorted(ids)} listed twice", {"coalition": sorted(ids)})
        values[mask] = float(value)
    missing = [coalition_label(m) for m in range(1, size) if values[m] is None]
    if missing:
        raise ArgumentError(f"{len(missing)} coalitions have no value", {"missing": missing})
    return RSGame(n=n, values=tuple(values))
