"""
Single-valued solutions for RS-games.

The minimal-gain-per-capita (mgpc) solution charges every retailer the same
reduction ``beta`` from its joint profit with the supplier, where ``beta`` is
the smallest per-member gain any retailer coalition obtains by adding the
supplier. It is the only allocation satisfying efficiency (EF), stability for
retailers (SR), retailer reduction (RR) and preservation of differences (PD).
The Shapley value is computed exactly for comparison.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy.special import comb

from rs_chain.core.config import settings
from rs_chain.exceptions import ArgumentError, CapacityError
from rs_chain.models import (
    MGPC,
    SHAPLEY,
    Allocation,
    RSGame,
    members_of,
    popcount,
)
from rs_chain.services.rs_game import supplier_gain

NO_EF = "no_ef"
NO_SR = "no_sr"
NO_RR = "no_rr"
NO_PD = "no_pd"
COUNTEREXAMPLES = (NO_EF, NO_SR, NO_RR, NO_PD)


def _tol(*values: float) -> float:
    return settings.tolerance * max(1.0, *(abs(v) for v in values))


def per_capita_gains(game: RSGame) -> Dict[int, float]:
    """(v(S + supplier) - v(S)) / |S| for every nonempty retailer coalition."""
    return {mask: gain / popcount(mask) for mask, gain in supplier_gain(game).items()}


@dataclass(frozen=True)
class MgpcResult:
    beta: float
    argmin_coalitions: Tuple[int, ...]
    allocation: Allocation


def _reduced(game: RSGame, reductions, label: str, supplier: float) -> Allocation:
    return Allocation(
        payoffs=(supplier, *(game.pair_value(i) - r for i, r in zip(range(1, game.players), reductions))),
        label=label,
    )


def mgpc(game: RSGame) -> MgpcResult:
    gains = per_capita_gains(game)
    if not gains:
        raise ArgumentError("the game has no retailers")
    beta = min(gains.values())
    argmin = tuple(mask for mask, g in gains.items() if g - beta <= _tol(beta))
    allocation = _reduced(game, [beta] * game.n, MGPC, game.n * beta)
    return MgpcResult(beta=beta, argmin_coalitions=argmin, allocation=allocation)


def retailer_betas(game: RSGame) -> Tuple[float, ...]:
    """Per retailer i, the smallest per-capita supplier gain over coalitions containing i."""
    gains = per_capita_gains(game)
    return tuple(
        min(g for mask, g in gains.items() if mask & (1 << i)) for i in range(1, game.players)
    )


def shapley(game: RSGame) -> Allocation:
    """Exact Shapley value from the subset-weighted marginal contribution formula."""
    players = game.players
    if players > settings.max_shapley_players:
        raise CapacityError("shapley", players, settings.max_shapley_players)

    values = game.value_array
    masks = np.arange(1 << players)
    sizes = np.array([popcount(int(m)) for m in masks])
    payoffs = []
    for i in range(players):
        bit = 1 << i
        without = masks[(masks & bit) == 0]
        weights = 1.0 / (players * comb(players - 1, sizes[without]))
        payoffs.append(float(np.sum(weights * (values[without | bit] - values[without]))))
    return Allocation(payoffs=tuple(payoffs), label=SHAPLEY)


# ---------------------------------------------------------------------------
# Axioms
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ReductionWitness:
    retailer: int
    reduction: float
    coalition: Optional[int]
    residual: float

    @property
    def ok(self) -> bool:
        return self.coalition is not None


@dataclass(frozen=True)
class AxiomReport:
    ef: bool
    ef_residual: float
    sr: bool
    sr_residual: float
    sr_coalition: Optional[int]
    rr: bool
    rr_witnesses: Tuple[ReductionWitness, ...]
    pd: bool
    pd_residual: float
    pd_pair: Optional[Tuple[int, int]]

    @property
    def failed(self) -> Tuple[str, ...]:
        return tuple(name for name, ok in (("EF", self.ef), ("SR", self.sr), ("RR", self.rr), ("PD", self.pd)) if not ok)


def check_axioms(game: RSGame, x: Allocation) -> AxiomReport:
    if len(x.payoffs) != game.players:
        raise ArgumentError(
            f"allocation has {len(x.payoffs)} payoffs, game has {game.players} players",
            {"expected": game.players, "got": len(x.payoffs)},
        )
    payoffs = x.payoffs
    total = game.values[game.grand]
    ef_residual = float(sum(payoffs)) - total

    sr_residual, sr_coalition = float("inf"), None
    for mask in game.retailer_coalitions():
        residual = sum(payoffs[k] for k in members_of(mask)) - game.values[mask]
        if residual < sr_residual:
            sr_residual, sr_coalition = residual, mask
    sr = sr_residual >= -_tol(game.values[sr_coalition]) if sr_coalition is not None else True

    gains = per_capita_gains(game)
    witnesses = []
    for i in range(1, game.players):
        reduction = game.pair_value(i) - payoffs[i]
        best, best_mask = float("inf"), None
        for mask, gain in gains.items():
            gap = abs(reduction - gain)
            if gap < best:
                best, best_mask = gap, mask
        matched = best_mask if best <= _tol(reduction) else None
        witnesses.append(ReductionWitness(retailer=i, reduction=reduction, coalition=matched, residual=best))

    pd_residual, pd_pair = 0.0, None
    for i in range(1, game.players):
        for j in range(i + 1, game.players):
            residual = abs((payoffs[i] - payoffs[j]) - (game.pair_value(i) - game.pair_value(j)))
            if pd_pair is None or residual > pd_residual:
                pd_residual, pd_pair = residual, (i, j)
    pd = pd_pair is None or pd_residual <= _tol(game.pair_value(pd_pair[0]), game.pair_value(pd_pair[1]))

    return AxiomReport(
        ef=abs(ef_residual) <= _tol(total),
        ef_residual=ef_residual,
        sr=sr,
        sr_residual=sr_residual if sr_coalition is not None else 0.0,
        sr_coalition=sr_coalition,
        rr=all(w.ok for w in witnesses),
        rr_witnesses=tuple(witnesses),
        pd=pd,
        pd_residual=pd_residual,
        pd_pair=pd_pair,
    )


def counterexample_solution(kind: str, game: RSGame) -> Allocation:
    """Allocations that drop exactly one of the four mgpc axioms."""
    gains = per_capita_gains(game)
    if not gains:
        raise ArgumentError("the game has no retailers")
    beta = min(gains.values())
    n = game.n
    if kind == NO_EF:
        return _reduced(game, [beta] * n, NO_EF, 0.0)
    if kind == NO_SR:
        worst = max(gains.values())
        return _reduced(game, [worst] * n, NO_SR, n * worst)
    if kind == NO_RR:
        return _reduced(game, [beta - 1.0] * n, NO_RR, n * (beta - 1.0))
    if kind == NO_PD:
        betas = retailer_betas(game)
        return _reduced(game, betas, NO_PD, float(sum(betas)))
    raise ArgumentError(f"unknown counterexample {kind!r}", {"kinds": list(COUNTEREXAMPLES)})


def designated_axiom(kind: str) -> str:
    return {NO_EF: "EF", NO_SR: "SR", NO_RR: "RR", NO_PD: "PD"}[kind]


def perturbations(x: Allocation, count: int, scale: float, seed: int) -> List[Allocation]:
    """Random directions away from x, for testing uniqueness."""
    rng = np.random.default_rng(seed)
    base = x.as_array()
    out = []
    for _ in range(count):
        direction = rng.normal(size=base.shape)
        direction /= np.linalg.norm(direction)
        out.append(Allocation(payoffs=tuple(base + scale * direction), label=x.label))
    return out
