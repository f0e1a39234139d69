"""Domain records shared by the services.

Coalitions are bitsets over the n+1 players: bit 0 is the supplier, bit i is
retailer i.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Iterator, Mapping, Optional, Tuple

import numpy as np

from rs_chain.exceptions import ArgumentError
from rs_chain.services.piecewise import PiecewiseCurve

SUPPLIER = 0
SUPPLIER_BIT = 1

# Allocation provenance labels
ALTRUISTIC = "altruistic"
MGPC = "mgpc"
SHAPLEY = "shapley"
USER = "user"
PRICES = "prices"


def mask_of(players: Iterable[int]) -> int:
    mask = 0
    for i in players:
        mask |= 1 << i
    return mask


def members_of(mask: int) -> Tuple[int, ...]:
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return tuple(out)


def popcount(mask: int) -> int:
    return bin(mask).count("1")


def submasks(mask: int) -> Iterator[int]:
    """Nonempty submasks of mask, largest first."""
    sub = mask
    while sub:
        yield sub
        sub = (sub - 1) & mask


@dataclass(frozen=True)
class RSProblem:
    c: float
    w: PiecewiseCurve
    p: PiecewiseCurve


@dataclass(frozen=True)
class RSSituation:
    c: float
    w: PiecewiseCurve
    prices: Tuple[PiecewiseCurve, ...]

    def __post_init__(self):
        if not isinstance(self.prices, tuple):
            object.__setattr__(self, "prices", tuple(self.prices))

    @property
    def n(self) -> int:
        return len(self.prices)

    @property
    def retailers(self) -> Tuple[int, ...]:
        return tuple(range(1, self.n + 1))

    def price(self, retailer: int) -> PiecewiseCurve:
        return self.prices[retailer - 1]

    def problem(self, retailer: int) -> RSProblem:
        return RSProblem(c=self.c, w=self.w, p=self.price(retailer))

    def restrict(self, retailers: Iterable[int]) -> "RSSituation":
        """The situation of a retailer subset, re-indexed 1..s in id order."""
        return RSSituation(c=self.c, w=self.w, prices=tuple(self.price(i) for i in sorted(retailers)))


@dataclass(frozen=True)
class CoalitionSolution:
    members: Tuple[int, ...]
    with_supplier: bool
    quantities: Tuple[float, ...]
    total: float
    unit_price: float
    value: float
    alternates: Tuple[Tuple[float, ...], ...] = ()

    def quantity(self, retailer: int) -> float:
        return self.quantities[self.members.index(retailer)]

    @property
    def mask(self) -> int:
        return mask_of(self.members) | (SUPPLIER_BIT if self.with_supplier else 0)


@dataclass(frozen=True, eq=False)
class RSGame:
    """Characteristic function indexed by coalition bitset.

    Bit 0 is the supplier unless has_supplier is False, which only a
    retailer-only subgame produces; then all n+1 players are retailers.
    """

    n: int
    values: Tuple[float, ...]
    provenance: Mapping[int, CoalitionSolution] = field(default_factory=dict)
    labels: Tuple[int, ...] = ()
    has_supplier: bool = True

    def __post_init__(self):
        if not isinstance(self.values, tuple):
            object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if not self.labels:
            object.__setattr__(self, "labels", tuple(range(self.n + 1)))

    @property
    def players(self) -> int:
        return self.n + 1

    @property
    def grand(self) -> int:
        return (1 << (self.n + 1)) - 1

    def v(self, coalition: Iterable[int] | int) -> float:
        mask = coalition if isinstance(coalition, int) else mask_of(coalition)
        return self.values[mask]

    def _require_supplier(self, what: str) -> None:
        if not self.has_supplier:
            raise ArgumentError(f"{what} needs the supplier in the game", {"players": list(self.labels)})

    def pair_value(self, retailer: int) -> float:
        """v({0, i})."""
        self._require_supplier("v({0,i})")
        return self.values[SUPPLIER_BIT | (1 << retailer)]

    def retailer_coalitions(self) -> Iterator[int]:
        """Nonempty retailer-only coalitions, in ascending mask order."""
        self._require_supplier("retailer coalitions")
        for mask in range(2, self.grand + 1, 2):
            yield mask

    @cached_property
    def membership(self) -> np.ndarray:
        """(2**(n+1), n+1) 0/1 matrix: row = coalition mask, column = player."""
        masks = np.arange(1 << (self.n + 1))[:, None]
        return ((masks >> np.arange(self.n + 1)[None, :]) & 1).astype(float)

    @cached_property
    def value_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=float)


@dataclass(frozen=True)
class Allocation:
    payoffs: Tuple[float, ...]
    label: str = USER

    def __post_init__(self):
        if not isinstance(self.payoffs, tuple):
            object.__setattr__(self, "payoffs", tuple(float(x) for x in self.payoffs))

    @property
    def supplier(self) -> float:
        return self.payoffs[SUPPLIER]

    def as_array(self) -> np.ndarray:
        return np.asarray(self.payoffs, dtype=float)


@dataclass(frozen=True)
class PriceVector:
    prices: Tuple[float, ...]

    def __post_init__(self):
        if not isinstance(self.prices, tuple):
            object.__setattr__(self, "prices", tuple(float(x) for x in self.prices))

    def price(self, retailer: int) -> float:
        return self.prices[retailer - 1]


def coalition_label(mask: int, labels: Optional[Tuple[int, ...]] = None) -> str:
    ids = members_of(mask)
    if labels:
        ids = tuple(labels[k] for k in ids)
    return "{" + ",".join(str(i) for i in ids) + "}"


def sort_key(mask: int, labels: Optional[Tuple[int, ...]] = None) -> Tuple[int, Tuple[int, ...]]:
    """Order by coalition size, then lexicographic ids."""
    ids = members_of(mask)
    if labels:
        ids = tuple(labels[k] for k in ids)
    return (len(ids), ids)


def ordered_masks(n: int) -> list:
    """All nonempty coalitions of n+1 players in export order."""
    return sorted(range(1, 1 << (n + 1)), key=sort_key)


