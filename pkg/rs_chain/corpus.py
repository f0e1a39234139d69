"""Worked situations with their known results.

Values in coalition export order: by coalition size, then ids
({0}, {1}, {2}, {0,1}, {0,2}, {1,2}, {0,1,2} for two retailers).
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Optional, Tuple

from rs_chain.models import RSSituation
from rs_chain.services.piecewise import INF, PiecewiseCurve, Segment, affine_curve


def _f(whole: int, num: int = 0, den: int = 1) -> float:
    return float(whole + Fraction(num, den))


@dataclass(frozen=True)
class RetailerOptimum:
    quantities: Tuple[float, ...]
    value: float
    supplier_profits: Tuple[float, ...]


@dataclass(frozen=True)
class WorkedExample:
    name: str
    description: str
    situation: RSSituation
    retailer: Optional[RetailerOptimum] = None
    values: Tuple[float, ...] = ()
    mgpc: Tuple[float, ...] = ()
    altruistic: Tuple[float, ...] = ()
    shapley: Tuple[float, ...] = ()
    shapley_in_core: Optional[bool] = None


_STEP_DISCOUNT = PiecewiseCurve(
    segments=(
        Segment(lo=0.0, hi=1.0, alpha=5.0),
        Segment(lo=1.0, hi=INF, alpha=2.0, gamma=3.0),
    )
)

LONE_RETAILER = WorkedExample(
    name="lone-retailer",
    description="one retailer, p = 7 - q, flat-then-hyperbolic wholesale price, c = 2",
    situation=RSSituation(c=2.0, w=_STEP_DISCOUNT, prices=(affine_curve(7.0, -1.0),)),
    retailer=RetailerOptimum(quantities=(2.5,), value=3.25, supplier_profits=(3.0,)),
)

TIED_OPTIMA = WorkedExample(
    name="tied-optima",
    description="one retailer with two optimal order sizes, c = 1",
    situation=RSSituation(
        c=1.0,
        w=PiecewiseCurve(
            segments=(
                Segment(lo=0.0, hi=1.0, alpha=4.0),
                Segment(lo=1.0, hi=2.0, alpha=3.0, gamma=1.0),
                Segment(lo=2.0, hi=2.5, alpha=2.25, gamma=2.5),
                Segment(lo=2.5, hi=INF, alpha=3.25),
            )
        ),
        prices=(
            PiecewiseCurve(
                segments=(
                    Segment(lo=0.0, hi=1.0, alpha=5.0),
                    Segment(lo=1.0, hi=2.0, alpha=6.0, beta=-1.0),
                    Segment(lo=2.0, hi=INF, alpha=5.0, beta=-0.5),
                )
            ),
        ),
    ),
    retailer=RetailerOptimum(quantities=(1.5, 2.5), value=1.25, supplier_profits=(4.0, 5.625)),
)

CONVEX_PAIR = WorkedExample(
    name="convex-pair",
    description="two retailers, p = 7 - q and 8 - q, wholesale price stated from q = 1/4",
    situation=RSSituation(
        c=2.0,
        w=PiecewiseCurve(
            segments=(
                Segment(lo=0.25, hi=1.0, alpha=5.0),
                Segment(lo=1.0, hi=INF, alpha=2.0, gamma=3.0),
            ),
            domain_lo=0.25,
        ),
        prices=(affine_curve(7.0, -1.0), affine_curve(8.0, -1.0)),
    ),
    values=(0.0, 3.25, 6.0, 6.25, 9.0, 12.25, 15.25),
    mgpc=(3.0, 4.75, 7.5),
    altruistic=(0.0, 6.25, 9.0),
    shapley=(2.0, 5.25, 8.0),
    shapley_in_core=True,
)

STEEP_DISCOUNT_PAIR = WorkedExample(
    name="steep-discount-pair",
    description="the convex pair under w = 5 on [0, 1] and 9/2 + 1/(2q) beyond",
    situation=RSSituation(
        c=2.0,
        w=PiecewiseCurve(
            segments=(
                Segment(lo=0.0, hi=1.0, alpha=5.0),
                Segment(lo=1.0, hi=INF, alpha=4.5, gamma=0.5),
            )
        ),
        prices=(affine_curve(7.0, -1.0), affine_curve(8.0, -1.0)),
    ),
    values=(0.0, 1.0625, 2.5625, 6.25, 9.0, 4.125, 15.25),
    mgpc=(_f(10, 3, 8), _f(1, 1, 16), _f(3, 13, 16)),
    altruistic=(0.0, 6.25, 9.0),
    shapley=(_f(5, 31, 48), _f(3, 71, 96), _f(5, 83, 96)),
    shapley_in_core=True,
)

SYMMETRIC_PAIR = WorkedExample(
    name="symmetric-pair",
    description="two identical retailers p = 50 - q/2 with a three-tier wholesale schedule, c = 9/5",
    situation=RSSituation(
        c=1.8,
        w=PiecewiseCurve(
            segments=(
                Segment(lo=0.0, hi=10.0, alpha=11.0),
                Segment(lo=10.0, hi=100.0, alpha=1.0, gamma=100.0),
                Segment(lo=100.0, hi=INF, alpha=2.0),
            )
        ),
        prices=(affine_curve(50.0, -0.5), affine_curve(50.0, -0.5)),
    ),
    values=(0.0, 1100.5, 1100.5, _f(1161, 31, 50), _f(1161, 31, 50), 2301.0, _f(2323, 6, 25)),
    mgpc=(_f(22, 6, 25), 1150.5, 1150.5),
    altruistic=(0.0, _f(1161, 31, 50), _f(1161, 31, 50)),
    shapley=(_f(27, 59, 75), _f(1147, 109, 150), _f(1147, 109, 150)),
    shapley_in_core=False,
)

# Price-correspondence figures for the symmetric pair.
SYMMETRIC_PAIR_PRICE_CAP = _f(3, 82, 1205)
SYMMETRIC_PAIR_JOINT_PRICE_CAP = _f(4, 74, 1205)
SYMMETRIC_PAIR_COOPERATIVE_QUANTITY = 48.2
SYMMETRIC_PAIR_COALITION_QUANTITY = 49.0

# The steep-discount pair has unequal per-retailer minimal gains.
UNEQUAL_BETAS = (_f(5, 3, 16), _f(5, 9, 16))

EXAMPLES: Dict[str, WorkedExample] = {
    ex.name: ex for ex in (LONE_RETAILER, TIED_OPTIMA, CONVEX_PAIR, STEEP_DISCOUNT_PAIR, SYMMETRIC_PAIR)
}


def games() -> Tuple[WorkedExample, ...]:
    """Examples with a tabulated characteristic function."""
    return tuple(ex for ex in EXAMPLES.values() if ex.values)
