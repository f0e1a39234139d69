from rs_chain.models import Allocation, PriceVector, RSGame, RSSituation, USER
from rs_chain.repositories.base import DocumentRepository
from rs_chain.schemas import AllocationIn, CurveIn, GameIn, InputDocument, PriceVectorIn, SituationIn
from rs_chain.services.piecewise import PiecewiseCurve, Segment
from rs_chain.services.rs_game import game_from_values


def curve_from_schema(curve: CurveIn) -> PiecewiseCurve:
    return PiecewiseCurve(
        segments=tuple(
            Segment(lo=s.lo, hi=s.upper, alpha=s.alpha, beta=s.beta, gamma=s.gamma) for s in curve.segments
        ),
        domain_lo=curve.domain_lo,
    )


def situation_from_schema(doc: SituationIn) -> RSSituation:
    retailers = sorted(doc.retailers, key=lambda r: r.id)
    return RSSituation(c=doc.c, w=curve_from_schema(doc.w), prices=tuple(curve_from_schema(r.p) for r in retailers))


def game_from_schema(doc: GameIn) -> RSGame:
    return game_from_values(doc.n, ((entry.coalition, entry.v) for entry in doc.values))


def allocation_from_schema(doc: AllocationIn) -> Allocation:
    return Allocation(payoffs=tuple(doc.payoffs), label=doc.label or USER)


def prices_from_schema(doc: PriceVectorIn) -> PriceVector:
    return PriceVector(prices=tuple(doc.prices))


class InputRepository(DocumentRepository[InputDocument]):
    """Input documents for the CLI commands."""

    def __init__(self):
        super().__init__(InputDocument)

    def situation(self, doc: InputDocument) -> RSSituation:
        return situation_from_schema(doc.situation())

    def game(self, doc: InputDocument) -> RSGame:
        return game_from_schema(doc.game)