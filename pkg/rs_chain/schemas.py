from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from typing import Dict, List, Optional, Literal, Union
import math

OutputFormat = Literal["table", "json"]
Command = Literal["solve", "game", "core", "allocate", "verify"]


class Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class SegmentIn(Strict):
    lo: float
    hi: Union[float, Literal["inf"]]
    alpha: float
    beta: float = 0.0
    gamma: float = 0.0

    @field_validator("hi", mode="before")
    @classmethod
    def parse_inf(cls, v):
        if isinstance(v, str) and v.strip().lower() in {"inf", "infinity", "+inf"}:
            return "inf"
        return v

    @property
    def upper(self) -> float:
        return math.inf if self.hi == "inf" else float(self.hi)


class CurveIn(Strict):
    domain_lo: float = 0.0
    segments: List[SegmentIn] = Field(min_length=1)


class RetailerIn(Strict):
    id: int
    p: CurveIn


class SituationIn(Strict):
    c: float
    w: CurveIn
    retailers: List[RetailerIn] = Field(min_length=1)

    @field_validator("retailers")
    @classmethod
    def contiguous_ids(cls, v: List[RetailerIn]) -> List[RetailerIn]:
        ids = sorted(r.id for r in v)
        if ids != list(range(1, len(v) + 1)):
            raise ValueError(f"retailer ids must be 1..{len(v)} without gaps or repeats, got {ids}")
        return v


class CoalitionValueIn(Strict):
    coalition: List[int]
    v: float


class GameIn(Strict):
    n: int = Field(ge=1)
    values: List[CoalitionValueIn]


class AllocationIn(Strict):
    label: str = "user"
    payoffs: List[float] = Field(min_length=2)


class PriceVectorIn(Strict):
    prices: List[float] = Field(min_length=1)


class InputDocument(Strict):
    """One input file: a situation (or a single RS-problem, or a game) plus optional candidates."""

    c: Optional[float] = None
    w: Optional[CurveIn] = None
    retailers: Optional[List[RetailerIn]] = None
    p: Optional[CurveIn] = None
    game: Optional[GameIn] = None
    allocation: Optional[AllocationIn] = None
    prices: Optional[PriceVectorIn] = None

    @model_validator(mode="after")
    def one_source(self) -> "InputDocument":
        situation_fields = [f for f in ("c", "w", "retailers", "p") if getattr(self, f) is not None]
        if self.game is not None:
            if situation_fields:
                raise ValueError(f"a game document cannot also carry situation fields {situation_fields}")
            return self
        if self.c is None or self.w is None:
            raise ValueError("input needs either 'game' or both 'c' and 'w'")
        if (self.retailers is None) == (self.p is None):
            raise ValueError("give exactly one of 'retailers' (a situation) or 'p' (a single retailer)")
        if self.retailers is not None:
            SituationIn(c=self.c, w=self.w, retailers=self.retailers)
        return self

    @property
    def is_game(self) -> bool:
        return self.game is not None

    def situation(self) -> SituationIn:
        if self.retailers is not None:
            return SituationIn(c=self.c, w=self.w, retailers=self.retailers)
        return SituationIn(c=self.c, w=self.w, retailers=[RetailerIn(id=1, p=self.p)])


class RunConfig(BaseModel):
    command: Command
    input_path: Optional[str] = None
    output_format: OutputFormat = "table"
    precision: int = Field(default=6, ge=0, le=12)
    seed: int = 1
    instances: Optional[int] = Field(default=None, ge=0)
    max_n: Optional[int] = Field(default=None, ge=1, le=6)


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------

class OptimumOut(BaseModel):
    q: float
    unit_price: float
    retailer_profit: float
    supplier_profit: float


class RetailerSolveOut(BaseModel):
    retailer: int
    feasible: List[float]
    value: float
    optima: List[OptimumOut]


class SolveReport(BaseModel):
    retailers: List[RetailerSolveOut]


class CoalitionRow(BaseModel):
    coalition: List[int]
    v: float
    quantities: List[float] = []
    unit_price: Optional[float] = None


class StructureOut(BaseModel):
    supplier_alone: bool
    positive: bool
    superadditive: bool
    monotone: bool
    decomposition: bool
    monotone_margin: float
    convex: bool
    findings: List[str]


class GameReport(BaseModel):
    n: int
    values: List[CoalitionRow]
    structure: StructureOut


class VerdictOut(BaseModel):
    member: bool
    condition: Optional[str] = None
    coalition: Optional[List[int]] = None
    residual: float = 0.0
    witness: str = ""


class IntervalOut(BaseModel):
    retailer: int
    lower: float
    upper: float


class CoalitionBoundOut(BaseModel):
    coalition: List[int]
    lower: float


class PriceBoundOut(BaseModel):
    coalition: List[int]
    weights: List[float]
    rhs: float


class PriceBoundsOut(BaseModel):
    quantities: List[float]
    intervals: List[IntervalOut]
    coalitions: List[PriceBoundOut]


class CandidateOut(BaseModel):
    payoffs: List[float]
    reduced: VerdictOut
    full: VerdictOut
    prices: Optional[List[float]] = None
    price_error: Optional[str] = None


class PriceCandidateOut(BaseModel):
    prices: List[float]
    payoffs: Optional[List[float]] = None
    error: Optional[str] = None


class CoreReport(BaseModel):
    efficiency: float
    intervals: List[IntervalOut]
    coalition_bounds: List[CoalitionBoundOut]
    price_bounds: Optional[PriceBoundsOut] = None
    allocation: Optional[CandidateOut] = None
    prices: Optional[PriceCandidateOut] = None


class ReductionOut(BaseModel):
    retailer: int
    reduction: float
    coalition: Optional[List[int]] = None
    residual: float


class AxiomsOut(BaseModel):
    ef: bool
    ef_residual: float
    sr: bool
    sr_residual: float
    sr_coalition: Optional[List[int]] = None
    rr: bool
    rr_witnesses: List[ReductionOut]
    pd: bool
    pd_residual: float
    pd_pair: Optional[List[int]] = None


class SolutionOut(BaseModel):
    payoffs: List[float]
    in_core: bool


class MgpcOut(SolutionOut):
    beta: float
    argmin: List[List[int]]


class AllocateReport(BaseModel):
    mgpc: MgpcOut
    altruistic: SolutionOut
    shapley: Optional[SolutionOut] = None
    axioms: Dict[str, AxiomsOut]


class PropertyOut(BaseModel):
    name: str
    passed: bool
    checked: int
    failures: List[str]
    note: str = ""


class VerifyReport(BaseModel):
    passed: bool
    seed: int
    instances: int
    max_n: int
    no_pd_seed: Optional[int] = None
    properties: List[PropertyOut]
