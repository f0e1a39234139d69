from typing import List, Optional, Union

import orjson
from pydantic import BaseModel
from rich.console import Console
from rich.table import Table

from rs_chain.exceptions import DegenerateRetailerError, InputError, PriceBoundError
from rs_chain.models import Allocation, PriceVector, RSGame, RSSituation, members_of, ordered_masks
from rs_chain.schemas import (
    AllocateReport,
    AxiomsOut,
    CandidateOut,
    CoalitionBoundOut,
    CoalitionRow,
    CoreReport,
    GameReport,
    IntervalOut,
    MgpcOut,
    OptimumOut,
    PriceBoundOut,
    PriceBoundsOut,
    PriceCandidateOut,
    PropertyOut,
    ReductionOut,
    RetailerSolveOut,
    SolutionOut,
    SolveReport,
    StructureOut,
    VerdictOut,
    VerifyReport,
)
from rs_chain.services import core_analysis, rs_game, rs_model, solutions
from rs_chain.services.piecewise import evaluate
from rs_chain.services.verification import VerificationReport
from .base import BaseService

Report = Union[SolveReport, GameReport, CoreReport, AllocateReport, VerifyReport]

MAX_LISTED_FAILURES = 10


def _ids(game: RSGame, mask: Optional[int]) -> Optional[List[int]]:
    if mask is None:
        return None
    return [game.labels[k] for k in members_of(mask)]


class ReportingService(BaseService):
    """Builds the per-command reports from the analysis services."""

    def solve_report(self, sit: RSSituation) -> SolveReport:
        rs_model.ensure_valid_situation(sit)
        rows = []
        for i in sit.retailers:
            prob = sit.problem(i)
            sol = rs_model.solve_retailer(prob, retailer=i)
            lo, hi = rs_model.order_interval(prob)
            optima = []
            for (q,) in sol.alternates:
                price = evaluate(sit.w, q)
                optima.append(
                    OptimumOut(
                        q=q,
                        unit_price=price,
                        retailer_profit=rs_model.retailer_profit(prob.p, q, price),
                        supplier_profit=rs_model.supplier_profit(q, price, sit.c),
                    )
                )
            rows.append(RetailerSolveOut(retailer=i, feasible=[lo, hi], value=sol.value, optima=optima))
            self.logger.info("solve retailer=%d optima=%d value=%.9g", i, len(optima), sol.value)
        return SolveReport(retailers=rows)

    def game_report(self, game: RSGame) -> GameReport:
        structure = rs_game.check_structure(game)
        convexity = rs_game.check_convexity(game)
        rows = []
        for mask in ordered_masks(game.n):
            sol = game.provenance.get(mask)
            rows.append(
                CoalitionRow(
                    coalition=_ids(game, mask),
                    v=game.values[mask],
                    quantities=list(sol.quantities) if sol else [],
                    unit_price=sol.unit_price if sol and sol.members else None,
                )
            )
        return GameReport(
            n=game.n,
            values=rows,
            structure=StructureOut(
                supplier_alone=structure.supplier_alone,
                positive=structure.positive,
                superadditive=structure.superadditive,
                monotone=structure.monotone,
                decomposition=structure.decomposition,
                monotone_margin=structure.monotone_margin,
                convex=convexity.convex,
                findings=[f.describe(game.labels) for f in structure.findings],
            ),
        )

    def _verdict(self, game: RSGame, verdict: core_analysis.CoreVerdict) -> VerdictOut:
        return VerdictOut(
            member=verdict.member,
            condition=verdict.condition,
            coalition=_ids(game, verdict.coalition),
            residual=verdict.residual,
            witness=verdict.witness(game.labels),
        )

    def core_report(
        self,
        game: RSGame,
        sit: Optional[RSSituation] = None,
        allocation: Optional[Allocation] = None,
        prices: Optional[PriceVector] = None,
    ) -> CoreReport:
        description = core_analysis.describe_core(game)
        report = CoreReport(
            efficiency=description.efficiency,
            intervals=[IntervalOut(retailer=r.retailer, lower=r.lower, upper=r.upper) for r in description.intervals],
            coalition_bounds=[
                CoalitionBoundOut(coalition=_ids(game, mask), lower=value) for mask, value in description.coalition_bounds
            ],
        )
        if sit is not None:
            bounds = core_analysis.price_bounds(sit, game)
            report.price_bounds = PriceBoundsOut(
                quantities=list(bounds.quantities),
                intervals=[
                    IntervalOut(retailer=k + 1, lower=lo, upper=hi) for k, (lo, hi) in enumerate(bounds.intervals)
                ],
                coalitions=[
                    PriceBoundOut(coalition=_ids(game, b.coalition), weights=list(b.weights), rhs=b.rhs)
                    for b in bounds.coalitions
                ],
            )

        if allocation is not None:
            full = core_analysis.in_core_full(game, allocation)
            candidate = CandidateOut(
                payoffs=list(allocation.payoffs),
                reduced=self._verdict(game, core_analysis.in_core_reduced(game, allocation)),
                full=self._verdict(game, full),
            )
            if full.member and sit is not None:
                try:
                    candidate.prices = list(core_analysis.prices_from_allocation(sit, game, allocation).prices)
                except (PriceBoundError, DegenerateRetailerError) as exc:
                    candidate.price_error = exc.message
            report.allocation = candidate
            self.logger.info("core candidate member=%s", full.member)

        if prices is not None:
            if sit is None:
                raise InputError("a price vector needs a situation, not a bare game")
            out = PriceCandidateOut(prices=list(prices.prices))
            try:
                out.payoffs = list(core_analysis.allocation_from_prices(sit, game, prices).payoffs)
            except PriceBoundError as exc:
                out.error = exc.message
            report.prices = out
        return report

    def _axioms(self, game: RSGame, x: Allocation) -> AxiomsOut:
        r = solutions.check_axioms(game, x)
        return AxiomsOut(
            ef=r.ef,
            ef_residual=r.ef_residual,
            sr=r.sr,
            sr_residual=r.sr_residual,
            sr_coalition=_ids(game, r.sr_coalition),
            rr=r.rr,
            rr_witnesses=[
                ReductionOut(retailer=w.retailer, reduction=w.reduction, coalition=_ids(game, w.coalition), residual=w.residual)
                for w in r.rr_witnesses
            ],
            pd=r.pd,
            pd_residual=r.pd_residual,
            pd_pair=list(r.pd_pair) if r.pd_pair else None,
        )

    def allocate_report(self, game: RSGame) -> AllocateReport:
        result = solutions.mgpc(game)
        altruistic = core_analysis.altruistic(game)
        candidates = {"mgpc": result.allocation, "altruistic": altruistic}

        shapley_out = None
        if game.players <= self.settings.max_shapley_players:
            shapley = solutions.shapley(game)
            candidates["shapley"] = shapley
            shapley_out = SolutionOut(
                payoffs=list(shapley.payoffs), in_core=core_analysis.in_core_full(game, shapley).member
            )
        else:
            self.logger.warning("shapley skipped players=%d cap=%d", game.players, self.settings.max_shapley_players)

        return AllocateReport(
            mgpc=MgpcOut(
                payoffs=list(result.allocation.payoffs),
                in_core=core_analysis.in_core_full(game, result.allocation).member,
                beta=result.beta,
                argmin=[_ids(game, m) for m in result.argmin_coalitions],
            ),
            altruistic=SolutionOut(
                payoffs=list(altruistic.payoffs), in_core=core_analysis.in_core_full(game, altruistic).member
            ),
            shapley=shapley_out,
            axioms={name: self._axioms(game, x) for name, x in candidates.items()},
        )

    def verify_report(self, report: VerificationReport) -> VerifyReport:
        return VerifyReport(
            passed=report.passed,
            seed=report.seed,
            instances=report.instances,
            max_n=report.max_n,
            no_pd_seed=report.no_pd_seed,
            properties=[
                PropertyOut(
                    name=r.name,
                    passed=r.passed,
                    checked=r.checked,
                    failures=r.failures[:MAX_LISTED_FAILURES],
                    note=r.note,
                )
                for r in report.results
            ],
        )


# ---------------------------------------------------------------------------
# Output
# ---------------------------------------------------------------------------

def to_json(report: BaseModel) -> str:
    """Byte-stable JSON: sorted keys, shortest round-trip floats."""
    return orjson.dumps(report.model_dump(mode="json"), option=orjson.OPT_SORT_KEYS).decode()


def _num(x: Optional[float], precision: int) -> str:
    return "-" if x is None else f"{x:.{precision}f}"


def _vec(xs, precision: int) -> str:
    return "(" + ", ".join(_num(x, precision) for x in xs) + ")"


def _set(ids: Optional[List[int]]) -> str:
    return "-" if ids is None else "{" + ",".join(str(i) for i in ids) + "}"


def _flag(ok: bool) -> str:
    return "yes" if ok else "no"


def render(report: Report, console: Console, precision: int = 6) -> None:
    if isinstance(report, SolveReport):
        _render_solve(report, console, precision)
    elif isinstance(report, GameReport):
        _render_game(report, console, precision)
    elif isinstance(report, CoreReport):
        _render_core(report, console, precision)
    elif isinstance(report, AllocateReport):
        _render_allocate(report, console, precision)
    elif isinstance(report, VerifyReport):
        _render_verify(report, console)


def _render_solve(report: SolveReport, console: Console, precision: int) -> None:
    table = Table(title="Retailer optima")
    for col in ("retailer", "feasible Q", "q*", "w(q*)", "retailer profit", "supplier profit"):
        table.add_column(col, justify="right")
    for row in report.retailers:
        interval = f"[{_num(row.feasible[0], precision)}, {_num(row.feasible[1], precision)}]"
        for k, opt in enumerate(row.optima):
            table.add_row(
                str(row.retailer) if k == 0 else "",
                interval if k == 0 else "",
                _num(opt.q, precision),
                _num(opt.unit_price, precision),
                _num(opt.retailer_profit, precision),
                _num(opt.supplier_profit, precision),
            )
    console.print(table)


def _render_game(report: GameReport, console: Console, precision: int) -> None:
    table = Table(title=f"Characteristic function (n = {report.n})")
    for col in ("coalition", "v", "quantities", "unit price"):
        table.add_column(col, justify="right")
    for row in report.values:
        table.add_row(_set(row.coalition), _num(row.v, precision), _vec(row.quantities, precision),
                      _num(row.unit_price, precision))
    console.print(table)

    s = report.structure
    checks = Table(title="Structure")
    checks.add_column("property")
    checks.add_column("holds", justify="center")
    for name, ok in (("v({0}) = 0", s.supplier_alone), ("v(T) > 0", s.positive),
                     ("superadditive", s.superadditive),
                     ("strictly monotone", s.monotone), ("v(S0) = sum v({0,i})", s.decomposition),
                     ("convex (diagnostic)", s.convex)):
        checks.add_row(name, _flag(ok))
    console.print(checks)
    for finding in s.findings:
        console.print(f"  {finding}", markup=False)


def _render_core(report: CoreReport, console: Console, precision: int) -> None:
    console.print(f"v(N0) = {_num(report.efficiency, precision)} (payoffs must sum to this)", markup=False)
    table = Table(title="Retailer payoff intervals")
    for col in ("retailer", "lower v({i})", "upper v({0,i})"):
        table.add_column(col, justify="right")
    for r in report.intervals:
        table.add_row(str(r.retailer), _num(r.lower, precision), _num(r.upper, precision))
    console.print(table)
    for b in report.coalition_bounds:
        console.print(f"  sum over {_set(b.coalition)} >= {_num(b.lower, precision)}", markup=False)

    if report.price_bounds:
        pb = report.price_bounds
        prices = Table(title="Wholesale price bounds at cooperative quantities")
        for col in ("retailer", "q^c", "lowest price", "highest price"):
            prices.add_column(col, justify="right")
        for r, q in zip(pb.intervals, pb.quantities):
            prices.add_row(str(r.retailer), _num(q, precision), _num(r.lower, precision), _num(r.upper, precision))
        console.print(prices)
        for b in pb.coalitions:
            if len(b.coalition) < 2:
                continue
            lhs = " + ".join(f"{_num(w, precision)}*w{i}" for w, i in zip(b.weights, b.coalition))
            console.print(f"  {lhs} <= {_num(b.rhs, precision)}", markup=False)

    if report.allocation:
        a = report.allocation
        console.print(f"allocation {_vec(a.payoffs, precision)}", markup=False)
        console.print(f"  member (reduced test): {_flag(a.reduced.member)} {a.reduced.witness}", markup=False)
        console.print(f"  member (full test):    {_flag(a.full.member)} {a.full.witness}", markup=False)
        if a.prices is not None:
            console.print(f"  implied prices {_vec(a.prices, precision)}", markup=False)
        if a.price_error:
            console.print(f"  no implied prices: {a.price_error}", markup=False)
    if report.prices:
        p = report.prices
        console.print(f"prices {_vec(p.prices, precision)}", markup=False)
        if p.payoffs is not None:
            console.print(f"  allocation {_vec(p.payoffs, precision)}", markup=False)
        else:
            console.print(f"  rejected: {p.error}", markup=False)


def _render_allocate(report: AllocateReport, console: Console, precision: int) -> None:
    columns = [("mgpc", report.mgpc), ("altruistic", report.altruistic)]
    if report.shapley:
        columns.append(("shapley", report.shapley))
    table = Table(title=f"Allocations (beta = {_num(report.mgpc.beta, precision)})")
    table.add_column("player", justify="right")
    for name, _ in columns:
        table.add_column(name, justify="right")
    for k in range(len(report.mgpc.payoffs)):
        table.add_row(str(k), *(_num(sol.payoffs[k], precision) for _, sol in columns))
    table.add_row("in core", *(_flag(sol.in_core) for _, sol in columns))
    for axiom in ("ef", "sr", "rr", "pd"):
        table.add_row(axiom.upper(), *(_flag(getattr(report.axioms[name], axiom)) for name, _ in columns))
    console.print(table)


def _render_verify(report: VerifyReport, console: Console) -> None:
    table = Table(title=f"Verification (seed {report.seed}, {report.instances} instances, n <= {report.max_n})")
    for col in ("property", "checked", "result"):
        table.add_column(col)
    for prop in report.properties:
        table.add_row(prop.name, str(prop.checked), "pass" if prop.passed else "FAIL")
    console.print(table)
    for prop in report.properties:
        for failure in prop.failures:
            console.print(f"  {prop.name}: {failure}", markup=False)
        if prop.note:
            console.print(f"  {prop.name}: {prop.note}", markup=False)
    console.print("all properties hold" if report.passed else "property failures found")
