"""The ``rs-chain`` command-line application."""
from typing import Callable, Optional

import typer
from pydantic import BaseModel, ValidationError
from rich.console import Console

from rs_chain.core import get_logger, setup_logging
from rs_chain.exceptions import (
    EXIT_FAILURE,
    AppException,
    InputError,
    handle_app_exception,
    handle_unexpected_exception,
)
from rs_chain.repositories import InputRepository, allocation_from_schema, prices_from_schema
from rs_chain.schemas import InputDocument, RunConfig
from rs_chain.services.reporting import ReportingService, render, to_json
from rs_chain.services.rs_game import build_game
from rs_chain.services.verification import VerificationService

logger = get_logger(__name__)

app = typer.Typer(
    name="rs-chain",
    help="Retailer-supplier distribution chains: optimal orders, cooperative games and profit allocations.",
    no_args_is_help=True,
    add_completion=False,
)

InputOption = typer.Option(None, "--input", "-i", help="JSON input document.")
FormatOption = typer.Option("table", "--format", "-f", help="table or json.")
PrecisionOption = typer.Option(6, "--precision", min=0, max=12, help="Decimal places in tables.")


def _config(command: str, **fields) -> RunConfig:
    try:
        return RunConfig(command=command, **fields)
    except ValidationError as exc:
        raise InputError(
            f"invalid options for {command}",
            details={"errors": [f"{'.'.join(str(p) for p in e['loc'])}: {e['msg']}" for e in exc.errors(include_url=False)]},
        )


def _document(cfg: RunConfig) -> InputDocument:
    if cfg.input_path is None:
        raise InputError(f"{cfg.command} needs --input FILE")
    return InputRepository().load(cfg.input_path)


def _execute(
    command: str,
    options: dict,
    action: Callable[[RunConfig], BaseModel],
    failed: Callable[[BaseModel], bool] = lambda report: False,
) -> None:
    setup_logging()
    stdout, stderr = Console(), Console(stderr=True)
    try:
        cfg = _config(command, **options)
        logger.info("command=%s input=%s format=%s", cfg.command, cfg.input_path, cfg.output_format)
        report = action(cfg)
    except AppException as exc:
        raise typer.Exit(handle_app_exception(exc, stderr, command))
    except Exception as exc:
        raise typer.Exit(handle_unexpected_exception(exc, stderr, command))

    if cfg.output_format == "json":
        typer.echo(to_json(report))
    else:
        render(report, stdout, cfg.precision)
    if failed(report):
        raise typer.Exit(EXIT_FAILURE)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

@app.command()
def solve(
    input_path: Optional[str] = InputOption,
    output_format: str = FormatOption,
    precision: int = PrecisionOption,
):
    """Optimal order sizes of every retailer facing the supplier alone."""

    def action(cfg: RunConfig):
        doc = _document(cfg)
        if doc.is_game:
            raise InputError("solve needs a situation or a single retailer, not a game")
        return ReportingService().solve_report(InputRepository().situation(doc))

    _execute("solve", dict(input_path=input_path, output_format=output_format, precision=precision), action)


@app.command()
def game(
    input_path: Optional[str] = InputOption,
    output_format: str = FormatOption,
    precision: int = PrecisionOption,
):
    """Characteristic function of the situation with its structure checks."""

    def action(cfg: RunConfig):
        doc = _document(cfg)
        repo = InputRepository()
        rs = repo.game(doc) if doc.is_game else build_game(repo.situation(doc))
        return ReportingService().game_report(rs)

    _execute("game", dict(input_path=input_path, output_format=output_format, precision=precision), action)


@app.command()
def core(
    input_path: Optional[str] = InputOption,
    output_format: str = FormatOption,
    precision: int = PrecisionOption,
):
    """Core description, price bounds and verdicts on any candidate in the input."""

    def action(cfg: RunConfig):
        doc = _document(cfg)
        repo = InputRepository()
        sit = None if doc.is_game else repo.situation(doc)
        rs = repo.game(doc) if doc.is_game else build_game(sit)
        return ReportingService().core_report(
            rs,
            sit=sit,
            allocation=allocation_from_schema(doc.allocation) if doc.allocation else None,
            prices=prices_from_schema(doc.prices) if doc.prices else None,
        )

    _execute("core", dict(input_path=input_path, output_format=output_format, precision=precision), action)


@app.command()
def allocate(
    input_path: Optional[str] = InputOption,
    output_format: str = FormatOption,
    precision: int = PrecisionOption,
):
    """mgpc, altruistic and Shapley allocations side by side."""

    def action(cfg: RunConfig):
        doc = _document(cfg)
        repo = InputRepository()
        rs = repo.game(doc) if doc.is_game else build_game(repo.situation(doc))
        return ReportingService().allocate_report(rs)

    _execute("allocate", dict(input_path=input_path, output_format=output_format, precision=precision), action)


@app.command()
def verify(
    input_path: Optional[str] = InputOption,
    output_format: str = FormatOption,
    precision: int = PrecisionOption,
    seed: int = typer.Option(1, "--seed", help="Seed for random instances and candidates."),
    instances: Optional[int] = typer.Option(None, "--instances", min=0, help="Random situations to check."),
    max_n: Optional[int] = typer.Option(None, "--max-n", min=1, max=6, help="Largest random situation."),
):
    """Property suite; exits 1 when any property fails.

    Without --input it runs the golden corpus, seeded random situations and
    the axiom independence checks. With a situation or game document it
    checks only that input.
    """

    def action(cfg: RunConfig):
        service = VerificationService()
        if cfg.input_path is None:
            result = service.run(seed=cfg.seed, instances=cfg.instances, max_n=cfg.max_n)
        else:
            doc = _document(cfg)
            repo = InputRepository()
            if doc.is_game:
                result = service.run_game(repo.game(doc), seed=cfg.seed)
            else:
                result = service.run_situation(repo.situation(doc), seed=cfg.seed)
        return ReportingService().verify_report(result)

    _execute(
        "verify",
        dict(
            input_path=input_path,
            output_format=output_format,
            precision=precision,
            seed=seed,
            instances=instances,
            max_n=max_n,
        ),
        action,
        failed=lambda report: not report.passed,
    )


def main() -> None:
    app()


if __name__ == "__main__":
    main()
