"""
Command-line interface.

Exit codes: 0 success (any category, unclassified included), 2 usage or
input error, 3 numerical failure.
"""

import logging
import sys
from contextlib import contextmanager
from pathlib import Path
from typing import Optional

import numpy as np
import typer

from povmix.classifier import ClassifierConfig, classify
from povmix.counts import load_counts, write_counts
from povmix.distributions import CATALOGUE, law_from_name, sample_poisson_mixture
from povmix.errors import INPUT_ERRORS, NUMERICAL_ERRORS, InvalidParameterError, OutputExistsError
from povmix.gof import DEFAULT_BOOT
from povmix.gpd import MIN_EXCESSES
from povmix.pot import mean_residual_life
from povmix.report import format_json, format_text
from povmix.settings import get_settings
from povmix.study import inverse_gaussian_sweep, load_study_config, run_study, write_study_outputs

logger = logging.getLogger(__name__)

EXIT_INPUT = 2
EXIT_NUMERICAL = 3

app = typer.Typer(
    name="povmix",
    help="Classify overdispersed counts into Poisson-mixture tail categories.",
    no_args_is_help=True,
    add_completion=False,
)


# =============================================================================
# HELPERS
# =============================================================================

def configure_logging(verbose: bool = False) -> None:
    level = logging.DEBUG if verbose else get_settings().log_level.upper()
    logging.basicConfig(
        level=level,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )


def _fail(message: str, code: int):
    typer.echo(f"error: {message}", err=True)
    raise typer.Exit(code)


@contextmanager
def _handled():
    try:
        yield
    except INPUT_ERRORS as e:
        _fail(str(e), EXIT_INPUT)
    except NUMERICAL_ERRORS as e:
        _fail(str(e), EXIT_NUMERICAL)


def _resolve_seed(seed: Optional[int]) -> int:
    if seed is not None:
        return seed
    seed = int(np.random.SeedSequence().entropy % 2**63)
    typer.echo(f"seed: {seed}", err=True)
    return seed


def _check_writable(path: Path, force: bool) -> None:
    if path.exists() and not force:
        raise OutputExistsError(f"refusing to overwrite {path} (use --force)")


def parse_floats(text: str, what: str) -> list[float]:
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise InvalidParameterError(f"{what} must be comma-separated numbers, got '{text}'") from None


def parse_grid(text: str) -> np.ndarray:
    """LO:HI:STEP, both ends included."""
    parts = text.split(":")
    if len(parts) != 3:
        raise InvalidParameterError(f"grid must look like LO:HI:STEP, got '{text}'")
    lo, hi, step = parse_floats(",".join(parts), "grid")
    if step <= 0 or hi < lo:
        raise InvalidParameterError(f"grid needs LO <= HI and STEP > 0, got '{text}'")
    return np.arange(lo, hi + step / 2, step)


# =============================================================================
# COMMANDS
# =============================================================================

@app.callback()
def main(verbose: bool = typer.Option(False, "--verbose", "-v", help="Debug logging.")):
    configure_logging(verbose)


@app.command("classify")
def cmd_classify(
    input_file: Path = typer.Option(..., "--input", "-i", help="Counts file, one integer per line."),
    quantile: float = typer.Option(0.95, "--quantile", help="Threshold quantile level."),
    alpha: float = typer.Option(0.05, "--alpha", help="Significance level of every test."),
    boot: int = typer.Option(DEFAULT_BOOT, "--boot", help="Bootstrap replicates per test."),
    min_excesses: int = typer.Option(MIN_EXCESSES, "--min-excesses"),
    seed: Optional[int] = typer.Option(None, "--seed"),
    json: bool = typer.Option(True, "--json/--text", help="JSON (stable) or aligned text report."),
):
    """Route a count sample through the tail decision tree."""
    with _handled():
        counts = load_counts(input_file)
        try:
            config = ClassifierConfig(
                threshold_p=quantile,
                alpha=alpha,
                n_boot=boot,
                min_excesses=min_excesses,
                seed=_resolve_seed(seed),
            )
        except ValueError as e:
            raise InvalidParameterError(str(e)) from e

        _, trace = classify(counts, config)
        typer.echo(format_json(trace) if json else format_text(trace))


@app.command("simulate")
def cmd_simulate(
    law: str = typer.Option(..., "--law", help="Mixing law name (see `povmix laws`)."),
    params: str = typer.Option(..., "--params", help="Comma-separated law parameters."),
    n: int = typer.Option(1000, "--n", min=1),
    seed: Optional[int] = typer.Option(None, "--seed"),
    out: Path = typer.Option(..., "--out", "-o"),
    force: bool = typer.Option(False, "--force"),
):
    """Simulate Poisson-mixture counts into a counts file."""
    with _handled():
        mixing = law_from_name(law, parse_floats(params, "--params"))
        _check_writable(out, force)
        seed = _resolve_seed(seed)

        counts = sample_poisson_mixture(mixing, n, np.random.default_rng(seed))
        write_counts(out, counts)
        typer.echo(
            f"{mixing.label} seed={seed} n={n} mean={counts.mean():.6g} variance={counts.var(ddof=1) if n > 1 else 0.0:.6g}",
            err=True,
        )


@app.command("study")
def cmd_study(
    config: Path = typer.Option(..., "--config", "-c", help="YAML study description."),
    out: Path = typer.Option(..., "--out", "-o", help="Directory for records.csv and summary.csv."),
    full: bool = typer.Option(False, "--paper", "--full", help="Run the full 1000 replicates per scenario."),
    workers: Optional[int] = typer.Option(None, "--workers", min=1),
    force: bool = typer.Option(False, "--force"),
):
    """Run a Monte Carlo classification study."""
    with _handled():
        study = load_study_config(config, full=full)
        if workers is not None:
            study = study.model_copy(update={"workers": workers})
        for path in (out / "records.csv", out / "summary.csv"):
            _check_writable(path, force)

        records = run_study(study)
        records_path, summary_path = write_study_outputs(records, out, force=True)
        typer.echo(f"wrote {records_path} and {summary_path}", err=True)


@app.command("mrl")
def cmd_mrl(
    input_file: Path = typer.Option(..., "--input", "-i"),
    grid: str = typer.Option(..., "--grid", help="Thresholds as LO:HI:STEP."),
    out: Path = typer.Option(..., "--out", "-o"),
    force: bool = typer.Option(False, "--force"),
):
    """Mean-residual-life table as CSV."""
    with _handled():
        counts = load_counts(input_file)
        thresholds = parse_grid(grid)
        _check_writable(out, force)
        table = mean_residual_life(counts, thresholds)
        table.to_csv(out, index=False)


@app.command("sweep")
def cmd_sweep(
    out: Path = typer.Option(..., "--out", "-o"),
    mu: float = typer.Option(2.0, "--mu"),
    sigmas: str = typer.Option("0.1,0.5,1,2,4,8", "--sigmas"),
    n: int = typer.Option(2000, "--n", min=1),
    quantile: float = typer.Option(0.975, "--quantile"),
    replicates: int = typer.Option(500, "--replicates", min=1),
    boot: int = typer.Option(DEFAULT_BOOT, "--boot", min=1),
    alpha: float = typer.Option(0.05, "--alpha"),
    seed: Optional[int] = typer.Option(None, "--seed"),
    workers: Optional[int] = typer.Option(None, "--workers", min=1),
    force: bool = typer.Option(False, "--force"),
):
    """GPD rejection proportion of InverseGaussian(mu, sigma) mixtures across sigma."""
    with _handled():
        grid = parse_floats(sigmas, "--sigmas")
        _check_writable(out, force)
        table = inverse_gaussian_sweep(
            grid,
            mu=mu,
            n=n,
            threshold_p=quantile,
            replicates=replicates,
            seed=_resolve_seed(seed),
            alpha=alpha,
            n_boot=boot,
            workers=workers,
        )
        table.to_csv(out, index=False)


@app.command("laws")
def cmd_laws():
    """List mixing families and their tail categories."""
    width = max(len(entry.family) for entry in CATALOGUE)
    for entry in CATALOGUE:
        condition = f" (if {entry.condition})" if entry.condition else ""
        sampler = "" if entry.sampler else "  [no sampler]"
        typer.echo(f"{entry.family.ljust(width)}  {entry.mixture:<24} {entry.category.value}{condition}{sampler}")
