"""
Monte Carlo harness: simulate Poisson-mixture samples, classify each one and
aggregate the outcomes per scenario.

Replicate r of scenario s draws everything from SeedSequence(seed,
spawn_key=(s, r)), so results do not depend on the number of workers or on
the order replicates finish in.
"""

import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from functools import partial
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np
import pandas as pd
import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from povmix.classifier import ClassifierConfig, classify
from povmix.distributions import (
    CategoryKind,
    InverseGaussianLaw,
    MixingLaw,
    UnclassifiedReason,
    law_from_name,
    sample_poisson_mixture,
    tail_ratio_limit,
)
from povmix.errors import (
    INPUT_ERRORS,
    ConfigError,
    DegenerateSampleError,
    InvalidParameterError,
    OutputExistsError,
    PovmixError,
    TooFewExcessesError,
)
from povmix.gof import DEFAULT_BOOT, bootstrap_gof_test
from povmix.gpd import MIN_EXCESSES, fit_gpd_mle
from povmix.pot import empirical_quantile, excesses
from povmix.settings import get_settings

logger = logging.getLogger(__name__)

DESK_REPLICATES = 200
FULL_REPLICATES = 1000

# tie-break order for the most frequent category
CATEGORY_ORDER = (
    CategoryKind.FRECHET,
    CategoryKind.GUMBEL,
    CategoryKind.PSEUDO_GUMBEL,
    CategoryKind.UNCLASSIFIED,
)
FREQ_COLUMNS = {
    CategoryKind.FRECHET: "freq_frechet",
    CategoryKind.GUMBEL: "freq_gumbel",
    CategoryKind.PSEUDO_GUMBEL: "freq_pseudo",
    CategoryKind.UNCLASSIFIED: "freq_unclassified",
}
SUMMARY_COLUMNS = [
    "mixing",
    "avg_excesses",
    "gpd_rejection",
    *FREQ_COLUMNS.values(),
    "most_frequent",
    "most_frequent_tied",
]


# =============================================================================
# CONFIGURATION
# =============================================================================

class Scenario(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    law: MixingLaw
    n: int = Field(default=1000, ge=1)
    threshold_p: float = Field(default=0.95, gt=0, lt=1)
    label: Optional[str] = None

    @property
    def name(self) -> str:
        return self.label or self.law.label


class StudyConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    scenarios: list[Scenario] = Field(min_length=1)
    replicates: int = Field(ge=1)
    seed: int = Field(default=0, ge=0)
    alpha: float = Field(default=0.05, gt=0, lt=1)
    n_boot: int = Field(default=DEFAULT_BOOT, ge=1)
    min_excesses: int = Field(default=MIN_EXCESSES, ge=1)
    workers: Optional[int] = Field(default=None, ge=1)

    def classifier_config(self, scenario: Scenario, seed: int) -> ClassifierConfig:
        return ClassifierConfig(
            threshold_p=scenario.threshold_p,
            alpha=self.alpha,
            n_boot=self.n_boot,
            min_excesses=self.min_excesses,
            seed=seed,
        )


REQUIRED_KEYS = ("replicates", "scenarios")


def load_study_config(path: Path, full: bool = False) -> StudyConfig:
    """Read a YAML key-value study file; `full` restores the full replicate count."""
    try:
        raw = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
    except (OSError, yaml.YAMLError) as e:
        raise ConfigError(f"cannot read study config {path}: {e}") from e

    if not isinstance(raw, dict):
        raise ConfigError(f"study config {path} must be a key-value mapping")
    for key in REQUIRED_KEYS:
        if key not in raw:
            raise ConfigError(f"missing config key '{key}'", key=key)
    if not isinstance(raw["scenarios"], list):
        raise ConfigError("config key 'scenarios' must be a list", key="scenarios")

    scenarios = []
    for i, item in enumerate(raw["scenarios"]):
        if not isinstance(item, dict) or "law" not in item:
            raise ConfigError(f"scenario {i} needs a 'law' key", key=f"scenarios.{i}.law")
        item = dict(item)
        try:
            item["law"] = law_from_name(str(item.pop("law")), [float(p) for p in item.pop("params", [])])
        except (InvalidParameterError, TypeError, ValueError) as e:
            raise ConfigError(f"scenario {i}: {e}", key=f"scenarios.{i}.params") from e
        scenarios.append(item)

    fields = {**raw, "scenarios": scenarios}
    if full:
        fields["replicates"] = FULL_REPLICATES

    try:
        return StudyConfig.model_validate(fields)
    except ValidationError as e:
        first = e.errors()[0]
        key = ".".join(str(part) for part in first["loc"])
        raise ConfigError(f"invalid config key '{key}': {first['msg']}", key=key) from e


def resolve_workers(requested: Optional[int]) -> int:
    """Requested worker count, capped by POVMIX_THREADS."""
    cap = get_settings().threads
    workers = requested or cap or os.cpu_count() or 1
    if cap:
        workers = min(workers, cap)
    return max(workers, 1)


def replicate_streams(seed: int, *key: int) -> tuple[np.random.Generator, int]:
    """Simulation generator and classifier seed for one (seed, *key) replicate."""
    sim, cls = np.random.SeedSequence(seed, spawn_key=key).spawn(2)
    return np.random.default_rng(sim), int(cls.generate_state(1, np.uint64)[0] >> 1)


def _parallel_map(fn, tasks: Sequence, workers: int) -> list:
    if workers == 1 or len(tasks) == 1:
        return [fn(task) for task in tasks]
    chunksize = max(1, len(tasks) // (workers * 8))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks, chunksize=chunksize))


# =============================================================================
# STUDY
# =============================================================================

class StudyRecord(BaseModel):
    model_config = ConfigDict(frozen=True)

    scenario: int
    mixing: str
    replicate: int
    n_excess: int
    stage1_rejected: Optional[bool]
    category: CategoryKind
    reason: Optional[str] = None
    gamma_hat: Optional[float] = None
    mad1_p: Optional[float] = None
    dev_p: Optional[float] = None
    mad2_p: Optional[float] = None
    runtime_s: float = 0.0


def _run_replicate(task: tuple[int, int, StudyConfig]) -> StudyRecord:
    s, r, config = task
    scenario = config.scenarios[s]
    started = time.perf_counter()
    rng, classifier_seed = replicate_streams(config.seed, s, r)
    base = dict(scenario=s, mixing=scenario.name, replicate=r)

    try:
        ys = sample_poisson_mixture(scenario.law, scenario.n, rng)
        category, trace = classify(ys, config.classifier_config(scenario, classifier_seed))
    except DegenerateSampleError as e:
        return StudyRecord(
            **base,
            n_excess=0,
            stage1_rejected=None,
            category=CategoryKind.UNCLASSIFIED,
            reason=f"{UnclassifiedReason.DEGENERATE_SAMPLE.value}: {e}",
            runtime_s=time.perf_counter() - started,
        )
    except INPUT_ERRORS:
        raise
    except PovmixError as e:
        logger.warning("%s replicate %d failed: %s", scenario.name, r, e)
        return StudyRecord(
            **base,
            n_excess=0,
            stage1_rejected=None,
            category=CategoryKind.UNCLASSIFIED,
            reason=f"{UnclassifiedReason.NUMERICAL_FAILURE.value}: {e}",
            runtime_s=time.perf_counter() - started,
        )

    return StudyRecord(
        **base,
        n_excess=trace.n_excess,
        stage1_rejected=None if trace.mad1_p is None else trace.mad1_p < config.alpha,
        category=category.kind,
        reason=category.reason.value if category.reason else None,
        gamma_hat=trace.gamma_hat,
        mad1_p=trace.mad1_p,
        dev_p=trace.dev_p,
        mad2_p=trace.mad2_p,
        runtime_s=time.perf_counter() - started,
    )


def run_study(config: StudyConfig) -> list[StudyRecord]:
    workers = resolve_workers(config.workers)
    tasks = [(s, r, config) for s in range(len(config.scenarios)) for r in range(config.replicates)]
    logger.info(
        "running %d scenarios x %d replicates on %d workers",
        len(config.scenarios),
        config.replicates,
        workers,
    )

    started = time.perf_counter()
    records = _parallel_map(_run_replicate, tasks, workers)
    records.sort(key=lambda rec: (rec.scenario, rec.replicate))

    for s, scenario in enumerate(config.scenarios):
        cpu = sum(rec.runtime_s for rec in records if rec.scenario == s)
        logger.info("%s: %d replicates, %.1f s of work", scenario.name, config.replicates, cpu)
    logger.info("study finished in %.1f s", time.perf_counter() - started)
    return records


def records_frame(records: Iterable[StudyRecord]) -> pd.DataFrame:
    """One row per replicate; wall-clock timings are left out so the table is reproducible."""
    rows = [rec.model_dump(mode="json", exclude={"runtime_s"}) for rec in records]
    return pd.DataFrame(rows, columns=[name for name in StudyRecord.model_fields if name != "runtime_s"])


def summarize(records: Sequence[StudyRecord]) -> pd.DataFrame:
    """
    Per-scenario average excess count, stage-1 rejection proportion (among
    replicates that reached the test) and category frequencies over all
    replicates, unclassified ones included.
    """
    if not records:
        raise InvalidParameterError("cannot summarize an empty study")

    frame = records_frame(records)
    rows = []
    for _, group in frame.groupby("scenario", sort=True):
        n = len(group)
        tested = group["stage1_rejected"].dropna()
        freqs = {kind: float((group["category"] == kind.value).sum()) / n for kind in CATEGORY_ORDER}

        best = max(freqs.values())
        leaders = [kind for kind in CATEGORY_ORDER if freqs[kind] == best]

        rows.append(
            {
                "mixing": group["mixing"].iloc[0],
                "avg_excesses": float(group["n_excess"].mean()),
                "gpd_rejection": float(tested.astype(bool).mean()) if len(tested) else float("nan"),
                **{FREQ_COLUMNS[kind]: freqs[kind] for kind in CATEGORY_ORDER},
                "most_frequent": leaders[0].value,
                "most_frequent_tied": len(leaders) > 1,
            }
        )

    return pd.DataFrame(rows, columns=SUMMARY_COLUMNS)


def write_study_outputs(records: Sequence[StudyRecord], out_dir: Path, force: bool = False) -> tuple[Path, Path]:
    out_dir = Path(out_dir)
    records_path = out_dir / "records.csv"
    summary_path = out_dir / "summary.csv"

    existing = [p for p in (records_path, summary_path) if p.exists()]
    if existing and not force:
        raise OutputExistsError(f"refusing to overwrite {', '.join(map(str, existing))} (use --force)")

    out_dir.mkdir(parents=True, exist_ok=True)
    records_frame(records).to_csv(records_path, index=False)
    summarize(records).to_csv(summary_path, index=False)
    return records_path, summary_path


# =============================================================================
# INVERSE-GAUSSIAN REJECTION SWEEP
# =============================================================================

SWEEP_COLUMNS = ["sigma", "tail_ratio_limit", "rejection", "avg_excesses", "n_tested", "replicates"]


def _sweep_replicate(task: tuple) -> tuple[int, int, int, Optional[bool]]:
    i, r, law, n, threshold_p, alpha, n_boot, min_excesses, seed = task
    rng, test_seed = replicate_streams(seed, i, r)

    try:
        ys = sample_poisson_mixture(law, n, rng)
        x = excesses(ys, empirical_quantile(ys, threshold_p), min_excesses)
        result = bootstrap_gof_test(
            x.values,
            fit=partial(fit_gpd_mle, min_obs=1),
            n_boot=n_boot,
            rng=np.random.default_rng(test_seed),
        )
    except TooFewExcessesError as e:
        return i, r, e.count, None
    except INPUT_ERRORS:
        raise
    except PovmixError as e:
        logger.warning("sweep point %d replicate %d failed: %s", i, r, e)
        return i, r, 0, None

    return i, r, x.count, result.rejected(alpha)


class SweepConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    sigma_grid: list[float] = Field(min_length=1)
    mu: float = Field(default=2.0, gt=0, allow_inf_nan=False)
    n: int = Field(default=2000, ge=1)
    threshold_p: float = Field(default=0.975, gt=0, lt=1)
    replicates: int = Field(default=500, ge=1)
    seed: int = Field(default=0, ge=0)
    alpha: float = Field(default=0.05, gt=0, lt=1)
    n_boot: int = Field(default=DEFAULT_BOOT, ge=1)
    min_excesses: int = Field(default=MIN_EXCESSES, ge=1)
    workers: Optional[int] = Field(default=None, ge=1)

    def laws(self) -> list[InverseGaussianLaw]:
        return [law_from_name("inverse-gaussian", [self.mu, s]) for s in self.sigma_grid]


def inverse_gaussian_sweep(
    sigma_grid: Sequence[float],
    mu: float = 2.0,
    n: int = 2000,
    threshold_p: float = 0.975,
    replicates: int = 500,
    seed: int = 0,
    alpha: float = 0.05,
    n_boot: int = DEFAULT_BOOT,
    min_excesses: int = MIN_EXCESSES,
    workers: Optional[int] = None,
) -> pd.DataFrame:
    """
    Stage-1 GPD rejection proportion of InverseGaussian(mu, sigma) Poisson
    mixtures across sigma, next to the limiting tail ratio (1 + sigma/(2 mu²))^-1.
    """
    if len(sigma_grid) == 0:
        raise InvalidParameterError("sigma grid is empty")
    try:
        config = SweepConfig(
            sigma_grid=list(sigma_grid),
            mu=mu,
            n=n,
            threshold_p=threshold_p,
            replicates=replicates,
            seed=seed,
            alpha=alpha,
            n_boot=n_boot,
            min_excesses=min_excesses,
            workers=workers,
        )
    except ValidationError as e:
        first = e.errors()[0]
        key = ".".join(str(part) for part in first["loc"])
        raise InvalidParameterError(f"invalid sweep setting '{key}': {first['msg']}") from e

    laws = config.laws()
    tasks = [
        (i, r, law, config.n, config.threshold_p, config.alpha, config.n_boot, config.min_excesses, config.seed)
        for i, law in enumerate(laws)
        for r in range(config.replicates)
    ]
    results = sorted(_parallel_map(_sweep_replicate, tasks, resolve_workers(config.workers)))

    rows = []
    for i, law in enumerate(laws):
        point = [res for res in results if res[0] == i]
        tested = [res[3] for res in point if res[3] is not None]
        rows.append(
            {
                "sigma": config.sigma_grid[i],
                "tail_ratio_limit": tail_ratio_limit(law, 1),
                "rejection": float(np.mean(tested)) if tested else float("nan"),
                "avg_excesses": float(np.mean([res[2] for res in point])),
                "n_tested": len(tested),
                "replicates": config.replicates,
            }
        )
        logger.info("sigma=%g: rejection %.3f over %d tests", law.shape, rows[-1]["rejection"], len(tested))

    return pd.DataFrame(rows, columns=SWEEP_COLUMNS)


# alias
figure3_sweep = inverse_gaussian_sweep
