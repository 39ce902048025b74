"""Peaks-over-threshold helpers for count data."""

import logging
from typing import Iterable

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict

from povmix.errors import DegenerateSampleError, InvalidParameterError, TooFewExcessesError
from povmix.gpd import MIN_EXCESSES

logger = logging.getLogger(__name__)

# mean-residual-life rows with fewer excesses are flagged
MRL_MIN_EXCESSES = 5
MRL_Z = 1.96

MRL_COLUMNS = ["u", "mean_excess", "ci_lo", "ci_hi", "n_excess", "flagged"]


class ExcessSample(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    threshold: float
    values: np.ndarray
    n_total: int

    @property
    def count(self) -> int:
        return int(self.values.size)


class JitteredExcesses(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    values: np.ndarray


def _as_sample(ys) -> np.ndarray:
    ys = np.asarray(ys).ravel()
    if ys.size == 0:
        raise InvalidParameterError("no observations")
    return ys


def empirical_quantile(ys, p: float) -> float:
    """Type-1 empirical quantile: the order statistic y_(ceil(p n))."""
    if not 0 < p < 1:
        raise InvalidParameterError(f"quantile level must lie in (0, 1), got {p}")
    ys = _as_sample(ys)
    return float(np.quantile(ys, p, method="inverted_cdf"))


def excesses(ys, u: float, min_excesses: int = MIN_EXCESSES) -> ExcessSample:
    """Values y - u for y > u, in input order."""
    if u < 0:
        raise InvalidParameterError(f"threshold must be non-negative, got {u}")
    ys = _as_sample(ys)

    above = ys[ys > u]
    if above.size < min_excesses:
        raise TooFewExcessesError(int(above.size), min_excesses)

    values = above - u
    if float(u).is_integer() and np.issubdtype(ys.dtype, np.integer):
        values = values.astype(np.int64)
    return ExcessSample(threshold=float(u), values=values, n_total=int(ys.size))


def jitter(x: ExcessSample, rng: np.random.Generator) -> JitteredExcesses:
    """Subtract Uniform(0, 1) noise; each value lands in (v - 1, v)."""
    if np.any(x.values < 1):
        raise InvalidParameterError("jittering needs excesses of at least 1")

    u = rng.random(x.count)
    zero = u == 0.0
    while zero.any():
        u[zero] = rng.random(int(zero.sum()))
        zero = u == 0.0

    return JitteredExcesses(values=x.values.astype(float) - u)


def check_non_degenerate(ys) -> np.ndarray:
    ys = _as_sample(ys)
    if np.all(ys == ys[0]):
        raise DegenerateSampleError(f"all {ys.size} observations equal {ys[0]}")
    return ys


def mean_residual_life(ys, thresholds: Iterable[float]) -> pd.DataFrame:
    """
    Mean excess e(u) = mean(y - u | y > u) with a normal-approximation 95%
    interval. Rows with fewer than MRL_MIN_EXCESSES excesses are flagged
    and carry no interval.
    """
    ys = np.asarray(_as_sample(ys), dtype=float)
    rows = []

    for u in thresholds:
        exc = ys[ys > u] - u
        n = exc.size
        flagged = n < MRL_MIN_EXCESSES
        mean = exc.mean() if n else np.nan
        if flagged:
            lo = hi = np.nan
        else:
            half = MRL_Z * exc.std(ddof=1) / np.sqrt(n)
            lo, hi = mean - half, mean + half
        rows.append((float(u), mean, lo, hi, n, flagged))

    return pd.DataFrame(rows, columns=MRL_COLUMNS)


# =============================================================================
# TAIL RATIO DIAGNOSTICS
# =============================================================================

def empirical_tail_ratio(ys, p_lo: float = 0.95, p_hi: float = 0.99) -> float:
    """
    Average of (1 - F(k+1)) / (1 - F(k)) over integers k between the p_lo and
    p_hi empirical quantiles of a count sample. Tends to 1 for long-tailed
    counts and to (1 + beta)^-1 for gamma-type Poisson mixtures.
    """
    ys = np.asarray(_as_sample(ys), dtype=np.int64)
    lo = int(empirical_quantile(ys, p_lo))
    hi = int(empirical_quantile(ys, p_hi))

    counts = np.bincount(ys, minlength=hi + 2)
    survival = ys.size - np.cumsum(counts)  # survival[k] = #{y > k}

    ks = np.arange(lo, hi + 1)
    ks = ks[survival[ks + 1] > 0]
    if ks.size == 0:
        raise InvalidParameterError("no populated tail cells between the two quantiles")
    return float(np.mean(survival[ks + 1] / survival[ks]))


def survival_ratio(xs, x: float, k: float = 1.0) -> float:
    """Empirical S(x + k) / S(x) of a continuous sample."""
    xs = np.asarray(_as_sample(xs), dtype=float)
    above = np.count_nonzero(xs > x)
    if above == 0:
        raise InvalidParameterError(f"no observations above {x}")
    return np.count_nonzero(xs > x + k) / above
