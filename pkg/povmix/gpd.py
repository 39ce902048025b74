"""
Generalized Pareto distribution H(y) = 1 - (1 + γ y / σ)^(-1/γ), with the
exponential law 1 - exp(-y / σ) at γ = 0.

Fitting maximizes the log-likelihood with Nelder-Mead over (γ, log σ);
the γ = 0 restricted fit is the closed-form exponential MLE σ = mean(x).
"""

import logging
import math
from typing import Annotated, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy import optimize, special

from povmix.errors import FitError, InvalidParameterError, TooFewExcessesError

logger = logging.getLogger(__name__)

# |γ| below this uses the exponential branch
EXPONENTIAL_TOL = 1e-9

MIN_EXCESSES = 10

GAMMA_START = 0.1
SIMPLEX_STEP = 0.1
MAX_ITER = 500
FATOL = 1e-8
XATOL = 1e-7

# largest negative deviance attributed to optimizer noise
DEVIANCE_CLAMP_TOL = 1e-6


class GpdParams(BaseModel):
    model_config = ConfigDict(frozen=True)

    gamma: Annotated[float, Field(allow_inf_nan=False)]
    sigma: Annotated[float, Field(gt=0, allow_inf_nan=False)]

    @property
    def upper_endpoint(self) -> float:
        if self.gamma < -EXPONENTIAL_TOL:
            return -self.sigma / self.gamma
        return math.inf


class GpdFit(BaseModel):
    model_config = ConfigDict(frozen=True)

    params: GpdParams
    loglik: float
    converged: bool
    n_obs: int
    fixed_gamma: Optional[float] = None
    n_iter: int = 0

    @property
    def gamma(self) -> float:
        return self.params.gamma

    @property
    def sigma(self) -> float:
        return self.params.sigma

    def cdf(self, y):
        return gpd_cdf(self.params, y)


class DevianceResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    statistic: float = Field(ge=0)
    p_value: float = Field(ge=0, le=1)
    gamma_hat: float
    free: GpdFit
    restricted: GpdFit


def _is_exponential(gamma: float) -> bool:
    return abs(gamma) < EXPONENTIAL_TOL


def _scalar_or_array(values: np.ndarray, like):
    return float(values) if np.ndim(like) == 0 else values


# =============================================================================
# DISTRIBUTION
# =============================================================================

def gpd_cdf(params: GpdParams, y):
    """H(y); negative y maps to 0 and y beyond the upper endpoint to 1."""
    g, s = params.gamma, params.sigma
    z = np.maximum(np.asarray(y, dtype=float), 0.0) / s

    if _is_exponential(g):
        out = -np.expm1(-z)
    else:
        t = 1.0 + g * z
        with np.errstate(divide="ignore", invalid="ignore"):
            out = -np.expm1(-np.log1p(g * z) / g)
        out = np.where(t <= 0, 1.0, out)

    return _scalar_or_array(out, y)


def gpd_quantile(params: GpdParams, p):
    p_arr = np.asarray(p, dtype=float)
    if np.any((p_arr < 0) | (p_arr >= 1)):
        raise InvalidParameterError("quantile probabilities must lie in [0, 1)")

    g, s = params.gamma, params.sigma
    log_tail = np.log1p(-p_arr)
    if _is_exponential(g):
        out = -s * log_tail
    else:
        out = s * np.expm1(-g * log_tail) / g

    return _scalar_or_array(out, p)


def gpd_sample(params: GpdParams, n: int, rng: np.random.Generator) -> np.ndarray:
    return gpd_quantile(params, rng.random(n))


def gpd_loglik(params: GpdParams, xs) -> float:
    """Log-likelihood of xs; -inf when some observation is off the support."""
    return _loglik(params.gamma, params.sigma, np.asarray(xs, dtype=float))


def _loglik(g: float, s: float, xs: np.ndarray) -> float:
    m = xs.size

    if _is_exponential(g):
        return float(-m * math.log(s) - xs.sum() / s)

    t = g * xs / s
    if np.any(t <= -1.0):
        return -math.inf
    return float(-m * math.log(s) - (1.0 + 1.0 / g) * np.log1p(t).sum())


# =============================================================================
# FITTING
# =============================================================================

def _validate_sample(xs, min_obs: int) -> np.ndarray:
    xs = np.asarray(xs, dtype=float).ravel()
    if xs.size < min_obs:
        raise TooFewExcessesError(xs.size, min_obs)
    if not np.all(np.isfinite(xs)):
        raise InvalidParameterError("observations must be finite")
    if np.any(xs <= 0):
        raise InvalidParameterError("observations must be strictly positive")
    return xs


def _nelder_mead(objective, x0: np.ndarray):
    simplex = np.vstack([x0] + [x0 + SIMPLEX_STEP * e for e in np.eye(x0.size)])
    with np.errstate(invalid="ignore", over="ignore"):
        return optimize.minimize(
            objective,
            x0,
            method="Nelder-Mead",
            options={
                "initial_simplex": simplex,
                "maxiter": MAX_ITER,
                "xatol": XATOL,
                "fatol": FATOL,
            },
        )


def fit_gpd_mle(xs, fix_gamma: Optional[float] = None, min_obs: int = MIN_EXCESSES) -> GpdFit:
    """
    Maximum-likelihood GPD fit.

    With fix_gamma == 0 the exponential MLE sigma = mean(xs) is returned
    without optimizing. Otherwise Nelder-Mead runs over (gamma, log sigma),
    or over log sigma alone when gamma is fixed at a non-zero value.
    """
    xs = _validate_sample(xs, min_obs)
    m = xs.size
    mean = float(xs.mean())

    if fix_gamma is not None and _is_exponential(fix_gamma):
        params = GpdParams(gamma=0.0, sigma=mean)
        return GpdFit(params=params, loglik=gpd_loglik(params, xs), converged=True, n_obs=m, fixed_gamma=0.0)

    if fix_gamma is not None:
        def objective(theta):
            if not abs(theta[0]) < 700:
                return math.inf
            ll = _loglik(fix_gamma, math.exp(theta[0]), xs)
            return -ll if math.isfinite(ll) else math.inf

        x0 = np.array([math.log(mean)])
    else:
        def objective(theta):
            g, log_s = theta
            # the likelihood is unbounded for gamma <= -1
            if not (g > -1.0 and abs(log_s) < 700):
                return math.inf
            ll = _loglik(g, math.exp(log_s), xs)
            return -ll if math.isfinite(ll) else math.inf

        x0 = np.array([GAMMA_START, math.log(mean)])

    res = _nelder_mead(objective, x0)
    if not math.isfinite(res.fun):
        raise FitError(f"no admissible GPD parameters found for {m} observations")

    gamma = float(fix_gamma) if fix_gamma is not None else float(res.x[0])
    params = GpdParams(gamma=gamma, sigma=math.exp(res.x[-1]))
    converged = bool(res.success)
    if not converged:
        logger.debug("Nelder-Mead stopped after %d iterations: %s", res.nit, res.message)

    return GpdFit(
        params=params,
        loglik=-float(res.fun),
        converged=converged,
        n_obs=m,
        fixed_gamma=fix_gamma,
        n_iter=int(res.nit),
    )


# =============================================================================
# DEVIANCE TEST
# =============================================================================

def chi2_sf_1df(x: float) -> float:
    """P(chi-square with one degree of freedom > x), via the regularized upper incomplete gamma."""
    if x <= 0:
        return 1.0
    return float(special.gammaincc(0.5, x / 2.0))


def deviance_test(xs, min_obs: int = MIN_EXCESSES, free: Optional[GpdFit] = None) -> DevianceResult:
    """Likelihood-ratio test of gamma = 0 against a free shape; reuses `free` when given."""
    if free is None:
        free = fit_gpd_mle(xs, min_obs=min_obs)
    restricted = fit_gpd_mle(xs, fix_gamma=0.0, min_obs=min_obs)

    raw = 2.0 * (free.loglik - restricted.loglik)
    if raw < -DEVIANCE_CLAMP_TOL and free.converged:
        logger.warning("free GPD fit is worse than the exponential fit by %.3g", -raw / 2)

    statistic = max(raw, 0.0)
    return DevianceResult(
        statistic=statistic,
        p_value=chi2_sf_1df(statistic),
        gamma_hat=free.gamma,
        free=free,
        restricted=restricted,
    )
