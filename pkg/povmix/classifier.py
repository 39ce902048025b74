"""
Decision tree routing a count sample to a Poisson-mixture tail category.

    excesses over the empirical quantile
        -> free GPD fit + bootstrap Anderson-Darling test
           not rejected -> deviance test of gamma = 0
               p >= alpha            -> Gumbel
               gamma > 0             -> Frechet
               gamma < 0             -> unclassified (negative-shape)
           rejected -> jitter, exponential fit + bootstrap test
               not rejected          -> pseudo-Gumbel
               rejected              -> unclassified (jitter-rejected)
"""

import logging
from enum import Enum
from functools import partial
from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from povmix.distributions import (
    FRECHET,
    GUMBEL,
    PSEUDO_GUMBEL,
    Category,
    CategoryKind,
    UnclassifiedReason,
)
from povmix.errors import TooFewExcessesError
from povmix.gof import DEFAULT_BOOT, bootstrap_gof_test
from povmix.gpd import MIN_EXCESSES, deviance_test, fit_gpd_mle
from povmix.pot import check_non_degenerate, empirical_quantile, excesses, jitter

logger = logging.getLogger(__name__)

REPORT_KEYS = ("u", "n_excess", "gamma_hat", "sigma_hat", "mad1_p", "dev_p", "mad2_p", "category", "branch")


class Branch(str, Enum):
    NONE = "none"
    GPD_ADEQUATE = "gpd-adequate"
    GPD_REJECTED = "gpd-rejected"


class ClassifierConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    threshold_p: float = Field(default=0.95, gt=0, lt=1)
    alpha: float = Field(default=0.05, gt=0, lt=1)
    n_boot: int = Field(default=DEFAULT_BOOT, ge=1)
    min_excesses: int = Field(default=MIN_EXCESSES, ge=1)
    seed: Optional[int] = Field(default=None, ge=0)


class DecisionTrace(BaseModel):
    """Every intermediate quantity of one walk through the tree."""

    model_config = ConfigDict(frozen=True)

    u: Optional[float] = None
    n_excess: int = 0
    gamma_hat: Optional[float] = None
    sigma_hat: Optional[float] = None
    loglik: Optional[float] = None
    mad1_t: Optional[float] = None
    mad1_p: Optional[float] = None
    dev_stat: Optional[float] = None
    dev_p: Optional[float] = None
    sigma_jitter: Optional[float] = None
    mad2_t: Optional[float] = None
    mad2_p: Optional[float] = None
    category: Category
    branch: Branch = Branch.NONE
    threshold_p: float
    alpha: float
    n_boot: int
    seed: int

    @model_validator(mode="after")
    def _consistent(self):
        kind, a = self.category.kind, self.alpha
        left = self.branch is Branch.GPD_ADEQUATE
        right = self.branch is Branch.GPD_REJECTED

        if left and (self.dev_p is None or self.mad2_p is not None or self.mad1_p < a):
            raise ValueError("GPD-adequate branch must carry a deviance test and no jittered test")
        if right and (self.mad2_p is None or self.dev_p is not None or self.mad1_p >= a):
            raise ValueError("GPD-rejected branch must carry a jittered test and no deviance test")
        if kind is CategoryKind.GUMBEL and not (left and self.dev_p >= a):
            raise ValueError("Gumbel requires an adequate GPD and a non-significant deviance")
        if kind is CategoryKind.FRECHET and not (left and self.dev_p < a and self.gamma_hat > 0):
            raise ValueError("Frechet requires a significant positive shape")
        if kind is CategoryKind.PSEUDO_GUMBEL and not (right and self.mad2_p >= a):
            raise ValueError("pseudo-Gumbel requires an adequate exponential fit of jittered excesses")
        return self

    def to_report(self) -> dict:
        """JSON-ready document: the fixed keys first, then the details."""
        report = self.model_dump(mode="json", exclude={"category"})
        report["category"] = self.category.label
        report["reason"] = self.category.reason.value if self.category.reason else None
        ordered = {key: report.pop(key) for key in REPORT_KEYS}
        ordered.update(report)
        return ordered


def _streams(seed: int) -> tuple[np.random.Generator, np.random.Generator, np.random.Generator]:
    """Independent generators for the stage-1 bootstrap, the jitter and the stage-2 bootstrap."""
    return tuple(np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(3))


def classify(ys, config: Optional[ClassifierConfig] = None) -> tuple[Category, DecisionTrace]:
    config = config or ClassifierConfig()
    seed = config.seed if config.seed is not None else int(np.random.SeedSequence().entropy % 2**63)
    boot1_rng, jitter_rng, boot2_rng = _streams(seed)
    alpha = config.alpha

    trace = dict(threshold_p=config.threshold_p, alpha=alpha, n_boot=config.n_boot, seed=seed)

    def finish(category: Category, **fields) -> tuple[Category, DecisionTrace]:
        result = DecisionTrace(category=category, **trace, **fields)
        logger.debug("classified as %s via %s", category, result.branch.value)
        return category, result

    # -------------------------------------------------
    # Threshold and excesses
    # -------------------------------------------------
    ys = check_non_degenerate(ys)
    u = empirical_quantile(ys, config.threshold_p)
    trace["u"] = u

    try:
        x = excesses(ys, u, config.min_excesses)
    except TooFewExcessesError as e:
        return finish(Category.unclassified(UnclassifiedReason.TOO_FEW_EXCESSES), n_excess=e.count)

    trace["n_excess"] = x.count

    # -------------------------------------------------
    # Stage 1: free GPD fit and bootstrap test
    # -------------------------------------------------
    stage1 = bootstrap_gof_test(
        x.values,
        fit=partial(fit_gpd_mle, min_obs=1),
        n_boot=config.n_boot,
        rng=boot1_rng,
    )
    trace.update(
        gamma_hat=stage1.fit.gamma,
        sigma_hat=stage1.fit.sigma,
        loglik=stage1.fit.loglik,
        mad1_t=stage1.statistic,
        mad1_p=stage1.p_value,
    )

    # -------------------------------------------------
    # GPD adequate: deviance test decides the domain
    # -------------------------------------------------
    if not stage1.rejected(alpha):
        dev = deviance_test(x.values, min_obs=1, free=stage1.fit)
        trace.update(branch=Branch.GPD_ADEQUATE, dev_stat=dev.statistic, dev_p=dev.p_value)

        if dev.p_value >= alpha:
            return finish(GUMBEL)
        if dev.gamma_hat > 0:
            return finish(FRECHET)
        return finish(Category.unclassified(UnclassifiedReason.NEGATIVE_SHAPE))

    # -------------------------------------------------
    # GPD rejected: exponential fit of jittered excesses
    # -------------------------------------------------
    xc = jitter(x, jitter_rng)
    stage2 = bootstrap_gof_test(
        xc.values,
        fit=partial(fit_gpd_mle, fix_gamma=0.0, min_obs=1),
        n_boot=config.n_boot,
        rng=boot2_rng,
    )
    trace.update(
        branch=Branch.GPD_REJECTED,
        sigma_jitter=stage2.fit.sigma,
        mad2_t=stage2.statistic,
        mad2_p=stage2.p_value,
    )

    if not stage2.rejected(alpha):
        return finish(PSEUDO_GUMBEL)
    return finish(Category.unclassified(UnclassifiedReason.JITTER_REJECTED))
