"""
Mixing laws on the Poisson intensity, Poisson-mixture sampling and tail
category metadata.

Parameterizations:
    Gamma(shape, rate)                density ∝ x^(shape-1) exp(-rate x)
    Exponential(rate)
    Lognormal(mu, sigma)              log λ ~ Normal(mu, sigma)
    Frechet(shape, scale)             cdf exp(-(x/scale)^-shape)
    FoldedCauchy(loc, scale)          |X| with X ~ Cauchy(loc, scale)
    Weibull(shape, scale)             survival exp(-(x/scale)^shape)
    InverseGamma(shape, scale)        1 / Gamma(shape, rate=scale)
    BetaPrime(a, b)                   G1 / G2, G1 ~ Gamma(a, 1), G2 ~ Gamma(b, 1)
    InverseGaussian(mean, shape)      density ∝ x^(-3/2) exp(-shape x / (2 mean²)) exp(-shape / (2x))

Poisson draws use numpy's Generator.poisson: multiplication (inversion-type)
sampling for λ < 10 and Hörmann's PTRS transformed rejection for λ ≥ 10.
Bit-level reproducibility of every sample depends on that cutoff.
"""

import logging
import math
from enum import Enum
from typing import Annotated, ClassVar, Literal, NamedTuple, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, TypeAdapter, ValidationError, model_validator
from scipy import special

from povmix.errors import InvalidParameterError, PoissonOverflowError

logger = logging.getLogger(__name__)

Positive = Annotated[float, Field(gt=0, allow_inf_nan=False)]
Finite = Annotated[float, Field(allow_inf_nan=False)]


# =============================================================================
# CATEGORIES
# =============================================================================

class CategoryKind(str, Enum):
    FRECHET = "frechet"
    GUMBEL = "gumbel"
    PSEUDO_GUMBEL = "pseudo-gumbel"
    UNCLASSIFIED = "unclassified"


class UnclassifiedReason(str, Enum):
    NEGATIVE_SHAPE = "negative-shape"
    JITTER_REJECTED = "jitter-rejected"
    TOO_FEW_EXCESSES = "too-few-excesses"
    OUTSIDE_KNOWN_CONDITIONS = "outside-known-conditions"
    NUMERICAL_FAILURE = "numerical-failure"
    DEGENERATE_SAMPLE = "degenerate-sample"


class Category(BaseModel):
    """Tail category of a Poisson mixture; Unclassified always carries a reason."""

    model_config = ConfigDict(frozen=True)

    kind: CategoryKind
    reason: Optional[UnclassifiedReason] = None

    @model_validator(mode="after")
    def _reason_iff_unclassified(self):
        if (self.kind is CategoryKind.UNCLASSIFIED) != (self.reason is not None):
            raise ValueError("a reason is required for, and only for, unclassified outcomes")
        return self

    @classmethod
    def unclassified(cls, reason: UnclassifiedReason) -> "Category":
        return cls(kind=CategoryKind.UNCLASSIFIED, reason=reason)

    @property
    def label(self) -> str:
        return self.kind.value

    def __str__(self) -> str:
        if self.reason is None:
            return self.kind.value
        return f"{self.kind.value} ({self.reason.value})"


FRECHET = Category(kind=CategoryKind.FRECHET)
GUMBEL = Category(kind=CategoryKind.GUMBEL)
PSEUDO_GUMBEL = Category(kind=CategoryKind.PSEUDO_GUMBEL)


class CatalogueEntry(NamedTuple):
    family: str
    mixture: str
    category: CategoryKind
    condition: str = ""
    sampler: bool = True


# Families without a sampler are listed for reference only.
CATALOGUE: tuple[CatalogueEntry, ...] = (
    CatalogueEntry("Frechet(a, s)", "Poisson-Frechet", CategoryKind.FRECHET),
    CatalogueEntry("Folded-Cauchy(mu, s)", "Poisson-folded-Cauchy", CategoryKind.FRECHET),
    CatalogueEntry("Inverse-gamma(a, b)", "Poisson-inverse-gamma", CategoryKind.FRECHET),
    CatalogueEntry("Beta-II(a, b)", "Poisson-beta-II", CategoryKind.FRECHET),
    CatalogueEntry("Gamma/Beta-II mixture(r, a, b)", "Generalized Waring", CategoryKind.FRECHET, sampler=False),
    CatalogueEntry("Lognormal(mu, sigma)", "Poisson-lognormal", CategoryKind.GUMBEL),
    CatalogueEntry("Weibull(a, b)", "Poisson-Weibull", CategoryKind.GUMBEL, "a < 0.5"),
    CatalogueEntry("Benktander-I(a, b)", "Poisson-Benktander-I", CategoryKind.GUMBEL, sampler=False),
    CatalogueEntry("Benktander-II(a, b)", "Poisson-Benktander-II", CategoryKind.GUMBEL, "b < 0.5", sampler=False),
    CatalogueEntry("Exponential(a)", "Geometric", CategoryKind.PSEUDO_GUMBEL),
    CatalogueEntry("Gamma(a, b)", "Negative binomial", CategoryKind.PSEUDO_GUMBEL),
    CatalogueEntry("Inverse-Gaussian(mu, sigma)", "Sichel", CategoryKind.PSEUDO_GUMBEL),
    CatalogueEntry("Generalized inverse-Gaussian(a, b, p)", "PGIG", CategoryKind.PSEUDO_GUMBEL, sampler=False),
)


# =============================================================================
# MIXING LAWS
# =============================================================================

class BaseLaw(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    family: ClassVar[str]
    mixture: ClassVar[str]

    @classmethod
    def param_names(cls) -> list[str]:
        return [name for name in cls.model_fields if name != "kind"]

    @property
    def params(self) -> tuple[float, ...]:
        return tuple(getattr(self, name) for name in self.param_names())

    @property
    def label(self) -> str:
        return f"{self.family}({','.join(f'{p:g}' for p in self.params)})"

    def draw(self, n: int, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError

    def moments(self) -> Optional[tuple[float, float]]:
        """(E[λ], Var[λ]) when both are finite."""
        return None

    def beta(self) -> Optional[float]:
        """Rate β of the gamma-type representation C(x) x^α exp(-βx), if any."""
        return None

    def category(self) -> Category:
        raise NotImplementedError


class GammaLaw(BaseLaw):
    family: ClassVar[str] = "Gamma"
    mixture: ClassVar[str] = "Negative binomial"
    kind: Literal["gamma"] = "gamma"
    shape: Positive
    rate: Positive

    def draw(self, n, rng):
        return rng.gamma(self.shape, 1.0 / self.rate, size=n)

    def moments(self):
        return self.shape / self.rate, self.shape / self.rate**2

    def beta(self):
        return self.rate

    def category(self):
        return PSEUDO_GUMBEL


class ExponentialLaw(BaseLaw):
    family: ClassVar[str] = "Exponential"
    mixture: ClassVar[str] = "Geometric"
    kind: Literal["exponential"] = "exponential"
    rate: Positive

    def draw(self, n, rng):
        return rng.exponential(1.0 / self.rate, size=n)

    def moments(self):
        return 1.0 / self.rate, 1.0 / self.rate**2

    def beta(self):
        return self.rate

    def category(self):
        return PSEUDO_GUMBEL


class LognormalLaw(BaseLaw):
    family: ClassVar[str] = "Lognormal"
    mixture: ClassVar[str] = "Poisson-lognormal"
    kind: Literal["lognormal"] = "lognormal"
    mu: Finite
    sigma: Positive

    def draw(self, n, rng):
        return rng.lognormal(self.mu, self.sigma, size=n)

    def moments(self):
        s2 = self.sigma**2
        mean = math.exp(self.mu + s2 / 2)
        return mean, math.expm1(s2) * mean**2

    def category(self):
        return GUMBEL


class FrechetLaw(BaseLaw):
    family: ClassVar[str] = "Frechet"
    mixture: ClassVar[str] = "Poisson-Frechet"
    kind: Literal["frechet"] = "frechet"
    shape: Positive
    scale: Positive

    def draw(self, n, rng):
        # inverse cdf; u == 0 maps to λ = 0
        u = rng.random(n)
        with np.errstate(divide="ignore"):
            return self.scale * (-np.log(u)) ** (-1.0 / self.shape)

    def moments(self):
        if self.shape <= 2:
            return None
        g1 = special.gamma(1 - 1 / self.shape)
        g2 = special.gamma(1 - 2 / self.shape)
        return self.scale * g1, self.scale**2 * (g2 - g1**2)

    def category(self):
        return FRECHET


class FoldedCauchyLaw(BaseLaw):
    family: ClassVar[str] = "FoldedCauchy"
    mixture: ClassVar[str] = "Poisson-folded-Cauchy"
    kind: Literal["folded-cauchy"] = "folded-cauchy"
    loc: Finite
    scale: Positive

    def draw(self, n, rng):
        return np.abs(self.loc + self.scale * rng.standard_cauchy(n))

    def category(self):
        return FRECHET


class WeibullLaw(BaseLaw):
    family: ClassVar[str] = "Weibull"
    mixture: ClassVar[str] = "Poisson-Weibull"
    kind: Literal["weibull"] = "weibull"
    shape: Positive
    scale: Positive

    def draw(self, n, rng):
        return self.scale * rng.weibull(self.shape, size=n)

    def moments(self):
        g1 = special.gamma(1 + 1 / self.shape)
        g2 = special.gamma(1 + 2 / self.shape)
        return self.scale * g1, self.scale**2 * (g2 - g1**2)

    def category(self):
        if self.shape < 0.5:
            return GUMBEL
        return Category.unclassified(UnclassifiedReason.OUTSIDE_KNOWN_CONDITIONS)


class InverseGammaLaw(BaseLaw):
    family: ClassVar[str] = "InverseGamma"
    mixture: ClassVar[str] = "Poisson-inverse-gamma"
    kind: Literal["inverse-gamma"] = "inverse-gamma"
    shape: Positive
    scale: Positive

    def draw(self, n, rng):
        return 1.0 / rng.gamma(self.shape, 1.0 / self.scale, size=n)

    def moments(self):
        a, b = self.shape, self.scale
        if a <= 2:
            return None
        return b / (a - 1), b**2 / ((a - 1) ** 2 * (a - 2))

    def category(self):
        return FRECHET


class BetaPrimeLaw(BaseLaw):
    family: ClassVar[str] = "BetaPrime"
    mixture: ClassVar[str] = "Poisson-beta-II"
    kind: Literal["beta2"] = "beta2"
    a: Positive
    b: Positive

    def draw(self, n, rng):
        g1 = rng.gamma(self.a, 1.0, size=n)
        g2 = rng.gamma(self.b, 1.0, size=n)
        return g1 / g2

    def moments(self):
        a, b = self.a, self.b
        if b <= 2:
            return None
        return a / (b - 1), a * (a + b - 1) / ((b - 2) * (b - 1) ** 2)

    def category(self):
        return FRECHET


class InverseGaussianLaw(BaseLaw):
    family: ClassVar[str] = "InverseGaussian"
    mixture: ClassVar[str] = "Sichel"
    kind: Literal["inverse-gaussian"] = "inverse-gaussian"
    mean: Positive
    shape: Positive

    def draw(self, n, rng):
        # numpy's Wald sampler is the transform-with-multiple-roots method
        return rng.wald(self.mean, self.shape, size=n)

    def moments(self):
        return self.mean, self.mean**3 / self.shape

    def beta(self):
        return self.shape / (2 * self.mean**2)

    def category(self):
        return PSEUDO_GUMBEL


MixingLaw = Annotated[
    Union[
        GammaLaw,
        ExponentialLaw,
        LognormalLaw,
        FrechetLaw,
        FoldedCauchyLaw,
        WeibullLaw,
        InverseGammaLaw,
        BetaPrimeLaw,
        InverseGaussianLaw,
    ],
    Field(discriminator="kind"),
]

LAWS: dict[str, type[BaseLaw]] = {
    cls.model_fields["kind"].default: cls
    for cls in (
        GammaLaw,
        ExponentialLaw,
        LognormalLaw,
        FrechetLaw,
        FoldedCauchyLaw,
        WeibullLaw,
        InverseGammaLaw,
        BetaPrimeLaw,
        InverseGaussianLaw,
    )
}

_law_adapter = TypeAdapter(MixingLaw)


def law_from_name(name: str, params: list[float]) -> BaseLaw:
    """Build a mixing law from its short name and positional parameters."""
    cls = LAWS.get(name.strip().lower())
    if cls is None:
        raise InvalidParameterError(f"unknown law '{name}' (expected one of: {', '.join(LAWS)})")

    names = cls.param_names()
    if len(params) != len(names):
        raise InvalidParameterError(
            f"law '{name}' takes {len(names)} parameters ({', '.join(names)}), got {len(params)}"
        )
    return parse_law({"kind": cls.model_fields["kind"].default, **dict(zip(names, params))})


def parse_law(data: dict) -> BaseLaw:
    try:
        return _law_adapter.validate_python(data)
    except ValidationError as e:
        raise InvalidParameterError(f"invalid mixing law {data!r}: {e.errors()[0]['msg']}") from e


# =============================================================================
# OPERATIONS
# =============================================================================

def sample_mixing(law: BaseLaw, n: int, rng: np.random.Generator) -> np.ndarray:
    if n < 1:
        raise InvalidParameterError(f"sample size must be at least 1, got {n}")
    return law.draw(n, rng)


def _check_intensity(lam) -> None:
    lam = np.asarray(lam, dtype=float)
    if not np.all(np.isfinite(lam)):
        raise PoissonOverflowError("Poisson intensity is not finite")
    if np.any(lam < 0):
        raise InvalidParameterError("Poisson intensity must be non-negative")


def sample_poisson(lam: float, rng: np.random.Generator) -> int:
    _check_intensity(lam)
    try:
        return int(rng.poisson(lam))
    except ValueError as e:
        raise PoissonOverflowError(f"Poisson intensity {lam:g} is too large to sample") from e


def sample_poisson_mixture(law: BaseLaw, n: int, rng: np.random.Generator) -> np.ndarray:
    lam = sample_mixing(law, n, rng)
    logger.debug("%s: drew %d intensities, max %.4g", law.label, n, lam.max())
    _check_intensity(lam)
    try:
        return rng.poisson(lam)
    except ValueError as e:
        raise PoissonOverflowError(
            f"{law.label}: Poisson intensity {lam.max():g} is too large to sample"
        ) from e


def category_of(law: BaseLaw) -> Category:
    return law.category()


def gamma_type_beta(law: BaseLaw) -> Optional[float]:
    return law.beta()


def tail_ratio_limit(law: BaseLaw, k: int = 1) -> Optional[float]:
    """Limit of (1 - F_M(n + k)) / (1 - F_M(n)) for a gamma-type mixing law."""
    if isinstance(k, bool) or not float(k).is_integer() or k < 1:
        raise InvalidParameterError(f"tail ratio step k must be an integer >= 1, got {k}")
    beta = law.beta()
    if beta is None:
        return None
    return (1.0 + beta) ** (-k)


def mixture_moments(law: BaseLaw) -> Optional[tuple[float, float]]:
    """(mean, variance) of the Poisson mixture, or None when not finite."""
    moments = law.moments()
    if moments is None:
        return None
    mean, var = moments
    return mean, mean + var


def mixture_name(law: BaseLaw) -> str:
    return law.mixture
