import math

import numpy as np
import pytest
from scipy import stats

from povmix.distributions import (
    CATALOGUE,
    BetaPrimeLaw,
    Category,
    CategoryKind,
    ExponentialLaw,
    FoldedCauchyLaw,
    FrechetLaw,
    GammaLaw,
    InverseGammaLaw,
    InverseGaussianLaw,
    LognormalLaw,
    UnclassifiedReason,
    WeibullLaw,
    category_of,
    gamma_type_beta,
    law_from_name,
    mixture_moments,
    mixture_name,
    sample_mixing,
    sample_poisson,
    sample_poisson_mixture,
    tail_ratio_limit,
)
from povmix.errors import InvalidParameterError, PoissonOverflowError
from povmix.pot import empirical_quantile, empirical_tail_ratio, survival_ratio


def rng(seed=0):
    return np.random.default_rng(seed)


# -------------------------------------------------
# Construction
# -------------------------------------------------

@pytest.mark.parametrize(
    "factory",
    [
        lambda: GammaLaw(shape=0, rate=1),
        lambda: ExponentialLaw(rate=-1),
        lambda: LognormalLaw(mu=0, sigma=0),
        lambda: FrechetLaw(shape=1, scale=math.inf),
        lambda: FoldedCauchyLaw(loc=math.nan, scale=1),
        lambda: InverseGaussianLaw(mean=-2, shape=1),
    ],
)
def test_construction_rejects_bad_parameters(factory):
    with pytest.raises(ValueError):
        factory()


def test_locations_may_be_negative():
    assert LognormalLaw(mu=-3, sigma=1).mu == -3
    assert FoldedCauchyLaw(loc=-1, scale=2).loc == -1


def test_law_from_name():
    law = law_from_name("gamma", [2, 1])
    assert law == GammaLaw(shape=2, rate=1)
    assert law_from_name("beta2", [1, 2.2]) == BetaPrimeLaw(a=1, b=2.2)
    assert law.label == "Gamma(2,1)"


def test_law_from_name_arity_and_unknown():
    with pytest.raises(InvalidParameterError, match="takes 2 parameters"):
        law_from_name("gamma", [2])
    with pytest.raises(InvalidParameterError, match="unknown law"):
        law_from_name("pareto", [1, 1])
    with pytest.raises(InvalidParameterError):
        law_from_name("weibull", [-1, 1])


def test_unclassified_requires_reason():
    with pytest.raises(ValueError):
        Category(kind=CategoryKind.UNCLASSIFIED)
    with pytest.raises(ValueError):
        Category(kind=CategoryKind.GUMBEL, reason=UnclassifiedReason.NEGATIVE_SHAPE)


# -------------------------------------------------
# Samplers
# -------------------------------------------------

def test_sample_mixing_exponential_mean():
    xs = sample_mixing(ExponentialLaw(rate=1), 10**6, rng(1))
    assert abs(xs.mean() - 1) < 0.01


def test_sample_mixing_beta_prime_mean():
    xs = sample_mixing(BetaPrimeLaw(a=1, b=2.2), 10**6, rng(2))
    assert abs(xs.mean() - 1 / 1.2) < 0.02


def test_sample_mixing_inverse_gaussian_mean():
    xs = sample_mixing(InverseGaussianLaw(mean=2, shape=1), 10**6, rng(3))
    assert abs(xs.mean() - 2) < 0.02
    assert np.all(xs > 0)


def test_sample_mixing_rejects_empty():
    with pytest.raises(InvalidParameterError):
        sample_mixing(GammaLaw(shape=1, rate=1), 0, rng())


@pytest.mark.parametrize(
    "law",
    [
        GammaLaw(shape=2, rate=1),
        LognormalLaw(mu=1, sigma=1),
        FrechetLaw(shape=1, scale=1),
        FoldedCauchyLaw(loc=0, scale=1),
        WeibullLaw(shape=0.5, scale=1),
        InverseGammaLaw(shape=3, scale=2),
        BetaPrimeLaw(a=1, b=2.2),
        InverseGaussianLaw(mean=1, shape=2),
    ],
)
def test_samplers_are_deterministic_and_non_negative(law):
    a = sample_poisson_mixture(law, 500, rng(11))
    b = sample_poisson_mixture(law, 500, rng(11))
    assert np.array_equal(a, b)
    assert np.all(a >= 0)
    assert np.issubdtype(a.dtype, np.integer)


def test_sample_poisson_zero():
    assert sample_poisson(0.0, rng()) == 0


def test_sample_poisson_small_intensity_moments():
    g = rng(4)
    draws = np.array([sample_poisson(4.0, g) for _ in range(200_000)])
    assert abs(draws.mean() - 4) < 0.04
    assert abs(draws.var() - 4) < 0.12


def test_sample_poisson_large_intensity():
    g = rng(5)
    draws = np.array([sample_poisson(1e4, g) for _ in range(20_000)])
    assert abs(draws.mean() - 1e4) < 100


@pytest.mark.parametrize("lam", [math.inf, math.nan, 1e20])
def test_sample_poisson_overflow_surfaces(lam):
    with pytest.raises(PoissonOverflowError):
        sample_poisson(lam, rng())


def test_sample_poisson_negative():
    with pytest.raises(InvalidParameterError):
        sample_poisson(-1.0, rng())


def test_mixture_gamma_moments():
    ys = sample_poisson_mixture(GammaLaw(shape=2, rate=1), 10**6, rng(6))
    assert abs(ys.mean() - 2) < 0.01
    assert abs(ys.var() - 4) < 0.05


def test_mixture_beta_prime_moments():
    ys = sample_poisson_mixture(BetaPrimeLaw(a=1, b=2.2), 10**6, rng(7))
    assert abs(ys.mean() - 0.833) < 0.02
    # fourth moment is infinite: the sample variance is right-skewed around 8.47
    assert 7.9 < ys.var() < 12


def test_mixture_exponential_is_geometric():
    ys = sample_poisson_mixture(ExponentialLaw(rate=1), 10**6, rng(8))
    pmf = np.bincount(ys, minlength=11)[:11] / ys.size
    expected = 0.5 ** (np.arange(11) + 1)
    assert np.max(np.abs(pmf - expected)) < 0.005


# -------------------------------------------------
# Metadata
# -------------------------------------------------

@pytest.mark.parametrize(
    "law, kind",
    [
        (FrechetLaw(shape=1, scale=1), CategoryKind.FRECHET),
        (FoldedCauchyLaw(loc=0, scale=1), CategoryKind.FRECHET),
        (InverseGammaLaw(shape=2, scale=1), CategoryKind.FRECHET),
        (BetaPrimeLaw(a=1, b=2.2), CategoryKind.FRECHET),
        (LognormalLaw(mu=0, sigma=1), CategoryKind.GUMBEL),
        (WeibullLaw(shape=0.3, scale=1), CategoryKind.GUMBEL),
        (ExponentialLaw(rate=1), CategoryKind.PSEUDO_GUMBEL),
        (GammaLaw(shape=2, rate=1), CategoryKind.PSEUDO_GUMBEL),
        (InverseGaussianLaw(mean=1, shape=2), CategoryKind.PSEUDO_GUMBEL),
    ],
)
def test_category_of(law, kind):
    assert category_of(law).kind is kind


def test_weibull_boundary_is_unclassified():
    category = category_of(WeibullLaw(shape=0.5, scale=1))
    assert category.kind is CategoryKind.UNCLASSIFIED
    assert category.reason is UnclassifiedReason.OUTSIDE_KNOWN_CONDITIONS


def test_gamma_type_beta():
    assert gamma_type_beta(InverseGaussianLaw(mean=2, shape=1)) == pytest.approx(1 / 8)
    assert gamma_type_beta(GammaLaw(shape=2, rate=1)) == 1
    assert gamma_type_beta(ExponentialLaw(rate=3)) == 3
    assert gamma_type_beta(LognormalLaw(mu=0, sigma=1)) is None


def test_tail_ratio_limit():
    assert tail_ratio_limit(InverseGaussianLaw(mean=2, shape=1), 1) == pytest.approx(8 / 9)
    assert tail_ratio_limit(GammaLaw(shape=2, rate=1), 1) == pytest.approx(0.5)
    assert tail_ratio_limit(ExponentialLaw(rate=1), 2) == pytest.approx(0.25)
    assert tail_ratio_limit(FrechetLaw(shape=1, scale=1)) is None


@pytest.mark.parametrize("k", [0, -1, 1.5])
def test_tail_ratio_limit_rejects_bad_step(k):
    with pytest.raises(InvalidParameterError):
        tail_ratio_limit(GammaLaw(shape=2, rate=1), k)


def test_mixture_moments():
    mean, var = mixture_moments(BetaPrimeLaw(a=1, b=2.2))
    assert mean == pytest.approx(0.8333, abs=1e-3)
    assert var == pytest.approx(8.4722, abs=1e-3)
    assert mixture_moments(GammaLaw(shape=2, rate=2)) == pytest.approx((1.0, 1.5))
    assert mixture_moments(FrechetLaw(shape=1, scale=1)) is None
    assert mixture_moments(FrechetLaw(shape=2, scale=1)) is None
    assert mixture_moments(FoldedCauchyLaw(loc=0, scale=1)) is None


def test_mixture_names_and_catalogue():
    assert mixture_name(InverseGaussianLaw(mean=1, shape=2)) == "Sichel"
    assert mixture_name(GammaLaw(shape=2, rate=1)) == "Negative binomial"
    no_sampler = {entry.mixture for entry in CATALOGUE if not entry.sampler}
    assert no_sampler == {"Generalized Waring", "Poisson-Benktander-I", "Poisson-Benktander-II", "PGIG"}


# -------------------------------------------------
# Long Monte Carlo checks
# -------------------------------------------------

@pytest.mark.slow
@pytest.mark.parametrize(
    "law",
    [GammaLaw(shape=2, rate=1), LognormalLaw(mu=0, sigma=0.5), WeibullLaw(shape=2, scale=1), InverseGaussianLaw(mean=1, shape=2)],
)
def test_mixture_moments_match_simulation(law):
    n = 10**6
    ys = sample_poisson_mixture(law, n, rng(21))
    mean, var = mixture_moments(law)
    assert abs(ys.mean() - mean) < 3 * math.sqrt(var / n) + 1e-9
    assert abs(ys.var() - var) / var < 0.03


@pytest.mark.slow
@pytest.mark.parametrize("law", [ExponentialLaw(rate=1), ExponentialLaw(rate=2)])
def test_gamma_type_survival_ratio(law):
    xs = sample_mixing(law, 10**7, rng(22))
    x = float(np.quantile(xs, 0.99))
    assert abs(survival_ratio(xs, x, 1.0) - math.exp(-law.beta())) < 0.05


@pytest.mark.slow
def test_gamma_survival_ratio_approaches_exponential_rate():
    xs = sample_mixing(GammaLaw(shape=2, rate=1), 10**7, rng(23))
    x = float(np.quantile(xs, 0.99))
    # x e^{-x} density: the ratio approaches e^{-1} from above as (x + 2)/(x + 1)
    assert abs(survival_ratio(xs, x, 1.0) - math.exp(-1)) < 0.06


@pytest.mark.slow
def test_inverse_gaussian_survival_ratio():
    law = InverseGaussianLaw(mean=50, shape=50)
    xs = sample_mixing(law, 10**7, rng(26))
    x = float(np.quantile(xs, 0.99))
    assert abs(survival_ratio(xs, x, 1.0) - math.exp(-law.beta())) < 0.05


def test_inverse_gaussian_survival_ratio_limit():
    law = InverseGaussianLaw(mean=2, shape=1)
    exact = stats.invgauss(law.mean / law.shape, scale=law.shape)
    limit = math.exp(-law.beta())
    near = exact.sf(41) / exact.sf(40)
    far = exact.sf(81) / exact.sf(80)
    # x^{-3/2} factor: the ratio climbs towards its limit from below
    assert near < far < limit
    assert abs(near - limit) < 0.05


@pytest.mark.slow
def test_count_tail_ratio_negative_binomial():
    ys = sample_poisson_mixture(GammaLaw(shape=2, rate=1), 10**7, rng(24))
    ratio = empirical_tail_ratio(ys, 0.95, 0.99)
    # NB(2, 1/2): S(k+1)/S(k) = (k+4)/(2(k+3)) exactly, for k from 6 to 9
    exact = np.mean([(k + 4) / (2 * (k + 3)) for k in range(6, 10)])
    assert abs(ratio - exact) < 0.01
    assert abs(ratio - 0.5) < 0.06


@pytest.mark.slow
def test_count_tail_ratio_sichel():
    ys = sample_poisson_mixture(InverseGaussianLaw(mean=2, shape=1), 10**7, rng(25))
    ratio = empirical_tail_ratio(ys, 0.95, 0.99)
    # the x^{-3/2} factor pulls the finite-range ratio below its 8/9 limit
    assert 0.75 < ratio < 8 / 9 + 0.05
    assert empirical_quantile(ys, 0.99) > empirical_quantile(ys, 0.95)
