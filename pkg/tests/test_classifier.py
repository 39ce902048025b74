import json

import numpy as np
import pytest

from povmix.classifier import REPORT_KEYS, Branch, ClassifierConfig, DecisionTrace, classify
from povmix.distributions import (
    GUMBEL,
    PSEUDO_GUMBEL,
    CategoryKind,
    FoldedCauchyLaw,
    FrechetLaw,
    GammaLaw,
    InverseGaussianLaw,
    LognormalLaw,
    UnclassifiedReason,
    sample_poisson_mixture,
)
from povmix.errors import DegenerateSampleError
from povmix.report import format_json, format_text

FAST = dict(n_boot=19, seed=5)


def counts(law, n=1000, seed=0):
    return sample_poisson_mixture(law, n, np.random.default_rng(seed))


def test_constant_sample_is_degenerate():
    with pytest.raises(DegenerateSampleError):
        classify(np.full(100, 3), ClassifierConfig(**FAST))


def test_too_few_excesses_is_unclassified():
    ys = np.array([0] * 95 + [1] * 5)
    category, trace = classify(ys, ClassifierConfig(**FAST))

    assert category.kind is CategoryKind.UNCLASSIFIED
    assert category.reason is UnclassifiedReason.TOO_FEW_EXCESSES
    assert trace.u == 0
    assert trace.n_excess == 5
    assert trace.branch is Branch.NONE
    assert trace.mad1_p is None


def test_classification_is_deterministic():
    ys = counts(GammaLaw(shape=2, rate=1))
    config = ClassifierConfig(**FAST)
    assert classify(ys, config) == classify(ys, config)


def test_missing_seed_is_drawn_and_recorded():
    ys = counts(GammaLaw(shape=2, rate=1))
    _, trace = classify(ys, ClassifierConfig(n_boot=9))
    assert trace.seed >= 0
    assert classify(ys, ClassifierConfig(n_boot=9, seed=trace.seed))[1] == trace


@pytest.mark.parametrize(
    "law",
    [
        FrechetLaw(shape=1, scale=1),
        FoldedCauchyLaw(loc=0, scale=1),
        LognormalLaw(mu=1, sigma=1),
        GammaLaw(shape=2, rate=1),
        InverseGaussianLaw(mean=1, shape=2),
    ],
)
def test_trace_follows_the_tree(law):
    category, trace = classify(counts(law, seed=3), ClassifierConfig(**FAST))
    a = trace.alpha

    assert trace.category == category
    assert trace.n_excess >= 10
    assert trace.sigma_hat > 0
    if trace.branch is Branch.GPD_ADEQUATE:
        assert trace.mad1_p >= a and trace.dev_p is not None and trace.mad2_p is None
        assert category.kind in (CategoryKind.GUMBEL, CategoryKind.FRECHET, CategoryKind.UNCLASSIFIED)
    else:
        assert trace.branch is Branch.GPD_REJECTED
        assert trace.mad1_p < a and trace.mad2_p is not None and trace.dev_p is None
        assert category.kind in (CategoryKind.PSEUDO_GUMBEL, CategoryKind.UNCLASSIFIED)


@pytest.mark.parametrize(
    "law",
    [LognormalLaw(mu=1, sigma=1), GammaLaw(shape=2, rate=1), FrechetLaw(shape=1, scale=1)],
)
@pytest.mark.parametrize("seed", [0, 1, 2])
def test_gumbel_is_monotone_in_alpha(law, seed):
    ys = counts(law, seed=seed)
    traces = [classify(ys, ClassifierConfig(alpha=a, **FAST))[1] for a in (0.01, 0.05, 0.10, 0.20)]

    # stage-1 streams do not depend on alpha
    assert len({t.mad1_p for t in traces}) == 1
    gumbel = [t.category.kind is CategoryKind.GUMBEL for t in traces]
    for lower, higher in zip(gumbel, gumbel[1:]):
        assert lower or not higher
    for t in traces:
        if t.category.kind is CategoryKind.GUMBEL:
            assert min(t.mad1_p, t.dev_p) >= t.alpha


def test_heavy_frechet_sample_has_positive_shape():
    _, trace = classify(counts(FrechetLaw(shape=1, scale=1), n=5000, seed=4), ClassifierConfig(**FAST))
    assert trace.gamma_hat > 0.5


def test_inconsistent_trace_is_rejected():
    base = dict(threshold_p=0.95, alpha=0.05, n_boot=19, seed=1, u=3.0, n_excess=40)
    with pytest.raises(ValueError):
        DecisionTrace(category=GUMBEL, branch=Branch.NONE, **base)
    with pytest.raises(ValueError):
        DecisionTrace(category=PSEUDO_GUMBEL, branch=Branch.GPD_ADEQUATE, mad1_p=0.5, dev_p=0.5, **base)
    with pytest.raises(ValueError):
        DecisionTrace(category=GUMBEL, branch=Branch.GPD_ADEQUATE, mad1_p=0.5, dev_p=0.01, **base)


def test_report_layout():
    _, trace = classify(counts(GammaLaw(shape=2, rate=1)), ClassifierConfig(**FAST))
    report = trace.to_report()
    assert tuple(report)[: len(REPORT_KEYS)] == REPORT_KEYS
    assert report["category"] == trace.category.label
    assert "reason" in report and "seed" in report

    assert json.loads(format_json(trace)) == json.loads(json.dumps(report))
    assert format_json(trace) == format_json(trace.model_copy())


def test_text_report():
    _, trace = classify(counts(GammaLaw(shape=2, rate=1)), ClassifierConfig(**FAST))
    text = format_text(trace)
    assert text.startswith("Tail category")
    assert str(trace.category) in text
    assert "seed=5" in text


def test_config_validation():
    with pytest.raises(ValueError):
        ClassifierConfig(threshold_p=1.0)
    with pytest.raises(ValueError):
        ClassifierConfig(n_boot=0)
    with pytest.raises(ValueError):
        ClassifierConfig(bootstrap=10)


# -------------------------------------------------
# Frequencies over replicated samples
# -------------------------------------------------

def _frequencies(law, replicates=100, n_boot=99):
    kinds = []
    for r in range(replicates):
        category, _ = classify(counts(law, seed=1000 + r), ClassifierConfig(n_boot=n_boot, seed=r))
        kinds.append(category.kind)
    return {kind: kinds.count(kind) / replicates for kind in CategoryKind}


@pytest.mark.slow
def test_frechet_mixture_is_mostly_frechet():
    freqs = _frequencies(FrechetLaw(shape=1, scale=1))
    assert freqs[CategoryKind.FRECHET] >= 0.7


@pytest.mark.slow
def test_negative_binomial_is_mostly_pseudo_gumbel():
    freqs = _frequencies(GammaLaw(shape=2, rate=1))
    assert freqs[CategoryKind.PSEUDO_GUMBEL] == max(freqs.values())
