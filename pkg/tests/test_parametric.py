import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from triplex import fit_parametric
from triplex.errors import DegenerateFit, DomainError, InputError


def test_gaussian_two_point():
    assert fit_parametric([0.0, 2.0], "gaussian").params == (1.0, 1.0)


def test_exponential_rate_inverts_mean():
    rng = np.random.default_rng(0)
    x = rng.exponential(1.0, 1000)
    x = x / x.mean() * 3.75
    assert fit_parametric(x, "exponential").params[0] == pytest.approx(4 / 15, rel=1e-12)


def test_loglinear_round_trip():
    rng = np.random.default_rng(5)
    z = rng.normal(0.3, 0.7, 500)
    mu, sd = fit_parametric(np.exp(z), "loglinear").params
    assert mu == pytest.approx(z.mean(), abs=1e-12)
    assert sd == pytest.approx(z.std(), abs=1e-12)


def test_errors():
    with pytest.raises(DegenerateFit):
        fit_parametric([1.0], "gaussian")
    with pytest.raises(DegenerateFit):
        fit_parametric([2.0, 2.0, 2.0], "gaussian")
    with pytest.raises(DomainError):
        fit_parametric([1.0, 0.0], "exponential")
    with pytest.raises(DomainError):
        fit_parametric([1.0, -1.0], "loglinear")
    with pytest.raises(InputError):
        fit_parametric([1.0, 2.0], "cauchy")


@pytest.mark.parametrize(
    "family, sample",
    [("gaussian", [-1.0, 0.5, 2.0]), ("exponential", [0.5, 1.0, 4.0]), ("loglinear", [0.5, 1.0, 4.0])],
)
def test_quantile_inverts_cdf(family, sample):
    dist = fit_parametric(sample, family)
    u = np.linspace(0.001, 0.999, 41)
    assert np.allclose(dist.cdf(dist.quantile(u)), u, atol=1e-12)


@pytest.mark.parametrize(
    "family, sample",
    [("gaussian", [-1.0, 0.5, 2.0]), ("exponential", [0.5, 1.0, 4.0]), ("loglinear", [0.5, 1.0, 4.0])],
)
def test_score_round_trip_reaches_far_tails(family, sample):
    dist = fit_parametric(sample, family)
    z = np.linspace(-30, 30, 61)
    y = dist.from_score(z)
    assert np.all(np.diff(y) > 0)
    assert np.allclose(dist.score(y), z, rtol=1e-9, atol=1e-9)


@given(st.lists(st.floats(0.01, 100), min_size=2, max_size=30, unique=True))
def test_cdf_strictly_increasing_on_support(values):
    for family in ("exponential", "loglinear"):
        dist = fit_parametric(values, family)
        ys = np.sort(np.asarray(values))
        assert np.all(np.diff(dist.cdf(ys)) >= 0)
