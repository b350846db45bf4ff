"""Maximum-likelihood fits of simple outcome families.

Each fitted family exposes a closed-form CDF and quantile so that the
parametric estimator variants can reuse the same chain structure as the
empirical ones.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr, ndtri

from .errors import DegenerateFit, DomainError, InputError

FAMILIES = ("gaussian", "exponential", "loglinear")

# Quantile arguments are kept strictly inside (0, 1) so that tails map to
# finite values. Chains should prefer the score methods, which never leave
# the normal-score scale and so do not saturate.
_U_FLOOR = 1e-300
_U_CEIL = float(np.nextafter(1.0, 0.0))


@dataclass(frozen=True)
class FittedDist:
    """A fitted continuous distribution.

    ``params`` holds ``(mean, sd)`` for gaussian, ``(rate,)`` for
    exponential and ``(mean_log, sd_log)`` for loglinear.
    """

    family: str
    params: tuple

    def cdf(self, y):
        y = np.asarray(y, dtype=float)
        if self.family == "gaussian":
            mu, sd = self.params
            out = ndtr((y - mu) / sd)
        elif self.family == "exponential":
            (rate,) = self.params
            out = -np.expm1(-rate * np.maximum(y, 0.0))
        else:
            mu, sd = self.params
            with np.errstate(divide="ignore"):
                logy = np.where(y > 0, np.log(np.where(y > 0, y, 1.0)), -np.inf)
            out = ndtr((logy - mu) / sd)
        return float(out) if out.ndim == 0 else out

    def quantile(self, u):
        u = np.clip(np.asarray(u, dtype=float), _U_FLOOR, _U_CEIL)
        if self.family == "gaussian":
            mu, sd = self.params
            out = mu + sd * ndtri(u)
        elif self.family == "exponential":
            (rate,) = self.params
            out = -np.log1p(-u) / rate
        else:
            mu, sd = self.params
            out = np.exp(mu + sd * ndtri(u))
        return float(out) if out.ndim == 0 else out

    def score(self, y):
        """Normal score ``z`` with ``ndtr(z) == cdf(y)``, exact in both tails."""
        y = np.asarray(y, dtype=float)
        if self.family == "gaussian":
            mu, sd = self.params
            z = (y - mu) / sd
        elif self.family == "loglinear":
            mu, sd = self.params
            with np.errstate(divide="ignore"):
                logy = np.where(y > 0, np.log(np.where(y > 0, y, 1.0)), -np.inf)
            z = (logy - mu) / sd
        else:
            (rate,) = self.params
            x = rate * np.maximum(y, 0.0)
            with np.errstate(divide="ignore"):
                z = np.where(x > np.log(2.0), -ndtri(np.exp(-x)), ndtri(-np.expm1(-x)))
        return float(z) if z.ndim == 0 else z

    def from_score(self, z):
        """Inverse of :meth:`score`: the ``ndtr(z)`` quantile."""
        z = np.asarray(z, dtype=float)
        if self.family == "gaussian":
            mu, sd = self.params
            out = mu + sd * z
        elif self.family == "loglinear":
            mu, sd = self.params
            out = np.exp(mu + sd * z)
        else:
            (rate,) = self.params
            with np.errstate(divide="ignore"):
                out = np.where(z > 0, -np.log(ndtr(-z)), -np.log1p(-ndtr(z))) / rate
        return float(out) if out.ndim == 0 else out

    @property
    def mean(self) -> float:
        if self.family == "gaussian":
            return self.params[0]
        if self.family == "exponential":
            return 1.0 / self.params[0]
        mu, sd = self.params
        return float(np.exp(mu + sd**2 / 2))


def _gaussian_mle(x: np.ndarray) -> tuple[float, float]:
    mu = float(np.mean(x))
    sd = float(np.sqrt(np.mean((x - mu) ** 2)))
    if not sd > 0:
        raise DegenerateFit("zero sample variance; gaussian fit is degenerate")
    return mu, sd


def fit_parametric(samples, family: str = "gaussian") -> FittedDist:
    """Fit ``family`` to ``samples`` by maximum likelihood.

    >>> fit_parametric([0.0, 2.0]).params
    (1.0, 1.0)
    """
    if family not in FAMILIES:
        raise InputError(f"unknown family {family!r}; choose from {FAMILIES}")
    x = np.asarray(getattr(samples, "values", samples), dtype=float).ravel()
    if x.size < 2:
        raise DegenerateFit(f"need at least 2 samples to fit, got {x.size}")
    if family == "gaussian":
        return FittedDist(family, _gaussian_mle(x))
    if np.any(x <= 0):
        raise DomainError(f"{family} fit needs strictly positive samples")
    if family == "exponential":
        return FittedDist(family, (1.0 / float(np.mean(x)),))
    return FittedDist(family, _gaussian_mle(np.log(x)))
