"""Uncertainty quantification for the triple-changes ATT.

Two routes:

* :func:`plugin_variance` -- the asymptotic variance of
  ``sqrt(N) (tau_hat - tau)`` as a sum of eight per-cell influence terms,
  each estimated by plugging empirical CDFs/quantiles and Gaussian kernel
  densities into the linearization of the estimator.
* :func:`bootstrap_ci` -- percentile intervals from a cell-stratified
  bootstrap.

Influence terms
---------------
Write the counterfactual chain applied to ``z ~ (s1, d1, t0)`` as::

    p5 = F_{s1d0t0}(z)        x4 = Q_{s1d0t1}(p5)
    p3 = F_{s0d0t1}(x4)       x2 = Q_{s0d0t0}(p3)
    p1 = F_{s0d1t0}(x2)       g7(z) = Q_{s0d1t1}(p1)

A CDF link perturbed at ``x`` shifts its output by ``F_hat(x) - F(x)``; a
quantile link at ``p`` shifts its output by ``-(F_hat(Q(p)) - p) / f(Q(p))``.
Propagating each shift through the remaining outer links (density ratios
by the chain rule) and averaging over ``z`` gives ``Q_k`` for every cell.
``V_k`` is the mean of ``Q_k^2`` over cell k's own samples.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtri

from .cells import CellTable
from .empirical import ALL_CELLS, Cell, EmpiricalCdf, cdf_eval, quantile_eval
from .errors import BootstrapFailure, DegenerateSample, DensityUnderflow, InputError, TriplexError
from .estimators import EstimatorKind, estimate
from .simlab import default_workers

DENSITY_FLOOR = 1e-12

# Cell of each variance term, in the order V0..V7.
VARIANCE_CELLS = (
    Cell(1, 1, 1),
    Cell(0, 1, 1),
    Cell(0, 1, 0),
    Cell(0, 0, 0),
    Cell(0, 0, 1),
    Cell(1, 0, 1),
    Cell(1, 0, 0),
    Cell(1, 1, 0),
)

# g_k = G_LINKS[:k-1] composed left to right; r_k = the innermost 6-k links.
G_LINKS = (
    ("quantile", Cell(0, 1, 1)),
    ("cdf", Cell(0, 1, 0)),
    ("quantile", Cell(0, 0, 0)),
    ("cdf", Cell(0, 0, 1)),
    ("quantile", Cell(1, 0, 1)),
    ("cdf", Cell(1, 0, 0)),
)


class KernelDensity:
    """Gaussian kernel density estimate.

    Parameters
    ----------
    samples : array_like or EmpiricalCdf
    bandwidth : float, optional
        Defaults to Silverman's rule ``1.06 * sd * n ** (-1/5)``.
    """

    _BLOCK = 1 << 22

    def __init__(self, samples, bandwidth: float | None = None):
        x = np.asarray(getattr(samples, "values", samples), dtype=float).ravel()
        if x.size < 2:
            raise DegenerateSample(f"kernel density needs at least 2 samples, got {x.size}")
        sd = float(np.std(x, ddof=1))
        if not sd > 0:
            raise DegenerateSample("samples have zero spread")
        if bandwidth is None:
            bandwidth = 1.06 * sd * x.size ** (-0.2)
        if not bandwidth > 0:
            raise InputError(f"bandwidth must be positive, got {bandwidth}")
        self.samples = np.sort(x)
        self.bandwidth = float(bandwidth)

    def _reduce(self, y, fn):
        y = np.asarray(y, dtype=float)
        flat = y.ravel()
        out = np.empty(flat.size)
        step = max(1, self._BLOCK // self.samples.size)
        for start in range(0, flat.size, step):
            block = flat[start : start + step]
            u = (block[:, None] - self.samples[None, :]) / self.bandwidth
            out[start : start + step] = fn(u).mean(axis=1)
        out = out.reshape(y.shape)
        return float(out) if out.ndim == 0 else out

    def __call__(self, y):
        h = self.bandwidth
        return self._reduce(y, lambda u: np.exp(-0.5 * u * u) / (np.sqrt(2 * np.pi) * h))

    def deriv(self, y):
        h = self.bandwidth
        return self._reduce(y, lambda u: -u * np.exp(-0.5 * u * u) / (np.sqrt(2 * np.pi) * h * h))


def kernel_density_eval(kd: KernelDensity, y):
    return kd(y)


def kernel_density_deriv(kd: KernelDensity, y):
    return kd.deriv(y)


def _apply_links(links, table, x):
    for direction, cell in reversed(links):
        dist = table[cell]
        x = cdf_eval(dist, x) if direction == "cdf" else quantile_eval(dist, x)
    return x


def g_eval(k: int, table, x):
    """``g_k``: the outer ``k - 1`` links of the counterfactual chain (k = 2..7)."""
    if not 2 <= k <= 7:
        raise InputError(f"g_k is defined for k = 2..7, got {k}")
    return _apply_links(G_LINKS[: k - 1], table, x)


def r_eval(k: int, table, x):
    """``r_k``: the inner ``6 - k`` links of the counterfactual chain (k = 1..5)."""
    if not 1 <= k <= 5:
        raise InputError(f"r_k is defined for k = 1..5, got {k}")
    return _apply_links(G_LINKS[k:], table, x)


@dataclass
class InfluenceComponents:
    """Plugged-in influence functions of the triple-changes estimator.

    ``points`` holds the chain's intermediate values per treated t0
    sample; ``slopes[k]`` is the chain-rule derivative of the output with
    respect to the k-th intermediate; ``Q[cell]`` is the influence function
    evaluated at that cell's own samples.
    """

    points: dict
    slopes: dict
    densities: dict
    Q: dict


def _kde(table, cell, cache):
    if cell not in cache:
        cache[cell] = KernelDensity(table[cell])
    return cache[cell]


def _density_at(table, cell, x, cache):
    # Chain points repeat heavily (they are sample values), so evaluate the
    # kernel sum once per distinct point.
    uniq, inverse = np.unique(x, return_inverse=True)
    dens = np.asarray(_kde(table, cell, cache)(uniq))[inverse]
    low = dens < DENSITY_FLOOR
    if np.any(low):
        raise DensityUnderflow(
            f"kernel density of {cell} is {dens[low].min():.3g} at {x[low][0]:.6g}; "
            "the cell supports do not overlap"
        )
    return dens


def _influence(cell_dist: EmpiricalCdf, thresholds, weights, sign: float) -> np.ndarray:
    """``sign * mean_i w_i (1{y <= thr_i} - F_hat(thr_i))`` at every sample ``y`` of the cell."""
    order = np.argsort(thresholds, kind="stable")
    thr = thresholds[order]
    w = weights[order]
    suffix = np.concatenate([np.cumsum(w[::-1])[::-1], [0.0]])
    y = cell_dist.values
    above = suffix[np.searchsorted(thr, y, side="left")]
    centre = np.sum(weights * cdf_eval(cell_dist, thresholds))
    return sign * (above - centre) / thresholds.size


def influence_components(table: CellTable) -> InfluenceComponents:
    table.require()
    cache: dict = {}
    c = {name: Cell(*map(int, name)) for name in ("111", "110", "100", "101", "001", "000", "010", "011")}

    z = table[c["110"]].values
    p5 = cdf_eval(table[c["100"]], z)
    x4 = quantile_eval(table[c["101"]], p5)
    p3 = cdf_eval(table[c["001"]], x4)
    x2 = quantile_eval(table[c["000"]], p3)
    p1 = cdf_eval(table[c["010"]], x2)
    out = quantile_eval(table[c["011"]], p1)

    dens = {
        "f011(out)": _density_at(table, c["011"], out, cache),
        "f010(x2)": _density_at(table, c["010"], x2, cache),
        "f000(x2)": _density_at(table, c["000"], x2, cache),
        "f001(x4)": _density_at(table, c["001"], x4, cache),
        "f101(x4)": _density_at(table, c["101"], x4, cache),
        "f100(z)": _density_at(table, c["100"], z, cache),
    }
    d_p1 = 1.0 / dens["f011(out)"]
    d_x2 = d_p1 * dens["f010(x2)"]
    d_p3 = d_x2 / dens["f000(x2)"]
    d_x4 = d_p3 * dens["f001(x4)"]
    d_p5 = d_x4 / dens["f101(x4)"]
    d_z = d_p5 * dens["f100(z)"]

    Q = {
        c["111"]: table[c["111"]].values - table.mean(c["111"]),
        c["011"]: _influence(table[c["011"]], out, d_p1, -1.0),
        c["010"]: _influence(table[c["010"]], x2, d_p1, 1.0),
        c["000"]: _influence(table[c["000"]], x2, d_p3, -1.0),
        c["001"]: _influence(table[c["001"]], x4, d_p3, 1.0),
        c["101"]: _influence(table[c["101"]], x4, d_p5, -1.0),
        c["100"]: _influence(table[c["100"]], z, d_p5, 1.0),
        c["110"]: out - np.mean(out),
    }
    points = {"z": z, "p5": p5, "x4": x4, "p3": p3, "x2": x2, "p1": p1, "out": out}
    slopes = {"p1": d_p1, "x2": d_x2, "p3": d_p3, "x4": d_x4, "p5": d_p5, "z": d_z}
    return InfluenceComponents(points, slopes, dens, Q)


@dataclass
class VarianceReport:
    V: tuple
    p_weights: dict
    total: float
    se: float
    N: int
    cells: tuple = VARIANCE_CELLS

    def as_dict(self) -> dict:
        return {
            "V": {f"V{k}": float(v) for k, v in enumerate(self.V)},
            "V_cells": {f"V{k}": str(c) for k, c in enumerate(self.cells)},
            "p_weights": {str(c): float(p) for c, p in self.p_weights.items()},
            "total": float(self.total),
            "se": float(self.se),
            "N": int(self.N),
        }


def plugin_variance(table: CellTable) -> VarianceReport:
    """Plug-in asymptotic variance of the empirical triple-changes estimator.

    ``total`` estimates the variance of ``sqrt(N)(tau_hat - tau)`` and
    ``se = sqrt(total / N)`` the standard error of ``tau_hat``.
    """
    comps = influence_components(table)
    N = table.total
    V = tuple(float(np.mean(comps.Q[cell] ** 2)) for cell in VARIANCE_CELLS)
    p = {cell: table[cell].n / N for cell in ALL_CELLS}
    total = sum(v / p[cell] for v, cell in zip(V, VARIANCE_CELLS))
    return VarianceReport(V, p, total, float(np.sqrt(total / N)), N)


@dataclass
class BootstrapReport:
    point: float
    level: float
    lo: float
    hi: float
    replicates: int
    seed: int
    failures: int = 0
    se_boot: float = float("nan")
    normal_lo: float | None = None
    normal_hi: float | None = None
    draws: np.ndarray = field(default=None, repr=False)


def resample_table(table: CellTable, rng: np.random.Generator) -> CellTable:
    """Resample every cell independently with replacement."""
    cells = {}
    for cell, dist in table.items():
        n = dist.n
        counts = np.bincount(rng.integers(0, n, n), minlength=n)
        cells[cell] = EmpiricalCdf(np.repeat(dist.values, counts), cell)
    return CellTable(cells)


def bootstrap_ci(
    table: CellTable,
    estimator="CCC_EMP",
    B: int = 1000,
    level: float = 0.90,
    seed: int = 0,
    state: int = 1,
    n_jobs: int | None = None,
) -> BootstrapReport:
    """Stratified percentile bootstrap interval for the ATT.

    Replicate ``b`` draws from ``SeedSequence(seed, spawn_key=(b,))`` so the
    report depends only on ``seed``, never on scheduling. Replicates that
    raise a triplex error are dropped; more than 5% failures abort.
    """
    if B < 50:
        raise InputError(f"B must be at least 50, got {B}")
    if not 0 < level < 1:
        raise InputError(f"level must lie in (0, 1), got {level}")
    kind = estimator if isinstance(estimator, EstimatorKind) else EstimatorKind.parse(str(estimator))
    point = estimate(table, kind, state).tau_hat

    def replicate(b):
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(b,)))
        try:
            return estimate(resample_table(table, rng), kind, state).tau_hat
        except TriplexError:
            return np.nan

    workers = default_workers(n_jobs)
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            draws = np.fromiter(pool.map(replicate, range(B)), float, count=B)
    else:
        draws = np.fromiter((replicate(b) for b in range(B)), float, count=B)
    failed = int(np.count_nonzero(np.isnan(draws)))
    if failed > 0.05 * B:
        raise BootstrapFailure(f"{failed} of {B} bootstrap replicates failed")
    good = draws[~np.isnan(draws)]
    alpha = 1.0 - level
    lo, hi = np.quantile(good, [alpha / 2, 1 - alpha / 2])
    report = BootstrapReport(point, level, float(lo), float(hi), B, seed, failed, float(np.std(good, ddof=1)), draws=draws)
    if kind.tag == "CCC_EMP":
        try:
            se = plugin_variance(table).se
        except TriplexError:
            se = None
        if se is not None:
            zq = float(ndtri(1 - alpha / 2))
            report.normal_lo, report.normal_hi = point - zq * se, point + zq * se
    return report
