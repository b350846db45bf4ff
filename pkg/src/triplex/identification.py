"""Counterfactual CDF identification for the untreated outcome of (s1, d1) at t1.

All maps here are compositions of empirical step CDFs and generalized
quantiles (see :mod:`triplex.empirical`). ``T_{s,d} = F^{-1}_{sdt1} o F_{sdt0}``
pushes a group's t0 outcome distribution to its t1 distribution.
"""

from __future__ import annotations

from collections.abc import Callable, Mapping
from dataclasses import dataclass

import numpy as np

from .cells import IDENTIFICATION_CELLS, CellTable, PanelPairs
from .empirical import CDF, Cell, ChainSpec, EmpiricalCdf, compose_chain, quantile_eval
from .errors import NegativeSlack

TRIPLE_CHAIN = ChainSpec.from_string(
    "F:s1d1t0 Q:s0d1t0 F:s0d1t1 Q:s0d0t1 F:s0d0t0 Q:s1d0t0 F:s1d0t1"
)


def cic_chain(state: int = 1) -> ChainSpec:
    """``F_{t0|d1} o F^{-1}_{t0|d0} o F_{t1|d0}`` within one state."""
    return ChainSpec([("cdf", Cell(state, 1, 0)), ("quantile", Cell(state, 0, 0)), ("cdf", Cell(state, 0, 1))])


def _as_dist(x, cell) -> EmpiricalCdf:
    if isinstance(x, EmpiricalCdf):
        return x
    return EmpiricalCdf(x, cell)


def _cic_table(control_t0, control_t1, treated_t0) -> CellTable:
    return CellTable(
        {
            Cell(1, 0, 0): _as_dist(control_t0, Cell(1, 0, 0)),
            Cell(1, 0, 1): _as_dist(control_t1, Cell(1, 0, 1)),
            Cell(1, 1, 0): _as_dist(treated_t0, Cell(1, 1, 0)),
        }
    )


def cic_counterfactual_cdf(control_t0, control_t1, treated_t0, y):
    """Two-group changes-in-changes counterfactual CDF at ``y``."""
    return compose_chain(cic_chain(1), _cic_table(control_t0, control_t1, treated_t0), y)


def triple_changes_counterfactual_cdf(table: Mapping, y):
    """Triple-changes counterfactual CDF of ``Y^0(t1) | s1, d1`` at ``y``.

    Evaluates ``F_{s1d1t0} o T^{-1}_{s0d1} o T_{s0d0} o T^{-1}_{s1d0}``; the
    (s1, d1, t1) cell is never read.
    """
    if isinstance(table, CellTable):
        table.require(IDENTIFICATION_CELLS)
    return compose_chain(TRIPLE_CHAIN, table, y)


@dataclass(frozen=True)
class BoundsResult:
    lower: float | np.ndarray
    upper: float | np.ndarray
    eps: float
    delta: float

    @property
    def width(self):
        return np.subtract(self.upper, self.lower)


def _shifted_chain(chain: ChainSpec, table: Mapping, y, slack: float):
    """Evaluate ``chain`` adding ``slack`` to every probability that feeds a
    quantile link and to the final CDF output, clamping each to ``[0, 1]``."""
    value = y
    for index in range(len(chain.links) - 1, -1, -1):
        link = chain.links[index]
        dist = table[link.cell]
        if link.direction == CDF:
            value = dist.cdf(value)
        else:
            value = dist.quantile(np.clip(np.add(value, slack), 0.0, 1.0))
    if chain.output == "probability":
        value = np.clip(np.add(value, slack), 0.0, 1.0)
    return float(value) if np.ndim(value) == 0 else value


def _check_slack(eps, delta):
    if eps < 0 or delta < 0:
        raise NegativeSlack(f"eps and delta must be nonnegative, got eps={eps}, delta={delta}")
    return float(eps) + float(delta)


def partial_bounds_triple(table: Mapping, y, eps: float = 0.0, delta: float = 0.0) -> BoundsResult:
    """Sharp-form bounds on the triple-changes counterfactual CDF.

    ``eps`` relaxes strict monotonicity of the production functions and
    ``delta`` bounds the Kolmogorov drift of the latent law over time. The
    combined slack ``eps + delta`` is subtracted (lower) or added (upper)
    before every quantile link and once more at the end.
    """
    slack = _check_slack(eps, delta)
    if isinstance(table, CellTable):
        table.require(IDENTIFICATION_CELLS)
    lower = _shifted_chain(TRIPLE_CHAIN, table, y, -slack)
    upper = _shifted_chain(TRIPLE_CHAIN, table, y, slack)
    return BoundsResult(lower, upper, float(eps), float(delta))


def partial_bounds_cic(control_t0, control_t1, treated_t0, y, eps: float = 0.0, delta: float = 0.0) -> BoundsResult:
    """Changes-in-changes analogue of :func:`partial_bounds_triple`."""
    slack = _check_slack(eps, delta)
    table = _cic_table(control_t0, control_t1, treated_t0)
    chain = cic_chain(1)
    return BoundsResult(
        _shifted_chain(chain, table, y, -slack),
        _shifted_chain(chain, table, y, slack),
        float(eps),
        float(delta),
    )


def joint_counterfactual_cdf(
    pairs: PanelPairs,
    counterfactual_marginal: Callable[[float], float],
    y0: float,
    y1: float,
    marginal_t0: EmpiricalCdf | None = None,
) -> float:
    """Joint CDF of ``(Y^0(t1), Y^1(t1))`` for the treated panel.

    Requires an id-linked panel (no attrition, latent variable fixed over
    time). The counterfactual marginal is any monotone CDF evaluator, e.g.
    ``lambda y: triple_changes_counterfactual_cdf(table, y)`` or one side of
    a bounds result.

    Parameters
    ----------
    pairs : PanelPairs
        Observed ``(Y(t0), Y(t1))`` for each treated individual.
    counterfactual_marginal : callable
        Evaluates the counterfactual CDF of ``Y^0(t1)``.
    y0, y1 : float
        Evaluation point for the untreated and treated coordinates.
    marginal_t0 : EmpiricalCdf, optional
        Empirical t0 marginal of the treated cell; defaults to the panel's
        own t0 coordinates.
    """
    if marginal_t0 is None:
        marginal_t0 = EmpiricalCdf(pairs.y_t0)
    u = float(counterfactual_marginal(y0))
    if u <= 0.0:
        # F^{-1}(0) sits at the bottom of the support, where the joint CDF is 0.
        return 0.0
    threshold = quantile_eval(marginal_t0, min(u, 1.0))
    hits = np.count_nonzero((pairs.y_t0 <= threshold) & (pairs.y_t1 <= y1))
    return hits / pairs.y_t0.size


def joint_counterfactual_grid(pairs: PanelPairs, counterfactual_marginal, y0_grid, y1_grid, marginal_t0=None):
    """:func:`joint_counterfactual_cdf` on the product of two grids."""
    out = np.empty((len(y0_grid), len(y1_grid)))
    for i, a in enumerate(y0_grid):
        for j, b in enumerate(y1_grid):
            out[i, j] = joint_counterfactual_cdf(pairs, counterfactual_marginal, a, b, marginal_t0)
    return out
