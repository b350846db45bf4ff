"""Point estimators of the average effect of treatment on the treated."""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr

from .cells import CellTable
from .empirical import CDF, Cell, ChainSpec, as_cell, compose_chain
from .errors import InputError
from .parametric import FAMILIES, fit_parametric

TAGS = ("DID", "DDD", "CIC_EMP", "CIC_MLE", "CCC_EMP", "CCC_MLE")
MLE_TAGS = ("CIC_MLE", "CCC_MLE")

# Counterfactual transport of Y(t0) | s1, d1 to the untreated t1 scale.
TAU_CHAIN = ChainSpec.from_string("Q:s0d1t1 F:s0d1t0 Q:s0d0t0 F:s0d0t1 Q:s1d0t1 F:s1d0t0")


def cic_tau_chain(state: int = 1) -> ChainSpec:
    return ChainSpec([("quantile", Cell(state, 0, 1)), ("cdf", Cell(state, 0, 0))])


def _freeze_family(family):
    if family is None or isinstance(family, str):
        return family
    return tuple(sorted((as_cell(k), v) for k, v in dict(family).items()))


@dataclass(frozen=True)
class EstimatorKind:
    """Which estimator to run.

    ``family`` is required for the MLE tags and forbidden otherwise. It is
    either one family name for every cell or a mapping ``cell -> family``
    (cells left out default to gaussian).
    """

    tag: str
    family: str | tuple | None = None

    def __post_init__(self):
        tag = self.tag.upper().replace("-", "_")
        if tag not in TAGS:
            raise InputError(f"unknown estimator {self.tag!r}; choose from {TAGS}")
        object.__setattr__(self, "tag", tag)
        family = _freeze_family(self.family)
        if tag in MLE_TAGS:
            if family is None:
                raise InputError(f"{tag} needs a family")
            names = [family] if isinstance(family, str) else [f for _, f in family]
            for name in names:
                if name not in FAMILIES:
                    raise InputError(f"unknown family {name!r}; choose from {FAMILIES}")
        elif family is not None:
            raise InputError(f"{tag} takes no family")
        object.__setattr__(self, "family", family)

    @classmethod
    def parse(cls, name: str, family=None) -> "EstimatorKind":
        tag = name.upper().replace("-", "_")
        if tag in MLE_TAGS and family is None:
            family = "gaussian"
        return cls(tag, family)

    def family_for(self, cell: Cell) -> str:
        if isinstance(self.family, str):
            return self.family
        return dict(self.family or ()).get(as_cell(cell), "gaussian")

    @property
    def name(self) -> str:
        return self.tag.lower().replace("_", "-")

    def __str__(self):
        if self.family is None:
            return self.tag
        if isinstance(self.family, str):
            return f"{self.tag}({self.family})"
        return f"{self.tag}(" + ",".join(f"{c}:{f}" for c, f in self.family) + ")"


@dataclass(frozen=True)
class AttEstimate:
    tau_hat: float
    estimator: EstimatorKind
    n_per_cell: dict = field(default_factory=dict)


def _compose_fitted(chain: ChainSpec, fits: Mapping, y):
    # Probabilities travel as normal scores so far-tail points keep their
    # resolution instead of saturating at 0 or 1.
    value = y
    for link in reversed(chain.links):
        dist = fits[link.cell]
        value = dist.score(value) if link.direction == CDF else dist.from_score(value)
    if chain.output == "probability":
        value = ndtr(value)
    return value


def _transported_mean(table: CellTable, chain: ChainSpec, source: Cell, kind: EstimatorKind) -> float:
    y = table[source].values
    if kind.tag in MLE_TAGS:
        fits = {c: fit_parametric(table[c], kind.family_for(c)) for c in set(chain.cells)}
        mapped = _compose_fitted(chain, fits, y)
    else:
        mapped = compose_chain(chain, table, y)
    return float(np.mean(mapped))


def _counts(table: CellTable, cells) -> dict:
    return {str(c): table[c].n for c in cells}


def att_triple_changes(table: CellTable, mode: str = "empirical", family="gaussian") -> AttEstimate:
    """Triple-changes ATT.

    ``mean(Y_{s1d1}(t1))`` minus the mean of the t0 treated outcomes pushed
    through ``T*∘T_{s1,d0}``, built from empirical (``mode="empirical"``)
    or fitted (``mode="mle"``) CDF links.
    """
    if mode not in ("empirical", "mle"):
        raise InputError(f"mode must be 'empirical' or 'mle', got {mode!r}")
    kind = EstimatorKind("CCC_MLE", family) if mode == "mle" else EstimatorKind("CCC_EMP")
    return _ccc(table, kind)


def _ccc(table: CellTable, kind: EstimatorKind) -> AttEstimate:
    table.require()
    tau = table.mean(Cell(1, 1, 1)) - _transported_mean(table, TAU_CHAIN, Cell(1, 1, 0), kind)
    return AttEstimate(tau, kind, table.counts)


def att_cic(table: CellTable, state: int = 1, mode: str = "empirical", family="gaussian") -> AttEstimate:
    """Changes-in-changes ATT computed within one state."""
    if mode not in ("empirical", "mle"):
        raise InputError(f"mode must be 'empirical' or 'mle', got {mode!r}")
    kind = EstimatorKind("CIC_MLE", family) if mode == "mle" else EstimatorKind("CIC_EMP")
    return _cic(table, kind, state)


def _cic(table: CellTable, kind: EstimatorKind, state: int) -> AttEstimate:
    cells = [Cell(state, d, t) for d in (0, 1) for t in (0, 1)]
    table.require(cells)
    treated_t1 = table.mean(Cell(state, 1, 1))
    tau = treated_t1 - _transported_mean(table, cic_tau_chain(state), Cell(state, 1, 0), kind)
    return AttEstimate(tau, kind, _counts(table, cells))


def _did_value(table: CellTable, state: int) -> float:
    m = table.mean
    return (m(Cell(state, 1, 1)) - m(Cell(state, 1, 0))) - (m(Cell(state, 0, 1)) - m(Cell(state, 0, 0)))


def att_did(table: CellTable, state: int = 1) -> AttEstimate:
    cells = [Cell(state, d, t) for d in (0, 1) for t in (0, 1)]
    table.require(cells)
    return AttEstimate(_did_value(table, state), EstimatorKind("DID"), _counts(table, cells))


def att_ddd(table: CellTable) -> AttEstimate:
    table.require()
    return AttEstimate(_did_value(table, 1) - _did_value(table, 0), EstimatorKind("DDD"), table.counts)


def estimate(table: CellTable, kind, state: int = 1) -> AttEstimate:
    """Run any estimator by kind (an :class:`EstimatorKind` or a tag string)."""
    if not isinstance(kind, EstimatorKind):
        kind = EstimatorKind.parse(str(kind))
    if kind.tag == "DID":
        return att_did(table, state)
    if kind.tag == "DDD":
        return att_ddd(table)
    if kind.tag.startswith("CIC"):
        return _cic(table, kind, state)
    return _ccc(table, kind)
