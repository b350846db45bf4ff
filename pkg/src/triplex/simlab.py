"""Synthetic data-generating mechanisms with closed-form ground truth, and
the relative-bias experiment harness.

Every DGM draws a latent ``U`` per (state, group) and emits
``h_{s,d}(U; t)`` for the untreated cells; the treated cell (s1, d1, t1)
is drawn from its own outcome law. Randomness is streamed from a single
master seed through :class:`numpy.random.SeedSequence`, one child stream
per (replication, cell), so results do not depend on execution order.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .cells import CellTable
from .empirical import ALL_CELLS, TARGET_CELL, Cell
from .errors import InputError, ZeroTrueTau
from .estimators import MLE_TAGS, EstimatorKind, estimate


def _drift(s: int, d: int) -> float:
    return (1 + s) / 4 + (d - 0.5) / 2


def linear_h(s: int, d: int, u, t: int):
    return 2.0 * u + _drift(s, d) * t


def _exp_h(s: int, d: int, u, t: int):
    return 0.1 * np.exp(2.0 * u + _drift(s, d) * t)


@dataclass(frozen=True)
class LatentLaw:
    kind: str  # "gaussian" or "exponential"
    params: tuple  # (mean, sd) or (rate,)

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        if self.kind == "gaussian":
            mu, sd = self.params
            return rng.normal(mu, sd, n)
        (rate,) = self.params
        return rng.exponential(1.0 / rate, n)

    @property
    def mean(self) -> float:
        return self.params[0] if self.kind == "gaussian" else 1.0 / self.params[0]


@dataclass(frozen=True)
class DgmSpec:
    """A synthetic mechanism.

    ``production[(s, d, t)]`` maps latent draws to untreated outcomes;
    ``treated`` is the observed-outcome law of (s1, d1, t1).
    ``mle_families`` names the correctly specified family per cell for
    the MLE estimator variants (cells not listed are gaussian).
    """

    name: str
    latent: dict
    production: dict
    treated: LatentLaw
    true_tau: float
    mle_families: dict = field(default_factory=dict)

    def h(self, cell: Cell, u):
        return self.production[cell](cell.s, cell.d, u, cell.t)

    def counterfactual_mean_mc(self, draws: int = 10**7, seed: int = 0) -> float:
        rng = np.random.default_rng(seed)
        u = self.latent[(1, 1)].sample(rng, draws)
        return float(np.mean(self.h(TARGET_CELL, u)))

    def true_tau_mc(self, draws: int = 10**7, seed: int = 0) -> float:
        """Monte Carlo cross-check of :attr:`true_tau`."""
        return self.treated.mean - self.counterfactual_mean_mc(draws, seed)


def _linear_production():
    return {c: linear_h for c in ALL_CELLS}


def dgm_linear() -> DgmSpec:
    nu = {(0, 0): 0.0, (0, 1): 0.25, (1, 0): -0.25, (1, 1): 0.5}
    latent = {k: LatentLaw("gaussian", (v, 1.0)) for k, v in nu.items()}
    treated = LatentLaw("gaussian", (2.75, 1.0))
    tau = treated.mean - (2.0 * nu[(1, 1)] + _drift(1, 1))
    return DgmSpec("linear", latent, _linear_production(), treated, tau)


def dgm_nonlinear() -> DgmSpec:
    """Linear mechanism with exponential production in (s0,d1,t1) and (s1,d1,t1).

    The untreated (s1,d1,t1) outcome is ``0.1 exp(2U + 3/4)`` with
    ``U ~ N(-0.5, 1.25^2)``, so its mean follows from the lognormal moment
    ``E exp(2U) = exp(2 mu + 2 sigma^2)``.
    """
    params = {(0, 0): (0.0, 1.0), (0, 1): (0.25, 1.0), (1, 0): (-0.25, 1.0), (1, 1): (-0.5, 1.25)}
    latent = {k: LatentLaw("gaussian", v) for k, v in params.items()}
    production = _linear_production()
    production[Cell(0, 1, 1)] = _exp_h
    production[Cell(1, 1, 1)] = _exp_h
    treated = LatentLaw("gaussian", (10.0, 1.0))
    mu, sd = params[(1, 1)]
    cf_mean = 0.1 * math.exp(_drift(1, 1) + 2 * mu + 2 * sd**2)
    return DgmSpec(
        "nonlinear",
        latent,
        production,
        treated,
        treated.mean - cf_mean,
        mle_families={Cell(0, 1, 1): "loglinear"},
    )


def dgm_exponential_misspec() -> DgmSpec:
    rates = {(0, 0): 1.0, (0, 1): 2.0, (1, 0): 3.0, (1, 1): 1.0}
    latent = {k: LatentLaw("exponential", (v,)) for k, v in rates.items()}
    treated = LatentLaw("exponential", (4.0 / 15.0,))
    tau = treated.mean - (2.0 / rates[(1, 1)] + _drift(1, 1))
    return DgmSpec("exponential_misspec", latent, _linear_production(), treated, tau)


SPECS: dict[str, Callable[[], DgmSpec]] = {
    "linear": dgm_linear,
    "nonlinear": dgm_nonlinear,
    "exponential_misspec": dgm_exponential_misspec,
    "exponential": dgm_exponential_misspec,
}


def get_spec(name) -> DgmSpec:
    if isinstance(name, DgmSpec):
        return name
    try:
        return SPECS[name]()
    except KeyError:
        raise InputError(f"unknown spec {name!r}; choose from {sorted(SPECS)}") from None


def cell_rng(seed: int, replication, cell: Cell) -> np.random.Generator:
    key = tuple(replication) if isinstance(replication, tuple) else (int(replication),)
    index = ALL_CELLS.index(cell)
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(*key, index)))


def generate(spec: DgmSpec, n_per_cell: int, seed: int = 0, replication=0) -> tuple[CellTable, float]:
    """Draw one eight-cell table.

    Deterministic in ``(seed, replication)``; ``replication`` is an int or
    a tuple of ints naming an independent stream.
    """
    if n_per_cell < 2:
        raise InputError(f"n_per_cell must be at least 2, got {n_per_cell}")
    cells = {}
    for cell in ALL_CELLS:
        rng = cell_rng(seed, replication, cell)
        if cell == TARGET_CELL:
            cells[cell] = spec.treated.sample(rng, n_per_cell)
        else:
            u = spec.latent[(cell.s, cell.d)].sample(rng, n_per_cell)
            cells[cell] = spec.h(cell, u)
    return CellTable(cells), spec.true_tau


def _resolve_estimator(est, spec: DgmSpec):
    """Return ``(label, fn(table) -> tau_hat)``."""
    if callable(est) and not isinstance(est, (str, EstimatorKind)):
        label = getattr(est, "__name__", "custom")
        return label, est
    kind = est if isinstance(est, EstimatorKind) else None
    if kind is None:
        tag = str(est).upper().replace("-", "_")
        if tag in MLE_TAGS:
            kind = EstimatorKind(tag, spec.mle_families or "gaussian")
        else:
            kind = EstimatorKind(tag)
    return kind.tag, lambda table: estimate(table, kind).tau_hat


def default_workers(n_jobs: int | None = None) -> int:
    """Worker count.

    ``n_jobs=None`` means "whatever ``TRIPLEX_THREADS`` allows" (1 when
    unset); an explicit ``n_jobs`` is still capped by the variable.
    """
    cap = os.environ.get("TRIPLEX_THREADS")
    if cap:
        try:
            cap = max(1, int(cap))
        except ValueError:
            raise InputError(f"TRIPLEX_THREADS must be an integer, got {cap!r}") from None
    if n_jobs is None:
        return cap or 1
    return max(1, min(n_jobs, cap) if cap else n_jobs)


@dataclass
class SimRow:
    spec: str
    estimator: str
    n: int
    reps: int
    mean_rel_bias: float
    sd: float


@dataclass
class SimReport:
    rows: list[SimRow]
    seed: int
    # (spec, estimator, n) -> array of tau_hat, in replication order
    estimates: dict = field(default_factory=dict, repr=False)

    COLUMNS = ("spec", "estimator", "n", "reps", "mean_rel_bias", "sd")

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.COLUMNS)
        for row in self.rows:
            writer.writerow([row.spec, row.estimator, row.n, row.reps, repr(row.mean_rel_bias), repr(row.sd)])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text

    def to_json(self, path=None) -> str:
        payload = {"schema_version": 1, "seed": self.seed, "rows": [asdict(r) for r in self.rows]}
        text = json.dumps(payload, indent=2)
        if path is not None:
            Path(path).write_text(text)
        return text

    def row(self, spec: str, estimator: str, n: int) -> SimRow:
        for r in self.rows:
            if r.spec == spec and r.estimator == estimator and r.n == n:
                return r
        raise KeyError((spec, estimator, n))


def relative_bias_experiment(
    specs: Sequence,
    estimators: Sequence,
    n_grid: Sequence[int],
    reps: int,
    seed: int = 0,
    n_jobs: int | None = None,
) -> SimReport:
    """Mean and sd of ``|1 - tau_hat / tau|`` over ``reps`` fresh tables.

    All estimators see the same table in a given replication. Rows are
    ordered by spec, then estimator, then n.
    """
    specs = [get_spec(s) for s in specs]
    n_grid = [int(n) for n in n_grid]
    for spec in specs:
        if spec.true_tau == 0:
            raise ZeroTrueTau(f"spec {spec.name} has true_tau = 0; relative bias is undefined")
    workers = default_workers(n_jobs)
    rows, store = [], {}
    for spec_index, spec in enumerate(specs):
        resolved = [_resolve_estimator(e, spec) for e in estimators]
        results = {(label, n): np.empty(reps) for label, _ in resolved for n in n_grid}

        def run(job):
            n, rep = job
            table, _ = generate(spec, n, seed, replication=(spec_index, n_grid.index(n), rep))
            return job, [fn(table) for _, fn in resolved]

        jobs = [(n, rep) for n in n_grid for rep in range(reps)]
        if workers > 1:
            with ThreadPoolExecutor(workers) as pool:
                outputs = list(pool.map(run, jobs))
        else:
            outputs = [run(job) for job in jobs]
        for (n, rep), taus in outputs:
            for (label, _), tau_hat in zip(resolved, taus):
                results[(label, n)][rep] = tau_hat
        for label, _ in resolved:
            for n in n_grid:
                taus = results[(label, n)]
                rel = np.abs(1.0 - taus / spec.true_tau)
                rows.append(SimRow(spec.name, label, int(n), int(reps), float(np.mean(rel)), float(np.std(rel))))
                store[(spec.name, label, int(n))] = taus
    return SimReport(rows, seed, store)


__all__ = [
    "DgmSpec",
    "LatentLaw",
    "SimReport",
    "SimRow",
    "dgm_exponential_misspec",
    "dgm_linear",
    "dgm_nonlinear",
    "generate",
    "get_spec",
    "relative_bias_experiment",
]
