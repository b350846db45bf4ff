"""Discrete optimal transport for multivariate outcomes.

The one-dimensional identification chain generalizes to ``R^d`` by
replacing every ``F^{-1}_{t1} o F_{t0}`` with the quadratic-cost (Brenier)
map between the t0 and t1 outcome measures of a group. Here the measures
are uniform point clouds and the maps are estimated either exactly
(linear assignment between equal-size clouds) or by entropic
regularization (log-domain Sinkhorn plus barycentric projection).

Identification additionally assumes the composed maps are co-cyclically
monotone. That cannot be tested from data; :func:`monotonicity_violations`
reports how often a fitted map fails pairwise monotonicity, which for
maps with convex support is equivalent to cyclical monotonicity.
"""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.spatial import cKDTree
from scipy.spatial.distance import cdist
from scipy.special import logsumexp

from .empirical import Cell, EmpiricalCdf, as_cell, cdf_eval, quantile_eval
from .errors import DimensionMismatch, InputError, MissingCell, NumericalUnderflow, SizeMismatch, TriplexError


@dataclass(frozen=True)
class PointCloud:
    """Uniformly weighted points in ``R^d``, stored as an ``(n, d)`` array.

    A 1-d input is read as ``n`` scalar points.
    """

    points: np.ndarray

    def __post_init__(self):
        pts = np.array(getattr(self.points, "points", self.points), dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[0] == 0 or pts.shape[1] == 0:
            raise InputError(f"a point cloud needs shape (n, d) with n, d >= 1, got {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise InputError("point cloud has non-finite coordinates")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def __len__(self):
        return self.n


def _cloud(x) -> PointCloud:
    return x if isinstance(x, PointCloud) else PointCloud(x)


def _check_dims(a: PointCloud, b: PointCloud):
    if a.dim != b.dim:
        raise DimensionMismatch(f"clouds have dimensions {a.dim} and {b.dim}")


def cost_matrix(source, target) -> np.ndarray:
    """Squared-Euclidean cost ``|x_i - y_j|^2``."""
    a, b = _cloud(source), _cloud(target)
    _check_dims(a, b)
    return cdist(a.points, b.points, "sqeuclidean")


@dataclass
class TransportPlan:
    """A coupling between two uniform clouds.

    ``marginal_error`` is the largest absolute deviation of a row or
    column sum from its uniform target. ``objective_history`` records the
    negated entropic dual per iteration, which block-coordinate ascent
    makes nonincreasing.
    """

    coupling: np.ndarray
    converged: bool = True
    n_iter: int = 0
    marginal_error: float = 0.0
    reg: float = 0.0
    objective_history: list = field(default_factory=list, repr=False)

    def cost(self, source, target) -> float:
        return float(np.sum(self.coupling * cost_matrix(source, target)))


def marginal_error(coupling: np.ndarray) -> float:
    n, m = coupling.shape
    rows = np.max(np.abs(coupling.sum(axis=1) - 1.0 / n))
    cols = np.max(np.abs(coupling.sum(axis=0) - 1.0 / m))
    return float(max(rows, cols))


def default_reg(cost: np.ndarray) -> float:
    """``0.05 * median`` of the pairwise costs (falls back to the mean when
    more than half the pairs coincide)."""
    med = float(np.median(cost))
    if med <= 0:
        med = float(np.mean(cost))
    return 0.05 * med if med > 0 else 1.0


def sinkhorn_plan(source, target, reg: float | None = None, max_iter: int = 10000, tol: float = 1e-9) -> TransportPlan:
    """Entropic OT plan for squared-Euclidean cost, iterated in the log domain.

    Parameters
    ----------
    source, target : PointCloud or array_like
    reg : float, optional
        Entropic regularization; defaults to :func:`default_reg`.
    max_iter : int
    tol : float
        Stop once both marginals are within ``tol``.
    """
    a, b = _cloud(source), _cloud(target)
    C = cost_matrix(a, b)
    if reg is None:
        reg = default_reg(C)
    if not reg > 0:
        raise InputError(f"reg must be positive, got {reg}")
    n, m = C.shape
    log_a, log_b = -np.log(n), -np.log(m)
    f = np.zeros(n)
    g = np.zeros(m)
    history = []
    converged = False
    err = np.inf
    it = 0
    for it in range(1, max_iter + 1):
        f = reg * (log_a - logsumexp((g[None, :] - C) / reg, axis=1))
        g = reg * (log_b - logsumexp((f[:, None] - C) / reg, axis=0))
        if not (np.all(np.isfinite(f)) and np.all(np.isfinite(g))):
            raise NumericalUnderflow(f"Sinkhorn potentials diverged at iteration {it} (reg={reg:g})")
        log_p = (f[:, None] + g[None, :] - C) / reg
        P = np.exp(log_p)
        dual = f.mean() + g.mean() - reg * P.sum() + reg
        history.append(-float(dual))
        # Columns are exact after the g-update; rows carry the residual.
        err = float(np.max(np.abs(P.sum(axis=1) - 1.0 / n)))
        if err < tol:
            converged = True
            break
    if not np.any(P > 0):
        raise NumericalUnderflow("Sinkhorn plan underflowed to zero")
    return TransportPlan(P, converged, it, marginal_error(P), float(reg), history)


EXTENSIONS = ("nearest", "displacement", "step")


@dataclass
class BrenierMapApprox:
    """A transport map known at the source points.

    Query points are sent to the image of a source point chosen by
    ``extension``:

    ``"nearest"``
        the nearest source point (ties go to the lowest index);
    ``"displacement"``
        the query plus the nearest source point's displacement
        ``T(x) - x``, which keeps translations exact off the sample;
    ``"step"``
        1-d only: the largest source point at or below the query (the
        smallest source point below the sample range), with ties between
        coincident source points going to the largest image. This is the
        rule implied by composing a step CDF with a generalized quantile,
        so a 1-d map with ``extension="step"`` reproduces the empirical
        CDF chain.
    """

    source: PointCloud
    image: np.ndarray
    permutation: np.ndarray | None = None
    extension: str = "nearest"
    _tree: cKDTree | None = field(default=None, init=False, repr=False)
    _order: np.ndarray | None = field(default=None, init=False, repr=False)

    def __post_init__(self):
        self.image = np.asarray(self.image, dtype=float)
        if self.image.ndim == 1:
            self.image = self.image[:, None]
        if self.image.shape[0] != self.source.n:
            raise SizeMismatch(f"{self.image.shape[0]} images for {self.source.n} source points")
        if self.extension not in EXTENSIONS:
            raise InputError(f"extension must be one of {EXTENSIONS}, got {self.extension!r}")
        if self.extension == "step" and self.source.dim != 1:
            raise DimensionMismatch("the step extension is defined for 1-d sources only")
        if self.extension == "displacement" and self.image.shape[1] != self.source.dim:
            raise DimensionMismatch("the displacement extension needs equal source and image dimensions")

    @property
    def dim(self) -> int:
        return self.image.shape[1]

    def with_extension(self, extension: str) -> "BrenierMapApprox":
        return BrenierMapApprox(self.source, self.image, self.permutation, extension)

    def nearest(self, query) -> np.ndarray:
        """Index of the source point each query is sent to."""
        q = _cloud(query)
        _check_dims(q, self.source)
        if self.extension == "step":
            return self._step_index(q.points[:, 0])
        if self._tree is None:
            self._tree = cKDTree(self.source.points)
        # Ask for a few neighbours so exact ties resolve to the lowest index.
        k = min(self.source.n, 4)
        dist, idx = self._tree.query(q.points, k=k)
        if k == 1:
            return np.asarray(idx).reshape(-1)
        dist, idx = np.atleast_2d(dist), np.atleast_2d(idx)
        tied = dist <= dist[:, :1]
        return np.where(tied, idx, np.iinfo(np.intp).max).min(axis=1)

    def _step_index(self, x: np.ndarray) -> np.ndarray:
        if self._order is None:
            # lexsort keys run last-to-first: by source value, then image.
            self._order = np.lexsort((self.image.sum(axis=1), self.source.points[:, 0]))
        ordered = self.source.points[self._order, 0]
        rank = np.searchsorted(ordered, x, side="right")
        return self._order[np.maximum(rank, 1) - 1]

    def __call__(self, query) -> np.ndarray:
        idx = self.nearest(query)
        if self.extension == "displacement":
            q = _cloud(query).points
            return q + (self.image[idx] - self.source.points[idx])
        return self.image[idx]


def barycentric_map(plan: TransportPlan, source, target) -> BrenierMapApprox:
    """Project a plan to a map: ``T(x_i) = n * sum_j P_ij y_j``."""
    a, b = _cloud(source), _cloud(target)
    mass = plan.coupling.sum(axis=1, keepdims=True)
    return BrenierMapApprox(a, plan.coupling @ b.points / mass)


def exact_assignment_map(source, target) -> BrenierMapApprox:
    """Optimal permutation between equal-size uniform clouds.

    The identity is returned whenever it is itself optimal, so identical
    clouds map onto themselves index by index.
    """
    a, b = _cloud(source), _cloud(target)
    if a.n != b.n:
        raise SizeMismatch(f"exact assignment needs equal sizes, got {a.n} and {b.n}")
    C = cost_matrix(a, b)
    rows, cols = linear_sum_assignment(C)
    best = C[rows, cols].sum()
    identity = np.trace(C)
    if identity <= best + 1e-12 * max(1.0, abs(best)):
        cols = np.arange(a.n)
    return BrenierMapApprox(a, b.points[cols], permutation=cols)


def assignment_cost(source, target, permutation) -> float:
    """Mean squared displacement of a permutation map."""
    C = cost_matrix(source, target)
    return float(C[np.arange(C.shape[0]), permutation].mean())


def brenier_1d(source, target, y):
    """``F^{-1}_target o F_source`` for scalar samples."""
    return quantile_eval(_as_cdf(target), cdf_eval(_as_cdf(source), y))


def _as_cdf(samples) -> EmpiricalCdf:
    return samples if isinstance(samples, EmpiricalCdf) else EmpiricalCdf(samples)


def fit_map(source, target, method: str = "exact", reg: float | None = None, **kwargs) -> BrenierMapApprox:
    if method == "exact":
        return exact_assignment_map(source, target)
    if method == "sinkhorn":
        plan = sinkhorn_plan(source, target, reg, **kwargs)
        return barycentric_map(plan, source, target)
    raise InputError(f"method must be 'exact' or 'sinkhorn', got {method!r}")


PUSHFORWARD_CELLS = tuple(Cell(s, d, t) for s in (0, 1) for d in (0, 1) for t in (0, 1) if (s, d, t) != (1, 1, 1))


def _named(name, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except TriplexError as exc:
        exc.args = (f"{name}: {exc.args[0] if exc.args else exc}",) + exc.args[1:]
        exc.map_name = name
        raise


def triple_changes_pushforward(
    clouds: Mapping, method: str = "exact", reg: float | None = None, extension: str | None = None, **kwargs
) -> PointCloud:
    """Counterfactual t1 cloud of the treated group ``(s1, d1)``.

    Builds ``T_{s1,d0}`` and ``T_{s0,d0}`` from each control group's t0 and
    t1 clouds, pushes the ``(s0, d1, t0)`` cloud through ``T_{s0,d0}``, fits
    ``T*`` from that image to the ``(s0, d1, t1)`` cloud and returns
    ``T*(T_{s1,d0}(x))`` for every ``(s1, d1, t0)`` point ``x``.

    Parameters
    ----------
    clouds : mapping
        Seven clouds keyed by cell (anything :func:`as_cell` accepts).
    method : {"exact", "sinkhorn"}
    reg : float, optional
        Sinkhorn regularization; ignored in exact mode.
    extension : {"nearest", "step"}, optional
        How each fitted map treats points outside its source cloud.
        Defaults to ``"step"`` for 1-d clouds, where it reproduces the
        empirical CDF chain, and ``"displacement"`` otherwise.
    """
    parsed = {as_cell(k): _cloud(v) for k, v in clouds.items()}
    for cell in PUSHFORWARD_CELLS:
        if cell not in parsed:
            raise MissingCell(cell)
    dims = {c.dim for c in parsed.values()}
    if len(dims) > 1:
        raise DimensionMismatch(f"clouds have mixed dimensions {sorted(dims)}")
    if extension is None:
        extension = "step" if dims == {1} else "displacement"
    c = {str(k): v for k, v in parsed.items()}

    def fit(name, source, target):
        return _named(name, fit_map, source, target, method, reg, **kwargs).with_extension(extension)

    t_s1d0 = fit("T_s1d0", c["s1d0t0"], c["s1d0t1"])
    t_s0d0 = fit("T_s0d0", c["s0d0t0"], c["s0d0t1"])
    image = PointCloud(t_s0d0(c["s0d1t0"]))
    t_star = fit("T*", image, c["s0d1t1"])
    return PointCloud(t_star(t_s1d0(c["s1d1t0"])))


@dataclass(frozen=True)
class MonotonicityReport:
    pairs: int
    violations: int

    @property
    def rate(self) -> float:
        return self.violations / self.pairs if self.pairs else 0.0


def monotonicity_violations(tmap: BrenierMapApprox, n_pairs: int = 1000, seed: int = 0, tol: float = 1e-12) -> MonotonicityReport:
    """Count sampled pairs with ``<T(x) - T(x'), x - x'> < 0``.

    Every pair is checked when ``n_pairs`` is at least the number of pairs.
    """
    x = tmap.source.points
    tx = tmap.image
    if tx.shape[1] != x.shape[1]:
        raise DimensionMismatch("monotonicity needs a map from R^d to R^d")
    n = x.shape[0]
    total = n * (n - 1) // 2
    if total == 0:
        return MonotonicityReport(0, 0)
    if n_pairs >= total:
        i, j = np.triu_indices(n, 1)
    else:
        rng = np.random.default_rng(seed)
        i = rng.integers(0, n, n_pairs)
        j = (i + rng.integers(1, n, n_pairs)) % n
    inner = np.einsum("ij,ij->i", tx[i] - tx[j], x[i] - x[j])
    scale = np.einsum("ij,ij->i", x[i] - x[j], x[i] - x[j])
    return MonotonicityReport(int(i.size), int(np.count_nonzero(inner < -tol * np.maximum(scale, 1.0))))
