"""Exact empirical distribution machinery.

Step CDFs, generalized quantiles and compositions of the two over the
cells of a ``(state, group, time)`` design. Nothing here interpolates:
every map is a pure step function, so all results are exact up to the
single floating division ``count / n``.

Quantile convention
-------------------
``F^{-1}(u) = inf{y : F(y) >= u}`` is unbounded below at ``u = 0``. We clamp
``u`` to ``[1/n, 1]`` first, so ``u <= 1/n`` returns the smallest sample and
outputs always stay inside the empirical support. Arguments within
``PROB_TOL`` outside ``[0, 1]`` (floating noise) are clamped as well; anything
further out raises :class:`InvalidProbability`.
"""

from __future__ import annotations

import math
import re
from collections.abc import Mapping, Sequence
from typing import NamedTuple

import numpy as np

from .errors import ChainTypeError, EmptyCell, InvalidProbability, InputError, MissingCell

PROB_TOL = 1e-9

CDF = "cdf"
QUANTILE = "quantile"


class Cell(NamedTuple):
    """Index of one of the eight observed cells."""

    s: int
    d: int
    t: int

    def __str__(self):
        return f"s{self.s}d{self.d}t{self.t}"


ALL_CELLS = tuple(Cell(s, d, t) for s in (0, 1) for d in (0, 1) for t in (0, 1))
TARGET_CELL = Cell(1, 1, 1)

_CELL_RE = re.compile(r"^s([01])d([01])t([01])$")


def as_cell(key) -> Cell:
    """Coerce ``"s1d0t1"``, ``(1, 0, 1)`` or a :class:`Cell` to a :class:`Cell`."""
    if isinstance(key, Cell):
        return key
    if isinstance(key, str):
        m = _CELL_RE.match(key.strip())
        if m is None:
            raise InputError(f"cannot parse cell id {key!r}; expected e.g. 's1d0t1'")
        return Cell(*(int(g) for g in m.groups()))
    try:
        s, d, t = key
    except (TypeError, ValueError):
        raise InputError(f"cannot interpret {key!r} as a cell id") from None
    if {s, d, t} - {0, 1}:
        raise InputError(f"cell codes must be 0 or 1, got {key!r}")
    return Cell(int(s), int(d), int(t))


class EmpiricalCdf:
    """Sorted sample of one cell with its step CDF and generalized quantile.

    Parameters
    ----------
    values : array_like
        Outcome samples; sorted on construction. May be empty, in which
        case any evaluation raises :class:`EmptyCell`.
    cell : Cell, optional
        Which cell the samples belong to (used in error messages).
    """

    __slots__ = ("values", "cell")

    def __init__(self, values, cell=None):
        arr = np.array(values, dtype=float).ravel()
        if not np.all(np.isfinite(arr)):
            raise InputError(f"cell {cell}: samples must be finite")
        arr.sort(kind="stable")
        arr.setflags(write=False)
        self.values = arr
        self.cell = None if cell is None else as_cell(cell)

    @property
    def n(self) -> int:
        return self.values.size

    @property
    def support(self) -> tuple[float, float]:
        self._check_nonempty()
        return float(self.values[0]), float(self.values[-1])

    def _check_nonempty(self):
        if self.values.size == 0:
            raise EmptyCell(self.cell)

    def cdf(self, y):
        return cdf_eval(self, y)

    def quantile(self, u):
        return quantile_eval(self, u)

    def scaled(self, factor: float, shift: float = 0.0) -> "EmpiricalCdf":
        return EmpiricalCdf(self.values * factor + shift, self.cell)

    def __len__(self):
        return self.values.size

    def __repr__(self):
        return f"EmpiricalCdf(cell={self.cell}, n={self.n})"


def cdf_eval(cdf: EmpiricalCdf, y):
    """``#{i : values_i <= y} / n``; vectorized over ``y``."""
    cdf._check_nonempty()
    counts = np.searchsorted(cdf.values, y, side="right")
    out = counts / cdf.values.size
    return float(out) if np.ndim(out) == 0 else out


def _quantile_index(n: int, u):
    """1-based order statistic index ``k`` = smallest k with ``k/n >= u``."""
    if np.ndim(u) == 0:
        return _quantile_index_scalar(n, float(u))
    u = np.asarray(u, dtype=float)
    bad = np.isnan(u) | (u < -PROB_TOL) | (u > 1 + PROB_TOL)
    if np.any(bad):
        raise InvalidProbability(u[bad].ravel()[0] if u.ndim else float(u))
    k = np.clip(np.ceil(u * n), 1, n).astype(np.int64)
    # ceil(u * n) can be off by one under rounding; settle it on the same
    # k / n comparison the definition uses.
    for _ in range(2):
        lower = (k > 1) & ((k - 1) / n >= u)
        k = np.where(lower, k - 1, k)
        upper = (k < n) & (k / n < u)
        k = np.where(upper, k + 1, k)
    return k


def _quantile_index_scalar(n: int, u: float) -> int:
    # same comparisons as the array path, without numpy call overhead
    if math.isnan(u) or u < -PROB_TOL or u > 1 + PROB_TOL:
        raise InvalidProbability(u)
    k = min(max(math.ceil(u * n), 1), n)
    for _ in range(2):
        if k > 1 and (k - 1) / n >= u:
            k -= 1
        if k < n and k / n < u:
            k += 1
    return k


def quantile_eval(cdf: EmpiricalCdf, u):
    """Generalized inverse ``inf{y : F(y) >= u}`` with the ``[1/n, 1]`` clamp."""
    cdf._check_nonempty()
    k = _quantile_index(cdf.values.size, u)
    out = cdf.values[k - 1]
    return float(out) if np.ndim(out) == 0 else out


class Link(NamedTuple):
    direction: str
    cell: Cell

    def __str__(self):
        return f"{'F' if self.direction == CDF else 'Q'}[{self.cell}]"


class ChainSpec:
    """An ordered composition of CDF / quantile links.

    ``links`` are written left to right as in ``F^{-1}_a o F_b``; evaluation
    applies them right to left. A well-typed chain alternates direction and
    its rightmost link is a CDF (it consumes an outcome value).
    """

    __slots__ = ("links",)

    def __init__(self, links: Sequence):
        parsed = []
        for link in links:
            direction, cell = link
            if direction not in (CDF, QUANTILE):
                raise ChainTypeError(f"unknown link direction {direction!r}")
            parsed.append(Link(direction, as_cell(cell)))
        if not parsed:
            raise ChainTypeError("a chain needs at least one link")
        if parsed[-1].direction != CDF:
            raise ChainTypeError("the rightmost link must be a cdf (it consumes an outcome value)")
        for left, right in zip(parsed, parsed[1:]):
            if left.direction == right.direction:
                raise ChainTypeError(
                    f"links {left} and {right} do not type-check: "
                    "a quantile consumes a probability, a cdf produces one"
                )
        self.links = tuple(parsed)

    @classmethod
    def from_string(cls, text: str) -> "ChainSpec":
        """Parse ``"Q:s0d1t1 F:s0d1t0"`` style descriptions."""
        links = []
        for token in text.split():
            kind, _, cell = token.partition(":")
            links.append((QUANTILE if kind.upper() == "Q" else CDF, cell))
        return cls(links)

    @property
    def output(self) -> str:
        return "outcome" if self.links[0].direction == QUANTILE else "probability"

    @property
    def cells(self) -> tuple[Cell, ...]:
        return tuple(link.cell for link in self.links)

    def __len__(self):
        return len(self.links)

    def __eq__(self, other):
        return isinstance(other, ChainSpec) and self.links == other.links

    def __hash__(self):
        return hash(self.links)

    def __repr__(self):
        return "ChainSpec(" + " o ".join(str(link) for link in self.links) + ")"


def _lookup(table: Mapping, cell: Cell) -> EmpiricalCdf:
    try:
        return table[cell]
    except KeyError:
        raise MissingCell(cell) from None


def compose_chain(chain: ChainSpec, table: Mapping, y):
    """Apply ``chain`` to ``y`` right to left using the cells of ``table``.

    Errors raised by a link carry the link's position (0 = leftmost) in
    their ``link_index`` attribute.
    """
    value = y
    for index in range(len(chain.links) - 1, -1, -1):
        link = chain.links[index]
        dist = _lookup(table, link.cell)
        try:
            if link.direction == CDF:
                value = cdf_eval(dist, value)
            else:
                value = quantile_eval(dist, value)
        except (EmptyCell, InvalidProbability) as exc:
            exc.link_index = index
            raise
    return value
