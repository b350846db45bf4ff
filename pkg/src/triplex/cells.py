"""The eight-cell sample container and its CSV schema."""

from __future__ import annotations

import csv
import io
import math
from collections.abc import Iterable, Mapping
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .empirical import ALL_CELLS, TARGET_CELL, Cell, EmpiricalCdf, as_cell
from .errors import EmptyCell, EmptyPanel, InputError, MissingCell

# Every cell except the counterfactual target (s1, d1, t1).
IDENTIFICATION_CELLS = tuple(c for c in ALL_CELLS if c != TARGET_CELL)


class CellTable(Mapping):
    """Observed samples indexed by :class:`~triplex.empirical.Cell`.

    Any subset of the eight cells may be present; operations check the
    cells they need with :meth:`require`. Present cells must be nonempty.
    """

    def __init__(self, cells: Mapping):
        parsed = {}
        for key, values in cells.items():
            cell = as_cell(key)
            dist = values if isinstance(values, EmpiricalCdf) else EmpiricalCdf(values, cell)
            if dist.cell is None:
                dist = EmpiricalCdf(dist.values, cell)
            if dist.n == 0:
                raise EmptyCell(cell)
            parsed[cell] = dist
        self._cells = {c: parsed[c] for c in ALL_CELLS if c in parsed}

    def __getitem__(self, key) -> EmpiricalCdf:
        cell = as_cell(key)
        try:
            return self._cells[cell]
        except KeyError:
            raise MissingCell(cell) from None

    def __iter__(self):
        return iter(self._cells)

    def __len__(self):
        return len(self._cells)

    def __contains__(self, key):
        try:
            return as_cell(key) in self._cells
        except InputError:
            return False

    def require(self, cells: Iterable = ALL_CELLS) -> None:
        for cell in cells:
            if as_cell(cell) not in self._cells:
                raise MissingCell(as_cell(cell))

    def mean(self, key) -> float:
        return float(np.mean(self[key].values))

    @property
    def counts(self) -> dict[str, int]:
        return {str(c): d.n for c, d in self._cells.items()}

    @property
    def total(self) -> int:
        return sum(d.n for d in self._cells.values())

    def transform(self, fn) -> "CellTable":
        """Apply an elementwise map ``fn`` to every cell's samples."""
        return CellTable({c: fn(d.values) for c, d in self._cells.items()})

    def with_cells(self, cells: Mapping) -> "CellTable":
        merged = dict(self._cells)
        merged.update({as_cell(k): v for k, v in cells.items()})
        return CellTable(merged)

    def without(self, *keys) -> "CellTable":
        drop = {as_cell(k) for k in keys}
        return CellTable({c: d for c, d in self._cells.items() if c not in drop})

    def __eq__(self, other):
        if not isinstance(other, CellTable) or set(self) != set(other):
            return False
        return all(np.array_equal(self[c].values, other[c].values) for c in self)

    def __repr__(self):
        inner = ", ".join(f"{c}: n={d.n}" for c, d in self._cells.items())
        return f"CellTable({inner})"

    def to_csv(self, path=None) -> str:
        """Write the ``s,d,t,y`` long format; returns the text as well."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["s", "d", "t", "y"])
        for cell, dist in self._cells.items():
            for v in dist.values:
                writer.writerow([cell.s, cell.d, cell.t, repr(float(v))])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text


@dataclass(frozen=True)
class PanelPairs:
    """Id-linked ``(Y(t0), Y(t1))`` pairs for the treated cell."""

    y_t0: np.ndarray
    y_t1: np.ndarray

    def __post_init__(self):
        y0 = np.asarray(self.y_t0, dtype=float).ravel()
        y1 = np.asarray(self.y_t1, dtype=float).ravel()
        if y0.size == 0:
            raise EmptyPanel("panel has no pairs")
        if y0.shape != y1.shape:
            raise InputError("panel coordinates must have equal length")
        if not (np.all(np.isfinite(y0)) and np.all(np.isfinite(y1))):
            raise InputError("panel values must be finite")
        object.__setattr__(self, "y_t0", y0)
        object.__setattr__(self, "y_t1", y1)

    @classmethod
    def from_pairs(cls, pairs) -> "PanelPairs":
        arr = np.asarray(list(pairs), dtype=float)
        if arr.size == 0:
            raise EmptyPanel("panel has no pairs")
        return cls(arr[:, 0], arr[:, 1])

    def __len__(self):
        return self.y_t0.size


@dataclass
class DataFile:
    """Parsed ``s,d,t,y[,id]`` file."""

    table: CellTable
    ids: dict | None = None  # cell -> list of id strings, aligned with raw row order
    raw: dict | None = None  # cell -> unsorted values, aligned with ids

    def panel(self, state: int = 1, group: int = 1) -> PanelPairs:
        """Link ``(state, group)`` rows across time by id."""
        if self.ids is None:
            raise EmptyPanel("data file has no id column; the joint estimand needs a linked panel")
        c0, c1 = Cell(state, group, 0), Cell(state, group, 1)
        ids0, ids1 = self.ids.get(c0, []), self.ids.get(c1, [])
        if not any(ids0) or not any(ids1):
            raise EmptyPanel(f"ids are absent for {c0} or {c1}")
        at1 = {}
        for key, v in zip(ids1, self.raw[c1]):
            if key:
                at1[key] = v
        pairs = [(v, at1[key]) for key, v in zip(ids0, self.raw[c0]) if key and key in at1]
        if not pairs:
            raise EmptyPanel(f"no id appears in both {c0} and {c1}")
        return PanelPairs.from_pairs(pairs)


def read_cell_csv(source, required: Iterable = ()) -> DataFile:
    """Parse the ``s,d,t,y[,id]`` schema.

    Every row is validated before anything is returned; the first problem
    aborts with an :class:`InputError` naming the row and column.
    """
    if isinstance(source, Path) or (isinstance(source, str) and "\n" not in source):
        try:
            text = Path(source).read_text()
        except OSError as exc:
            raise InputError(f"cannot read {source}: {exc}") from None
    else:
        text = source if isinstance(source, str) else source.read()
    if not text.strip():
        raise InputError("empty data file; expected header 's,d,t,y[,id]'")
    reader = csv.reader(io.StringIO(text))
    header = [h.strip() for h in next(reader)]
    if header not in (["s", "d", "t", "y"], ["s", "d", "t", "y", "id"]):
        raise InputError(f"row 1: header must be exactly 's,d,t,y' or 's,d,t,y,id', got {','.join(header)!r}")
    has_id = len(header) == 5
    raw: dict[Cell, list[float]] = {}
    ids: dict[Cell, list[str]] = {}
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not field.strip() for field in row):
            continue
        if len(row) != len(header):
            raise InputError(f"row {lineno}: expected {len(header)} columns, got {len(row)}")
        codes = []
        for col, field in zip("sdt", row[:3]):
            field = field.strip()
            if field not in ("0", "1"):
                raise InputError(f"row {lineno}, column {col}: expected 0 or 1, got {field!r}")
            codes.append(int(field))
        try:
            y = float(row[3])
        except ValueError:
            raise InputError(f"row {lineno}, column y: cannot parse {row[3]!r} as a number") from None
        if not math.isfinite(y):
            raise InputError(f"row {lineno}, column y: value must be finite, got {row[3]!r}")
        cell = Cell(*codes)
        raw.setdefault(cell, []).append(y)
        if has_id:
            ids.setdefault(cell, []).append(row[4].strip())
    for cell in required:
        cell = as_cell(cell)
        if cell not in raw:
            raise InputError(f"cell {cell} (s={cell.s}, d={cell.d}, t={cell.t}) has no rows")
    table = CellTable({c: v for c, v in raw.items()})
    return DataFile(
        table=table,
        ids=ids if has_id else None,
        raw={c: np.asarray(v) for c, v in raw.items()},
    )
