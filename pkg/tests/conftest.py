"""Shared fixtures."""

from pathlib import Path

import pytest

from triplex import ALL_CELLS, Cell, CellTable

from oracles import HAND_CELLS


@pytest.fixture
def hand_cells():
    return dict(HAND_CELLS)


@pytest.fixture
def hand_table():
    return CellTable(HAND_CELLS)


@pytest.fixture(scope="session")
def linear_fixture_path():
    return Path(__file__).parent / "data" / "linear_seed7_n5000.csv"


@pytest.fixture
def shifted_target_table():
    """[1,2,3] in seven cells and [2,3,4] in (s1,d1,t1)."""
    cells = {c: [1.0, 2.0, 3.0] for c in ALL_CELLS}
    cells[Cell(1, 1, 1)] = [2.0, 3.0, 4.0]
    return CellTable(cells)
