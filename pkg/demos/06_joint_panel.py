"""Joint law of the untreated and treated outcome from a linked panel.

When individuals are observed in both periods the joint CDF of
(Y^0(t1), Y^1(t1)) is identified. Here the effect grows with the latent
type, so the joint puts more mass on large gains for high Y^0.
"""

import numpy as np

from triplex import Cell, CellTable, PanelPairs, joint_counterfactual_grid, triple_changes_counterfactual_cdf

rng = np.random.default_rng(6)
n = 2000
cells = {}
for s in (0, 1):
    for d in (0, 1):
        u = rng.normal(0.2 * d, 1.0, n)
        cells[Cell(s, d, 0)] = 2 * u
        cells[Cell(s, d, 1)] = 2 * u + 0.5 + 0.25 * s + 0.5 * d
y0 = cells[Cell(1, 1, 0)]
y1 = y0 + 1.25 + 0.5 * np.maximum(y0, 0)  # treated outcome with heterogeneous gains
cells[Cell(1, 1, 1)] = y1
table = CellTable(cells)

joint = joint_counterfactual_grid(
    PanelPairs(y0, y1),
    lambda y: triple_changes_counterfactual_cdf(table, y),
    np.linspace(-2, 4, 4),
    np.linspace(0, 6, 4),
)
np.set_printoptions(precision=3, suppress=True)
print("rows: y0 in -2..4, columns: y1 in 0..6")
print(joint)
