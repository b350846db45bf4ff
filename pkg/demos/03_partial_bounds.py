"""Bounds on the counterfactual CDF when identification is only approximate.

``eps`` lets the production function break monotonicity on a small mass;
``delta`` lets the latent law drift over time in Kolmogorov distance. With
both at zero the bounds collapse onto the point-identified curve.
"""

import numpy as np

from triplex import dgm_linear, generate, partial_bounds_triple

table, _ = generate(dgm_linear(), 2000, seed=3)
grid = np.linspace(-2, 6, 9)

for eps, delta in [(0.0, 0.0), (0.02, 0.0), (0.02, 0.03), (0.1, 0.1)]:
    b = partial_bounds_triple(table, grid, eps, delta)
    width = np.mean(b.upper - b.lower)
    print(f"eps={eps:<5} delta={delta:<5} mean width {width:.3f}")
    for y, lo, hi in zip(grid[::4], b.lower[::4], b.upper[::4]):
        print(f"    y={y:5.1f}  [{lo:.3f}, {hi:.3f}]")
