"""Distributional treatment effects from triple-changes designs.

The untreated counterfactual distribution of a treated group is identified
by chaining empirical CDFs and quantile functions across two states, two
groups and two periods. The package provides the identification maps,
ATT estimators and classical baselines, partial-identification bounds,
plug-in and bootstrap inference, an optimal-transport extension for
multivariate outcomes and a simulation harness.
"""

from .cells import IDENTIFICATION_CELLS, CellTable, DataFile, PanelPairs, read_cell_csv
from .empirical import (
    ALL_CELLS,
    TARGET_CELL,
    Cell,
    ChainSpec,
    EmpiricalCdf,
    as_cell,
    cdf_eval,
    compose_chain,
    quantile_eval,
)
from .errors import *  # noqa: F403
from .estimators import (
    AttEstimate,
    EstimatorKind,
    att_cic,
    att_ddd,
    att_did,
    att_triple_changes,
    estimate,
)
from .identification import (
    TRIPLE_CHAIN,
    BoundsResult,
    cic_counterfactual_cdf,
    joint_counterfactual_cdf,
    joint_counterfactual_grid,
    partial_bounds_cic,
    partial_bounds_triple,
    triple_changes_counterfactual_cdf,
)
from .inference import (
    BootstrapReport,
    InfluenceComponents,
    KernelDensity,
    VarianceReport,
    bootstrap_ci,
    influence_components,
    kernel_density_deriv,
    kernel_density_eval,
    plugin_variance,
)
from .parametric import FittedDist, fit_parametric
from .simlab import (
    DgmSpec,
    SimReport,
    dgm_exponential_misspec,
    dgm_linear,
    dgm_nonlinear,
    generate,
    relative_bias_experiment,
)
from .transport import (
    BrenierMapApprox,
    PointCloud,
    TransportPlan,
    barycentric_map,
    brenier_1d,
    exact_assignment_map,
    monotonicity_violations,
    sinkhorn_plan,
    triple_changes_pushforward,
)

__version__ = "0.1.0"
