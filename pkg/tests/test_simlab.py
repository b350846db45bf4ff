import json
import math

import numpy as np
import pytest

from triplex import Cell, dgm_exponential_misspec, dgm_linear, dgm_nonlinear, generate, relative_bias_experiment
from triplex.errors import InputError, ZeroTrueTau
from triplex.simlab import DgmSpec, LatentLaw, get_spec


def test_linear_parameters():
    spec = dgm_linear()
    assert spec.true_tau == 1.0
    assert spec.latent[(1, 1)].params == (0.5, 1.0)
    assert spec.treated.params == (2.75, 1.0)
    assert spec.h(Cell(0, 0, 0), 0.0) == 0.0
    # E[h_{s1,d0}(U; t1)] with U ~ N(-0.25, 1)
    assert spec.h(Cell(1, 0, 1), -0.25) == -0.25


def test_nonlinear_parameters():
    spec = dgm_nonlinear()
    assert spec.treated.mean == 10.0
    assert spec.latent[(1, 1)].params[1] == 1.25
    assert spec.true_tau == pytest.approx(10 - 0.1 * math.exp(0.75) * math.exp(2 * -0.5 + 2 * 1.25**2), rel=1e-14)


def test_exponential_parameters():
    spec = dgm_exponential_misspec()
    assert spec.latent[(1, 0)].params == (3.0,)
    assert spec.treated.mean == pytest.approx(3.75)
    assert spec.true_tau == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("factory", [dgm_linear, dgm_nonlinear, dgm_exponential_misspec])
def test_true_tau_matches_monte_carlo(factory):
    spec = factory()
    assert spec.true_tau_mc(draws=10**7, seed=1) == pytest.approx(spec.true_tau, abs=0.01)


def test_generate_is_deterministic():
    a, tau = generate(dgm_linear(), 100, seed=3)
    b, _ = generate(dgm_linear(), 100, seed=3)
    assert a == b and tau == 1.0
    c, _ = generate(dgm_linear(), 100, seed=4)
    assert a != c


def test_cell_moments_large_n():
    table, _ = generate(dgm_linear(), 10**6, seed=0)
    # drift (1+s)/4 + (d-1/2)/2 vanishes for (s0, d0)
    assert table.mean("s0d0t1") == pytest.approx(0.0, abs=0.01)
    # within 4 Monte Carlo standard errors for every cell
    spec = dgm_linear()
    for cell in table:
        if cell == Cell(1, 1, 1):
            expected, sd = 2.75, 1.0
        else:
            expected, sd = spec.h(cell, spec.latent[(cell.s, cell.d)].mean), 2.0
        assert abs(table.mean(cell) - expected) < 4 * sd / 1e3


def test_exponential_support():
    table, _ = generate(dgm_exponential_misspec(), 1000, seed=0)
    assert table["s0d0t0"].values.min() >= 0
    assert table["s1d0t0"].values.min() >= 0


def test_generate_validation():
    with pytest.raises(InputError):
        generate(dgm_linear(), 1)
    with pytest.raises(InputError):
        get_spec("quadratic")


def test_exact_estimator_has_zero_bias():
    rep = relative_bias_experiment(["linear"], [lambda t: 1.0], [50, 100], reps=3)
    assert [r.mean_rel_bias for r in rep.rows] == [0.0, 0.0]
    assert all(r.sd == 0.0 for r in rep.rows)


def test_zero_true_tau_rejected():
    spec = dgm_linear()
    zero = DgmSpec("zero", spec.latent, spec.production, LatentLaw("gaussian", (1.75, 1.0)), 0.0)
    with pytest.raises(ZeroTrueTau):
        relative_bias_experiment([zero], ["DDD"], [50], reps=2)


def test_report_shape_order_and_serialization():
    rep = relative_bias_experiment(["linear"], ["did", "ccc-emp"], [40, 80], reps=4, seed=3)
    assert [(r.estimator, r.n) for r in rep.rows] == [("DID", 40), ("DID", 80), ("CCC_EMP", 40), ("CCC_EMP", 80)]
    assert all(r.mean_rel_bias >= 0 for r in rep.rows)
    lines = rep.to_csv().splitlines()
    assert lines[0] == "spec,estimator,n,reps,mean_rel_bias,sd"
    assert len(lines) == 5
    payload = json.loads(rep.to_json())
    assert payload["schema_version"] == 1 and len(payload["rows"]) == 4


def test_threads_do_not_change_results():
    a = relative_bias_experiment(["nonlinear"], ["ddd", "ccc-mle"], [60], reps=6, seed=8, n_jobs=1)
    b = relative_bias_experiment(["nonlinear"], ["ddd", "ccc-mle"], [60], reps=6, seed=8, n_jobs=3)
    assert a.to_csv() == b.to_csv()
    for key in a.estimates:
        assert np.array_equal(a.estimates[key], b.estimates[key])
