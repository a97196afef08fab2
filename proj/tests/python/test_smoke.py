import math

import numpy as np
import pytest

import polyhom


def test_version():
    assert polyhom.__version__


def test_inverse_langevin_round_trip():
    xs = np.linspace(-0.99, 0.99, 101)
    thetas = polyhom.inverse_langevin(xs)
    assert np.max(np.abs(polyhom.langevin(thetas) - xs)) < 1e-12
    with pytest.raises(polyhom.OutOfRange):
        polyhom.inverse_langevin(1.0)


def test_kuhn_grun_values():
    assert polyhom.kuhn_grun(0.0) == 0.0
    t = 0.2
    s = t * t
    expected = s * (1.5 + s * (0.45 + s * (9 / 350 + s * (81 / 7000 + s * 243 / 673750))))
    assert abs(polyhom.kuhn_grun(t, "p10") - expected) < 1e-15


def test_lattice_fixture_and_hamiltonian():
    g = polyhom.lattice_fixture([6, 6], interaction_range=2.0)
    assert g.positions.shape == (36, 2)
    assert g.fixture_only
    lo, hi = g.window
    lam = np.array([[1.2, 0.1], [0.0, 0.9]])
    values = g.positions @ lam.T
    pair = {"kind": "quadratic", "A": [[1.0, 0.0], [0.0, 1.0]]}
    h = polyhom.hamiltonian(g, lo, hi, values, pair, clamp_width=1.5)
    direct = 0.0
    for a, b in g.edges:
        xi = values[a] - values[b]
        direct += float(xi @ xi)
    assert math.isclose(h, direct, rel_tol=1e-12)


def test_generated_graph_validates():
    params = {
        "dimension": 2,
        "jitter": 0.2,
        "hardcore_radius": 0.5,
        "covering_radius": 1.0,
        "interaction_range": 7.0,
        "seed": 3,
    }
    g = polyhom.generate_graph(params, window_side=28.0)
    report = polyhom.validate_graph(g)
    assert report["pass"]
    assert report["separation"]["witness"] >= 0.5


def test_minimize_and_gaussian_free_energy():
    g = polyhom.lattice_fixture([8, 8], interaction_range=2.0)
    lam = np.array([[1.2, 0.0], [0.1, 0.9]])
    pair = {"kind": "quadratic", "A": [[1.0, 0.0], [0.0, 1.0]]}
    res = polyhom.minimize_cell(g, lam, pair, clamp_width=1.5, restarts=2)
    assert res["converged"]
    fe = polyhom.gaussian_free_energy(g, lam, pair, beta=2.0, clamp_width=1.5)
    # phantom identity at finite size: value(lam) - value(0) = min-energy gap
    fe0 = polyhom.gaussian_free_energy(g, np.zeros((2, 2)), pair, beta=2.0, clamp_width=1.5)
    lhs = fe["value"] - fe0["value"]
    rhs = fe["min_energy_density"] - fe0["min_energy_density"]
    assert abs(lhs - rhs) <= 1e-10 * max(1.0, abs(lhs))
    # the minimization agrees with the direct sparse solve
    assert math.isclose(res["density"], fe["min_energy_density"], rel_tol=1e-8)


def test_free_energy_ti_close_to_exact():
    g = polyhom.lattice_fixture([6, 6], interaction_range=2.0)
    lam = np.eye(2) * 1.1
    pair = {"kind": "quadratic", "A": [[2.0, 0.0], [0.0, 2.0]]}
    exact = polyhom.gaussian_free_energy(g, lam, pair, beta=1.0, clamp_width=1.5)
    ti = polyhom.free_energy_ti(g, lam, pair, beta=1.0, clamp_width=1.5, sweeps=6000, seed=4)
    assert abs(ti["value"] - exact["value"]) <= 3 * ti["stderr"] + 1e-6


def test_fit_scaling():
    xs = [math.e, 10.0, 100.0, 1000.0]
    ys = [2.0 * math.log(x) / x for x in xs]
    fit = polyhom.fit_scaling(xs, ys, model="power-log")
    assert abs(fit["a"] - 2.0) < 1e-12


def test_run_study_phantom(tmp_path):
    config = {
        "kind": "phantom",
        "lattice_fixture": True,
        "graph": {"dimension": 2},
        "clamp_width": 1.5,
        "pair": {"kind": "quadratic", "A": [[1.0, 0.0], [0.0, 1.0]]},
        "lambdas": [[[1.0, 0.0], [0.0, 1.0]], [[1.3, 0.0], [0.0, 0.8]]],
        "windows": [8.0],
        "budgets": {"beta": 1.0},
        "output": str(tmp_path / "phantom"),
    }
    out = polyhom.run_study(config)
    assert out["verdict"]
    assert "point_id" in out["csv"]
