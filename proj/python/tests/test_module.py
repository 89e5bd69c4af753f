import math

import numpy as np
import pytest

import becmf

from conftest import CONFIGS


def test_linear_spectrum():
    x = becmf.node_coordinates(8.0, 256)
    values, vecs = becmf.lowest_eigenpairs(1, 8.0, 256, x**2, 4)
    # second-order differences at h = 1/16 sit about 1e-4 (2k+1)^2 low
    assert np.allclose(values, [1, 3, 5, 7], rtol=1e-3, atol=0)
    h = x[1] - x[0]
    assert np.allclose(vecs.T @ vecs * h, np.eye(4), atol=1e-10)


def test_h_minus_one_cosine():
    fourier, quad = becmf.h_minus_one_norm_sq({"g0": 0.1, "modes": [{"l": [1], "re": 0.25, "im": 0.0}]})
    assert fourier == pytest.approx(0.25 / (8 * math.pi**2), rel=1e-14)
    assert abs(fourier - quad) < 1e-10


def test_thermo_constraint_and_occupations():
    beta, N, mu, mu_j = 0.7, 50.0, 1.0, [2.0, 2.5, 4.0]
    s = becmf.solve_thermo(beta, N, mu, mu_j)
    assert abs(N * s["xi"] + sum(s["n_j"]) - N) < 1e-10
    z = math.exp(s["log_z"])
    for m, n in zip(mu_j, s["n_j"]):
        assert n == pytest.approx(1.0 / (math.exp(beta * m) / z - 1.0), rel=1e-12)
        assert n == pytest.approx(becmf.occupation(z, beta, m), rel=1e-14)


def test_stationary_defaults_converge():
    r = becmf.stationary({"thermo": {"beta": 1.0, "N": 100.0, "J": 4}})
    assert 0.0 < r["xi"] <= 1.0
    assert abs(r["residuals"]["constraint"]) < 1e-10
    assert r["residuals"]["b_consistency"] <= 10 * 1e-9
    assert len(r["fields"]["phi_j"]) == 4


def test_desk_config_from_file():
    cfg = becmf.normalize_config(str(CONFIGS / "desk.json"))
    assert cfg["microstructure"]["modes"][0]["re"] == 0.25
    assert cfg["thermo"]["J"] == 8


def test_config_error_names_key():
    with pytest.raises(becmf.ConfigError) as info:
        becmf.stationary({"scf": {"tol_eigen": "tight"}})
    assert info.value.args[1] == "scf.tol_eigen"


def test_module_error_kind():
    with pytest.raises(becmf.BecError) as info:
        becmf.full_eps({}, 0.5)
    assert info.value.args[1] == "under_resolution"


def test_short_evolution_conserves_norm():
    summary, csv = becmf.evolve({"thermo": {"beta": 1.0, "N": 100.0, "J": 2}}, t_final=0.05, dt=0.005)
    assert summary["steps"] == 10
    assert summary["norm_drift"] < 1e-12
    assert csv.splitlines()[0].startswith("t,norm_sq,max_orthogonality,zeta,theta,norm_1,norm_2")


def test_expansion_orders():
    e = becmf.expand({"thermo": {"beta": 1.0, "N": 100.0, "J": 2}}, order=2)
    assert [s["order"] for s in e["slices"]] == [0, 1, 2]
    assert e["order1"]["residual_condensate"] < 1e-10
    assert e["order2"]["b_crosscheck"] < 1e-6
