"""All-pairs chain architecture: the mean-distance constant and the
expected pairwise distance sum."""

from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qkdplan.chain import ChainScenario, chain_optimal_spacing
from qkdplan.linkmodel import CostParams, LinkModel
from qkdplan.planar import (
    PlanarScenario,
    delta_analytic,
    delta_monte_carlo,
    gamma_constant,
    planar_chain_total_cost,
)

# ---------------------------------------------------------------------------
# gamma: mean distance between two uniform points in the unit square


def test_gamma_closed_form_value():
    assert gamma_constant() == pytest.approx(0.5214, abs=1e-4)
    expect = math.log(1.0 + math.sqrt(2.0)) / 3.0 + (2.0 + math.sqrt(2.0)) / 15.0
    assert gamma_constant() == expect


def test_gamma_against_quadrature_oracle():
    # independent oracle: coordinate differences |dx|, |dy| are independent with
    # density 2(1-u), so gamma = int int sqrt(u^2+v^2) 4(1-u)(1-v) du dv;
    # midpoint rule on a 4000^2 grid is accurate to ~1e-8
    n = 4000
    u = (np.arange(n) + 0.5) / n
    w = 2.0 * (1.0 - u) / n
    dist = np.sqrt(u[:, None] ** 2 + u[None, :] ** 2)
    est = float(w @ dist @ w)
    assert gamma_constant() == pytest.approx(est, rel=5e-7)


# ---------------------------------------------------------------------------
# expected ordered-pair distance sum


def test_delta_analytic_formula():
    sc = PlanarScenario(length_l=10.0, alpha_u=1.0, volume_v=1.0)
    assert delta_analytic(sc) == pytest.approx(gamma_constant() * 1e5, rel=1e-14)


@settings(max_examples=30, deadline=None)
@given(
    length=st.floats(min_value=1.0, max_value=100.0),
    alpha=st.floats(min_value=0.1, max_value=10.0),
    c=st.floats(min_value=0.1, max_value=10.0),
)
def test_delta_homogeneity(length, alpha, c):
    # delta(cL, c alpha_u) = c delta(L, alpha_u): it is a length scale
    base = delta_analytic(PlanarScenario(length_l=length, alpha_u=alpha, volume_v=1.0))
    scaled = delta_analytic(PlanarScenario(length_l=c * length, alpha_u=c * alpha, volume_v=1.0))
    assert scaled == pytest.approx(c * base, rel=1e-11)


def test_mean_users():
    sc = PlanarScenario(length_l=10.0, alpha_u=2.0, volume_v=1.0)
    assert sc.mean_users == 25.0


def test_scenario_validation():
    with pytest.raises(ValueError):
        PlanarScenario(length_l=0.0, alpha_u=1.0, volume_v=1.0)
    with pytest.raises(ValueError):
        PlanarScenario(length_l=1.0, alpha_u=-1.0, volume_v=1.0)
    with pytest.raises(ValueError):
        PlanarScenario(length_l=1.0, alpha_u=1.0, volume_v=0.0)


def test_delta_monte_carlo_agrees_with_analytic():
    sc = PlanarScenario(length_l=10.0, alpha_u=1.0, volume_v=1.0)
    est = delta_monte_carlo(sc, replicas=500, seed=7)
    assert est.replicas == 500
    assert est.std_error > 0.0
    assert est.within(delta_analytic(sc), n_sigma=3.0)


def test_delta_monte_carlo_deterministic():
    sc = PlanarScenario(length_l=5.0, alpha_u=1.0, volume_v=1.0)
    a = delta_monte_carlo(sc, replicas=50, seed=3)
    b = delta_monte_carlo(sc, replicas=50, seed=3)
    c = delta_monte_carlo(sc, replicas=50, seed=4)
    assert a == b
    assert a.estimate != c.estimate


def test_delta_monte_carlo_validation():
    sc = PlanarScenario(length_l=5.0, alpha_u=1.0, volume_v=1.0)
    with pytest.raises(ValueError):
        delta_monte_carlo(sc, replicas=1, seed=0)


# ---------------------------------------------------------------------------
# total cost of the all-pairs chain layout


def test_planar_chain_total_cost_by_hand(exp_model):
    costs = CostParams(c_qkd=2.0, c_node=3.0)
    sc = PlanarScenario(length_l=10.0, alpha_u=1.0, volume_v=4.0)
    ell = 2.0
    per_km = (4.0 * 2.0 * math.exp(2.0) + 3.0) / 2.0
    assert planar_chain_total_cost(exp_model, costs, sc, ell) == pytest.approx(
        per_km * delta_analytic(sc), rel=1e-13
    )
    with pytest.raises(ValueError):
        planar_chain_total_cost(exp_model, costs, sc, -1.0)


def test_planar_optimum_matches_two_user_chain(telecom_model, node_costs):
    # delta factors out, so the grid argmin of the planar cost sits at the
    # two-user chain optimal spacing
    sc = PlanarScenario(length_l=100.0, alpha_u=10.0, volume_v=1.0)
    single = ChainScenario(length_l=sc.length_l, volume_v=sc.volume_v)
    ell_opt, _ = chain_optimal_spacing(telecom_model, node_costs, single)
    grid = np.linspace(0.5 * ell_opt, 2.0 * ell_opt, 4001)
    vals = [planar_chain_total_cost(telecom_model, node_costs, sc, float(l)) for l in grid]
    assert grid[int(np.argmin(vals))] == pytest.approx(ell_opt, rel=1e-3)
