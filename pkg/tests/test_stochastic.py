"""Poisson-Voronoi backbone constants: access cost, trunk cost along
Markov paths, and the optimal node spacing."""

from __future__ import annotations

import math

import numpy as np
import pytest

from qkdplan.errors import InfeasibleDistanceError, UnsupportedModelError
from qkdplan.linkmodel import CostParams, LinkModel, per_bit_cost
from qkdplan.planar import PlanarScenario, delta_analytic
from qkdplan.stochastic import (
    StochasticBackboneScenario,
    kappa_bb_closed_form,
    kappa_bb_quadrature,
    kappa_bb_reduced_from_cost,
    kappa_bb_single_integral,
    kappa_bb_triple_from_cost,
    kappa_loc,
    kappa_loc_from_cost,
    optimal_alpha_bb,
    optimal_scale_ratio,
    stochastic_backbone_cost,
    vector_cost,
)

# ---------------------------------------------------------------------------
# vectorized cost


def test_vector_cost_exponential_matches_scalar(exp_model, unit_costs):
    vc = vector_cost(exp_model, unit_costs)
    ells = np.array([0.0, 0.5, 2.0, 7.5])
    expect = [per_bit_cost(exp_model, unit_costs, float(l)) for l in ells]
    assert np.allclose(vc(ells), expect, rtol=1e-14)


def test_vector_cost_bb84_needs_penalty(bb84_model, unit_costs):
    with pytest.raises(InfeasibleDistanceError):
        vector_cost(bb84_model, unit_costs)
    with pytest.raises(ValueError):
        vector_cost(bb84_model, unit_costs, beyond_cutoff_cost=0.0)
    with pytest.raises(ValueError):
        vector_cost(bb84_model, unit_costs, beyond_cutoff_cost=math.inf)


def test_vector_cost_bb84_penalty_caps(bb84_model, unit_costs):
    cut = bb84_model.cutoff_distance()
    vc = vector_cost(bb84_model, unit_costs, beyond_cutoff_cost=50.0)
    vals = vc(np.array([0.5 * cut, 0.9 * cut, 2.0 * cut]))
    assert vals[0] == pytest.approx(per_bit_cost(bb84_model, unit_costs, 0.5 * cut), rel=1e-12)
    # the raw cost at 0.9 cutoff exceeds the 50.0 outside option, so it is capped
    assert per_bit_cost(bb84_model, unit_costs, 0.9 * cut) > 50.0
    assert vals[1] == 50.0
    assert vals[2] == 50.0


# ---------------------------------------------------------------------------
# access constant kappa_loc


def test_kappa_loc_spot_values(exp_model, unit_costs):
    # independent reference values for C(r) = e^r (lambda = 1, c_qkd = R0 = 1)
    for alpha, expect in ((0.5, 2.590688), (1.0, 3.418576), (2.0, 6.330799)):
        assert kappa_loc(exp_model, unit_costs, alpha) == pytest.approx(expect, rel=2e-6)


def test_kappa_loc_against_riemann_oracle(exp_model, unit_costs):
    alpha = 0.7
    u = (np.arange(400_000) + 0.5) * (12.0 / 400_000)
    integrand = np.exp(alpha * u) * u * np.exp(-math.pi * u * u)
    oracle = 4.0 * math.pi * float(integrand.sum()) * (12.0 / 400_000)
    assert kappa_loc(exp_model, unit_costs, alpha) == pytest.approx(oracle, rel=1e-7)


def test_kappa_loc_constant_cost_is_twice_cost():
    # cost independent of distance: kappa_loc = 2 c exactly
    assert kappa_loc_from_cost(lambda r: 5.0, 1.3) == pytest.approx(10.0, rel=1e-10)


def test_kappa_loc_linear_cost_is_alpha():
    # cost(r) = r: the Rayleigh mean distance gives kappa_loc = alpha_bb
    for alpha in (0.5, 1.0, 3.0):
        assert kappa_loc_from_cost(lambda r: r, alpha) == pytest.approx(alpha, rel=1e-10)


def test_kappa_loc_validation(exp_model, unit_costs):
    with pytest.raises(ValueError):
        kappa_loc(exp_model, unit_costs, 0.0)


def test_kappa_loc_bb84_requires_penalty(bb84_model, unit_costs):
    with pytest.raises(InfeasibleDistanceError):
        kappa_loc(bb84_model, unit_costs, bb84_model.lambda_qkd)
    lo = kappa_loc(bb84_model, unit_costs, bb84_model.lambda_qkd, beyond_cutoff_cost=50.0)
    hi = kappa_loc(bb84_model, unit_costs, bb84_model.lambda_qkd, beyond_cutoff_cost=1e4)
    assert math.isfinite(lo) and lo > 0.0
    # a larger outside option can only raise the capped mean cost
    assert lo <= hi


# ---------------------------------------------------------------------------
# trunk constant kappa_bb: all evaluation paths agree


def test_kappa_bb_paths_agree(exp_model, unit_costs):
    from qkdplan.linkmodel import cost_fn

    c = cost_fn(exp_model, unit_costs)
    for alpha in (0.3, 1.0, 2.0):
        closed = kappa_bb_closed_form(exp_model, unit_costs, alpha)
        triple = kappa_bb_triple_from_cost(c, alpha)
        reduced = kappa_bb_reduced_from_cost(c, alpha)
        single = kappa_bb_single_integral(exp_model, unit_costs, alpha)
        assert triple == pytest.approx(closed, rel=1e-8)
        assert reduced == pytest.approx(closed, rel=1e-8)
        assert single == pytest.approx(closed, rel=1e-8)


def test_kappa_bb_closed_form_spot_values(exp_model, unit_costs):
    for alpha, expect in ((0.5, 4.35266636), (1.0, 4.03031176), (2.0, 9.23088295)):
        assert kappa_bb_closed_form(exp_model, unit_costs, alpha) == pytest.approx(
            expect, rel=1e-8
        )


def test_kappa_bb_constant_cost():
    # distance-free cost c: kappa_bb = 4 c / (pi alpha_bb) exactly
    for alpha in (0.5, 2.0):
        expect = 4.0 * 3.0 / (math.pi * alpha)
        assert kappa_bb_triple_from_cost(lambda d: 3.0 + 0.0 * d, alpha) == pytest.approx(
            expect, rel=1e-9
        )


def test_kappa_bb_linear_cost_is_stretch_factor():
    # cost(d) = d: kappa_bb is the mean path-length stretch 4/pi, for any
    # node spacing
    for alpha in (0.5, 1.0, 2.0):
        assert kappa_bb_triple_from_cost(lambda d: d, alpha) == pytest.approx(
            4.0 / math.pi, rel=1e-9
        )


def test_kappa_bb_quadrature_cross_checks_itself(exp_model, unit_costs):
    val = kappa_bb_quadrature(exp_model, unit_costs, 1.0)
    assert val == pytest.approx(kappa_bb_closed_form(exp_model, unit_costs, 1.0), rel=1e-6)


def test_kappa_bb_bb84_requires_penalty(bb84_model, unit_costs):
    with pytest.raises(InfeasibleDistanceError):
        kappa_bb_quadrature(bb84_model, unit_costs, 5.0)
    cap = per_bit_cost(bb84_model, unit_costs, 0.98 * bb84_model.cutoff_distance())
    val = kappa_bb_quadrature(bb84_model, unit_costs, 5.0, beyond_cutoff_cost=cap)
    assert math.isfinite(val) and val > 0.0


def test_kappa_bb_unsupported_model(bb84_model, unit_costs):
    with pytest.raises(UnsupportedModelError):
        kappa_bb_closed_form(bb84_model, unit_costs, 1.0)
    with pytest.raises(UnsupportedModelError):
        kappa_bb_single_integral(bb84_model, unit_costs, 1.0)
    with pytest.raises(UnsupportedModelError):
        optimal_alpha_bb(bb84_model, unit_costs)


def test_kappa_bb_validation(exp_model, unit_costs):
    with pytest.raises(ValueError):
        kappa_bb_closed_form(exp_model, unit_costs, -1.0)
    with pytest.raises(ValueError):
        kappa_bb_triple_from_cost(lambda d: d, 0.0)


# ---------------------------------------------------------------------------
# shape and optimum of the trunk constant


def test_kappa_bb_unimodal_in_alpha(exp_model, unit_costs):
    alphas = np.geomspace(0.05, 10.0, 200)
    vals = np.array([kappa_bb_closed_form(exp_model, unit_costs, float(a)) for a in alphas])
    diffs = np.sign(np.diff(vals))
    # descending run then ascending run, one sign change only
    changes = int(np.count_nonzero(np.diff(diffs) != 0))
    assert changes == 1
    assert diffs[0] < 0 < diffs[-1]


def test_optimal_alpha_bb_location_and_value(exp_model, unit_costs):
    alpha_opt = optimal_alpha_bb(exp_model, unit_costs)
    assert alpha_opt == pytest.approx(0.800659, abs=1e-4)
    assert kappa_bb_closed_form(exp_model, unit_costs, alpha_opt) == pytest.approx(
        3.896617, rel=1e-6
    )


def test_optimal_alpha_bb_invariances(exp_model, telecom_model):
    # the minimizer does not move with the cost prefactor, and scales with
    # lambda
    a1 = optimal_alpha_bb(exp_model, CostParams(c_qkd=1.0))
    a2 = optimal_alpha_bb(exp_model, CostParams(c_qkd=1000.0))
    assert a2 == pytest.approx(a1, abs=1e-4)
    a_tel = optimal_alpha_bb(telecom_model, CostParams(c_qkd=1.0))
    assert a_tel / telecom_model.lambda_qkd == pytest.approx(a1, abs=1e-4)


def test_optimal_scale_ratio_reciprocal_to_spacing(exp_model, unit_costs):
    s_star = optimal_scale_ratio()
    assert s_star == pytest.approx(1.248972, abs=2e-5)
    alpha_opt = optimal_alpha_bb(exp_model, unit_costs)
    # s = lambda / alpha_bb, so the two minimizers are reciprocal
    assert alpha_opt * s_star == pytest.approx(exp_model.lambda_qkd, abs=1e-4)


# ---------------------------------------------------------------------------
# cost assembly


def test_stochastic_backbone_cost_assembly(exp_model, node_costs):
    planar = PlanarScenario(length_l=30.0, alpha_u=1.0, volume_v=2.0)
    sc = StochasticBackboneScenario(planar=planar, alpha_bb=1.5)
    br = stochastic_backbone_cost(exp_model, node_costs, sc)
    mu2 = planar.mean_users**2
    assert br.local == pytest.approx(
        2.0 * mu2 * kappa_loc(exp_model, node_costs, 1.5), rel=1e-9
    )
    assert br.backbone == pytest.approx(
        2.0 * delta_analytic(planar) * kappa_bb_closed_form(exp_model, node_costs, 1.5),
        rel=1e-12,
    )
    assert br.nodes == pytest.approx(node_costs.c_node * (30.0 / 1.5) ** 2, rel=1e-12)
    assert br.total == br.local + br.backbone + br.nodes


def test_stochastic_scenario_validation():
    planar = PlanarScenario(length_l=30.0, alpha_u=1.0, volume_v=1.0)
    with pytest.raises(ValueError):
        StochasticBackboneScenario(planar=planar, alpha_bb=0.0)
