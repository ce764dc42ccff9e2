from __future__ import annotations

import pytest

from qkdplan import CostParams, LinkModel


@pytest.fixture
def exp_model() -> LinkModel:
    """Pure exponential rate with unit scale: R(l) = exp(-l)."""
    return LinkModel.exponential(r0=1.0, lambda_qkd=1.0)


@pytest.fixture
def telecom_model() -> LinkModel:
    """Exponential rate at the telecom-fibre scaling length."""
    return LinkModel.exponential(r0=1.0, lambda_qkd=19.740658268329625)


@pytest.fixture
def bb84_model() -> LinkModel:
    """BB84 with a finite cutoff at lambda * ln((p* - a)/b) ~ 2.2 lambda."""
    return LinkModel.bb84(r0=1.0, lambda_qkd=19.740658268329625, a=0.02, b=0.01)


@pytest.fixture
def unit_costs() -> CostParams:
    return CostParams(c_qkd=1.0, c_node=0.0)


@pytest.fixture
def node_costs() -> CostParams:
    return CostParams(c_qkd=1.0, c_node=50.0)
