import numpy as np
import pytest

from app.models.cournot import build_cournot
from app.models.demand_response import build_demand_response
from app.schemas.geometry_schema import ConvexBody
from app.services.geometry_service import GeometryService
from app.services.network_service import NetworkService


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def ellipse():
    return ConvexBody.ellipsoid([4.0, 3.0])


@pytest.fixture
def unit_circle():
    return ConvexBody.ball(1.0, 2)


@pytest.fixture
def ellipsoid3():
    return ConvexBody.ellipsoid([5.0, 4.0, 3.0])


@pytest.fixture
def square(unit_circle):
    # vertices (1,0), (0,1), (-1,0), (0,-1)
    return GeometryService.inscribe_regular(unit_circle, 4)


@pytest.fixture
def cournot():
    return build_cournot()


@pytest.fixture
def cournot_boundary():
    # large intercept pushes the equilibrium onto the ellipse boundary
    return build_cournot({"intercept": 12.0})


@pytest.fixture
def demand_response():
    return build_demand_response()


@pytest.fixture
def ring4():
    return NetworkService.ring(4)
