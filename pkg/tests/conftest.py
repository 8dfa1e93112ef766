import numpy as np
import pytest

from brepgraph import shapes


@pytest.fixture(scope="session")
def cube():
    return shapes.as_model(shapes.unit_cube())


@pytest.fixture(scope="session")
def cylinder():
    return shapes.as_model(shapes.closed_cylinder())


@pytest.fixture(scope="session")
def plate():
    return shapes.as_model(shapes.plate_with_hole())


@pytest.fixture(scope="session")
def sphere():
    return shapes.as_model(shapes.sphere_model())


@pytest.fixture(scope="session")
def torus():
    return shapes.as_model(shapes.torus_model())


@pytest.fixture(scope="session")
def dome():
    return shapes.as_model(shapes.bezier_dome())


@pytest.fixture()
def rng():
    return np.random.default_rng(20240811)
