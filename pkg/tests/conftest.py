import pytest

from src.measures.joint import beta_bernoulli_joint, counterexample_joint, product_joint
from src.measures.measure import UniformMeasure
from tests.oracles import alternating_spec


@pytest.fixture
def uniform():
    return UniformMeasure()


@pytest.fixture
def product_uniform():
    return product_joint(UniformMeasure(), UniformMeasure())


@pytest.fixture
def beta():
    return beta_bernoulli_joint()


@pytest.fixture
def spec5():
    return alternating_spec(5)


@pytest.fixture
def spec8():
    return alternating_spec(8)


@pytest.fixture
def counterexample5(spec5):
    return counterexample_joint(spec5)


@pytest.fixture
def counterexample8(spec8):
    return counterexample_joint(spec8)
