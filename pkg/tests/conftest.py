import pytest
from click.testing import CliRunner

from fblsc import create_app
from fblsc.models import CondPmf, DistortionMatrix, JointPmf, Pmf


@pytest.fixture
def app():
    return create_app('testing')


@pytest.fixture
def runner():
    return CliRunner(mix_stderr=False)


@pytest.fixture
def bms():
    return Pmf.bernoulli(0.2)


@pytest.fixture
def hamming2():
    return DistortionMatrix.hamming(2)


@pytest.fixture
def quaternary():
    return Pmf([1 / 3, 1 / 4, 1 / 4, 1 / 6])


@pytest.fixture
def dsbs():
    return JointPmf.dsbs(0.1)


def erased_source(p):
    """Uniform binary X with Y its output through an erasure channel"""
    return CondPmf.bec(p).joint(Pmf.uniform(2))


@pytest.fixture
def kaspi_bec_source():
    return erased_source(0.3)


@pytest.fixture
def erased():
    return erased_source
