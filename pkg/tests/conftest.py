import numpy as np
import pytest

from fragdiff import (ConstantRate, PowerLawKernel, PowerRate, assemble_bundle,
                      build_mesh)


@pytest.fixture(scope="session")
def mesh_512():
    return build_mesh(40.0, 512)


@pytest.fixture(scope="session")
def mesh_1024():
    return build_mesh(40.0, 1024)


@pytest.fixture(scope="session")
def mesh_2048():
    return build_mesh(40.0, 2048)


@pytest.fixture(scope="session")
def mitosis_512(mesh_512):
    """Constant rate 1, binary kernel b = 2/y: closed-form steady state."""
    return assemble_bundle(mesh_512, ConstantRate(1.0), PowerLawKernel(0.0))


@pytest.fixture(scope="session")
def mitosis_2048(mesh_2048):
    return assemble_bundle(mesh_2048, ConstantRate(1.0), PowerLawKernel(0.0))


@pytest.fixture(scope="session")
def linear_rate_512(mesh_512):
    """Rate a(x) = x: growing rate, spectral-gap regime."""
    return assemble_bundle(mesh_512, PowerRate(1.0), PowerLawKernel(0.0))


@pytest.fixture(scope="session")
def linear_rate_1024(mesh_1024):
    return assemble_bundle(mesh_1024, PowerRate(1.0), PowerLawKernel(0.0))


@pytest.fixture
def rng():
    return np.random.default_rng(20260809)


def exact_equilibrium(x):
    """Unit-mass steady profile of the constant-rate binary-breakup model."""
    return x * np.exp(-x) / 2.0
