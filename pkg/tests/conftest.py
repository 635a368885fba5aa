import pytest

from kernel_entropy import Domain, GaussianKernel, Measure, build_grid, nystrom_spectrum


@pytest.fixture(scope="session")
def lebesgue_grid_200():
    return build_grid(Domain([(-1, 1)]), Measure.uniform_lebesgue(), 200)


@pytest.fixture(scope="session")
def gauss1_system(lebesgue_grid_200):
    return nystrom_spectrum(GaussianKernel(1.0), lebesgue_grid_200)
