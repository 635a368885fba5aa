import math
from decimal import Decimal, getcontext

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kernel_entropy import (Domain, GaussianKernel, Measure, ParameterError, Spectrum,
                            TabulatedKernel, build_grid, gaussian_bound_spectrum,
                            gaussian_eigen_bound, kernel_matrix, mercer_tail,
                            nystrom_spectrum, power_law_spectrum, read_spectrum_csv,
                            sup_diag, tensor_spectrum, write_spectrum_csv)

box1 = Domain([(-1, 1)])


def test_constant_kernel_rank_one():
    g = build_grid(box1, Measure.uniform_normalized(), 16)
    sysm = nystrom_spectrum(TabulatedKernel.constant(1.0, g.nodes), g)
    assert sysm.values[0] == pytest.approx(1.0, abs=1e-13)
    assert np.all(sysm.values[1:] < 1e-13)


def test_gaussian_top_eigenvalue_and_refinement(gauss1_system):
    lam1 = gauss1_system.values[0]
    assert 0 < lam1 <= 2
    g400 = build_grid(box1, Measure.uniform_lebesgue(), 400)
    lam1_400 = nystrom_spectrum(GaussianKernel(1.0), g400, 10).values[0]
    assert abs(lam1 - lam1_400) <= 1e-8 * lam1


def test_nystrom_below_eigen_bound(gauss1_system):
    sp = gauss1_system.spectrum.trusted()
    for k, lam in enumerate(sp.values, start=1):
        assert lam <= gaussian_eigen_bound(k, 1.0) + 1e-9


def test_trace_bound(gauss1_system):
    assert gauss1_system.values.sum() <= 2.0 + 1e-8


def test_eigvecs_orthonormal_and_residual(gauss1_system, lebesgue_grid_200):
    g = lebesgue_grid_200
    phi = gauss1_system.eigvecs
    gram = phi.T @ (phi * g.weights[:, None])
    assert np.abs(gram - np.eye(len(gram))).max() < 1e-8
    kw = kernel_matrix(GaussianKernel(1.0), g.nodes) * g.weights[None, :]
    for j in range(6):
        lam = gauss1_system.values[j]
        r = kw @ phi[:, j] - lam * phi[:, j]
        assert np.abs(r).max() <= 1e-6 * lam * np.abs(phi[:, j]).max()


@pytest.mark.parametrize("sigma", [1.0, 2.0, 3.0])
def test_refinement_stability_top10(sigma):
    a = nystrom_spectrum(GaussianKernel(sigma), build_grid(box1, Measure.uniform_lebesgue(), 200), 10)
    b = nystrom_spectrum(GaussianKernel(sigma), build_grid(box1, Measure.uniform_lebesgue(), 400), 10)
    assert np.all(np.abs(a.values - b.values) < 1e-8 * a.values)


def test_refinement_stability_small_sigma_well_conditioned():
    # at sigma = 0.5 eigenvalues 9 and 10 sit near 1e-12 relative, where the
    # eigensolver resolves them only to a few digits
    a = nystrom_spectrum(GaussianKernel(0.5), build_grid(box1, Measure.uniform_lebesgue(), 200), 10)
    b = nystrom_spectrum(GaussianKernel(0.5), build_grid(box1, Measure.uniform_lebesgue(), 400), 10)
    keep = a.values > 1e-10 * a.values[0]
    assert keep.sum() >= 7
    assert np.all(np.abs(a.values - b.values)[keep] < 1e-8 * a.values[keep])


def test_k_max_validation(lebesgue_grid_200):
    with pytest.raises(ParameterError):
        nystrom_spectrum(GaussianKernel(1.0), lebesgue_grid_200, 201)


def test_eigen_bound_examples():
    assert gaussian_eigen_bound(1, 0.3) == 8.0
    assert gaussian_eigen_bound(3, 1.0) == pytest.approx(2 * math.e, rel=1e-14)


def test_eigen_bound_k21_extended_precision():
    getcontext().prec = 50
    ref = Decimal(8) * (Decimal(40) / Decimal(1).exp()) ** -10
    assert gaussian_eigen_bound(21, 1.0) == pytest.approx(float(ref), rel=1e-12)


def test_eigen_bound_large_k_finite():
    v = gaussian_eigen_bound(400, 2.0)
    assert 0 <= v < 1e-200 or v == 0.0


def test_bound_spectrum_examples():
    assert list(gaussian_bound_spectrum(1.0, 1).values) == [8.0]
    v = gaussian_bound_spectrum(1.0, 3).values
    assert v == pytest.approx([8 * math.sqrt(math.e / 2), 8.0, 2 * math.e], rel=1e-14)
    tail = gaussian_bound_spectrum(1.0, 60).values
    assert np.all(tail > 0) and tail[-1] < 1e-30


def test_tensor_examples():
    assert list(tensor_spectrum([[1.0]], 0.5).values) == [1.0]
    assert list(tensor_spectrum([[4, 2], [4, 2]], 5).values) == [16, 8, 8]


def test_tensor_matches_brute_force_gaussian_bound():
    f = gaussian_bound_spectrum(1.0, 30).values
    brute = sorted((a * b for a in f for b in f if a * b >= 1e-6), reverse=True)
    out = tensor_spectrum([f, f], 1e-6)
    assert out.complete
    assert list(out.values) == brute


@settings(max_examples=50, deadline=None)
@given(st.lists(st.lists(st.floats(1e-3, 10), min_size=1, max_size=8), min_size=1, max_size=3),
       st.floats(1e-3, 5))
def test_tensor_brute_force_property(factors, cutoff):
    facs = [sorted(f, reverse=True) for f in factors]
    prods = [1.0]
    for f in facs:
        prods = [p * x for p in prods for x in f]
    # products are formed left to right in both places, so they agree bitwise
    brute = sorted((p for p in prods if p >= cutoff), reverse=True)
    assert list(tensor_spectrum(facs, cutoff).values) == brute


def test_tensor_cap_flags_incomplete():
    out = tensor_spectrum([[4, 2, 1], [4, 2, 1]], 0.5, cap=3)
    assert not out.complete and len(out) == 3 and "INCOMPLETE" in out.truncation_note


def test_power_law_examples():
    assert power_law_spectrum(1, 1, 3).values == pytest.approx([1, 0.5, 1 / 3])
    assert list(power_law_spectrum(2, 2, 2).values) == [2.0, 0.5]


@settings(max_examples=30, deadline=None)
@given(st.floats(0.01, 100), st.floats(0.1, 6), st.integers(1, 500))
def test_power_law_descending(c, gamma, n):
    assert np.all(np.diff(power_law_spectrum(c, gamma, n).values) <= 0)


def test_mercer_tail_rank_one():
    g = build_grid(box1, Measure.uniform_normalized(), 16)
    k = TabulatedKernel.constant(1.0, g.nodes)
    s = nystrom_spectrum(k, g)
    assert mercer_tail(s, k, g, 1) < 1e-6
    assert mercer_tail(s, k, g, 0) == pytest.approx(sup_diag(k, grid=g))


def test_mercer_tail_gaussian(gauss1_system):
    k = GaussianKernel(1.0)
    assert mercer_tail(gauss1_system, k, n_keep=0) == pytest.approx(1.0)
    assert mercer_tail(gauss1_system, k, n_keep=30) < 1e-6
    tails = [mercer_tail(gauss1_system, k, n_keep=n) for n in range(0, 31)]
    assert all(b <= a + 1e-12 for a, b in zip(tails, tails[1:]))


def test_spectrum_rejects_ascending():
    with pytest.raises(ParameterError):
        Spectrum([1.0, 2.0])


def test_csv_round_trip(tmp_path):
    sp = gaussian_bound_spectrum(1.3, 25)
    p = tmp_path / "s.csv"
    write_spectrum_csv(sp, p)
    text = p.read_text().splitlines()
    assert text[0] == "#kernel-entropy v1" and text[1] == "index,lambda"
    assert np.array_equal(read_spectrum_csv(p).values, sp.values)
