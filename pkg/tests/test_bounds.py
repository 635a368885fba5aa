import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from kernel_entropy import (BoundViolation, ParameterError, RegimeError, Spectrum,
                            count_above_m, decay_slope_check, delta_of_sigma,
                            dpp_ellipsoid_bound, gaussian_bound_spectrum,
                            gaussian_entropy_bound, integer_point_count, lower_bound_main,
                            lower_bound_minor, lower_bound_simple, power_law_spectrum,
                            spectral_sum_E, upper_bound_main, water_fill)
from kernel_entropy.bounds import (DEFAULT_THETA_GRID, minor_f, recheck_gaussian,
                                   recheck_lower_main, recheck_upper, u_func)

L3 = [4.0, 2.0, 1.0]


def naive_E(eps, lam):
    total = 0.0
    for v in lam:
        if v > eps:
            total += math.log(v / eps)
    return total


def descending(min_size=1, max_size=30):
    return st.lists(st.floats(1e-6, 1e3), min_size=min_size, max_size=max_size).map(
        lambda v: sorted(v, reverse=True))


# spectral sums -------------------------------------------------------------------

def test_E_tie_excluded():
    assert spectral_sum_E(1.0, L3) == pytest.approx(3 * math.log(2), rel=1e-15)


def test_E_empty_above_lambda1():
    assert spectral_sum_E(4.0, L3) == 0.0
    assert spectral_sum_E(10.0, L3) == 0.0


def test_E_power_law_naive_oracle():
    lam = power_law_spectrum(1, 2, 10**4).values
    assert spectral_sum_E(1e-4, lam) == pytest.approx(naive_E(1e-4, lam), rel=1e-12)


def test_m_examples():
    assert count_above_m(1.5, L3) == 2
    assert count_above_m(1.0, L3) == 2
    assert count_above_m(4.0, L3) == 0


@settings(max_examples=80, deadline=None)
@given(descending(), st.floats(1e-4, 1e3), st.floats(1.0, 10.0))
def test_E_and_m_nonincreasing(lam, eps, factor):
    assert spectral_sum_E(eps * factor, lam) <= spectral_sum_E(eps, lam)
    assert count_above_m(eps * factor, lam) <= count_above_m(eps, lam)


@settings(max_examples=80, deadline=None)
@given(descending(), st.floats(1e-3, 1e2), st.floats(1e-3, 1e3))
def test_E_scaling(lam, eps, t):
    a = spectral_sum_E(eps, lam)
    b = spectral_sum_E(t * eps, [t * v for v in lam])
    # a scaled value can cross eps by rounding when lambda_i == eps up to an ulp
    assume(all(abs(v / eps - 1) > 1e-9 for v in lam))
    assert b == pytest.approx(a, rel=1e-12, abs=1e-12)


@settings(max_examples=50, deadline=None)
@given(descending(min_size=2))
def test_strict_tie(lam):
    eps = lam[len(lam) // 2]
    above = [v for v in lam if v > eps]
    assert count_above_m(eps, lam) == len(above)
    assert spectral_sum_E(eps, lam) == pytest.approx(naive_E(eps, lam), rel=1e-12, abs=1e-15)


# ellipsoid and main upper bound ----------------------------------------------------

def test_dpp_examples():
    assert dpp_ellipsoid_bound([2.0], 0.25) == pytest.approx(math.log(2) + math.log(12), rel=1e-15)
    assert dpp_ellipsoid_bound([0.4, 0.3], 0.25) == 0.0
    assert dpp_ellipsoid_bound([1.0], 0.1) == pytest.approx(math.log(30), rel=1e-15)


@pytest.mark.parametrize("theta", [0.0, 0.5, -0.1, 0.7])
def test_dpp_theta_range(theta):
    with pytest.raises(ParameterError):
        dpp_ellipsoid_bound([1.0], theta)


def test_upper_single_eigenvalue():
    rep = upper_bound_main(1.0, [1.0], 1.0, [0.25])
    assert rep.value == pytest.approx(math.log(12), rel=1e-15)
    assert rep.witnesses["theta"] == 0.25


def test_upper_empty():
    assert upper_bound_main(10.0, L3, 1.0, DEFAULT_THETA_GRID).value == 0.0


def test_upper_gaussian_witness_reproduces():
    sp = gaussian_bound_spectrum(1.0, 200)
    rep = upper_bound_main(1e-3, sp, 1.0, DEFAULT_THETA_GRID)
    assert len(DEFAULT_THETA_GRID) == 49
    assert DEFAULT_THETA_GRID[0] == 0.01 and DEFAULT_THETA_GRID[-1] == 0.49
    assert recheck_upper(rep)
    w = rep.witnesses
    again = spectral_sum_E(1e-3, sp) + count_above_m((1 - w["theta"]) * 1e-3, sp) * math.log(3 / w["theta"])
    assert again == rep.value
    # no grid point does better
    for t in DEFAULT_THETA_GRID:
        assert rep.value <= spectral_sum_E(1e-3, sp) + count_above_m((1 - t) * 1e-3, sp) * math.log(3 / t)


def test_report_json_fields():
    d = upper_bound_main(0.1, L3).to_dict()
    for key in ("epsilon", "effective_radius", "value_nats", "value_bits", "witnesses",
                "convention", "spectrum_source"):
        assert key in d
    assert d["value_bits"] == pytest.approx(d["value_nats"] / math.log(2))


# water-filling -----------------------------------------------------------------------

def bisect_level(d, lam):
    lo, hi = 0.0, max(lam)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if sum(min(v, mid) for v in lam) < d:
            lo = mid
        else:
            hi = mid
    return hi


def test_water_fill_single():
    s = water_fill(0.25, [1.0])
    assert s.water_level == pytest.approx(0.25, rel=1e-12)
    assert s.rate == pytest.approx(math.log(2), rel=1e-12)


def test_water_fill_two_channels():
    s = water_fill(1.0, [2.0, 1.0])
    assert s.water_level == pytest.approx(0.5, rel=1e-12)
    assert s.rate == pytest.approx(1.5 * math.log(2), rel=1e-12)


def test_water_fill_full_distortion():
    assert water_fill(3.0, [2.0, 1.0]).rate == 0.0


def test_water_fill_infeasible_and_bad():
    s = water_fill(10.0, [2.0, 1.0])
    assert s.rate == 0.0 and s.water_level == 2.0 and not s.feasible
    with pytest.raises(ParameterError):
        water_fill(0.0, [1.0])


@settings(max_examples=80, deadline=None)
@given(descending(max_size=15), st.floats(0.01, 0.99))
def test_water_fill_against_bisection(lam, frac):
    d = frac * math.fsum(lam)
    s = water_fill(d, lam)
    assert math.fsum(np.minimum(lam, s.water_level)) == pytest.approx(d, rel=1e-10)
    assert s.water_level == pytest.approx(bisect_level(d, lam), rel=1e-9)
    assert s.rate == pytest.approx(0.5 * spectral_sum_E(s.water_level, lam), rel=1e-12)


def test_water_fill_monotone_convex():
    lam = power_law_spectrum(1, 1.5, 50).values
    ds = np.linspace(0.05, 0.95, 91) * lam.sum()
    r = np.array([water_fill(d, lam).rate for d in ds])
    assert np.all(np.diff(r) <= 1e-12)
    assert np.all(r[:-2] + r[2:] - 2 * r[1:-1] >= -1e-9)


# lower bounds -----------------------------------------------------------------------

def test_lower_simple_example():
    rep = lower_bound_simple(1.0, L3, 1.0)
    assert rep.witnesses["delta"] == 0.5 and rep.witnesses["N"] == 3
    assert rep.value == pytest.approx(math.log(3))


def test_lower_simple_empty():
    assert lower_bound_simple(10.0, L3, 1.0).value == 0.0


def test_lower_simple_naive_count():
    sp = gaussian_bound_spectrum(1.0, 200)
    rep = lower_bound_simple(1e-3, sp, 2.0)
    naive = sum(1 for v in sp.values if v > 1e-6)
    assert rep.witnesses["N"] == naive


def test_lower_main_fallback_zero():
    rep = lower_bound_main(2.0, [1.0], 1.0, 1.0)
    assert rep.witnesses["fallback"] == "infeasible, fell back"
    assert rep.value == 0.0
    assert rep.effective_radius == 1.0


def test_lower_main_witness_constraints(gauss1_system):
    sp = gauss1_system.spectrum.trusted()
    rep = lower_bound_main(1e-3, sp, 2.0, 1.0)
    assert "fallback" not in rep.witnesses
    w = rep.witnesses
    lam = sp.values
    assert w["delta_star"] > 2.0 * 1e-6
    n = sum(1 for v in lam if v > w["delta_star"])
    e = naive_E(w["delta_star"], lam)
    rhs = lam[0] * math.exp(-e / 4) / (math.sqrt(w["delta_star"]) - math.sqrt(2.0) * 1e-3) ** 2
    assert n == w["N"] and n >= rhs
    assert recheck_lower_main(rep, sp, 2.0)


def test_lower_main_below_upper_gaussian(gauss1_system):
    sp = gauss1_system.spectrum.trusted()
    lo = lower_bound_main(1e-2, sp, 2.0, 1.0)
    assert lo.effective_radius == 5e-3
    assert lo.value <= upper_bound_main(5e-3, sp, 1.0).value


def test_lower_minor_witness_reproduces():
    sp = power_law_spectrum(1, 2, 2000)
    rep = lower_bound_minor(0.05, sp, 1.0, 1.0)
    w = rep.witnesses
    lam = sp.values
    n = sum(1 for v in lam if v > w["delta"])
    f = math.sqrt(n * w["delta"] + math.fsum(lam[n:n + w["M"]])) - math.sqrt((n + w["M"]) * w["delta0"])
    assert f == pytest.approx(w["f"], rel=1e-12)
    assert minor_f(w["delta"], w["M"], sp, w["delta0"]) == w["f"]


def test_lower_minor_degenerate_tail():
    rep = lower_bound_minor(0.1, [1.0], 1.0, 1.0)
    assert rep.value == 0.0 and "flag" in rep.witnesses


def test_lower_minor_power_law_ordering():
    sp = power_law_spectrum(1, 2, 10**4)
    rep = lower_bound_minor(1e-2, sp, 1.0, 1.0)
    assert rep.value >= 0
    assert rep.value <= upper_bound_main(5e-3, sp, 1.0).value


# Gaussian kernel integer-point bound ------------------------------------------------

def test_delta_sigma1():
    assert delta_of_sigma(1.0) == pytest.approx(0.5 * (math.log(2) - 1), rel=1e-14)
    assert delta_of_sigma(1.0) == pytest.approx(-0.15343, abs=1e-5)


@pytest.mark.parametrize("sigma", [0.5, 1.0, 2.0, 4.0])
def test_delta_above_continuous_min(sigma):
    assert delta_of_sigma(sigma) >= -sigma**2 / 4
    xs = np.linspace(1e-9, 4 * sigma**2 + 2, 20001)
    assert min(u_func(x, sigma) for x in xs) == pytest.approx(-sigma**2 / 4, rel=1e-6)


def test_gaussian_bound_rate_n1():
    ratios = []
    for eps in (1e-4, 1e-6, 1e-8, 1e-10, 1e-12):
        lg = math.log(1 / eps)
        ratios.append(gaussian_entropy_bound(eps, 1.0, 1).value / (lg**2 / math.log(lg)))
    assert max(ratios) / min(ratios) < 3


@pytest.mark.parametrize("n", [1, 2, 3])
def test_gaussian_bound_witness(n):
    rep = gaussian_entropy_bound(1e-6, 1.0, n)
    assert recheck_gaussian(rep, 1.0, n)


def test_gaussian_bound_regime_error():
    with pytest.raises(RegimeError):
        gaussian_entropy_bound(0.5, 10.0, 1)


def test_integer_points_single():
    eps, sigma = 0.5, 1e-3
    assert u_func(1, sigma) > math.log(1 / eps) + math.log(8)
    assert integer_point_count(eps, sigma, 1) == 1


def test_integer_points_brute_force_n2():
    big_d = math.log(10) + 2 * math.log(8)
    i = np.arange(65, dtype=float)
    u = np.where(i > 0, 0.5 * i * np.log(2 * np.maximum(i, 1) / math.e), 0.0)
    brute = int(np.count_nonzero(u[:, None] + u[None, :] < big_d))
    assert integer_point_count(0.1, 1.0, 2) == brute


@pytest.mark.parametrize("n", [1, 2, 3])
@pytest.mark.parametrize("sigma", [0.5, 1.0, 2.0])
@pytest.mark.parametrize("eps", [1e-2, 1e-6, 1e-10])
def test_integer_points_exact_below_volume(n, sigma, eps):
    try:
        vol = integer_point_count(eps, sigma, n, "volume_bound")
    except RegimeError:
        pytest.skip("volume formula outside its validity range")
    assert integer_point_count(eps, sigma, n) <= vol


def test_integer_points_guard():
    with pytest.raises(ParameterError):
        integer_point_count(1e-3, 1.0, 4)


# power-law decay ------------------------------------------------------------------------

@pytest.mark.parametrize("gamma,target", [(2.0, 0.5), (1.0, 1.0)])
def test_decay_slope(gamma, target):
    assert abs(decay_slope_check(gamma, 1.0) - target) <= 0.1 * target


def test_decay_inequality_at_1000():
    for gamma in (0.5, 1.0, 3.0):
        sp = power_law_spectrum(1.0, gamma, 10**5)
        assert spectral_sum_E(1000.0**-gamma, sp) <= 1000 * gamma * (math.log(2) + math.sqrt(2))


def test_decay_violation_raises():
    # a spectrum that is not a power law trips the check via a tiny count cap
    with pytest.raises(BoundViolation):
        from kernel_entropy.bounds import decay_slope_check as d
        import kernel_entropy.bounds as b
        orig = b.power_law_spectrum
        try:
            b.power_law_spectrum = lambda c, g, n: Spectrum(np.full(n, 1.0))
            d(1.0, 1.0, count=10**5, ns=(10,))
        finally:
            b.power_law_spectrum = orig
