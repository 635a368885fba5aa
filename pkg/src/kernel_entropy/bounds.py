"""Closed-form upper and lower bounds on the eps-entropy of the RKHS unit ball.

All entropies are in nats. Every bound returns an :class:`EntropyBoundReport`
whose witnesses are enough to recompute the value.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BoundViolation, ParameterError, RegimeError, ResourceError
from .spectrum import Spectrum, power_law_spectrum

DEFAULT_THETA_GRID = tuple(np.round(np.linspace(0.01, 0.49, 49), 10))
DEFAULT_DELTA_POINTS = 512
LN2 = math.log(2.0)


@dataclass
class EntropyBoundReport:
    kind: str
    epsilon: float
    value: float
    effective_radius: float
    witnesses: dict = field(default_factory=dict)
    convention: str = "sup_norm"
    measure: str = "unspecified"
    spectrum_source: str = "explicit"

    def __post_init__(self):
        if not self.value >= 0:
            raise ParameterError(f"{self.kind}: negative bound value {self.value}")

    @property
    def value_bits(self):
        return self.value / LN2

    def to_dict(self):
        wit = {k: (float(v) if isinstance(v, (np.floating, np.integer)) else v)
               for k, v in self.witnesses.items()}
        return {
            "kind": self.kind,
            "epsilon": float(self.epsilon),
            "effective_radius": float(self.effective_radius),
            "value_nats": float(self.value),
            "value_bits": float(self.value_bits),
            "witnesses": wit,
            "convention": {"norm": self.convention, "measure": self.measure},
            "spectrum_source": self.spectrum_source,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


@dataclass(frozen=True)
class WaterFillSolution:
    distortion: float
    water_level: float
    rate: float
    feasible: bool = True


def _vals(spectrum):
    if isinstance(spectrum, Spectrum):
        return spectrum.values
    return Spectrum(spectrum).values


def _source(spectrum):
    return spectrum.source if isinstance(spectrum, Spectrum) else "explicit"


def count_above_m(epsilon: float, spectrum) -> int:
    """m_eps = #{i : lambda_i > eps}."""
    if not epsilon > 0:
        raise ParameterError("epsilon must be positive")
    vals = _vals(spectrum)
    # values are descending, so -vals is ascending
    return int(np.searchsorted(-vals, -epsilon, side="left"))


def spectral_sum_E(epsilon: float, spectrum) -> float:
    """Sum of ln(lambda_i / eps) over lambda_i > eps."""
    vals = _vals(spectrum)
    k = count_above_m(epsilon, vals)
    if k == 0:
        return 0.0
    return math.fsum(np.log(vals[:k] / epsilon))


def _log_prefix(vals):
    """Prefix sums of ln(lambda) for fast E(delta) over many deltas."""
    pos = vals[vals > 0]
    return np.concatenate(([0.0], np.cumsum(np.log(pos))))


def _E_many(deltas, vals, prefix):
    k = np.searchsorted(-vals, -deltas, side="left")
    return prefix[k] - k * np.log(deltas), k


def dpp_ellipsoid_bound(spectrum, theta: float) -> float:
    """E(1, lambda) + mu_theta ln(3/theta), mu_theta = #{lambda_i >= 1 - theta}."""
    if not 0 < theta < 0.5:
        raise ParameterError(f"theta must lie in (0, 0.5), got {theta}")
    vals = _vals(spectrum)
    mu = int(np.count_nonzero(vals >= 1.0 - theta))
    return spectral_sum_E(1.0, vals) + mu * math.log(3.0 / theta)


def _upper_value(e_term, m, theta):
    return e_term + m * math.log(3.0 / theta)


def upper_bound_main(epsilon: float, spectrum, scale: float = 1.0,
                     theta_grid=DEFAULT_THETA_GRID, convention: str = "sup_norm",
                     measure: str = "unspecified") -> EntropyBoundReport:
    """min over theta of E(eps/scale) + m_{(1-theta) eps/scale} ln(3/theta).

    ``scale`` is D_K for the sup-norm bound or sqrt(lambda_1) for the L2 one.
    Ties in theta go to the earliest grid point.
    """
    if not epsilon > 0 or not scale > 0:
        raise ParameterError("epsilon and scale must be positive")
    thetas = list(theta_grid)
    if not thetas:
        raise ParameterError("theta grid is empty")
    for t in thetas:
        if not 0 < t < 0.5:
            raise ParameterError(f"theta {t} outside (0, 0.5)")
    vals = _vals(spectrum)
    x = epsilon / scale
    e_term = spectral_sum_E(x, vals)
    best = None
    for t in thetas:
        m = count_above_m((1.0 - t) * x, vals)
        v = _upper_value(e_term, m, t)
        if best is None or v < best[0]:
            best = (v, t, m)
    value, theta, m = best
    return EntropyBoundReport(
        "upper_main", epsilon, value, epsilon,
        {"theta": float(theta), "m": m, "E": e_term, "scale": float(scale),
         "theta_grid_size": len(thetas)},
        convention, measure, _source(spectrum))


def recheck_upper(report: EntropyBoundReport) -> bool:
    w = report.witnesses
    return _upper_value(w["E"], w["m"], w["theta"]) == report.value


def water_fill(distortion: float, spectrum) -> WaterFillSolution:
    """Reverse water-filling: level eps with sum min(lambda_i, eps) = D, rate E(eps)/2.

    The map eps -> sum min(lambda_i, eps) is piecewise linear, so the level is
    solved exactly on the piece where exactly k eigenvalues sit above it.
    """
    if not distortion > 0:
        raise ParameterError("distortion must be positive")
    vals = _vals(spectrum)
    vals = vals[vals > 0]
    total = math.fsum(vals)
    lam1 = float(vals[0]) if len(vals) else 0.0
    if len(vals) == 0 or distortion >= total:
        return WaterFillSolution(distortion, lam1, 0.0, feasible=distortion <= total)

    nxt = np.concatenate((vals[1:], [0.0]))
    for k in range(1, len(vals) + 1):
        level = (distortion - math.fsum(vals[k:])) / k
        if nxt[k - 1] <= level <= vals[k - 1]:
            break
    level = min(max(level, 0.0), lam1)
    return WaterFillSolution(distortion, level, 0.5 * spectral_sum_E(level, vals))


def _count_N(delta, vals):
    """N_delta = #{n : lambda_n > delta} (descending spectrum)."""
    return int(np.searchsorted(-vals, -delta, side="left"))


def lower_bound_simple(epsilon: float, spectrum, total_mass: float = 1.0,
                       measure: str = "unspecified") -> EntropyBoundReport:
    """ln N_delta with delta = eps^2 * mass / 2.

    N_delta orthogonal directions of length above sqrt(2 delta) give N_delta
    points in the ball that are more than 2 eps apart in sup norm, so the
    log of that count lower-bounds the entropy. The count N is the witness.
    """
    if not epsilon > 0 or not total_mass > 0:
        raise ParameterError("epsilon and total_mass must be positive")
    vals = _vals(spectrum)
    delta = epsilon**2 * total_mass / 2.0
    n = _count_N(delta, vals)
    value = math.log(n) if n > 0 else 0.0
    return EntropyBoundReport("lower_simple", epsilon, value, epsilon,
                              {"delta": delta, "N": n}, "sup_norm", measure,
                              _source(spectrum))


def _main_rhs(lam1, e_val, delta, floor_root, c_universal):
    return lam1 * math.exp(-e_val / (4.0 * c_universal)) / (math.sqrt(delta) - floor_root) ** 2


def lower_bound_main(epsilon: float, spectrum, total_mass: float = 1.0,
                     c_universal: float = 1.0, n_grid: int = DEFAULT_DELTA_POINTS,
                     measure: str = "unspecified") -> EntropyBoundReport:
    """E(delta*)/4, a lower bound on the entropy at radius eps/2.

    delta* is the smallest delta > mass*eps^2 with
    N_delta >= lambda_1 exp(-E(delta)/(4C)) / (sqrt(delta) - sqrt(mass) eps)^2,
    searched over the eigenvalues plus a geometric grid up to lambda_1.
    """
    if not epsilon > 0 or not total_mass > 0 or not c_universal > 0:
        raise ParameterError("epsilon, total_mass and c_universal must be positive")
    vals = _vals(spectrum)
    lam1 = float(vals[0])
    floor = total_mass * epsilon**2
    floor_root = math.sqrt(total_mass) * epsilon

    def fallback(reason):
        rep = lower_bound_simple(epsilon / 2.0, spectrum, total_mass, measure)
        rep.kind = "lower_main"
        rep.epsilon = epsilon
        rep.witnesses = dict(rep.witnesses, fallback="infeasible, fell back",
                             reason=reason, c_universal=c_universal)
        return rep

    if lam1 <= floor:
        return fallback("lambda_1 <= mass * eps^2")

    grid = np.geomspace(floor, lam1, n_grid + 1)[1:]
    cand = np.unique(np.concatenate((vals[vals > floor], grid)))
    cand = cand[cand > floor]
    prefix = _log_prefix(vals)
    e_vals, n_vals = _E_many(cand, vals, prefix)
    with np.errstate(over="ignore", divide="ignore"):
        rhs = lam1 * np.exp(-e_vals / (4.0 * c_universal)) / (np.sqrt(cand) - floor_root) ** 2
    # small slack for the prefix-sum E; the winner is re-checked exactly below
    ok = np.flatnonzero(n_vals >= rhs * (1 - 1e-9))
    for idx in ok:
        delta = float(cand[idx])
        e_exact = spectral_sum_E(delta, vals)
        n = _count_N(delta, vals)
        r = _main_rhs(lam1, e_exact, delta, floor_root, c_universal)
        if n >= r:
            return EntropyBoundReport(
                "lower_main", epsilon, 0.25 * e_exact, epsilon / 2.0,
                {"delta_star": delta, "N": n, "E": e_exact, "rhs": r,
                 "c_universal": c_universal, "delta_floor": floor,
                 "n_candidates": int(len(cand))},
                "sup_norm", measure, _source(spectrum))
    return fallback("no feasible delta on the candidate grid")


def recheck_lower_main(report: EntropyBoundReport, spectrum, total_mass: float) -> bool:
    w = report.witnesses
    if "fallback" in w:
        return True
    vals = _vals(spectrum)
    eps = report.epsilon
    delta = w["delta_star"]
    if not delta > total_mass * eps**2:
        return False
    e_val = spectral_sum_E(delta, vals)
    r = _main_rhs(float(vals[0]), e_val, delta, math.sqrt(total_mass) * eps, w["c_universal"])
    return _count_N(delta, vals) >= r and 0.25 * e_val == report.value


def minor_f(delta: float, m: int, spectrum, delta0: float) -> float:
    """f(delta, M) = sqrt(N delta + g(delta, M)) - sqrt((N + M) delta0)."""
    vals = _vals(spectrum)
    n = _count_N(delta, vals)
    g = math.fsum(vals[n:n + m])
    return math.sqrt(n * delta + g) - math.sqrt((n + m) * delta0)


def lower_bound_minor(epsilon: float, spectrum, total_mass: float = 1.0,
                      c_universal: float = 1.0, n_grid: int = DEFAULT_DELTA_POINTS,
                      measure: str = "unspecified") -> EntropyBoundReport:
    """max over delta of E(delta)/2 + 2C min(ln(f*/sigma_1), 0), at radius eps/2.

    f* is the largest f(delta, M) over tail lengths M; only f > 0 counts.
    The log term is capped at 0 because the entropy of the quantized field
    cannot be negative. The result is clamped at 0.
    """
    if not epsilon > 0 or not total_mass > 0 or not c_universal > 0:
        raise ParameterError("epsilon, total_mass and c_universal must be positive")
    vals = _vals(spectrum)
    lam1 = float(vals[0])
    sigma1 = math.sqrt(lam1)
    delta0 = total_mass * epsilon**2
    base = {"c_universal": c_universal, "delta0": delta0}

    def empty(reason):
        return EntropyBoundReport("lower_minor", epsilon, 0.0, epsilon / 2.0,
                                  dict(base, flag=reason), "sup_norm", measure,
                                  _source(spectrum))

    if lam1 <= delta0:
        return empty("lambda_1 <= mass * eps^2")
    # open at both ends: delta > delta0, and delta = lambda_1 gives E = 0
    deltas = np.geomspace(delta0, lam1, n_grid + 2)[1:-1]
    best = None
    for delta in deltas:
        delta = float(delta)
        n = _count_N(delta, vals)
        tail = vals[n:]
        if len(tail) == 0:
            continue
        ms = np.arange(1, len(tail) + 1)
        f = np.sqrt(n * delta + np.cumsum(tail)) - np.sqrt((n + ms) * delta0)
        j = int(np.argmax(f))
        if not f[j] > 0:
            continue
        m = int(ms[j])
        f_star = minor_f(delta, m, vals, delta0)
        if not f_star > 0:
            continue
        e_val = spectral_sum_E(delta, vals)
        v = 0.5 * e_val + 2.0 * c_universal * min(math.log(f_star / sigma1), 0.0)
        if best is None or v > best[0]:
            best = (v, delta, m, f_star, e_val)
    if best is None:
        return empty("no (delta, M) with f > 0")
    v, delta, m, f_star, e_val = best
    wit = dict(base, delta=delta, M=m, f=f_star, E=e_val, raw_value=v)
    if v < 0:
        wit["clamped"] = True
    return EntropyBoundReport("lower_minor", epsilon, max(v, 0.0), epsilon / 2.0,
                              wit, "sup_norm", measure, _source(spectrum))


# Gaussian kernel on [-1, 1]^n ------------------------------------------------

def u_func(x: float, sigma: float) -> float:
    """u(x) = (x/2) ln(2x/e) - x ln(sigma), with u(0) = 0."""
    if x == 0:
        return 0.0
    return 0.5 * x * math.log(2.0 * x / math.e) - x * math.log(sigma)


def delta_of_sigma(sigma: float) -> float:
    """Minimum of u over the non-negative integers."""
    r = math.floor(sigma**2 / 2.0)
    return min(u_func(r, sigma), u_func(r + 1, sigma))


def _q_terms(epsilon, sigma, n):
    """log of the q-th term of the max, or None when the q-th volume bound is invalid."""
    big_d = math.log(1.0 / epsilon) + n * math.log(8.0)
    dlt = delta_of_sigma(sigma)
    out = {0: 0.0}
    for q in range(1, n + 1):
        c = big_d - (n - q) * dlt
        if not c > 0:
            out[q] = None
            continue
        a = -math.log(sigma**2 * math.e / 4.0) + math.log(c) - math.log(q)
        if not a > 1:
            out[q] = None
            continue
        out[q] = (math.log(math.comb(n, q)) + q * LN2 + q * math.log(c)
                  - math.lgamma(q + 1) - math.log(q) - q * math.log(a))
    return big_d, dlt, out


def gaussian_entropy_bound(epsilon: float, sigma: float, n: int,
                           c_const: float = 1.0) -> EntropyBoundReport:
    """Integer-point entropy bound for the Gaussian kernel on [-1, 1]^n.

    The q = 0 term of the max is taken as 1 (empty product). Terms whose
    log-denominator is <= 1 are skipped; if every q >= 1 is skipped the
    bound is outside its regime and :class:`RegimeError` is raised.
    """
    if not 0 < epsilon < 1:
        raise ParameterError("epsilon must lie in (0, 1)")
    if not sigma > 0 or n < 1:
        raise ParameterError("need sigma > 0 and n >= 1")
    big_d, dlt, logs = _q_terms(epsilon, sigma, n)
    valid = {q: v for q, v in logs.items() if v is not None}
    skipped = sorted(q for q, v in logs.items() if v is None)
    if len(valid) == 1:
        raise RegimeError(
            f"eps={epsilon} is too large for the asymptotic regime at sigma={sigma}, "
            f"n={n}; try a smaller eps")
    q_star = max(valid, key=lambda q: (valid[q], -q))
    prefactor = c_const * n * 2**n * (-n * dlt + big_d)
    value = prefactor * math.exp(valid[q_star])
    return EntropyBoundReport(
        "gaussian_entropy", epsilon, value, epsilon,
        {"q": q_star, "log_term": valid[q_star], "D": big_d, "Delta": dlt,
         "C": c_const, "prefactor": prefactor, "skipped_q": skipped,
         "q0_convention": "empty product = 1"},
        "sup_norm", "uniform_lebesgue", "gaussian_bound")


def recheck_gaussian(report: EntropyBoundReport, sigma: float, n: int) -> bool:
    _, _, logs = _q_terms(report.epsilon, sigma, n)
    w = report.witnesses
    return w["prefactor"] * math.exp(logs[w["q"]]) == report.value


def integer_point_count(epsilon: float, sigma: float, n: int,
                        mode: str = "exact_enumeration",
                        max_points: int = 20_000_000) -> float:
    """|I| for I = {i in N_0^n : sum_j u(i_j) < ln(1/eps) + n ln 8}.

    ``exact_enumeration`` walks the lattice (n <= 3); ``volume_bound`` sums
    2^(n-q) C(n, q) Vol(X_q) with the closed-form volume estimate.
    """
    if not epsilon > 0 or not sigma > 0 or n < 1:
        raise ParameterError("need eps > 0, sigma > 0, n >= 1")
    big_d = math.log(1.0 / epsilon) + n * math.log(8.0)
    dlt = delta_of_sigma(sigma)

    if mode == "volume_bound":
        total = 2.0**n  # q = 0: X_0 is a point, volume taken as 1
        for q in range(1, n + 1):
            c = big_d - (n - q) * dlt
            a = -math.log(sigma**2 * math.e / 4.0) + math.log(c) - math.log(q)
            if not a > 1:
                raise RegimeError(f"volume bound invalid at q={q} (log-denominator {a:.3g} <= 1)")
            vol = math.exp(q * LN2 + q * math.log(2.0 * c) - math.lgamma(q + 1)
                           - math.log(q) - q * math.log(a))
            total += 2.0 ** (n - q) * math.comb(n, q) * vol
        return total

    if mode != "exact_enumeration":
        raise ParameterError(f"unknown mode {mode!r}")
    if n > 3 or epsilon < 1e-12:
        raise ParameterError("exact enumeration needs n <= 3 and eps >= 1e-12")

    turn = sigma**2 / 2.0
    visited = 0

    def walk(depth, budget):
        # budget: remaining room for sum of u over coordinates depth..n-1
        nonlocal visited
        rest_min = (n - depth - 1) * dlt
        count = 0
        i = 0
        while True:
            ui = u_func(i, sigma)
            if ui + rest_min < budget:
                count += 1 if depth == n - 1 else walk(depth + 1, budget - ui)
            elif i > turn:
                break
            i += 1
            visited += 1
            if visited > max_points:
                raise ResourceError("integer-point enumeration box overflow")
        return count

    return float(walk(0, big_d))


def decay_slope_check(gamma: float, c: float = 1.0, count: int = 1_000_000,
                      ns=(100, 1000, 10_000, 100_000)) -> float:
    """Log-log slope of E(c/N^gamma) against N^gamma/c for a power-law spectrum.

    Raises :class:`BoundViolation` if E(c/N^gamma) > N gamma (ln 2 + sqrt 2).
    """
    if not gamma > 0 or not c > 0:
        raise ParameterError("gamma and c must be positive")
    spec = power_law_spectrum(c, gamma, count)
    xs, ys = [], []
    for big_n in ns:
        eps = c / float(big_n) ** gamma
        e_val = spectral_sum_E(eps, spec)
        cap = big_n * gamma * (LN2 + math.sqrt(2.0))
        if e_val > cap:
            raise BoundViolation(f"E(c/N^gamma)={e_val} exceeds {cap} at N={big_n}")
        xs.append(math.log(1.0 / eps))
        ys.append(math.log(e_val))
    slope, _ = np.polyfit(xs, ys, 1)
    return float(slope)
