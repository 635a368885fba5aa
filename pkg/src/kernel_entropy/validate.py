"""Independent numerical oracles for the closed-form bounds.

Monte-Carlo Rademacher complexity, greedy covering and packing of ellipsoids
and of truncated RKHS balls, Karhunen-Loeve field sampling, and the entropy of
a quantized chi variable. Everything stochastic is driven by an explicit seed.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.spatial import cKDTree
from scipy.special import gammainc, gammaincc
from scipy.stats import qmc

from .bounds import DEFAULT_THETA_GRID, dpp_ellipsoid_bound, upper_bound_main
from .errors import BudgetError, NumericError, ParameterError
from .kernels import kernel_matrix, sup_diag
from .spectrum import EigenSystem, mercer_tail

MAX_COVER_DIM = 8


# Rademacher complexity --------------------------------------------------------

@dataclass(frozen=True, eq=False)
class GramSpectrum:
    eigenvalues: np.ndarray
    points: np.ndarray
    c_x: float
    trace: float

    @property
    def m(self):
        return len(self.points)


def gram_spectrum(spec, points) -> GramSpectrum:
    """Eigenvalues of (1/m)[K(x_i, x_j)], descending and clipped at 0."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    m = len(pts)
    if m < 1:
        raise ParameterError("need at least one point")
    g = kernel_matrix(spec, pts) / m
    try:
        lam = np.linalg.eigvalsh(g)[::-1]
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"Gram eigensolve failed for m={m}: {exc}") from exc
    lam = np.minimum.accumulate(np.maximum(lam, 0.0))
    return GramSpectrum(lam, pts, math.sqrt(lam[0]), float(np.trace(g)))


def g_branch(x: float) -> float:
    """2x for x <= 1, ln x + 2 above; continuous at x = 1 and never negative."""
    return 2.0 * x if x <= 1.0 else math.log(x) + 2.0


def rademacher_bound(gram: GramSpectrum) -> float:
    """(6 c_X / sqrt m) * sqrt(sum_p g(2 delta_p / c_X)), delta_p = lambda_p sqrt(lambda_1)."""
    c = gram.c_x
    if c == 0.0:
        return 0.0
    lam1 = gram.eigenvalues[0]
    deltas = gram.eigenvalues * math.sqrt(lam1)
    total = math.fsum(g_branch(2.0 * d / c) for d in deltas)
    return 6.0 * c / math.sqrt(gram.m) * math.sqrt(total)


@dataclass(frozen=True)
class MCResult:
    mean: float
    stderr: float
    trials: int
    seed: int


def _child_rngs(seed, n):
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(n)]


def rademacher_mc(spec, points, trials: int, seed: int, batch: int = 1000) -> MCResult:
    """Average of sup_{|f|_H <= 1} (1/m) sum sigma_i f(x_i) = sqrt(sigma' G sigma)/m.

    Trials are split into fixed-size batches, each with its own child seed,
    so the result does not depend on how batches are scheduled.
    """
    if trials < 1:
        raise ParameterError("trials must be >= 1")
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    m = len(pts)
    g = kernel_matrix(spec, pts)
    n_batches = -(-trials // batch)
    out = []
    for b, rng in enumerate(_child_rngs(seed, n_batches)):
        size = min(batch, trials - b * batch)
        s = rng.integers(0, 2, size=(size, m)) * 2.0 - 1.0
        q = np.einsum("ti,ij,tj->t", s, g, s)
        out.append(np.sqrt(np.maximum(q, 0.0)) / m)
    vals = np.concatenate(out)
    se = float(vals.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    return MCResult(float(vals.mean()), se, trials, seed)


# Covering and packing ---------------------------------------------------------

@dataclass(frozen=True, eq=False)
class EllipsoidInstance:
    """{x : sum x_i^2 / a_i^2 <= 1} under the euclidean or a weighted metric.

    The weighted metric is |x|^2 = sum x_i^2 / w_i.
    """

    semi_axes: np.ndarray
    metric: str = "euclidean"
    weights: np.ndarray | None = None

    def __post_init__(self):
        a = np.asarray(self.semi_axes, dtype=float).reshape(-1)
        if len(a) < 1 or np.any(a <= 0):
            raise ParameterError("semi-axes must be positive and nonempty")
        if np.any(np.diff(a) > 0):
            raise ParameterError("semi-axes must be descending")
        object.__setattr__(self, "semi_axes", a)
        if self.metric == "weighted":
            w = np.asarray(self.weights, dtype=float).reshape(-1)
            if w.shape != a.shape or np.any(w <= 0):
                raise ParameterError("weighted metric needs one positive weight per axis")
            object.__setattr__(self, "weights", w)
        elif self.metric != "euclidean":
            raise ParameterError(f"unknown metric {self.metric!r}")

    @property
    def dim(self):
        return len(self.semi_axes)

    def reduced(self) -> "EllipsoidInstance":
        """Euclidean instance isometric to this one (y_i = x_i / sqrt(w_i))."""
        if self.metric == "euclidean":
            return self
        axes = self.semi_axes / np.sqrt(self.weights)
        order = np.argsort(-axes, kind="stable")
        return EllipsoidInstance(axes[order])


def ellipsoid_samples(ell: EllipsoidInstance, n: int, seed: int) -> np.ndarray:
    """``n`` scrambled-Sobol points inside the euclidean ellipsoid, sorted by x_1."""
    d = ell.dim
    if d > MAX_COVER_DIM:
        raise ParameterError(f"dimension {d} exceeds the covering guard {MAX_COVER_DIM}")
    sampler = qmc.Sobol(d, scramble=True, seed=np.random.default_rng(seed))
    accept = math.gamma(0.5 * d + 1) ** -1 * math.pi ** (0.5 * d) / 2.0**d
    pts = []
    have = 0
    while have < n:
        k = max(1, math.ceil(math.log2(1.25 * (n - have) / accept + 1)))
        u = sampler.random_base2(k) * 2.0 - 1.0
        u = u[(u**2).sum(axis=1) <= 1.0]
        pts.append(u)
        have += len(u)
    x = np.concatenate(pts)[:n] * ell.semi_axes
    return x[np.argsort(x[:, 0], kind="stable")]


def _greedy_cover(n_pts, eps, ball, first_coord, max_centers, max_candidates):
    """Greedy set cover of sample points by eps-balls centred at sample points.

    ``ball(idx, r)`` returns, for each index in ``idx``, the indices of points
    within distance r. Points are visited in ascending first coordinate; for
    the first uncovered point p the chosen centre is the candidate within eps
    of p covering the most uncovered points.
    """
    covered = np.zeros(n_pts, dtype=bool)
    centers = 0
    for p in range(n_pts):
        if covered[p]:
            continue
        near = np.asarray(ball(np.array([p]), eps)[0], dtype=int)
        near = near[np.argsort(first_coord[near], kind="stable")]
        if len(near) > max_candidates:
            near = near[np.unique(np.linspace(0, len(near) - 1, max_candidates).round().astype(int))]
        nbrs = ball(near, eps)
        gains = [int(np.count_nonzero(~covered[np.asarray(nb, dtype=int)])) for nb in nbrs]
        best = int(np.argmax(gains))
        covered[np.asarray(nbrs[best], dtype=int)] = True
        covered[p] = True
        centers += 1
        if centers > max_centers:
            raise BudgetError(
                f"more than {max_centers} centres at eps={eps}; sample budget too small")
    return centers


def _greedy_pack(n_pts, sep, ball):
    """Greedy maximal set with pairwise distance > sep, in visiting order."""
    blocked = np.zeros(n_pts, dtype=bool)
    count = 0
    for p in range(n_pts):
        if blocked[p]:
            continue
        count += 1
        blocked[np.asarray(ball(np.array([p]), sep)[0], dtype=int)] = True
    return count


def _tree_ball(pts):
    tree = cKDTree(pts)

    def ball(idx, r):
        # distance <= r, matching "inside the closed ball"
        return tree.query_ball_point(pts[idx], r)

    return ball


def greedy_cover(ell: EllipsoidInstance, epsilon: float, sample_budget: int = 100_000,
                 seed: int = 0, max_candidates: int = 32) -> int:
    """Empirical count of eps-balls needed to cover quasi-uniform samples of the ellipsoid.

    This is an estimate, not a certificate.
    """
    if not epsilon > 0:
        raise ParameterError("epsilon must be positive")
    e = ell.reduced()
    if epsilon >= e.semi_axes[0]:
        return 1
    pts = ellipsoid_samples(e, sample_budget, seed)
    return _greedy_cover(len(pts), epsilon, _tree_ball(pts), pts[:, 0],
                         sample_budget // 10, max_candidates)


def greedy_pack(ell: EllipsoidInstance, epsilon: float, sample_budget: int = 100_000,
                seed: int = 0) -> int:
    """Size of a greedy 2 eps-separated subset of the samples (lower-bounds N_ext(eps))."""
    if not epsilon > 0:
        raise ParameterError("epsilon must be positive")
    e = ell.reduced()
    if 2.0 * epsilon >= 2.0 * e.semi_axes[0]:
        return 1
    pts = ellipsoid_samples(e, sample_budget, seed)
    # strict separation: block everything at distance <= 2 eps
    return _greedy_pack(len(pts), 2.0 * epsilon, _tree_ball(pts))


def dpp_best(axes, epsilon: float, theta_grid=DEFAULT_THETA_GRID) -> float:
    """min over theta of the ellipsoid bound for the instance rescaled by 1/eps."""
    scaled = np.sort(np.asarray(axes, dtype=float) / epsilon)[::-1]
    return min(dpp_ellipsoid_bound(scaled, t) for t in theta_grid)


def function_ball_samples(system: EigenSystem, n_keep: int, n: int, seed: int):
    """Coefficients a and grid values of f = sum a_i phi_i with sum a_i^2/lambda_i <= 1."""
    lam = np.asarray(system.values[:n_keep])
    z = ellipsoid_samples(EllipsoidInstance(np.ones(n_keep)), n, seed)
    a = z * np.sqrt(lam)
    return a, a @ system.eigvecs[:, :n_keep].T


def function_cover_probe(system: EigenSystem, n_keep: int, epsilon: float,
                         budget: int = 4000, seed: int = 0,
                         max_candidates: int = 16) -> int:
    """Greedy sup-norm cover count of the RKHS ball truncated to ``n_keep`` modes."""
    if not 1 <= n_keep <= min(6, system.eigvecs.shape[1]):
        raise ParameterError("n_keep must lie in [1, 6] and within the computed modes")
    if not epsilon > 0:
        raise ParameterError("epsilon must be positive")
    _, vals = function_ball_samples(system, n_keep, budget, seed)
    if epsilon >= np.abs(vals).max():
        return 1  # the zero function lies in the ball and covers every sample

    def ball(idx, r):
        out = []
        for i in idx:
            d = np.abs(vals - vals[i]).max(axis=1)
            out.append(np.flatnonzero(d <= r))
        return out

    return _greedy_cover(len(vals), epsilon, ball, np.arange(len(vals)),
                         budget // 10, max_candidates)


# Karhunen-Loeve sampling ------------------------------------------------------

@dataclass(frozen=True, eq=False)
class GrfSample:
    coefficients: np.ndarray
    values: np.ndarray
    seed: int | None


def kkl_sample(system: EigenSystem, n_modes: int, seed: int | None = 0, size: int = 1,
               coefficients=None) -> GrfSample:
    """xi(x) = sum_i sqrt(lambda_i) xi_i phi_i(x) at the grid nodes.

    ``coefficients`` (size x n_modes) overrides the random draw.
    """
    if not 1 <= n_modes <= system.eigvecs.shape[1]:
        raise ParameterError("n_modes exceeds the available eigenpairs")
    if coefficients is None:
        xi = np.random.default_rng(seed).standard_normal((size, n_modes))
    else:
        xi = np.atleast_2d(np.asarray(coefficients, dtype=float))
        if xi.shape[1] != n_modes:
            raise ParameterError("coefficient array has the wrong number of modes")
    sig = np.sqrt(system.values[:n_modes])
    vals = (xi * sig) @ system.eigvecs[:, :n_modes].T
    return GrfSample(xi, vals, seed)


def rkhs_norm_sq(system: EigenSystem, values, n_modes: int) -> np.ndarray:
    """|f|_H^2 = sum <f, phi_i>^2 / lambda_i for fields in the span of the first modes."""
    w = system.grid.weights
    proj = np.atleast_2d(values) @ (system.eigvecs[:, :n_modes] * w[:, None])
    return (proj**2 / system.values[:n_modes]).sum(axis=1)


def mercer_cov(system: EigenSystem, n_modes: int, i: int, j: int) -> float:
    phi = system.eigvecs
    return float(np.sum(system.values[:n_modes] * phi[i, :n_modes] * phi[j, :n_modes]))


# Quantizer entropy ------------------------------------------------------------

CHI_TAIL = 9.5


def chi_cell_masses(n_dof: int, step: float) -> np.ndarray:
    """Probabilities of the cells [k step, (k+1) step) for Z ~ chi(n_dof).

    Cell masses come from the regularized incomplete gamma function; upper
    tail cells use the complement for relative accuracy. Support is cut at
    sqrt(n) + 9.5, beyond which the mass is below 1e-19.
    """
    if n_dof < 1 or not step > 0:
        raise ParameterError("need n_dof >= 1 and step > 0")
    top = math.sqrt(n_dof) + CHI_TAIL
    edges = np.arange(0, math.ceil(top / step) + 1) * step
    a = 0.5 * n_dof
    x = 0.5 * edges**2
    lower = np.diff(gammainc(a, x))
    upper = -np.diff(gammaincc(a, x))
    mode = math.sqrt(max(n_dof - 1, 0))
    p = np.where(edges[:-1] >= mode, upper, lower)
    p = np.clip(p, 0.0, None)
    p = p[p >= 1e-16]
    return p


def chi_quantizer_entropy(n_dof: int, step: float) -> float:
    """Shannon entropy (nats) of step * floor(Z / step), Z ~ chi(n_dof)."""
    p = chi_cell_masses(n_dof, step)
    p = p / p.sum()
    return float(-np.sum(p * np.log(p)))


def estimate_universal_c(n_dof_list, step_list) -> float:
    """max over the grid of H(N, step) / ln(1/step)."""
    n_dof_list, step_list = list(n_dof_list), list(step_list)
    if not n_dof_list or not step_list:
        raise ParameterError("need nonempty lists")
    if any(not 0 < s < 1 for s in step_list):
        raise ParameterError("steps must lie in (0, 1)")
    return max(chi_quantizer_entropy(n, s) / math.log(1.0 / s)
               for n in n_dof_list for s in step_list)


def entropy_slope(n_dof: int, steps) -> tuple[float, float]:
    """Least-squares slope and offset of H against ln(1/step)."""
    xs = np.log(1.0 / np.asarray(steps, dtype=float))
    ys = [chi_quantizer_entropy(n_dof, s) for s in steps]
    slope, offset = np.polyfit(xs, ys, 1)
    return float(slope), float(offset)


# Check reports ----------------------------------------------------------------

@dataclass
class CheckResult:
    check_name: str
    status: str
    lhs: float
    rhs: float
    margin: float
    seed: int | None = None
    parameters: dict = field(default_factory=dict)

    def to_dict(self):
        return asdict(self)


def check_leq(name, lhs, rhs, seed=None, **params) -> CheckResult:
    """A check that passes when lhs <= rhs; margin = rhs - lhs."""
    lhs, rhs = float(lhs), float(rhs)
    return CheckResult(name, "pass" if lhs <= rhs else "fail", lhs, rhs, rhs - lhs,
                       seed, params)


def suite_rademacher(spec, m=50, trials=10_000, seed=0, dim=1):
    rng = np.random.default_rng(seed)
    pts = rng.uniform(-1, 1, size=(m, dim))
    gram = gram_spectrum(spec, pts)
    mc = rademacher_mc(spec, pts, trials, seed)
    bound = rademacher_bound(gram)
    return [check_leq("rademacher_sandwich", mc.mean + 3 * mc.stderr, bound, seed,
                      m=m, trials=trials, mc_mean=mc.mean, mc_stderr=mc.stderr)]


def suite_covering(axes, eps_list=(0.1, 0.2, 0.4), budget=100_000, seed=0):
    out = []
    ell = EllipsoidInstance(axes)
    for eps in eps_list:
        pack = greedy_pack(ell, eps, budget, seed)
        cover = greedy_cover(ell, eps, budget, seed)
        params = dict(axes=[float(a) for a in ell.semi_axes], epsilon=eps, budget=budget)
        out.append(check_leq("pack_le_cover", pack, cover, seed, **params))
        out.append(check_leq("log_pack_le_dpp", math.log(pack), dpp_best(ell.semi_axes, eps),
                             seed, **params))
    return out


def suite_function_probe(system, spec, n_keep=4, epsilon=0.3, budget=4000, seed=0,
                         scale=None):
    tail = mercer_tail(system, spec, n_keep=n_keep)
    eff = epsilon - tail
    if not eff > 0:
        return [CheckResult("function_cover_probe", "pass", 0.0, 0.0, 0.0, seed,
                            {"skipped": "eps <= mercer tail", "tail": tail})]
    scale = sup_diag(spec, grid=system.grid) if scale is None else scale
    count = function_cover_probe(system, n_keep, epsilon, budget, seed)
    ub = upper_bound_main(eff, system.spectrum.trusted(), scale).value
    return [check_leq("function_cover_probe", math.log(count), ub, seed,
                      n_keep=n_keep, epsilon=epsilon, mercer_tail=tail, count=count)]


def suite_kkl(system, n_modes=None, samples=10_000, pairs=10, seed=0):
    n_modes = n_modes or len(system.spectrum.trusted())
    s = kkl_sample(system, n_modes, seed, size=samples)
    rng = np.random.default_rng(np.random.SeedSequence(seed).spawn(1)[0])
    nodes = len(system.grid)
    out = []
    for _ in range(pairs):
        i, j = (int(v) for v in rng.integers(0, nodes, size=2))
        x, y = s.values[:, i], s.values[:, j]
        prod = (x - x.mean()) * (y - y.mean())
        emp = prod.sum() / (samples - 1)
        se = prod.std(ddof=1) / math.sqrt(samples)
        true = mercer_cov(system, n_modes, i, j)
        out.append(check_leq("kkl_covariance", abs(emp - true), 5 * se, seed,
                             i=i, j=j, empirical=float(emp), mercer=true))
    norms = rkhs_norm_sq(system, s.values[:100], n_modes)
    err = float(np.max(np.abs(norms - (s.coefficients[:100] ** 2).sum(axis=1))
                       / np.maximum(1.0, norms)))
    out.append(check_leq("kkl_norm_identity", err, 1e-6, seed))
    return out


def suite_quantizer(n_dofs=(1, 10, 100), steps=tuple(2.0**-k for k in range(2, 11))):
    out = []
    for n in n_dofs:
        slope, _ = entropy_slope(n, steps)
        out.append(CheckResult("quantizer_slope", "pass" if 0.9 <= slope <= 1.1 else "fail",
                               slope, 1.0, 0.1 - abs(slope - 1.0), None, {"n_dof": n}))
    return out
