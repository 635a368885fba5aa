"""Kernels, box domains, measures and quadrature grids.

Everything here is an immutable value object; the operations are plain
functions so they can be called concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product

import numpy as np
from numpy.polynomial.legendre import leggauss

from .errors import DomainError, ParameterError, ResourceError

DEFAULT_GRID_CAP = 200_000


def as_points(xs):
    """Coerce to an (m, n) array; a flat sequence is m points in one dimension."""
    xs = np.asarray(xs, dtype=float)
    if xs.ndim == 0:
        return xs.reshape(1, 1)
    if xs.ndim == 1:
        return xs[:, None]
    return xs


@dataclass(frozen=True)
class GaussianKernel:
    """K(x, y) = exp(-sigma^2 |x - y|^2)."""

    sigma: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise ParameterError(f"sigma must be positive, got {self.sigma}")

    def matrix(self, xs, ys=None):
        xs = np.atleast_2d(np.asarray(xs, dtype=float))
        ys = xs if ys is None else np.atleast_2d(np.asarray(ys, dtype=float))
        d2 = ((xs[:, None, :] - ys[None, :, :]) ** 2).sum(axis=-1)
        return np.exp(-self.sigma**2 * d2)

    def diagonal(self, xs):
        return np.ones(len(np.atleast_2d(xs)))


@dataclass(frozen=True, eq=False)
class TabulatedKernel:
    """A user-supplied kernel known only on a finite set of nodes.

    ``values[i, j]`` is K(nodes[i], nodes[j]). Evaluation at a point that is
    not one of the nodes raises :class:`DomainError`.
    """

    nodes: np.ndarray
    values: np.ndarray
    atol: float = 1e-12

    def __post_init__(self):
        nodes = as_points(self.nodes).copy()
        values = np.asarray(self.values, dtype=float)
        if values.shape != (len(nodes), len(nodes)):
            raise ParameterError(
                f"values must be {len(nodes)}x{len(nodes)}, got {values.shape}")
        scale = max(np.abs(values).max(initial=0.0), np.finfo(float).tiny)
        if np.abs(values - values.T).max(initial=0.0) > 1e-12 * scale:
            raise ParameterError("tabulated kernel matrix is not symmetric")
        nodes.setflags(write=False)
        values = values.copy()
        values.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_function(cls, func, nodes):
        nodes = as_points(nodes)
        vals = np.array([[func(a, b) for b in nodes] for a in nodes])
        return cls(nodes, 0.5 * (vals + vals.T))

    @classmethod
    def constant(cls, c, nodes):
        nodes = as_points(nodes)
        return cls(nodes, np.full((len(nodes), len(nodes)), float(c)))

    def index_of(self, points):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        d = np.abs(points[:, None, :] - self.nodes[None, :, :]).max(axis=-1)
        idx = d.argmin(axis=1)
        if np.any(d[np.arange(len(points)), idx] > self.atol):
            raise DomainError("point is not a node of the tabulated kernel")
        return idx

    def matrix(self, xs, ys=None):
        i = self.index_of(xs)
        j = i if ys is None else self.index_of(ys)
        return self.values[np.ix_(i, j)]

    def diagonal(self, xs):
        i = self.index_of(xs)
        return self.values[i, i]


KernelSpec = GaussianKernel | TabulatedKernel


@dataclass(frozen=True)
class Domain:
    """Closed box [a_1, b_1] x ... x [a_n, b_n]."""

    box: tuple

    def __post_init__(self):
        box = tuple((float(a), float(b)) for a, b in self.box)
        if not box:
            raise ParameterError("domain needs at least one interval")
        for a, b in box:
            if not a < b:
                raise ParameterError(f"empty interval [{a}, {b}]")
        object.__setattr__(self, "box", box)

    @property
    def dim(self):
        return len(self.box)

    @property
    def volume(self):
        return float(np.prod([b - a for a, b in self.box]))

    def contains(self, x, tol=1e-12):
        x = np.asarray(x, dtype=float).reshape(-1)
        if x.size != self.dim:
            return False
        lo = np.array([a for a, _ in self.box])
        hi = np.array([b for _, b in self.box])
        return bool(np.all(x >= lo - tol) and np.all(x <= hi + tol))


@dataclass(frozen=True, eq=False)
class Measure:
    """One of ``uniform_normalized``, ``uniform_lebesgue`` or ``empirical``."""

    kind: str = "uniform_normalized"
    points: np.ndarray | None = field(default=None, repr=False)

    KINDS = ("uniform_normalized", "uniform_lebesgue", "empirical")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ParameterError(f"unknown measure {self.kind!r}")
        if self.kind == "empirical":
            if self.points is None or len(self.points) == 0:
                raise ParameterError("empirical measure needs points")
            pts = np.asarray(self.points, dtype=float)
            if pts.ndim == 1:
                pts = pts[:, None]
            object.__setattr__(self, "points", pts)

    @classmethod
    def uniform_normalized(cls):
        return cls("uniform_normalized")

    @classmethod
    def uniform_lebesgue(cls):
        return cls("uniform_lebesgue")

    @classmethod
    def empirical(cls, points):
        return cls("empirical", points)

    def total_mass(self, domain: Domain) -> float:
        if self.kind == "uniform_lebesgue":
            return domain.volume
        return 1.0


@dataclass(frozen=True, eq=False)
class Grid:
    nodes: np.ndarray
    weights: np.ndarray
    total_mass: float
    measure_kind: str = "uniform_normalized"

    def __len__(self):
        return len(self.weights)


def eval_kernel(spec: KernelSpec, x, y, domain: Domain | None = None) -> float:
    """Evaluate K(x, y); with ``domain`` given, both points are range-checked."""
    if domain is not None:
        for p in (x, y):
            if not domain.contains(p):
                raise DomainError(f"point {np.asarray(p).tolist()} outside {domain.box}")
    x = np.asarray(x, dtype=float).reshape(1, -1)
    y = np.asarray(y, dtype=float).reshape(1, -1)
    return float(spec.matrix(x, y)[0, 0])


def kernel_matrix(spec: KernelSpec, nodes) -> np.ndarray:
    """Unnormalized kernel matrix [K(x_i, x_j)], exactly symmetrized."""
    k = spec.matrix(nodes)
    return 0.5 * (k + k.T)


def build_grid(domain: Domain, measure: Measure, nodes_per_dim: int = 2,
               cap: int = DEFAULT_GRID_CAP) -> Grid:
    """Tensor-product Gauss-Legendre grid for integrating against ``measure``.

    For an empirical measure the nodes are the data points with weight 1/m
    and ``nodes_per_dim`` is ignored.
    """
    mass = measure.total_mass(domain)
    if measure.kind == "empirical":
        pts = measure.points
        if pts.shape[1] != domain.dim:
            raise ParameterError("empirical points have wrong dimension")
        for p in pts:
            if not domain.contains(p):
                raise DomainError(f"empirical point {p.tolist()} outside domain")
        m = len(pts)
        return Grid(pts.copy(), np.full(m, 1.0 / m), 1.0, measure.kind)

    if nodes_per_dim < 2:
        raise ParameterError("nodes_per_dim must be at least 2")
    if nodes_per_dim ** domain.dim > cap:
        raise ResourceError(
            f"{nodes_per_dim}^{domain.dim} nodes exceeds the grid cap {cap}")
    t, w = leggauss(nodes_per_dim)
    axes_x, axes_w = [], []
    for a, b in domain.box:
        axes_x.append(0.5 * (b - a) * t + 0.5 * (a + b))
        axes_w.append(0.5 * (b - a) * w)
    nodes = np.array(list(product(*axes_x)))
    weights = np.array([np.prod(c) for c in product(*axes_w)])
    weights *= mass / weights.sum()
    return Grid(nodes, weights, mass, measure.kind)


def sup_diag(spec: KernelSpec, domain: Domain | None = None,
             grid: Grid | None = None) -> float:
    """D_K = max sqrt(K(x, x)).

    Exact for Gaussian kernels; for tabulated kernels this is the maximum over
    the grid nodes (or over all tabulated nodes when no grid is given).
    """
    if isinstance(spec, GaussianKernel):
        return 1.0
    nodes = spec.nodes if grid is None else grid.nodes
    if len(nodes) == 0:
        raise ParameterError("grid is empty")
    return float(np.sqrt(np.clip(spec.diagonal(nodes), 0.0, None).max()))
