"""Eigenvalue sequences of kernel integral operators.

Sources: symmetrized Nystrom on a quadrature grid, the analytic upper bound
for the Gaussian kernel on [-1, 1], n-fold products of 1-D spectra, and
synthetic power laws.
"""

from __future__ import annotations

import csv
import heapq
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.linalg

from .errors import NumericError, ParameterError, ResourceError
from .kernels import Grid, kernel_matrix

SOURCES = ("nystrom", "gaussian_bound", "tensor", "power_law", "explicit")
CSV_VERSION_LINE = "#kernel-entropy v1"
DEFAULT_NYSTROM_CAP = 12_000


@dataclass(frozen=True, eq=False)
class Spectrum:
    values: np.ndarray
    source: str = "explicit"
    truncation_note: str = ""
    complete: bool = True

    def __post_init__(self):
        vals = np.array(self.values, dtype=float).reshape(-1)
        if self.source not in SOURCES:
            raise ParameterError(f"unknown spectrum source {self.source!r}")
        if not np.all(np.isfinite(vals)):
            raise ParameterError("spectrum contains non-finite values")
        if np.any(vals < 0):
            raise ParameterError("spectrum contains negative values")
        if np.any(np.diff(vals) > 0):
            raise ParameterError("spectrum is not in descending order")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    def __len__(self):
        return len(self.values)

    @property
    def lambda1(self) -> float:
        return float(self.values[0]) if len(self.values) else 0.0

    def trust_threshold(self, factor: float = 1e3) -> float:
        """Eigenvalues below ``factor * eps * lambda_1`` are rounding noise."""
        return factor * np.finfo(float).eps * self.lambda1

    def trusted(self, factor: float = 1e3) -> "Spectrum":
        keep = self.values[self.values > self.trust_threshold(factor)]
        return Spectrum(keep, self.source, self.truncation_note, self.complete)

    def head(self, k: int) -> "Spectrum":
        return Spectrum(self.values[:k], self.source, self.truncation_note, self.complete)


@dataclass(frozen=True, eq=False)
class EigenSystem:
    """Spectrum plus eigenfunctions sampled at the grid nodes.

    Column j of ``eigvecs`` holds phi_j at the nodes, orthonormal under the
    grid weights.
    """

    spectrum: Spectrum
    eigvecs: np.ndarray
    grid: Grid

    @property
    def values(self):
        return self.spectrum.values


def nystrom_spectrum(spec, grid: Grid, k_max: int | None = None,
                     cap: int = DEFAULT_NYSTROM_CAP) -> EigenSystem:
    """Eigenpairs of the integral operator discretized on ``grid``.

    Solves the symmetric problem W^1/2 K W^1/2 u = lambda u and maps u back to
    samples of phi via phi = W^-1/2 u.
    """
    n = len(grid)
    if k_max is None:
        k_max = n
    if not 1 <= k_max <= n:
        raise ParameterError(f"k_max must lie in [1, {n}], got {k_max}")
    if n > cap:
        raise ResourceError(f"{n} nodes exceeds the eigensolver cap {cap}")

    kmat = kernel_matrix(spec, grid.nodes)
    sw = np.sqrt(grid.weights)
    a = sw[:, None] * kmat * sw[None, :]
    try:
        lam, u = scipy.linalg.eigh(a)
    except (np.linalg.LinAlgError, ValueError) as exc:
        diag = np.diag(a)
        raise NumericError(
            f"eigensolve failed on {n}x{n} matrix (diag range "
            f"[{diag.min():.3e}, {diag.max():.3e}], "
            f"frobenius {np.linalg.norm(a):.3e}): {exc}") from exc

    lam = lam[::-1][:k_max]
    u = u[:, ::-1][:, :k_max]
    negative = lam < 0
    note = f"nystrom on {n} nodes, kept top {k_max}"
    if negative.any():
        note += f"; clipped {int(negative.sum())} negative eigenvalues (min {lam.min():.3e})"
    lam = np.maximum(lam, 0.0)
    # eigh output is sorted up to rounding; enforce monotonicity after clipping
    lam = np.minimum.accumulate(lam)

    trace_cap = grid.total_mass * float(np.max(np.diag(kmat))) + 1e-8
    if lam.sum() > trace_cap:
        raise NumericError(f"trace bound violated: {lam.sum()} > {trace_cap}")

    phi = u / sw[:, None]
    return EigenSystem(Spectrum(lam, "nystrom", note), phi, grid)


def gaussian_eigen_bound(k: int, sigma: float) -> float:
    """Upper bound on the k-th eigenvalue of exp(-sigma^2 (x-y)^2) on [-1, 1].

    8 * (2 (k-1) / e)^(-(k-1)/2) * sigma^(k-1), evaluated in log space with
    0^0 = 1 so that k = 1 gives 8.
    """
    if k < 1:
        raise ParameterError("k must be >= 1")
    if not sigma > 0:
        raise ParameterError("sigma must be positive")
    j = k - 1
    if j == 0:
        return 8.0
    log_val = math.log(8.0) - 0.5 * j * math.log(2.0 * j / math.e) + j * math.log(sigma)
    return math.exp(log_val)


def gaussian_bound_spectrum(sigma: float, k_max: int) -> Spectrum:
    if k_max < 1:
        raise ParameterError("k_max must be >= 1")
    vals = sorted((gaussian_eigen_bound(k, sigma) for k in range(1, k_max + 1)),
                  reverse=True)
    return Spectrum(np.array(vals), "gaussian_bound",
                    f"analytic bound, sigma={sigma!r}, k_max={k_max}, sorted")


def tensor_spectrum(factors, cutoff: float, cap: int = 1_000_000) -> Spectrum:
    """All n-fold products of factor eigenvalues that are >= ``cutoff``.

    Products come out in descending order from a best-first search over
    index tuples, so only the frontier above the cutoff is ever visited.
    """
    if not cutoff > 0:
        raise ParameterError("cutoff must be positive")
    facs = [np.asarray(f.values if isinstance(f, Spectrum) else f, dtype=float)
            for f in factors]
    if not facs or any(len(f) == 0 for f in facs):
        raise ParameterError("need at least one nonempty factor")
    for f in facs:
        if np.any(np.diff(f) > 0):
            raise ParameterError("tensor factors must be descending")

    def prod(idx):
        return math.prod(float(f[i]) for f, i in zip(facs, idx))

    start = (0,) * len(facs)
    heap = [(-prod(start), start)]
    seen = {start}
    out = []
    complete = True
    while heap:
        neg, idx = heap[0]
        if -neg < cutoff:
            break
        if len(out) >= cap:
            complete = False
            break
        heapq.heappop(heap)
        out.append(-neg)
        for d in range(len(facs)):
            if idx[d] + 1 < len(facs[d]):
                nxt = idx[:d] + (idx[d] + 1,) + idx[d + 1:]
                if nxt not in seen:
                    seen.add(nxt)
                    heapq.heappush(heap, (-prod(nxt), nxt))

    note = f"{len(facs)}-fold products >= {cutoff!r}"
    if not complete:
        note += f"; INCOMPLETE, truncated at cap={cap}"
    return Spectrum(np.array(out), "tensor", note, complete)


def power_law_spectrum(c: float, gamma: float, count: int) -> Spectrum:
    if count < 1 or not c > 0 or not gamma > 0:
        raise ParameterError("need c > 0, gamma > 0, count >= 1")
    vals = c / np.arange(1, count + 1, dtype=float) ** gamma
    return Spectrum(vals, "power_law", f"c={c!r}, gamma={gamma!r}, count={count}")


def mercer_tail(system: EigenSystem, spec, grid: Grid | None = None,
                n_keep: int = 0) -> float:
    """sup_x sqrt(K(x,x) - sum_{i<=n_keep} lambda_i phi_i(x)^2) over grid nodes."""
    grid = system.grid if grid is None else grid
    if not 0 <= n_keep <= system.eigvecs.shape[1]:
        raise ParameterError("n_keep exceeds the number of computed eigenpairs")
    diag = np.asarray(spec.diagonal(grid.nodes), dtype=float)
    phi = system.eigvecs[:, :n_keep]
    recon = (phi**2 * system.values[:n_keep]).sum(axis=1)
    return float(np.sqrt(np.clip(diag - recon, 0.0, None).max()))


def write_spectrum_csv(spectrum: Spectrum, path) -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        fh.write(CSV_VERSION_LINE + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", "lambda"])
        for i, v in enumerate(spectrum.values, start=1):
            w.writerow([i, repr(float(v))])


def read_spectrum_csv(path, source: str = "explicit") -> Spectrum:
    rows = []
    with Path(path).open(newline="") as fh:
        lines = (ln for ln in fh if not ln.startswith("#"))
        reader = csv.DictReader(lines)
        if reader.fieldnames != ["index", "lambda"]:
            raise ParameterError(f"expected header index,lambda in {path}")
        for row in reader:
            rows.append((int(row["index"]), float(row["lambda"])))
    rows.sort()
    if [i for i, _ in rows] != list(range(1, len(rows) + 1)):
        raise ParameterError(f"indices in {path} are not 1..n")
    return Spectrum(np.array([v for _, v in rows]), source, f"read from {Path(path).name}")
