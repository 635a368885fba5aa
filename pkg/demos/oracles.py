"""Numerical oracles against the closed-form bounds.

Rademacher Monte Carlo vs the spectral certificate, greedy packing/covering
of a small ellipsoid vs the ellipsoid bound, KKL covariance, and the chi
quantizer entropy slope.

Run: python3 demos/oracles.py
"""

import math

import numpy as np

from kernel_entropy import (Domain, GaussianKernel, Measure, build_grid,
                            gaussian_bound_spectrum, nystrom_spectrum)
from kernel_entropy.validate import (EllipsoidInstance, dpp_best, entropy_slope,
                                     gram_spectrum, greedy_cover, greedy_pack,
                                     rademacher_bound, rademacher_mc, suite_kkl)

rng = np.random.default_rng(1)
kern = GaussianKernel(1.0)
for m in (10, 50, 200):
    pts = rng.uniform(-1, 1, size=(m, 1))
    mc = rademacher_mc(kern, pts, 10_000, seed=m)
    print(f"rademacher m={m:3d}: MC {mc.mean:.4f} +- {mc.stderr:.4f}, "
          f"bound {rademacher_bound(gram_spectrum(kern, pts)):.4f}")

sp = gaussian_bound_spectrum(1.0, 3)
axes = sp.values / sp.values[0]
ell = EllipsoidInstance(axes)
for eps in (0.1, 0.2, 0.4):
    pack = greedy_pack(ell, eps, 50_000)
    cover = greedy_cover(ell, eps, 50_000)
    print(f"ellipsoid eps={eps}: pack {pack}, cover {cover}, "
          f"ln pack {math.log(pack):.3f} <= bound {dpp_best(axes, eps):.3f}")

grid = build_grid(Domain([(-1, 1)]), Measure.uniform_lebesgue(), 200)
system = nystrom_spectrum(kern, grid)
for c in suite_kkl(system, samples=10_000, pairs=5, seed=3):
    print(f"{c.check_name}: {c.status} lhs={c.lhs:.3e} rhs={c.rhs:.3e}")

steps = [2.0**-k for k in range(2, 11)]
for n in (1, 10, 100):
    print(f"chi quantizer N={n}: slope {entropy_slope(n, steps)[0]:.4f}")
