"""Nystrom spectrum of the Gaussian kernel on [-1, 1] and the entropy bounds it implies.

Run: python3 demos/spectrum_and_bounds.py
"""

import numpy as np

from kernel_entropy import (Domain, GaussianKernel, Measure, build_grid,
                            gaussian_eigen_bound, lower_bound_main, lower_bound_minor,
                            lower_bound_simple, nystrom_spectrum, upper_bound_main,
                            water_fill)

grid = build_grid(Domain([(-1, 1)]), Measure.uniform_lebesgue(), 200)
system = nystrom_spectrum(GaussianKernel(1.0), grid)
sp = system.spectrum.trusted()
print(f"{len(sp)} trusted eigenvalues out of {len(system.spectrum)}")

print("\n k   lambda_k      analytic bound")
for k, lam in enumerate(sp.values[:8], start=1):
    print(f"{k:2d}   {lam:.4e}    {gaussian_eigen_bound(k, 1.0):.4e}")

mass = grid.total_mass
print("\n   eps      upper   upper(eps/2)  simple   main(eps/2)  minor(eps/2)  theta*")
for eps in np.logspace(-6, 0, 7):
    up = upper_bound_main(eps, sp)
    half = upper_bound_main(eps / 2, sp).value
    lo_s = lower_bound_simple(eps, sp, mass).value
    lo_m = lower_bound_main(eps, sp, mass).value
    lo_n = lower_bound_minor(eps, sp, mass).value
    print(f"{eps:8.0e} {up.value:9.3f} {half:10.3f} {lo_s:9.3f} {lo_m:10.3f} {lo_n:12.3f}"
          f"  {up.witnesses['theta']:.2f}")

# the water level at distortion D recovers the spectral sum as a rate
sol = water_fill(1e-3, sp)
print(f"\nwater-fill at D=1e-3: level={sol.water_level:.4e}, rate={sol.rate:.4f} nats")
