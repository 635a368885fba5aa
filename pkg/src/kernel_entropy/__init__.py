"""Spectral bounds on the eps-entropy of RKHS unit balls, with numerical oracles."""

from .errors import (BoundViolation, BudgetError, ConfigError, DomainError,
                     KernelEntropyError, NumericError, ParameterError,
                     RegimeError, ResourceError)
from .kernels import (Domain, GaussianKernel, Grid, Measure, TabulatedKernel,
                      build_grid, eval_kernel, kernel_matrix, sup_diag)
from .spectrum import (EigenSystem, Spectrum, gaussian_bound_spectrum,
                       gaussian_eigen_bound, mercer_tail, nystrom_spectrum,
                       power_law_spectrum, read_spectrum_csv, tensor_spectrum,
                       write_spectrum_csv)
from .bounds import (EntropyBoundReport, WaterFillSolution, count_above_m,
                     decay_slope_check, delta_of_sigma, dpp_ellipsoid_bound,
                     gaussian_entropy_bound, integer_point_count,
                     lower_bound_main, lower_bound_minor, lower_bound_simple,
                     spectral_sum_E, upper_bound_main, water_fill)

__version__ = "0.1.0"
