"""Numerics for thin elastic plates prestrained by a weak incompatible metric.

The package evaluates and minimizes the three-dimensional slab energy of a
prestrained plate, builds explicit near-minimizing deformations from smooth
displacements, and compares rescaled energies against the dimension-reduced
bending functional that governs the small-thickness limit.
"""
from .bending import (BendingFunctional, BendingMinimum, ConvergenceError,
                      bending_energy, formal_energy_split, minimize_bending_energy)
from .fields import (ConstantMatrixField, GridField2D, PolynomialField2D,
                     PolynomialMatrixField, ScalarField2D, TrigMatrixField,
                     TrigProductField2D, hessian_matrix_field, sample_scalar_field,
                     zero_matrix_field, zero_scalar_field)
from .fitting import SlopeFit, fit_loglog_slope
from .grids import Rectangle, UNIT_SQUARE
from .harness import (ConfigError, ExperimentConfig, ExperimentReport,
                      load_config, run_diagnostics, run_full_min,
                      run_gamma_limit_experiment, run_limit_min, run_q2_check,
                      run_recovery_sweep, run_report)
from .material import (Dist2Density, EnergyDensity, IsotropicModuli, SVKDensity,
                       make_density, q2_bruteforce, transverse_part)
from .plate3d import (Deformation3D, DegenerateDeformationError, EnergyBreakdown,
                      EnergyWorkspace, PlateGrid, RotationDiagnostic,
                      deformation_from_displacement, energy_gradient, evaluate_energy,
                      identity_lift, minimize_energy, rotation_misfit_diagnostic,
                      scaled_displacement)
from .optimize import OptimOptions, OptimResult, lbfgs
from .prestrain import (PrestrainSpec, bending_incompatibility, growth_tensor,
                        growth_tensor_inverse, linearized_gauss_curvature, metric,
                        metric_truncation)
from .recovery import (RecoveryInput, RefinementError, RescaledCurve,
                       deformation_gradient_analytic, deformation_values,
                       energy_with_exact_gradients, recovery_deformation,
                       rescaled_energy_curve, warping_field)
from .tensors import (PolarFactors, SingularMatrixError, dist2_SO3, frobenius2,
                      minor2, nearest_rotation, polar_decompose, singular_values,
                      skew, star, sym)

__version__ = "0.1.0"
