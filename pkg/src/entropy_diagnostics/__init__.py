"""
Desk-scale diagnostics for entropy conservation in systems of conservation laws.

Modules
-------
grid_fields  uniform grids, fields, Weierstrass synthesis, Hölder estimates
mollifier    Friedrichs kernels, convolution, smooth cutoffs
systems      conservation systems, generalized entropy pairs, compatibility checks
commutator   nonlinear mollification commutators, scaling scans, proof terms
solver       first-order finite-volume trajectories and exact Burgers oracles
defect       weak entropy residuals, shock dissipation, boundary entropy budgets
cli          command-line entry point
"""

from .errors import ConstraintError, DataError, DiagnosticsError, DomainError
from .grid_fields import (Field, Grid, HolderEstimate, estimate_holder, l2_norm,
                          make_weierstrass, read_field, sup_norm, write_field)
from .mollifier import (MollifierKernel, chi_derivative, chi_profile, localize, make_kernel,
                        mollify)
from .systems import (BUILTIN_NAMES, CompatibilityReport, ConservationSystem, EntropyPair,
                      StateDomain, VectorMap, asymmetric_pair, builtin, check_compatibility,
                      check_symmetry, load_system)
from .commutator import (ProofTermReport, ScalingReport, affine, commutator_bound,
                         commutator_field, nonlinearity, proof_term_scan, proof_terms,
                         scaling_scan)
from .solver import Trajectory, read_trajectory, resample, solve, write_trajectory
from .defect import (DefectReport, EntropyBudget, TestFunction, entropy_budget,
                     load_test_functions, shock_dissipation_rate, weak_residual)

__version__ = "0.1.0"
