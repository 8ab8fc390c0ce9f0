"""Refuge design for a vector-borne crop epidemic with generalist predators.

A 1-D finite-difference toolkit: simulation of the host / vector / predator
system, the harvest and its linearisation, refuge optimisation,
rearrangement inequalities and homogenization of high-frequency refuges.
"""

from .core import (Grid, HomogenizedCoeffs, ModelParams, SpatialCoeffs, TrivialRegimeError,
                   TrivialRegimeWarning, check_refuge, derive_coeffs, integrate, mean)
from .discretize import (SolverError, divergence_form_apply, laplacian_neumann,
                         solve_helmholtz_neumann, thomas)
from .dynamics import (BlowUpError, State, StepperConfig, Trajectory, exact_int_V,
                       exact_logistic, exact_V_gamma0, initial_state, simulate, step_full,
                       step_homogenized, step_reduced)
from .harvest import (ClosedFormParams, HarvestReport, R_opt_const, R_opt_V, compute_harvest,
                      eta_L, eta_L_constant, eta_V_constant, phi_R)
from .homogenize import averaged_coeffs, conductivity_star_1d, homogenization_sweep, refuge_freq
from .optimize import (OptConfig, OptResult, cosine_perturbation_gain, grad_eta_L, project_box,
                       project_mass, projected_ascent, verify_constant_optimum)
from .rearrange import (corollary_check, hardy_littlewood_check, polya_szego_deficit,
                        rearrange_order, reflect, schwarz_decreasing, schwarz_increasing)
from .spectral import ConvergenceError, EigenPair, decay_rate_estimate, lambda1, principal_eigenpair

__version__ = "0.1.0"
