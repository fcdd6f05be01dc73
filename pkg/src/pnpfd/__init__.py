"""Positivity-preserving, energy-stable finite differences for the
Poisson-Nernst-Planck system on periodic grids."""
from .config import RunConfig, load_config, parse_config
from .diagnostics import StepReport, discrete_energy, dissipation, entropy, observables
from .elliptic import (EllipticSystem, PoissonSolver, SolveInfo, h_inv_norm, poisson_solve,
                       spd_solve)
from .errors import (ConfigParseError, ConfigValidationError, GridMismatchError,
                     InvariantViolationError, NoConvergenceError, NonPositiveCoefficientError,
                     NonPositiveConcentrationError, NonZeroMeanError, PicardNoConvergenceError,
                     PNPError, PositivityLossError, WrongDimensionError)
from .grid import (Grid, average_to_faces, divergence, face_inner_product, gradient,
                   inner_product, laplacian, mean, norm_h1, norm_inf, norm_l2, norm_lp, norms,
                   variable_coeff_div)
from .mms import ManufacturedCase, convergence_study, mms_errors, temporal_order
from .scheme import (SchemeParams, Sources, State, advance, chemical_potentials,
                     initial_state, step)

__version__ = "0.1.0"
