"""Multifractal spectra of Birkhoff averages for affine conformal systems."""
from ._kernels import backend
from .builtin import closed_form_oracles, example_5_1, example_5_2, example_5_3, linearized_gauss, luroth
from .gibbs import gibbs_state, min_average_oracle, variational_check, zero_temperature_limit
from .pressure import (
    DIVERGENT,
    PressureSurface,
    bowen_parameter,
    finiteness_parameter,
    pressure,
    pressure_grad,
    pressure_hessian,
    regularity_report,
    z_tilde_1,
)
from .spectrum import (
    SolverSettings,
    SpectrumSolver,
    exponent_range,
    lyapunov_spectrum,
    outer_solve_t,
    sample_spectrum,
    shape_diagnostics,
)
from .system import PotentialFamily, SystemSpec, lyapunov_family, translate_family, validate_system

__version__ = "0.1.0"
