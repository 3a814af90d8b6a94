"""Analytic approximation of transmutation kernels for 1D Dirac systems.

The pipeline builds a polynomial-in-t approximation ``K_N(x, t)`` of the
transmutation kernel for ``B Y' + Q(x) Y = lambda Y`` on ``[0, b]`` and uses
it to evaluate the fundamental solutions ``C_N``, ``S_N`` at any real
spectral parameter for the price of a few trigonometric moments.
"""

from .basis import (
    FormalPowers,
    ParticularSolution,
    PotentialSpec,
    formal_powers,
    particular_solution,
    recursive_integrals,
    spps_solution,
)
from .errors import (
    BracketLost,
    CompatibilityViolation,
    ComplexCharacteristic,
    DomainViolation,
    EvalError,
    InvariantViolation,
    NonConvergence,
    NonVanishingViolation,
    ParseError,
    SingularSystem,
    StepTooCoarse,
    TransmuteError,
    TruncationWarning,
)
from .fit import KernelApprox, NormalSystem, build_normal_system, fit_coefficients, fit_kernel, kernel_eval
from .expr import parse_expression
from .grid import Grid, cumint, interp
from .mat2 import B, I2, frob_norm, proj
from .oracle import (
    exact_tanh_kernels,
    goursat_successive,
    ode_reference,
    shooting_eigenvalues,
    transmutation_kernel_mesh,
)
from .schrodinger import SchrodFit, SchrodProblem, schrod_fit, schrod_reduce
from .solve import (
    BoundaryCondition,
    Spectrum,
    characteristic_det,
    eval_solution,
    find_eigenvalues,
    solve_ivp,
    trig_moment,
    trig_moments,
)
from .wavepoly import WaveBasis, assemble_kernel_coeffs, calN_table, uv_eval, wave_poly

__version__ = "0.1.0"
