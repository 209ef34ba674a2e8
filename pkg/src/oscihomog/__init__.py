"""Dirichlet problems with oscillating periodic boundary data g(x/eps).

Boundary data on the torus (``periodic``), convex domains (``geometry``),
the harmonic-extension solver (``solver``), oscillatory chart integrals
(``oscillatory``), rate sweeps (``rates``) and report output (``report``).
"""

from .errors import NotInteriorError, NumericalError, ResolutionCapError, SolveError, ValidationError
from .geometry import ConvexDomain, LocalGraph, parse_domain
from .oscillatory import OscillatoryIntegrand, case3_recenter, decay_exponent, eval_J
from .periodic import FourierData, builtin
from .rates import RateReport, lp_error, pointwise_error, run_rates, sweep_pointwise
from .solver import BoundarySolution, evaluate_interior, solve, solve_oscillating

__version__ = "0.1.0"
