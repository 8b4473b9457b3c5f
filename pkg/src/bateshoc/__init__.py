"""Bates-model option pricing with a fourth-order compact finite-difference
scheme, order-preserving Greeks, convergence studies and hedge tables."""

from .analysis import ConvergenceReport, SolveCache, error_norms, fit_order, run_convergence_study
from .greeks import GreekSurface, delta, evaluate_at, gamma, greek, price_surface, theta, vega
from .grid import Grid, GridSpec, build_grid, common_nodes
from .hedging import (
    EXAMPLE_GAMMA,
    EXAMPLE_VEGA,
    HedgeReport,
    SpreadSpec,
    gamma_write_spread,
    hedge_ratio,
    hedge_table,
    vega_hedge_table,
)
from .jump import JumpOperator, apply_jump, build_jump_operator
from .linalg import LUFactors, SingularMatrixError, lu_factorize
from .model import (
    BatesParams,
    ConfigError,
    ContractSpec,
    DomainError,
    MarketPoint,
    from_solver_value,
    jump_density_z,
    put_payoff_transformed,
    to_solver_coords,
    xi_b,
)
from .montecarlo import black_scholes_put, mc_price
from .operator import OperatorMatrices, SchemeKind, assemble
from .stepper import NumericalError, SolveReport, Surface, solve_pide

__version__ = "0.1.0"
