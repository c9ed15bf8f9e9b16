"""Stabilizing solutions of stochastic game-theoretic Riccati equations."""
from .bench import random_game_problem, run_trials
from .errors import RiccatiError
from .inner import (DefiniteRiccatiSpec, InnerOptions, InnerResult, build_initial_spec,
                    build_inner_spec, solve_definite_riccati)
from .lyapunov import ClosedLoopCoeffs, ems_stable, monodromy, solve_lyapunov
from .operators import feedback_gain, residual_field, riccati_operator
from .outer import SolveOptions, solve_game_riccati, verify_solution
from .problem import Dims, PeriodicMatrixFunction, Problem, constant_problem, validate_problem
from .solution import PeriodicSymSolution

__all__ = [
    "ClosedLoopCoeffs", "DefiniteRiccatiSpec", "Dims", "InnerOptions", "InnerResult",
    "PeriodicMatrixFunction", "PeriodicSymSolution", "Problem", "RiccatiError",
    "SolveOptions", "build_initial_spec", "build_inner_spec", "constant_problem",
    "ems_stable", "feedback_gain", "random_game_problem", "monodromy", "residual_field",
    "riccati_operator", "run_trials", "solve_definite_riccati", "solve_game_riccati",
    "solve_lyapunov", "validate_problem", "verify_solution",
]
