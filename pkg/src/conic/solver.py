"""
Solve ConicPrograms through cvxpy and re-check the returned point.
"""
import logging
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Optional

import cvxpy as cp
import numpy as np

from src.config import SOLVER
from .program import ConeKind, ConicProgram, smat, smat_operator

logger = logging.getLogger(__name__)


class SolveStatus(str, Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    NUMERICAL_FAILURE = "numerical_failure"


@dataclass(frozen=True)
class SolverTolerances:
    feasibility: float = 1e-7
    gap: float = 1e-8
    max_iterations: int = 200

    def __post_init__(self):
        if self.feasibility <= 0 or self.gap <= 0 or self.max_iterations < 1:
            raise ValueError("Solver tolerances must be positive")


@dataclass(frozen=True, eq=False)
class ConicSolution:
    """
    Solver outcome re-checked on the returned point.

    max_constraint_residual is the largest block violation from
    block_residuals, each divided by 1 + the magnitude of its own terms, so
    the feasibility tolerance is relative for large-valued blocks and
    absolute near zero.
    """
    status: SolveStatus
    primal: np.ndarray
    objective_value: float
    max_constraint_residual: float
    solver_status: str = ""

    @property
    def ok(self) -> bool:
        return self.status is SolveStatus.OPTIMAL


_STATUS_MAP = {
    cp.OPTIMAL: SolveStatus.OPTIMAL,
    cp.OPTIMAL_INACCURATE: SolveStatus.OPTIMAL,
    cp.INFEASIBLE: SolveStatus.INFEASIBLE,
    cp.INFEASIBLE_INACCURATE: SolveStatus.INFEASIBLE,
    cp.UNBOUNDED: SolveStatus.UNBOUNDED,
    cp.UNBOUNDED_INACCURATE: SolveStatus.UNBOUNDED,
}


def _solver_options(name: str, tol: SolverTolerances) -> Dict[str, float]:
    if name == "CLARABEL":
        return {"tol_feas": 0.1 * tol.feasibility, "tol_gap_rel": tol.gap, "tol_gap_abs": tol.gap,
                "max_iter": tol.max_iterations}
    if name == "SCS":
        return {"eps_abs": 0.1 * tol.feasibility, "eps_rel": tol.gap, "max_iters": 100 * tol.max_iterations}
    if name == "CVXOPT":
        return {"feastol": 0.1 * tol.feasibility, "reltol": tol.gap, "abstol": tol.gap,
                "max_iters": tol.max_iterations}
    return {}


def block_residuals(program: ConicProgram, x: np.ndarray) -> np.ndarray:
    """
    Scaled cone violation of every block at x.

    Each violation is divided by 1 + the largest magnitude among the block's
    linear part and offset.
    """
    out = np.zeros(len(program.blocks))
    for i, block in enumerate(program.blocks):
        lin = block.matrix @ x
        v = lin + block.offset
        scale = 1.0 + max(np.max(np.abs(lin)), np.max(np.abs(block.offset)))
        if block.cone is ConeKind.ZERO:
            viol = np.max(np.abs(v))
        elif block.cone is ConeKind.NONNEG:
            viol = max(0.0, -np.min(v))
        elif block.cone is ConeKind.SOC:
            viol = max(0.0, np.linalg.norm(v[1:]) - v[0])
        else:
            viol = max(0.0, -np.linalg.eigvalsh(smat(v, block.dim))[0])
        out[i] = viol / scale
    return out


def _lower(program: ConicProgram):
    x = cp.Variable(program.num_vars)
    constraints = []
    for block in program.blocks:
        if block.cone is ConeKind.PSD:
            U = smat_operator(block.dim)
            full = (U @ block.matrix) @ x + U @ block.offset
            mat = cp.reshape(full, (block.dim, block.dim), order="C")
            constraints.append(0.5 * (mat + mat.T) >> 0)
            continue
        expr = block.matrix @ x + block.offset
        if block.cone is ConeKind.ZERO:
            constraints.append(expr == 0)
        elif block.cone is ConeKind.NONNEG or block.rows == 1:
            constraints.append(expr >= 0)
        else:
            constraints.append(cp.SOC(expr[0], expr[1:]))
    linear = program.objective @ x
    objective = cp.Maximize(linear) if program.maximize else cp.Minimize(linear)
    return cp.Problem(objective, constraints), x


def solve(program: ConicProgram, tol: Optional[SolverTolerances] = None,
          solver: Optional[str] = None) -> ConicSolution:
    """
    Solve a conic program.

    Args:
        program: the program to solve
        tol: tolerances; defaults to SolverTolerances()
        solver: cvxpy solver name; defaults to the configured solver

    Returns:
        ConicSolution. An optimal status always carries a primal point whose
        re-checked residual is within tol.feasibility.
    """
    tol = tol or SolverTolerances()
    solver = (solver or SOLVER).upper()
    empty = np.zeros(program.num_vars)
    try:
        problem, x = _lower(program)
        problem.solve(solver=solver, verbose=False, **_solver_options(solver, tol))
    except (cp.SolverError, ValueError, ArithmeticError) as e:
        logger.warning(f"Solver {solver} failed on {program.name or 'program'}: {str(e)}")
        return ConicSolution(SolveStatus.NUMERICAL_FAILURE, empty, float("nan"), float("inf"), "solver_error")

    raw = problem.status
    status = _STATUS_MAP.get(raw, SolveStatus.NUMERICAL_FAILURE)
    if status is not SolveStatus.OPTIMAL or x.value is None:
        if status is SolveStatus.OPTIMAL:
            status = SolveStatus.NUMERICAL_FAILURE
        logger.debug(f"{program.name or 'program'}: solver status {raw}")
        return ConicSolution(status, empty, float("nan"), float("inf"), str(raw))

    primal = np.asarray(x.value, dtype=float)
    residual = float(np.max(block_residuals(program, primal), initial=0.0))
    value = float(program.objective @ primal + program.objective_offset)
    if residual > tol.feasibility:
        logger.warning(f"{program.name or 'program'}: residual {residual:.2e} above tolerance, status {raw} downgraded")
        return ConicSolution(SolveStatus.NUMERICAL_FAILURE, primal, value, residual, str(raw))
    return ConicSolution(SolveStatus.OPTIMAL, primal, value, residual, str(raw))
