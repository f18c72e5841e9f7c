"""Consensus-ADMM for general (possibly non-convex) complex QCQPs."""

from .exceptions import (
    InfeasibleSubproblemError,
    NotPositiveDefiniteError,
    OracleInconclusive,
    ParameterError,
    QcqpError,
    ValidationError,
)
from .linalg import EigDecomposition, ShiftedPDFactor, eig_hermitian, quad_form, solve_shifted_pd
from .model import Constraint, FeasibilityReport, QcqpInstance
from .qcqp1 import Qcqp1Problem, Qcqp1Solution, Qcqp1Solver, project
from .admm import (
    CEstimate,
    IterateState,
    MonotonicityReport,
    RunResult,
    SolverConfig,
    TraceRecord,
    audit_monotonicity,
    augmented_lagrangian,
    auto_rho,
    dual_identity_residual,
    estimate_C,
    recommend_rho,
    run,
    step,
    strong_convexity_param,
)
from .generate import GenSpec, generate

__all__ = [
    "CEstimate",
    "Constraint",
    "EigDecomposition",
    "FeasibilityReport",
    "GenSpec",
    "InfeasibleSubproblemError",
    "IterateState",
    "MonotonicityReport",
    "NotPositiveDefiniteError",
    "OracleInconclusive",
    "ParameterError",
    "Qcqp1Problem",
    "Qcqp1Solution",
    "Qcqp1Solver",
    "QcqpError",
    "QcqpInstance",
    "RunResult",
    "ShiftedPDFactor",
    "SolverConfig",
    "TraceRecord",
    "ValidationError",
    "audit_monotonicity",
    "augmented_lagrangian",
    "auto_rho",
    "dual_identity_residual",
    "eig_hermitian",
    "estimate_C",
    "generate",
    "project",
    "quad_form",
    "recommend_rho",
    "run",
    "solve_shifted_pd",
    "step",
    "strong_convexity_param",
]
