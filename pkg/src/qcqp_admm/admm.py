"""Consensus-ADMM for general QCQPs.

Each constraint i gets its own copy ``z_i`` of the variable, tied to ``x``
by ``z_i = x`` with scaled dual ``u_i``. One iteration updates, in this order,

    z_i <- argmin ||z_i - x + u_i||^2  s.t.  g_i(z_i) <= c_i        (each i, in parallel)
    x   <- (A0 + m rho I)^{-1} [b0 + rho sum_i (z_i + u_i)]
    u_i <- u_i + z_i - x

Updating ``z`` before ``x`` makes ``rho sum_i u_i = A0 x - b0`` hold exactly
after every iteration; the monotonicity guarantee for the augmented
Lagrangian relies on that identity, so the order is not configurable.
"""

from __future__ import annotations

import logging
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from .exceptions import ParameterError
from .linalg import ShiftedPDFactor, eig_hermitian
from .model import QcqpInstance
from .qcqp1 import DEFAULT_TOL as QCQP1_TOL
from .qcqp1 import Qcqp1Solver

log = logging.getLogger(__name__)

TOL_MONO = 1e-9
DIVERGENCE_SPAN = 1e12
DIVERGENCE_NORM = 1e12


@dataclass
class IterateState:
    x: np.ndarray
    z: np.ndarray  # (m, n)
    u: np.ndarray  # (m, n)
    k: int = 0

    @classmethod
    def initial(cls, x0: np.ndarray, m: int) -> "IterateState":
        x0 = np.asarray(x0, dtype=np.complex128)
        return cls(x=x0.copy(), z=np.tile(x0, (m, 1)), u=np.zeros((m, x0.shape[0]), dtype=np.complex128), k=0)

    def copy(self) -> "IterateState":
        return IterateState(self.x.copy(), self.z.copy(), self.u.copy(), self.k)


@dataclass(frozen=True)
class SolverConfig:
    """Engine parameters.

    ``tol_dx`` / ``tol_consensus`` set to ``None`` select fixed-budget mode
    (exactly ``max_iters`` iterations unless divergence is flagged).
    ``c_mode`` is one of ``"empirical"``, ``"statistical"`` or ``"fixed:<C>"``
    and is only consulted when choosing rho automatically.
    """

    rho: float = 10.0
    max_iters: int = 1000
    tol_dx: float | None = 1e-8
    tol_consensus: float | None = 1e-6
    c_mode: str = "fixed:1"
    rho_safety: float = 1.1
    qcqp1_tol: float = QCQP1_TOL
    seed: int = 0
    threads: int = 1

    def __post_init__(self):
        if not (self.rho > 0 and math.isfinite(self.rho)):
            raise ParameterError(f"rho must be positive and finite, got {self.rho}")
        if self.max_iters < 1:
            raise ParameterError("max_iters must be >= 1")
        if not self.rho_safety > 1:
            raise ParameterError("rho_safety must exceed 1")
        if self.threads < 1:
            raise ParameterError("threads must be >= 1")
        parse_c_mode(self.c_mode)

    @property
    def fixed_budget(self) -> bool:
        return self.tol_dx is None or self.tol_consensus is None


def parse_c_mode(c_mode: str) -> tuple[str, float | None]:
    if c_mode in ("empirical", "statistical"):
        return c_mode, None
    if c_mode.startswith("fixed:"):
        try:
            C = float(c_mode.split(":", 1)[1])
        except ValueError:
            raise ParameterError(f"bad C value in {c_mode!r}") from None
        if not C > 0:
            raise ParameterError("fixed C must be positive")
        return "fixed", C
    raise ParameterError(f"c_mode must be 'empirical', 'statistical' or 'fixed:<C>', got {c_mode!r}")


@dataclass(frozen=True)
class TraceRecord:
    k: int
    L: float
    dx_norm: float
    consensus_residual: float
    dual_identity_residual: float
    objective: float
    max_constraint_violation_of_z: float
    empirical_C_ratio: float
    # 1 + ||A0 x|| + ||b0||, the scale for the dual-identity check; not exported to CSV
    dual_scale: float = field(default=1.0, compare=False)

    def is_finite(self) -> bool:
        return all(
            math.isfinite(v)
            for v in (self.L, self.dx_norm, self.consensus_residual, self.dual_identity_residual, self.objective)
        )


@dataclass(frozen=True)
class CEstimate:
    mu_hat: complex
    sigma2_hat: float
    c_statistical: float
    c_empirical_max: float
    mode: str = "empirical"
    degenerate: bool = False  # every d_i was zero, C arbitrary; sentinel 1 returned
    skipped: int = 0  # iterations where sum_i d_i vanished but some d_i did not

    @property
    def value(self) -> float:
        return self.c_statistical if self.mode == "statistical" else self.c_empirical_max


@dataclass(frozen=True)
class MonotonicityReport:
    violations: list[int]
    max_increase: float

    @property
    def ok(self) -> bool:
        return not self.violations


@dataclass
class RunResult:
    """Outcome of :meth:`ConsensusADMM.run`.

    ``trace`` holds one record per iteration (k = 1, 2, ...). The starting
    point is recorded separately in ``initial`` (k = 0): with ``u = 0`` the
    dual identity does not hold there, so the first transition is outside the
    monotone-descent regime and typically raises L slightly.
    """

    state: IterateState
    initial: TraceRecord
    trace: list[TraceRecord]
    reason: str  # "converged" | "max_iters" | "diverged"
    dual_diffs: list[np.ndarray] = field(default_factory=list, repr=False)

    @property
    def L0(self) -> float:
        return self.initial.L

    @property
    def diverged(self) -> bool:
        return self.reason == "diverged"


# --- scalar quantities --------------------------------------------------


def augmented_lagrangian(inst: QcqpInstance, state: IterateState, rho: float) -> float:
    """Scaled-form augmented Lagrangian at ``state``."""
    x = state.x
    val = inst.objective(x)
    penalty = 0.0
    for i in range(inst.m):
        r = state.z[i] - x + state.u[i]
        penalty += _sqnorm(r) - _sqnorm(state.u[i])
    return float(val + rho * penalty)


def dual_identity_residual(inst: QcqpInstance, state: IterateState, rho: float) -> float:
    """``||rho * sum_i u_i - (A0 x - b0)||_2``; zero in exact arithmetic after any step."""
    return float(np.linalg.norm(rho * state.u.sum(axis=0) - (inst.A0 @ state.x - inst.b0)))


def strong_convexity_param(inst: QcqpInstance, rho: float) -> float:
    """Modulus ``2 lambda_min(A0) + 2 m rho`` of the Lagrangian in ``x``.

    Raises
    ------
    ParameterError
        If ``rho <= max(-lambda_min(A0)/m, 0)``; the x-update is then not
        strongly convex and the shifted system may be singular.
    """
    lam_min = eig_hermitian(inst.A0).lambda_min
    floor = max(-lam_min / inst.m, 0.0)
    if not rho > floor:
        raise ParameterError(
            f"rho = {rho:g} must exceed max(-lambda_min(A0)/m, 0) = {floor:g} "
            f"(lambda_min(A0) = {lam_min:g}, m = {inst.m})"
        )
    gamma = 2.0 * lam_min + 2.0 * inst.m * rho
    assert gamma > 0
    return gamma


def recommend_rho(inst: QcqpInstance, C: float = 1.0, safety: float = 1.1) -> float:
    """Smallest rho guaranteeing monotone descent of the Lagrangian, times ``safety``.

    ``C`` bounds ``sum_i ||d_i||^2 / ||sum_i d_i||^2`` for the dual increments
    ``d_i``; see :func:`estimate_C`.
    """
    if not C > 0:
        raise ParameterError("C must be positive")
    if not safety >= 1:
        raise ParameterError("safety must be at least 1")
    eig = eig_hermitian(inst.A0)
    lam_min, lam_max = eig.lambda_min, eig.lambda_max
    m = inst.m
    bound = max(-lam_min / m, (math.sqrt(m * C) * lam_max + max(-lam_min, 0.0)) / m)
    if bound <= 0:
        # only when A0 = 0; any positive rho satisfies the condition
        bound = 1.0
    return safety * bound


def estimate_C(dual_diffs: Iterable[np.ndarray], mode: str = "empirical") -> CEstimate:
    """Estimate the constant bounding ``sum ||d_i||^2 <= C ||sum d_i||^2``.

    Parameters
    ----------
    dual_diffs
        One ``(m, n)`` array per iteration holding ``d_i = u_i^(k+1) - u_i^(k)``.
    mode
        ``"empirical"``: the largest observed ratio over iterations.
        ``"statistical"``: ``(s2 + |mu|^2) / (s2 + m |mu|^2)`` from the sample
        mean ``mu`` and variance ``s2`` of all entries, treating them as i.i.d.

    Both numbers are always computed; ``mode`` selects :attr:`CEstimate.value`.
    When every increment is zero, C is arbitrary and 1 is returned with
    ``degenerate=True``.
    """
    if mode not in ("empirical", "statistical"):
        raise ParameterError(f"mode must be 'empirical' or 'statistical', got {mode!r}")
    diffs = [np.asarray(d, dtype=np.complex128) for d in dual_diffs]
    if not diffs:
        raise ParameterError("estimate_C needs at least one iteration of dual increments")
    m = diffs[0].shape[0]

    best, skipped, any_ratio = 0.0, 0, False
    for d in diffs:
        num, den = _c_ratio_terms(d)
        if num == 0.0:
            continue
        if den == 0.0:
            skipped += 1
            continue
        best = max(best, num / den)
        any_ratio = True

    entries = np.concatenate([d.ravel() for d in diffs])
    mu_hat = complex(entries.mean())
    sigma2 = float(np.mean(np.abs(entries - mu_hat) ** 2))
    mu2 = abs(mu_hat) ** 2
    degenerate = sigma2 + mu2 == 0.0
    c_stat = 1.0 if degenerate else (sigma2 + mu2) / (sigma2 + m * mu2)
    if not any_ratio:
        best = 1.0
    return CEstimate(
        mu_hat=mu_hat,
        sigma2_hat=sigma2,
        c_statistical=c_stat,
        c_empirical_max=best,
        mode=mode,
        degenerate=degenerate or not any_ratio,
        skipped=skipped,
    )


def audit_monotonicity(trace: Sequence[TraceRecord] | Sequence[float], tol_mono: float = TOL_MONO) -> MonotonicityReport:
    """List every k with ``L[k] > L[k-1] + tol_mono * (1 + |L[k-1]|)``.

    ``trace`` may be a list of :class:`TraceRecord` (indexed by their ``k``)
    or a plain sequence of Lagrangian values (indexed by position).
    """
    if len(trace) < 2:
        raise ValueError("need at least two trace entries")
    if isinstance(trace[0], TraceRecord):
        ks = [r.k for r in trace]
        Ls = [r.L for r in trace]
    else:
        ks = list(range(len(trace)))
        Ls = [float(v) for v in trace]
    violations, worst = [], 0.0
    for j in range(1, len(Ls)):
        inc = Ls[j] - Ls[j - 1]
        worst = max(worst, inc)
        if inc > tol_mono * (1.0 + abs(Ls[j - 1])):
            violations.append(ks[j])
    return MonotonicityReport(violations=violations, max_increase=worst)


def _sqnorm(v: np.ndarray) -> float:
    return float(np.vdot(v, v).real)


def _c_ratio_terms(d: np.ndarray) -> tuple[float, float]:
    num = 0.0
    for i in range(d.shape[0]):
        num += _sqnorm(d[i])
    return num, _sqnorm(d.sum(axis=0))


def _c_ratio(d: np.ndarray) -> float:
    num, den = _c_ratio_terms(d)
    if num == 0.0:
        return 1.0
    if den == 0.0:
        return math.inf
    return num / den


# --- engine -------------------------------------------------------------


class ConsensusADMM:
    """Holds the per-instance caches (constraint eigendecompositions and the
    Cholesky factor of ``A0 + m rho I``) and performs iterations.

    One engine serves one run at a time.
    """

    def __init__(self, inst: QcqpInstance, config: SolverConfig):
        self.inst = inst
        self.config = config
        self.rho = config.rho
        strong_convexity_param(inst, self.rho)
        self.factor = ShiftedPDFactor.build(inst.A0, inst.m * self.rho)
        self.solvers = [Qcqp1Solver(con.A, con.b, con.c) for con in inst.constraints]
        self._pool = ThreadPoolExecutor(max_workers=config.threads) if config.threads > 1 else None
        self.b0_norm = float(np.linalg.norm(inst.b0))

    def close(self) -> None:
        if self._pool is not None:
            self._pool.shutdown()
            self._pool = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def initial_state(self, x0=None) -> IterateState:
        if x0 is None:
            x0 = self.inst.x_feas
        if x0 is None:
            warnings.warn(
                "instance has no recorded feasible point; starting from x = 0 "
                "(monotone behaviour was observed from feasible starts)",
                stacklevel=3,
            )
            x0 = np.zeros(self.inst.n, dtype=np.complex128)
        return IterateState.initial(x0, self.inst.m)

    def _project(self, args):
        solver, v = args
        return solver.project(v, self.config.qcqp1_tol).z

    def update_z(self, state: IterateState) -> np.ndarray:
        jobs = [(s, state.x - state.u[i]) for i, s in enumerate(self.solvers)]
        if self._pool is None:
            zs = [self._project(j) for j in jobs]
        else:
            zs = list(self._pool.map(self._project, jobs))
        return np.stack(zs)

    def update_x(self, z: np.ndarray, u: np.ndarray) -> np.ndarray:
        rhs = self.inst.b0 + self.rho * (z + u).sum(axis=0)
        return self.factor.solve(rhs)

    def step(self, state: IterateState) -> tuple[IterateState, TraceRecord, np.ndarray]:
        """One z -> x -> u sweep. Returns the new state, its trace record and the dual increments."""
        z = self.update_z(state)
        x = self.update_x(z, state.u)
        d = z - x
        new = IterateState(x=x, z=z, u=state.u + d, k=state.k + 1)
        rec = self.record(new, dx_norm=float(np.linalg.norm(x - state.x)), d=d)
        return new, rec, d

    def record(self, state: IterateState, dx_norm: float, d: np.ndarray | None) -> TraceRecord:
        inst = self.inst
        x = state.x
        A0x = inst.A0 @ x
        consensus = 0.0
        for i in range(inst.m):
            consensus += float(np.linalg.norm(state.z[i] - x))
        viol = 0.0
        for i, s in enumerate(self.solvers):
            viol = max(viol, s.value(state.z[i]) - s.c)
        return TraceRecord(
            k=state.k,
            L=augmented_lagrangian(inst, state, self.rho),
            dx_norm=dx_norm,
            consensus_residual=consensus,
            dual_identity_residual=float(np.linalg.norm(self.rho * state.u.sum(axis=0) - (A0x - inst.b0))),
            objective=inst.objective(x),
            max_constraint_violation_of_z=viol,
            empirical_C_ratio=1.0 if d is None else _c_ratio(d),
            dual_scale=1.0 + float(np.linalg.norm(A0x)) + self.b0_norm,
        )

    def run(self, x0=None, keep_dual_diffs: bool = True) -> RunResult:
        cfg = self.config
        state = self.initial_state(x0)
        initial = self.record(state, dx_norm=0.0, d=None)
        L0 = initial.L
        trace = []
        diffs = []
        reason = "max_iters"
        for _ in range(cfg.max_iters):
            state, rec, d = self.step(state)
            trace.append(rec)
            if keep_dual_diffs:
                diffs.append(d)
            if self._diverging(rec, state, L0):
                reason = "diverged"
                log.info("divergence flagged at k=%d (L=%g)", rec.k, rec.L)
                break
            if not cfg.fixed_budget and rec.dx_norm <= cfg.tol_dx and rec.consensus_residual <= cfg.tol_consensus:
                reason = "converged"
                break
        return RunResult(state=state, initial=initial, trace=trace, reason=reason, dual_diffs=diffs)

    @staticmethod
    def _diverging(rec: TraceRecord, state: IterateState, L0: float) -> bool:
        if not rec.is_finite():
            return True
        if rec.L < L0 - DIVERGENCE_SPAN * (1.0 + abs(L0)):
            return True
        biggest = max(np.abs(state.x).max(), np.abs(state.z).max(), np.abs(state.u).max())
        return bool(biggest > DIVERGENCE_NORM)


def step(inst: QcqpInstance, state: IterateState, config: SolverConfig) -> tuple[IterateState, TraceRecord]:
    """Single iteration without reusing caches across calls."""
    with ConsensusADMM(inst, config) as eng:
        new, rec, _ = eng.step(state)
    return new, rec


def run(inst: QcqpInstance, config: SolverConfig, x0=None) -> RunResult:
    """Run the engine from ``x0`` (default: the instance's recorded feasible point)."""
    with ConsensusADMM(inst, config) as eng:
        return eng.run(x0)


def auto_rho(
    inst: QcqpInstance, config: SolverConfig, pilot_iters: int | None = None, max_rounds: int = 8
) -> tuple[float, CEstimate | None]:
    """Choose rho from the monotone-descent condition using ``config.c_mode``.

    ``fixed:<C>`` applies :func:`recommend_rho` directly. The data-driven
    modes start with a pilot run at ``config.rho``. In empirical mode the
    pilot is then repeated at the recommended rho until the largest observed
    ratio no longer exceeds the C that produced it, so the returned rho is
    consistent with the iterates it generates. Statistical mode uses a single
    pilot, since its C is an expectation rather than a bound.
    """
    mode, C = parse_c_mode(config.c_mode)
    if mode == "fixed":
        return recommend_rho(inst, C, config.rho_safety), None
    iters = config.max_iters if pilot_iters is None else pilot_iters
    rho = config.rho
    est = None
    for _ in range(max_rounds):
        pilot = run(inst, replace(config, rho=rho, max_iters=iters, tol_dx=None, tol_consensus=None))
        new = estimate_C(pilot.dual_diffs, mode)
        if mode == "statistical":
            return recommend_rho(inst, new.value, config.rho_safety), new
        if est is not None and new.value <= est.value:
            return rho, est
        if est is not None:
            new = replace(new, c_empirical_max=max(new.value, est.value))
        est = new
        rho = recommend_rho(inst, est.value, config.rho_safety)
        log.debug("auto_rho: C = %g -> rho = %g", est.value, rho)
    log.warning("auto_rho: C estimate still growing after %d rounds; using rho = %g", max_rounds, rho)
    return rho, est
