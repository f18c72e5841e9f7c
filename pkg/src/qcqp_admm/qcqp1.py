"""Exact projection onto a single quadratic constraint set (QCQP-1).

Solves

    minimize ||z - v||^2   subject to   z^H A z - 2 Re(b^H z) <= c

for Hermitian, possibly indefinite ``A``. If ``v`` is feasible it is the
answer. Otherwise the constraint is active and the KKT conditions give

    z(mu) = (I + mu A)^{-1} (v + mu b),    mu >= 0,  I + mu A >= 0,

which in the eigenbasis ``A = Q diag(lam) Q^H`` is diagonal::

    zbar_j(mu) = (abar_j + mu bbar_j) / (1 + mu lam_j),   abar = Q^H v,  bbar = Q^H b.

The residual ``phi(mu) = g(z(mu)) - c`` is non-increasing on
``[0, -1/lam_min)`` (``[0, inf)`` when ``lam_min >= 0``), so its root is
located by bisection once a sign change is bracketed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import InfeasibleSubproblemError
from .linalg import EigDecomposition, as_hermitian, as_vector, eig_hermitian, quad_form

DEFAULT_TOL = 1e-10
BRACKET_CAP = 2.0**60
WIDTH_RTOL = 1e-12
MAX_BISECT = 200
POLE_TOL = 1e-10
HARD_CASE_NUDGE = 1e-8


@dataclass(frozen=True)
class Qcqp1Problem:
    A: np.ndarray
    b: np.ndarray
    c: float
    v: np.ndarray


@dataclass(frozen=True)
class Qcqp1Solution:
    z: np.ndarray
    multiplier: float
    active: bool
    bisection_iters: int
    hard_case: bool = False
    # bracket at establishment; (0, 0) when inactive
    bracket: tuple[float, float] = (0.0, 0.0)


class _HardCase(Exception):
    def __init__(self, index: int):
        self.index = index


class Qcqp1Solver:
    """Projection onto ``{z : z^H A z - 2 Re(b^H z) <= c}`` with a cached eigendecomposition.

    The constraint data never changes across ADMM iterations, so one solver
    is built per constraint and :meth:`project` is called with a new ``v``
    each time.
    """

    def __init__(self, A, b, c: float, eig: EigDecomposition | None = None):
        self.A = as_hermitian(A)
        self.n = self.A.shape[0]
        self.b = as_vector(b, self.n, "b")
        self.c = float(c)
        self.eig = eig if eig is not None else eig_hermitian(self.A)
        self.lam = self.eig.eigenvalues
        self.Q = self.eig.basis
        self.bbar = self.Q.conj().T @ self.b
        lam_min = self.eig.lambda_min
        self.mu_pole = -1.0 / lam_min if lam_min < 0 else math.inf

    def value(self, z) -> float:
        return quad_form(self.A, self.b, z)

    def phi(self, mu: float, abar: np.ndarray) -> float:
        """Constraint residual g(z(mu)) - c, evaluated in the eigenbasis."""
        zbar = (abar + mu * self.bbar) / (1.0 + mu * self.lam)
        g = self.lam @ (zbar.real**2 + zbar.imag**2) - 2.0 * np.vdot(self.bbar, zbar).real
        return float(g - self.c)

    def z_of_mu(self, mu: float, abar: np.ndarray) -> np.ndarray:
        return self.Q @ ((abar + mu * self.bbar) / (1.0 + mu * self.lam))

    def project(self, v, tol: float = DEFAULT_TOL) -> Qcqp1Solution:
        v = as_vector(v, self.n, "v")
        if tol <= 0:
            raise ValueError("tol must be positive")
        if self.value(v) <= self.c:
            return Qcqp1Solution(z=v.copy(), multiplier=0.0, active=False, bisection_iters=0)
        abar = self.Q.conj().T @ v
        try:
            return self._solve_active(abar, tol)
        except _HardCase as hc:
            abar = abar.copy()
            abar[hc.index] += HARD_CASE_NUDGE
            try:
                sol = self._solve_active(abar, tol)
            except _HardCase as exc:
                raise InfeasibleSubproblemError(
                    "multiplier search reached the pole of (I + mu A)^-1 with the constraint still violated"
                ) from exc
            return Qcqp1Solution(
                z=sol.z,
                multiplier=sol.multiplier,
                active=True,
                bisection_iters=sol.bisection_iters,
                hard_case=True,
                bracket=sol.bracket,
            )

    def _check_pole(self, mu: float) -> None:
        near = np.abs(1.0 + mu * self.lam) < POLE_TOL
        if near.any():
            raise _HardCase(int(np.argmax(near)))

    def _bracket(self, abar: np.ndarray) -> tuple[float, float, int]:
        """Return (mu_lo, mu_up, evals) with phi(mu_lo) > 0 > phi(mu_up)."""
        lo, evals = 0.0, 0
        if math.isinf(self.mu_pole):
            up = 1.0
            while True:
                evals += 1
                if self.phi(up, abar) < 0:
                    return lo, up, evals
                lo = up
                up *= 2.0
                if up > BRACKET_CAP:
                    raise InfeasibleSubproblemError(
                        f"no feasible multiplier below {BRACKET_CAP:g}; constraint set appears empty"
                    )
        # approach the pole geometrically: 1 + mu*lam_min = 2^-k
        k = 1
        while True:
            up = self.mu_pole * (1.0 - 2.0**-k)
            self._check_pole(up)
            evals += 1
            if self.phi(up, abar) < 0:
                return lo, up, evals
            lo = up
            k += 1

    def _solve_active(self, abar: np.ndarray, tol: float) -> Qcqp1Solution:
        lo, up, _ = self._bracket(abar)
        bracket = (lo, up)
        phi_tol = tol * (1.0 + abs(self.c))
        width_tol = WIDTH_RTOL * (1.0 + up)
        mu = up
        iters = 0
        while iters < MAX_BISECT and up - lo > width_tol:
            iters += 1
            mid = 0.5 * (lo + up)
            f = self.phi(mid, abar)
            if abs(f) <= phi_tol:
                mu = mid
                break
            if f > 0:
                lo = mid
            else:
                up = mid
            mu = up
        return Qcqp1Solution(
            z=self.z_of_mu(mu, abar), multiplier=mu, active=True, bisection_iters=iters, bracket=bracket
        )


def project(prob: Qcqp1Problem, tol: float = DEFAULT_TOL) -> Qcqp1Solution:
    """One-shot projection; builds the eigendecomposition for this call only."""
    return Qcqp1Solver(prob.A, prob.b, prob.c).project(prob.v, tol)
