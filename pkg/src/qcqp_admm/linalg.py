"""Dense complex Hermitian linear algebra used by the solver.

Vectors are 1-D ``complex128`` arrays and matrices are 2-D ``complex128``
arrays. Everything here is a pure function of its inputs; the only state is
the :class:`ShiftedPDFactor` handle, which is immutable once built.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .exceptions import NotPositiveDefiniteError, ValidationError

HERMITIAN_TOL = 1e-12
QUAD_IMAG_TOL = 1e-10


def as_vector(x, n: int | None = None, name: str = "vector") -> np.ndarray:
    """Coerce ``x`` to a finite 1-D complex array, optionally of length ``n``."""
    v = np.asarray(x, dtype=np.complex128)
    if v.ndim != 1:
        raise ValidationError(f"{name} must be 1-D, got shape {v.shape}")
    if n is not None and v.shape[0] != n:
        raise ValidationError(f"{name} has length {v.shape[0]}, expected {n}")
    if not np.all(np.isfinite(v)):
        raise ValidationError(f"{name} has non-finite entries")
    return v


def as_hermitian(A, n: int | None = None, name: str = "matrix", tol: float = HERMITIAN_TOL) -> np.ndarray:
    """Validate that ``A`` is Hermitian within ``tol`` and return its exact symmetrization.

    Raises
    ------
    ValidationError
        If ``A`` is not square, has non-finite entries, or some entry differs
        from the conjugate of its transpose partner by more than ``tol``.
        The message names the first offending entry.
    """
    M = np.asarray(A, dtype=np.complex128)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValidationError(f"{name} must be square, got shape {M.shape}")
    if n is not None and M.shape[0] != n:
        raise ValidationError(f"{name} is {M.shape[0]}x{M.shape[0]}, expected {n}x{n}")
    if not np.all(np.isfinite(M)):
        bad = np.argwhere(~np.isfinite(M))[0]
        raise ValidationError(f"{name} has non-finite entry at ({bad[0]}, {bad[1]})")
    gap = np.abs(M - M.conj().T)
    if gap.max(initial=0.0) > tol:
        j, k = np.argwhere(gap > tol)[0]
        raise ValidationError(
            f"{name} is not Hermitian: entry ({j}, {k}) = {M[j, k]} vs conj of ({k}, {j}) = {M[k, j].conjugate()}"
        )
    return 0.5 * (M + M.conj().T)


@dataclass(frozen=True)
class EigDecomposition:
    """Eigenvalues in ascending order and the matching orthonormal eigenvectors (columns)."""

    eigenvalues: np.ndarray
    basis: np.ndarray

    @property
    def lambda_min(self) -> float:
        return float(self.eigenvalues[0])

    @property
    def lambda_max(self) -> float:
        return float(self.eigenvalues[-1])

    def reconstruct(self) -> np.ndarray:
        return (self.basis * self.eigenvalues) @ self.basis.conj().T


def eig_hermitian(A) -> EigDecomposition:
    """Eigendecomposition of a Hermitian matrix.

    Examples
    --------
    >>> eig_hermitian(np.diag([5.0, -2.0])).eigenvalues
    array([-2.,  5.])
    """
    M = as_hermitian(A)
    w, V = np.linalg.eigh(M)
    return EigDecomposition(eigenvalues=w, basis=V)


@dataclass(frozen=True)
class ShiftedPDFactor:
    """Cached Cholesky factor of ``A + shift*I``.

    Build once with :meth:`build`, then call :meth:`solve` as often as needed.
    """

    matrix: np.ndarray
    shift: float
    cho: tuple

    @classmethod
    def build(cls, A, shift: float) -> "ShiftedPDFactor":
        M = as_hermitian(A)
        shift = float(shift)
        lam_min = float(np.linalg.eigvalsh(M)[0])
        if lam_min + shift <= 0.0:
            raise NotPositiveDefiniteError(
                f"A + {shift:g}*I is not positive definite (lambda_min(A) = {lam_min:.6g})"
            )
        shifted = M + shift * np.eye(M.shape[0])
        try:
            cho = scipy.linalg.cho_factor(shifted, lower=True, check_finite=False)
        except np.linalg.LinAlgError as exc:
            raise NotPositiveDefiniteError(str(exc)) from exc
        return cls(matrix=M, shift=shift, cho=cho)

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def solve(self, rhs) -> np.ndarray:
        b = as_vector(rhs, self.n, "rhs")
        return scipy.linalg.cho_solve(self.cho, b, check_finite=False)

    def residual(self, y, rhs) -> float:
        """Return ``||(A + shift*I) y - rhs||_2``."""
        return float(np.linalg.norm(self.matrix @ y + self.shift * y - rhs))


def solve_shifted_pd(A, shift: float, rhs, factor: ShiftedPDFactor | None = None) -> np.ndarray:
    """Solve ``(A + shift*I) y = rhs`` for Hermitian ``A`` with ``A + shift*I`` positive definite.

    Pass ``factor`` (from :meth:`ShiftedPDFactor.build`) to reuse a cached
    factorization; otherwise one is built for this call.
    """
    if factor is None:
        factor = ShiftedPDFactor.build(A, shift)
    return factor.solve(rhs)


def quad_form(A, b, x) -> float:
    """Evaluate ``x^H A x - 2 Re(b^H x)``.

    The imaginary part of ``x^H A x`` must vanish up to rounding for
    Hermitian ``A``; a larger residue indicates a non-Hermitian input.
    """
    A = np.asarray(A, dtype=np.complex128)
    b = np.asarray(b, dtype=np.complex128)
    x = np.asarray(x, dtype=np.complex128)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or b.shape != (A.shape[0],) or x.shape != (A.shape[0],):
        raise ValidationError(
            f"dimension mismatch: A {A.shape}, b {b.shape}, x {x.shape}"
        )
    Ax = A @ x
    xAx = np.vdot(x, Ax)
    # rounding in the imaginary part scales with |x|^H |A| |x|, not with |x^H A x|
    scale = abs(xAx) + float(np.linalg.norm(x) * np.linalg.norm(Ax))
    if abs(xAx.imag) > QUAD_IMAG_TOL * (1.0 + scale):
        raise ValidationError(f"x^H A x has imaginary part {xAx.imag:.3e}; A is not Hermitian")
    return float(xAx.real - 2.0 * np.vdot(b, x).real)
