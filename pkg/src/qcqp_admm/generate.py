"""Seeded random QCQP instances with a known feasible point.

Draw order from a single ``numpy.random.Generator(PCG64(seed))`` stream:
``x_feas``, then ``A0`` (redrawn until indefinite unless a positive
definite ``A0`` is requested), ``b0``, then for each
constraint ``A_i``, ``b_i``, ``v_i``. Complex standard normals have
independent real and imaginary parts of variance 1/2 each.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import ParameterError, QcqpError
from .linalg import eig_hermitian
from .model import QcqpInstance

MAX_REDRAWS = 16
PD_MARGIN = 1.0


@dataclass(frozen=True)
class GenSpec:
    n: int = 10
    m: int = 5
    pd_A0: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.n < 1 or self.m < 1:
            raise ParameterError("n and m must be >= 1")


def complex_normal(rng: np.random.Generator, shape) -> np.ndarray:
    """Circular complex normal samples with unit entry variance."""
    s = np.sqrt(0.5)
    return s * rng.standard_normal(shape) + 1j * s * rng.standard_normal(shape)


def random_hermitian(rng: np.random.Generator, n: int) -> np.ndarray:
    M = complex_normal(rng, (n, n))
    return 0.5 * (M + M.conj().T)


def generate(spec: GenSpec) -> tuple[QcqpInstance, np.ndarray]:
    """Build an instance whose constraint set contains ``x_feas``.

    Each ``c_i`` equals ``g_i(x_feas) + |v_i|`` with ``v_i ~ N(0, 1)``, so the
    slack at ``x_feas`` is exactly ``|v_i|``. With ``pd_A0`` the indefinite
    draw is shifted by ``|lambda_min| + 1``, giving ``lambda_min(A0) = 1``.
    """
    n, m = spec.n, spec.m
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    x_feas = complex_normal(rng, n)

    redraws = 0
    while True:
        A0 = random_hermitian(rng, n)
        w = eig_hermitian(A0).eigenvalues
        if spec.pd_A0 or w[0] < 0 < w[-1]:
            break
        redraws += 1
        if redraws >= MAX_REDRAWS:
            raise QcqpError(f"could not draw an indefinite A0 in {MAX_REDRAWS} attempts (n = {n})")
    pd_shift = 0.0
    if spec.pd_A0:
        pd_shift = abs(float(w[0])) + PD_MARGIN
        A0 = A0 + pd_shift * np.eye(n)
    b0 = complex_normal(rng, n)

    constraints, margins = [], []
    for _ in range(m):
        A = random_hermitian(rng, n)
        b = complex_normal(rng, n)
        v = float(rng.standard_normal())
        g = float(np.vdot(x_feas, A @ x_feas).real - 2.0 * np.vdot(b, x_feas).real)
        constraints.append((A, b, g + abs(v)))
        margins.append(abs(v))

    meta = {
        "seed": spec.seed,
        "x_feas": x_feas,
        "pd_shift": pd_shift,
        "redraws": redraws,
        "margins": margins,
    }
    return QcqpInstance.create(A0, b0, constraints, meta), x_feas
