"""QCQP instance data model, evaluation helpers and the JSON instance format.

An instance encodes

    minimize    x^H A0 x - 2 Re(b0^H x)
    subject to  x^H Ai x - 2 Re(bi^H x) <= ci,   i = 1..m

over x in C^n, with every Ai Hermitian and possibly indefinite.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .exceptions import ValidationError
from .linalg import as_hermitian, as_vector, quad_form

FEAS_TOL = 1e-8


@dataclass(frozen=True)
class Constraint:
    A: np.ndarray
    b: np.ndarray
    c: float

    def value(self, x) -> float:
        return quad_form(self.A, self.b, x)


@dataclass(frozen=True)
class FeasibilityReport:
    feasible: bool
    per_constraint_slack: list[float]
    worst_violation: float


@dataclass(frozen=True)
class QcqpInstance:
    """A validated, immutable problem instance.

    Use :meth:`create` rather than the raw constructor; it checks shapes and
    Hermitian-ness and symmetrizes the matrices.
    """

    A0: np.ndarray
    b0: np.ndarray
    constraints: tuple[Constraint, ...]
    meta: dict[str, Any] = field(default_factory=dict, compare=False)

    @classmethod
    def create(cls, A0, b0, constraints: Sequence, meta: dict | None = None) -> "QcqpInstance":
        A0 = as_hermitian(A0, name="A0")
        n = A0.shape[0]
        b0 = as_vector(b0, n, "b0")
        if len(constraints) < 1:
            raise ValidationError("at least one constraint is required")
        cons = []
        for i, con in enumerate(constraints, start=1):
            if isinstance(con, Constraint):
                A, b, c = con.A, con.b, con.c
            else:
                A, b, c = con
            A = as_hermitian(A, n, f"A{i}")
            b = as_vector(b, n, f"b{i}")
            c = _real_scalar(c, f"c{i}")
            cons.append(Constraint(A, b, c))
        return cls(A0, b0, tuple(cons), dict(meta or {}))

    @property
    def n(self) -> int:
        return self.A0.shape[0]

    @property
    def m(self) -> int:
        return len(self.constraints)

    @cached_property
    def x_feas(self) -> np.ndarray | None:
        xf = self.meta.get("x_feas")
        return None if xf is None else np.asarray(xf, dtype=np.complex128)

    def objective(self, x) -> float:
        x = as_vector(x, self.n, "x")
        return quad_form(self.A0, self.b0, x)

    def constraint_value(self, i: int, x) -> float:
        """Return g_i(x) for the 1-based constraint index ``i``."""
        if not 1 <= i <= self.m:
            raise IndexError(f"constraint index {i} outside 1..{self.m}")
        x = as_vector(x, self.n, "x")
        return self.constraints[i - 1].value(x)

    def check_feasible(self, x, tol: float = FEAS_TOL) -> FeasibilityReport:
        if tol < 0:
            raise ValueError("tol must be non-negative")
        x = as_vector(x, self.n, "x")
        slack = [con.c - con.value(x) for con in self.constraints]
        worst = max(0.0, -min(slack))
        return FeasibilityReport(feasible=min(slack) >= -tol, per_constraint_slack=slack, worst_violation=worst)

    # --- serialization -------------------------------------------------

    def to_dict(self) -> dict:
        doc = {
            "n": self.n,
            "m": self.m,
            "A0": _encode_matrix(self.A0),
            "b0": _encode_vector(self.b0),
            "constraints": [
                {"A": _encode_matrix(c.A), "b": _encode_vector(c.b), "c": float(c.c)} for c in self.constraints
            ],
        }
        if self.meta:
            meta = dict(self.meta)
            if "x_feas" in meta:
                meta["x_feas"] = _encode_vector(np.asarray(meta["x_feas"], dtype=np.complex128))
            doc["meta"] = meta
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "QcqpInstance":
        try:
            n, m = int(doc["n"]), int(doc["m"])
            A0 = _decode_matrix(doc["A0"], "A0")
            b0 = _decode_vector(doc["b0"], "b0")
            raw = doc["constraints"]
            cons = [
                (_decode_matrix(r["A"], f"A{i}"), _decode_vector(r["b"], f"b{i}"), r["c"])
                for i, r in enumerate(raw, start=1)
            ]
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"malformed instance document: {exc!r}") from exc
        if len(cons) != m:
            raise ValidationError(f"m = {m} but {len(cons)} constraints given")
        if A0.shape != (n, n):
            raise ValidationError(f"n = {n} but A0 has shape {A0.shape}")
        meta = dict(doc.get("meta") or {})
        if "x_feas" in meta:
            meta["x_feas"] = _decode_vector(meta["x_feas"], "meta.x_feas")
        return cls.create(A0, b0, cons, meta)

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    def save(self, path) -> None:
        Path(path).write_text(self.dumps() + "\n")

    @classmethod
    def load(cls, path) -> "QcqpInstance":
        return cls.from_dict(json.loads(Path(path).read_text()))


def expand_equality(A, b, c) -> tuple[Constraint, Constraint]:
    """Rewrite ``x^H A x - 2 Re(b^H x) = c`` as two inequality constraints."""
    A = as_hermitian(A)
    b = as_vector(b, A.shape[0], "b")
    c = _real_scalar(c, "c")
    return Constraint(A, b, c), Constraint(-A, -b, -c)


def _real_scalar(c, name: str) -> float:
    if isinstance(c, (list, tuple)):
        if len(c) != 2 or c[1] != 0:
            raise ValidationError(f"{name} must be real, got {c!r}")
        c = c[0]
    if isinstance(c, complex) or np.iscomplexobj(c):
        if np.imag(c) != 0:
            raise ValidationError(f"{name} must be real, got {c!r}")
        c = np.real(c)
    try:
        c = float(c)
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"{name} must be a real number, got {c!r}") from exc
    if not np.isfinite(c):
        raise ValidationError(f"{name} must be finite")
    return c


def _encode_vector(v: np.ndarray) -> list:
    return [[float(z.real), float(z.imag)] for z in v]


def _encode_matrix(M: np.ndarray) -> list:
    return [_encode_vector(row) for row in M]


def _decode_vector(data, name: str) -> np.ndarray:
    arr = np.asarray(data, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValidationError(f"{name} must be a list of [re, im] pairs")
    return arr[:, 0] + 1j * arr[:, 1]


def _decode_matrix(data, name: str) -> np.ndarray:
    arr = np.asarray(data, dtype=np.float64)
    if arr.ndim != 3 or arr.shape[2] != 2:
        raise ValidationError(f"{name} must be a row-major matrix of [re, im] pairs")
    return arr[..., 0] + 1j * arr[..., 1]
