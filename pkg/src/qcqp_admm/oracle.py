"""Brute-force references for cross-checking the solver.

Nothing here imports the solver's numerical code (``linalg``, ``qcqp1``,
``admm``); agreement between the two paths is therefore evidence rather
than a tautology. These routines are slow by design and meant for tests and
acceptance runs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.optimize

from .exceptions import InfeasibleSubproblemError, OracleInconclusive


def _g(A, b, z):
    return float(np.real(np.conj(z) @ A @ z) - 2.0 * np.real(np.conj(b) @ z))


@dataclass(frozen=True)
class OracleResult:
    z: np.ndarray
    distance: float  # squared distance ||z - v||^2


def qcqp1_dense_mu(A, b, c: float, v, grid_points: int = 1_000_000, feas_tol: float = 1e-9) -> OracleResult:
    """Sweep the KKT multiplier on a dense grid and keep the closest feasible point.

    Grid over ``[0, mu_hi)`` where ``mu_hi = -1/lambda_min(A)`` for indefinite
    ``A``; otherwise ``mu = t/(1-t)`` for ``t`` on a uniform grid in ``[0, 1)``.
    Distances are computed in the eigenbasis of a fresh ``numpy.linalg.eigh``.
    """
    A = np.asarray(A, dtype=np.complex128)
    b = np.asarray(b, dtype=np.complex128)
    v = np.asarray(v, dtype=np.complex128)
    if _g(A, b, v) <= c:
        raise ValueError("qcqp1_dense_mu requires an active constraint (g(v) > c)")
    lam, Q = np.linalg.eigh(A)
    a = Q.conj().T @ v
    bb = Q.conj().T @ b
    t = np.arange(grid_points, dtype=np.float64) / grid_points
    if lam[0] < 0:
        mu = t * (-1.0 / lam[0])
    else:
        mu = t / (1.0 - t)
    # per component, with s = 1 + mu*lam:
    #   |zbar|^2 = (|a|^2 + 2 mu Re(a* bb) + mu^2 |bb|^2) / s^2
    #   Re(bb* zbar) = (Re(bb* a) + mu |bb|^2) / s
    #   |zbar - a|^2 = mu^2 |bb - lam a|^2 / s^2
    # in-place passes over preallocated buffers keep this fast at 1e6 points
    g = np.zeros_like(mu)
    d = np.zeros_like(mu)
    inv, p, q = np.empty_like(mu), np.empty_like(mu), np.empty_like(mu)
    for lj, aj, bj in zip(lam, a, bb):
        aa, ab, b2 = abs(aj) ** 2, float(np.real(np.conj(aj) * bj)), abs(bj) ** 2
        r2 = abs(bj - lj * aj) ** 2
        np.multiply(mu, lj, out=inv)
        inv += 1.0
        np.reciprocal(inv, out=inv)
        # g += lam (|a|^2 + mu (2 Re(a* bb) + mu |bb|^2)) / s^2 - 2 (Re(bb* a) + mu |bb|^2) / s
        np.multiply(mu, b2, out=q)
        np.add(q, 2.0 * ab, out=p)
        p *= mu
        p += aa
        p *= inv
        p *= inv
        p *= lj
        g += p
        q += ab
        q *= inv
        q *= 2.0
        g -= q
        # d += |bb - lam a|^2 (mu / s)^2
        np.multiply(mu, inv, out=p)
        p *= p
        p *= r2
        d += p
    ok = g <= c + feas_tol
    best_mu = None
    if ok.any():
        j = int(np.argmin(np.where(ok, d, np.inf)))
        best_mu = float(mu[j])
    if best_mu is None:
        raise OracleInconclusive("no feasible grid point on the multiplier sweep")
    z = Q @ ((a + best_mu * bb) / (1.0 + best_mu * lam))
    return OracleResult(z=z, distance=float(np.sum(np.abs(z - v) ** 2)))


def qcqp1_boundary_sampling(A, b, c: float, v, n_rays: int = 4000, refine: int = 8, seed: int = 0) -> OracleResult:
    """Shoot random rays from ``v`` to the constraint boundary, then polish the best hits.

    For a ray ``v + t w`` the constraint is a scalar quadratic in ``t``; its
    smallest non-negative root gives a boundary point. The ``refine`` closest
    hits seed an SLSQP polish in real coordinates.
    """
    A = np.asarray(A, dtype=np.complex128)
    b = np.asarray(b, dtype=np.complex128)
    v = np.asarray(v, dtype=np.complex128)
    n = v.shape[0]
    rng = np.random.default_rng(seed)
    W = rng.standard_normal((n_rays, n)) + 1j * rng.standard_normal((n_rays, n))
    W /= np.linalg.norm(W, axis=1, keepdims=True)
    # g(v + t w) - c = qa t^2 + qb t + qc
    Av = A @ v
    qa = np.real(np.einsum("ri,ij,rj->r", W.conj(), A, W))
    qb = 2.0 * np.real(W.conj() @ Av) - 2.0 * np.real(W @ b.conj())
    qc = _g(A, b, v) - c
    with np.errstate(divide="ignore", invalid="ignore"):
        disc = qb**2 - 4.0 * qa * qc
        sq = np.sqrt(np.where(disc >= 0, disc, np.nan))
        quad = np.abs(qa) > 1e-14
        roots = np.stack(
            [
                np.where(quad, (-qb - sq) / (2.0 * qa), -qc / qb),
                np.where(quad, (-qb + sq) / (2.0 * qa), -qc / qb),
            ]
        )
    roots = np.where(np.isfinite(roots) & (roots >= 0), roots, np.inf)
    ts = roots.min(axis=0)
    if not np.isfinite(ts).any():
        raise OracleInconclusive("no ray reached the constraint boundary")

    def pack(z):
        return np.concatenate([z.real, z.imag])

    def unpack(p):
        return p[:n] + 1j * p[n:]

    cons = {"type": "ineq", "fun": lambda p: c - _g(A, b, unpack(p))}
    best = None
    for r in np.argsort(ts)[:refine]:
        if not np.isfinite(ts[r]):
            continue
        z0 = v + ts[r] * W[r]
        cand = [z0]
        res = scipy.optimize.minimize(
            lambda p: float(np.sum((p - pack(v)) ** 2)),
            pack(z0),
            jac=lambda p: 2.0 * (p - pack(v)),
            constraints=[cons],
            method="SLSQP",
            options={"ftol": 1e-14, "maxiter": 500},
        )
        if res.success and _g(A, b, unpack(res.x)) <= c + 1e-9:
            cand.append(unpack(res.x))
        for z in cand:
            d = float(np.sum(np.abs(z - v) ** 2))
            if best is None or d < best.distance:
                best = OracleResult(z=z, distance=d)
    return best


def reference_step(inst, state, config):
    """Straight-line z -> x -> u iteration with naive dense solves and no caching.

    Each z-update solves ``(I + mu A_i) z = v + mu b_i`` directly for every
    trial multiplier and finds the root of the constraint residual with
    Brent's method; the x-update is a plain ``numpy.linalg.solve``.
    Returns a new state object of the same type as ``state``.
    """
    rho = config.rho
    n, m = inst.n, inst.m
    x, Z, U = np.array(state.x), np.array(state.z), np.array(state.u)
    eye = np.eye(n)
    z_new = np.empty_like(Z)
    for i, con in enumerate(inst.constraints):
        v = x - U[i]
        if _g(con.A, con.b, v) <= con.c:
            z_new[i] = v
            continue

        def z_of(mu, A=con.A, b=con.b, v=v):
            return np.linalg.solve(eye + mu * A, v + mu * b)

        def resid(mu, A=con.A, b=con.b, c=con.c):
            return _g(A, b, z_of(mu)) - c

        lam_min = np.linalg.eigvalsh(con.A)[0]
        hi_cap = -1.0 / lam_min if lam_min < 0 else np.inf
        lo, hi = 0.0, (0.5 * hi_cap if np.isfinite(hi_cap) else 1.0)
        while resid(hi) > 0:
            lo = hi
            if np.isfinite(hi_cap):
                hi = 0.5 * (hi + hi_cap)
                if 1.0 + hi * lam_min < 1e-13:
                    raise InfeasibleSubproblemError("reference z-update hit the pole (hard case)")
            else:
                hi *= 2.0
                if hi > 2.0**60:
                    raise InfeasibleSubproblemError("reference z-update found no feasible multiplier")
        mu = scipy.optimize.brentq(resid, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
        z_new[i] = z_of(mu)
    rhs = inst.b0 + rho * np.sum(z_new + U, axis=0)
    x_new = np.linalg.solve(inst.A0 + m * rho * eye, rhs)
    u_new = U + z_new - x_new
    return type(state)(x=x_new, z=z_new, u=u_new, k=state.k + 1)


@dataclass(frozen=True)
class GlobalSearchResult:
    x: np.ndarray
    value: float
    resolution: float


def small_global_search(inst, box: float = 5.0, grid: int = 400) -> GlobalSearchResult:
    """Grid search over real ``x`` in ``[-box, box]^n`` (n <= 2) plus SLSQP polish.

    Only real-valued instances are accepted and only real ``x`` is searched.
    """
    n = inst.n
    if n > 2:
        raise ValueError("small_global_search supports n <= 2")
    mats = [inst.A0] + [con.A for con in inst.constraints]
    vecs = [inst.b0] + [con.b for con in inst.constraints]
    if any(np.abs(np.imag(M)).max() > 0 for M in mats) or any(np.abs(np.imag(w)).max() > 0 for w in vecs):
        raise ValueError("small_global_search requires real instance data")
    A0, b0 = np.real(inst.A0), np.real(inst.b0)
    cons = [(np.real(con.A), np.real(con.b), con.c) for con in inst.constraints]

    axis = np.linspace(-box, box, grid)
    pts = np.stack(np.meshgrid(*([axis] * n), indexing="ij"), axis=-1).reshape(-1, n)

    def qf(A, b, P):
        return np.einsum("pi,ij,pj->p", P, A, P) - 2.0 * P @ b

    feas = np.ones(len(pts), dtype=bool)
    for A, b, c in cons:
        feas &= qf(A, b, pts) <= c
    if not feas.any():
        raise OracleInconclusive("no feasible grid point in the search box")
    vals = np.where(feas, qf(A0, b0, pts), np.inf)
    x0 = pts[np.argmin(vals)]
    best_x, best_v = x0, float(vals.min())

    res = scipy.optimize.minimize(
        lambda p: float(p @ A0 @ p - 2.0 * b0 @ p),
        x0,
        jac=lambda p: 2.0 * (A0 @ p - b0),
        constraints=[{"type": "ineq", "fun": (lambda p, A=A, b=b, c=c: c - (p @ A @ p - 2.0 * b @ p))} for A, b, c in cons],
        method="SLSQP",
        options={"ftol": 1e-14, "maxiter": 500},
    )
    if res.success:
        ok = all(res.x @ A @ res.x - 2.0 * b @ res.x <= c + 1e-9 for A, b, c in cons)
        if ok and res.fun < best_v:
            best_x, best_v = res.x, float(res.fun)
    return GlobalSearchResult(x=best_x.astype(np.complex128), value=best_v, resolution=float(axis[1] - axis[0]))
