import math

import numpy as np
import pytest

from conftest import random_cvec, random_hermitian
from qcqp_admm.admm import (
    ConsensusADMM,
    IterateState,
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
from qcqp_admm.exceptions import ParameterError
from qcqp_admm.generate import GenSpec, generate
from qcqp_admm.model import QcqpInstance
from qcqp_admm.oracle import reference_step


def diag_instance(eigs, m, b0=None):
    n = len(eigs)
    cons = [(np.eye(n), np.zeros(n), 100.0)] * m
    return QcqpInstance.create(np.diag(eigs), np.zeros(n) if b0 is None else b0, cons)


def random_state(rng, n, m, scale=1.0):
    return IterateState(
        x=random_cvec(rng, n, scale),
        z=np.stack([random_cvec(rng, n, scale) for _ in range(m)]),
        u=np.stack([random_cvec(rng, n, scale) for _ in range(m)]),
        k=3,
    )


def fixed(rho, iters=1000, **kw):
    return SolverConfig(rho=rho, max_iters=iters, tol_dx=None, tol_consensus=None, **kw)


class TestAugmentedLagrangian:
    def test_equals_objective_at_consensus(self, rng):
        inst, x = generate(GenSpec(4, 3, True, 1))
        st = IterateState.initial(x, 3)
        assert augmented_lagrangian(inst, st, 7.0) == pytest.approx(inst.objective(x), rel=1e-14)

    def test_zero_state(self):
        inst = diag_instance([1.0, 2.0], 2)
        st = IterateState.initial(np.zeros(2), 2)
        assert augmented_lagrangian(inst, st, 3.0) == 0.0

    def test_term_by_term(self, rng):
        inst, _ = generate(GenSpec(5, 3, False, 2))
        st = random_state(rng, 5, 3)
        rho = 2.5
        x = st.x
        direct = np.real(np.conj(x) @ inst.A0 @ x) - 2 * np.real(np.conj(inst.b0) @ x)
        for i in range(3):
            r = st.z[i] - x + st.u[i]
            direct += rho * (np.sum(np.abs(r) ** 2) - np.sum(np.abs(st.u[i]) ** 2))
        assert augmented_lagrangian(inst, st, rho) == pytest.approx(direct, rel=1e-12)


class TestStep:
    def test_single_constraint_x_update(self):
        # A0 = I, b0 = 0, rho = 1; with z + u = (2, 0) the x-update is (I + I)^-1 (2, 0)
        inst = QcqpInstance.create(np.eye(2), np.zeros(2), [(np.eye(2), np.zeros(2), 100.0)])
        with ConsensusADMM(inst, fixed(1.0)) as eng:
            x = eng.update_x(np.array([[1.5, 0.0]]), np.array([[0.5, 0.0]]))
        np.testing.assert_allclose(x, [1.0, 0.0], atol=1e-15)

    def test_fixed_point_on_boundary(self):
        # min ||x||^2 - 4 Re(x1) s.t. ||x||^2 <= 1: x* = (1, 0), rho u = A0 x - b0 = (-1, 0)
        rho = 3.0
        inst = QcqpInstance.create(np.eye(2), [2.0, 0.0], [(np.eye(2), np.zeros(2), 1.0)])
        x = np.array([1.0, 0.0], dtype=complex)
        st = IterateState(x=x, z=x[None, :].copy(), u=np.array([[-1.0 / rho, 0.0]], dtype=complex), k=5)
        new, rec = step(inst, st, fixed(rho))
        np.testing.assert_allclose(new.x, x, atol=1e-10)
        np.testing.assert_allclose(new.u, st.u, atol=1e-10)
        assert new.k == 6 and rec.k == 6

    def test_matches_reference_step(self):
        inst, _ = generate(GenSpec(3, 2, False, 11))
        rng = np.random.default_rng(5)
        st = random_state(rng, 3, 2, 2.0)
        cfg = fixed(4.0)
        new, _ = step(inst, st, cfg)
        ref = reference_step(inst, st, cfg)
        for a, b in ((new.x, ref.x), (new.z, ref.z), (new.u, ref.u)):
            assert np.abs(a - b).max() <= 1e-9

    def test_zero_steps_is_identity(self):
        inst, x = generate(GenSpec(3, 2, True, 0))
        res = run(inst, fixed(10.0, iters=1))
        np.testing.assert_array_equal(res.initial.k, 0)
        assert res.initial.L == pytest.approx(inst.objective(x), rel=1e-14)

    def test_x_update_stationarity_and_z_feasibility(self):
        inst, x = generate(GenSpec(6, 4, True, 8))
        cfg = fixed(10.0, iters=50)
        with ConsensusADMM(inst, cfg) as eng:
            st = eng.initial_state()
            for _ in range(50):
                new, rec, _ = eng.step(st)
                lhs = (inst.A0 + inst.m * cfg.rho * np.eye(6)) @ new.x
                rhs = inst.b0 + cfg.rho * (new.z + st.u).sum(axis=0)
                assert np.linalg.norm(lhs - rhs) <= 1e-9 * np.linalg.norm(rhs)
                assert rec.max_constraint_violation_of_z <= cfg.qcqp1_tol * (1 + max(abs(c.c) for c in inst.constraints))
                st = new


class TestDualIdentity:
    def test_after_one_step_from_any_state(self, rng):
        # the x-update cancels whatever rho * sum(u) the step started from
        inst, _ = generate(GenSpec(5, 3, False, 4))
        for _ in range(5):
            st = random_state(rng, 5, 3)
            assert dual_identity_residual(inst, st, 10.0) > 1.0
            new, rec = step(inst, st, fixed(10.0))
            assert rec.dual_identity_residual <= 1e-9 * (1 + np.linalg.norm(inst.b0) + np.linalg.norm(inst.A0 @ new.x))
            assert dual_identity_residual(inst, new, 10.0) == pytest.approx(rec.dual_identity_residual, abs=1e-12)

    def test_perturbation_linear(self, rng):
        inst, _ = generate(GenSpec(5, 3, True, 4))
        s1, _ = step(inst, IterateState.initial(inst.x_feas, 3), fixed(10.0))
        base = dual_identity_residual(inst, s1, 10.0)
        delta = 1e-3 + 2e-3j
        s1.u[1, 2] += delta
        assert dual_identity_residual(inst, s1, 10.0) == pytest.approx(10.0 * abs(delta), rel=1e-9, abs=base * 10)

    def test_hundred_iterations(self):
        inst, _ = generate(GenSpec(10, 5, True, 0))
        res = run(inst, fixed(10.0, iters=100))
        assert max(r.dual_identity_residual / r.dual_scale for r in res.trace) <= 1e-8


class TestStrongConvexity:
    def test_identity(self):
        assert strong_convexity_param(diag_instance([1.0, 1.0], 1), 1.0) == 4.0

    def test_indefinite(self):
        inst = diag_instance([-2.0, 1.0, 3.0], 5)
        assert strong_convexity_param(inst, 1.0) == pytest.approx(6.0)
        with pytest.raises(ParameterError, match="must exceed"):
            strong_convexity_param(inst, 0.3)
        with pytest.raises(ParameterError):
            strong_convexity_param(inst, 0.4)
        assert strong_convexity_param(inst, 0.401) > 0

    def test_engine_refuses_low_rho(self):
        with pytest.raises(ParameterError):
            ConsensusADMM(diag_instance([-2.0, 1.0], 5), fixed(0.3))


class TestRecommendRho:
    def test_identity(self):
        assert recommend_rho(diag_instance([1.0, 1.0], 1), 1.0, 1.0) == pytest.approx(1.0)

    def test_indefinite(self):
        inst = diag_instance([-2.0, 0.5, 3.0], 5)
        assert recommend_rho(inst, 1.0, 1.0) == pytest.approx((3 * math.sqrt(5) + 2) / 5)
        assert recommend_rho(inst, 1.0, 1.0) == pytest.approx(1.7416407864998738)

    def test_safety_scales(self):
        inst = diag_instance([-2.0, 0.5, 3.0], 5)
        assert recommend_rho(inst, 2.0, 1.5) == pytest.approx(1.5 * recommend_rho(inst, 2.0, 1.0))

    def test_zero_matrix_fallback(self):
        assert recommend_rho(diag_instance([0.0, 0.0], 2), 1.0, 1.0) == 1.0

    def test_rejects_bad_args(self):
        inst = diag_instance([1.0], 1)
        with pytest.raises(ParameterError):
            recommend_rho(inst, 0.0)
        with pytest.raises(ParameterError):
            recommend_rho(inst, 1.0, 0.9)


class TestEstimateC:
    def test_single_constraint_is_one(self, rng):
        diffs = [random_cvec(rng, 4)[None, :] for _ in range(20)]
        for mode in ("empirical", "statistical"):
            assert estimate_C(diffs, mode).value == 1.0

    def test_zero_mean_gives_one(self, rng):
        diffs = [(rng.standard_normal((5, 10)) + 1j * rng.standard_normal((5, 10))) for _ in range(200)]
        est = estimate_C(diffs, "statistical")
        assert abs(est.value - 1.0) <= 0.05

    def test_zero_variance_gives_inverse_m(self):
        diffs = [np.full((4, 3), 0.7 - 0.2j) for _ in range(5)]
        est = estimate_C(diffs, "statistical")
        assert est.sigma2_hat == pytest.approx(0.0, abs=1e-30)
        assert est.value == pytest.approx(0.25, abs=1e-12)

    def test_synthetic_sampling(self):
        rng = np.random.default_rng(99)
        diffs = [(rng.standard_normal((5, 10)) + 1j * rng.standard_normal((5, 10))) / math.sqrt(2) for _ in range(1000)]
        est = estimate_C(diffs, "empirical")
        assert est.c_statistical == pytest.approx(1.0, abs=0.02)
        # the worst single-iteration ratio exceeds the mean ratio of about 1
        assert est.c_empirical_max > 1.5
        ratios = [np.sum(np.abs(d) ** 2) / np.sum(np.abs(d.sum(axis=0)) ** 2) for d in diffs]
        assert est.c_empirical_max == pytest.approx(max(ratios), rel=1e-12)

    def test_all_zero_is_degenerate(self):
        est = estimate_C([np.zeros((3, 2))] * 4, "empirical")
        assert est.degenerate and est.value == 1.0

    def test_cancelling_sum_is_skipped(self):
        d = np.array([[1.0, 0.0], [-1.0, 0.0]])
        est = estimate_C([d, np.array([[1.0, 0.0], [1.0, 0.0]])], "empirical")
        assert est.skipped == 1
        assert est.c_empirical_max == pytest.approx(0.5)

    def test_rejects_bad_input(self):
        with pytest.raises(ParameterError):
            estimate_C([], "empirical")
        with pytest.raises(ParameterError):
            estimate_C([np.zeros((1, 1))], "median")


class TestAudit:
    def test_strictly_decreasing(self):
        assert audit_monotonicity([5.0, 4.0, 3.0, -1.0]).ok

    def test_flags_increase(self):
        rep = audit_monotonicity([5.0, 4.0, 4.5, 3.0, 3.0 + 1e-12])
        assert rep.violations == [2]
        assert rep.max_increase == pytest.approx(0.5)

    def test_uses_record_k(self):
        recs = [TraceRecord(k, L, 0, 0, 0, 0, 0, 1) for k, L in [(1, 2.0), (2, 1.0), (3, 1.5)]]
        assert audit_monotonicity(recs).violations == [3]

    def test_needs_two(self):
        with pytest.raises(ValueError):
            audit_monotonicity([1.0])


class TestRun:
    def test_unconstrained_minimizer_feasible(self):
        A0 = np.diag([2.0, 3.0]).astype(complex)
        b0 = np.array([1.0, 1j])
        inst = QcqpInstance.create(A0, b0, [(np.eye(2), np.zeros(2), 4.0), (np.eye(2), [0.1, 0], 4.0)])
        res = run(inst, SolverConfig(rho=5.0, max_iters=2000), x0=np.zeros(2))
        assert res.reason == "converged"
        xstar = np.linalg.solve(A0, b0)
        np.testing.assert_allclose(res.state.x, xstar, atol=1e-7)
        for z in res.state.z:
            np.testing.assert_allclose(z, xstar, atol=1e-6)

    def test_first_step_can_raise_L(self):
        # u^(0) = 0 does not satisfy the dual identity, so L^(1) > L^(0) is allowed
        inst, _ = generate(GenSpec(10, 5, True, 0))
        res = run(inst, fixed(10.0, iters=2))
        assert res.initial.dual_identity_residual > 1e-3
        assert res.trace[0].L > res.initial.L
        assert [r.k for r in res.trace] == [1, 2]

    def test_warns_without_feasible_point(self):
        inst = QcqpInstance.create(np.eye(2), np.zeros(2), [(np.eye(2), np.zeros(2), 1.0)])
        with pytest.warns(UserWarning, match="no recorded feasible point"):
            res = run(inst, fixed(1.0, iters=3))
        assert res.initial.objective == 0.0

    def test_indefinite_diverges(self):
        inst, _ = generate(GenSpec(10, 5, False, 0))
        res = run(inst, fixed(10.0))
        assert res.diverged
        assert res.trace[-1].L < res.L0

    def test_threads_bit_identical(self):
        inst, _ = generate(GenSpec(8, 6, True, 3))
        a = run(inst, fixed(10.0, iters=60))
        b = run(inst, fixed(10.0, iters=60, threads=4))
        assert a.trace == b.trace
        assert np.array_equal(a.state.x, b.state.x)

    def test_tolerance_mode_stops_early(self):
        inst, _ = generate(GenSpec(6, 3, True, 2))
        res = run(inst, SolverConfig(rho=10.0, max_iters=5000, tol_dx=1e-6, tol_consensus=1e-4))
        assert res.reason == "converged"
        assert len(res.trace) < 5000
        assert res.trace[-1].dx_norm <= 1e-6 and res.trace[-1].consensus_residual <= 1e-4


class TestAutoRho:
    def test_fixed_mode_is_recommend_rho(self):
        inst, _ = generate(GenSpec(5, 3, True, 0))
        rho, est = auto_rho(inst, SolverConfig(c_mode="fixed:2", rho_safety=1.2))
        assert est is None
        assert rho == recommend_rho(inst, 2.0, 1.2)

    def test_empirical_gives_monotone_trace(self):
        inst, _ = generate(GenSpec(6, 3, True, 5))
        cfg = fixed(10.0, iters=300, c_mode="empirical")
        rho, est = auto_rho(inst, cfg)
        assert rho >= recommend_rho(inst, est.value, 1.0)
        res = run(inst, fixed(rho, iters=300))
        assert audit_monotonicity(res.trace).ok


class TestConfig:
    @pytest.mark.parametrize(
        "kw", [{"rho": 0}, {"rho": math.inf}, {"max_iters": 0}, {"rho_safety": 1.0}, {"threads": 0}, {"c_mode": "x"}]
    )
    def test_rejects(self, kw):
        with pytest.raises(ParameterError):
            SolverConfig(**kw)

    def test_c_mode_fixed_value(self):
        with pytest.raises(ParameterError):
            SolverConfig(c_mode="fixed:-1")
        assert SolverConfig(c_mode="fixed:2.5").c_mode == "fixed:2.5"

    def test_any_hermitian_above_floor(self, rng):
        A0 = random_hermitian(rng, 3)
        lam = np.linalg.eigvalsh(A0)[0]
        inst = QcqpInstance.create(A0, np.zeros(3), [(np.eye(3), np.zeros(3), 1.0)])
        ConsensusADMM(inst, fixed(max(-lam, 0) + 0.01)).close()
