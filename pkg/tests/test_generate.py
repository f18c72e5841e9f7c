import hashlib

import numpy as np
import pytest

from qcqp_admm.exceptions import ParameterError, QcqpError
from qcqp_admm.generate import GenSpec, complex_normal, generate


def rebuild_pd(seed, n, m):
    """Replay the documented stream order with raw PCG64 draws."""
    rng = np.random.Generator(np.random.PCG64(seed))
    s = np.sqrt(0.5)

    def cn(shape):
        re = rng.standard_normal(shape)
        im = rng.standard_normal(shape)
        return s * re + 1j * s * im

    x = cn(n)
    M = cn((n, n))
    A0 = 0.5 * (M + M.conj().T)
    A0 = A0 + (abs(np.linalg.eigvalsh(A0)[0]) + 1.0) * np.eye(n)
    b0 = cn(n)
    cons = []
    for _ in range(m):
        M = cn((n, n))
        A = 0.5 * (M + M.conj().T)
        b = cn(n)
        v = rng.standard_normal()
        cons.append((A, b, abs(v)))
    return x, A0, b0, cons


@pytest.mark.parametrize("seed", [0, 1, 7, 42, 1234])
@pytest.mark.parametrize("pd", [False, True])
def test_slack_equals_margin(seed, pd):
    inst, x = generate(GenSpec(10, 5, pd, seed))
    rep = inst.check_feasible(x)
    assert rep.feasible
    np.testing.assert_allclose(rep.per_constraint_slack, inst.meta["margins"], rtol=0, atol=1e-10)
    assert all(s >= -1e-10 for s in rep.per_constraint_slack)


@pytest.mark.parametrize("seed", range(10))
def test_pd_shift(seed):
    inst, _ = generate(GenSpec(10, 5, True, seed))
    w = np.linalg.eigvalsh(inst.A0)
    assert w[0] >= 1.0 - 1e-10
    assert inst.meta["pd_shift"] > 1.0


@pytest.mark.parametrize("seed", range(10))
def test_indefinite(seed):
    inst, _ = generate(GenSpec(10, 5, False, seed))
    w = np.linalg.eigvalsh(inst.A0)
    assert w[0] < 0 < w[-1]
    assert inst.meta["pd_shift"] == 0.0


def test_matrices_exactly_hermitian():
    inst, _ = generate(GenSpec(6, 3, False, 5))
    for A in [inst.A0] + [c.A for c in inst.constraints]:
        assert np.array_equal(A, A.conj().T)


def test_stream_order_replay():
    inst, x = generate(GenSpec(6, 3, True, 42))
    rx, rA0, rb0, rcons = rebuild_pd(42, 6, 3)
    np.testing.assert_array_equal(x, rx)
    np.testing.assert_allclose(inst.A0, rA0, atol=1e-12)
    np.testing.assert_array_equal(inst.b0, rb0)
    for con, (A, b, margin) in zip(inst.constraints, rcons):
        np.testing.assert_array_equal(con.A, A)
        np.testing.assert_array_equal(con.b, b)
    np.testing.assert_array_equal(inst.meta["margins"], [r[2] for r in rcons])


def test_seed_42_bytes_identical(tmp_path):
    digests = []
    for j in range(2):
        inst, _ = generate(GenSpec(10, 5, False, 42))
        p = tmp_path / f"i{j}.json"
        inst.save(p)
        digests.append(hashlib.sha256(p.read_bytes()).hexdigest())
    assert digests[0] == digests[1]


def test_seeds_differ():
    a, _ = generate(GenSpec(4, 2, False, 1))
    b, _ = generate(GenSpec(4, 2, False, 2))
    assert not np.array_equal(a.A0, b.A0)


def test_meta_fields():
    inst, x = generate(GenSpec(4, 2, False, 9))
    assert set(inst.meta) >= {"seed", "x_feas", "pd_shift", "redraws"}
    assert inst.meta["seed"] == 9
    np.testing.assert_array_equal(inst.x_feas, x)


def test_complex_normal_moments():
    z = complex_normal(np.random.default_rng(0), 200_000)
    assert np.mean(np.abs(z) ** 2) == pytest.approx(1.0, abs=0.01)
    assert abs(np.mean(z**2)) < 0.01
    assert np.var(z.real) == pytest.approx(0.5, abs=0.01)


def test_scalar_indefinite_impossible():
    with pytest.raises(QcqpError, match="indefinite"):
        generate(GenSpec(1, 1, False, 0))
    # the shift is |lambda_min| + 1 whatever the sign, so a positive draw lands above 1
    inst, _ = generate(GenSpec(1, 1, True, 0))
    assert inst.A0[0, 0].real >= 1.0


def test_rejects_bad_genspec():
    with pytest.raises(ParameterError):
        GenSpec(0, 1)
    with pytest.raises(ParameterError):
        GenSpec(3, 0)
