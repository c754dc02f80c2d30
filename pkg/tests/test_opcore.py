import numpy as np
import pytest

from twistfluct.errors import DimensionError, NotAntiunitaryError
from twistfluct.opcore import (AntilinearOp, LinearOp, Tolerance, compose_antilinear, conjugate_by, norm,
                               relative_residual, residual, twisted_commutator, unconjugate_by)

S1 = np.array([[0, 1], [1, 0]], dtype=complex)


def test_twisted_commutator_vanishes_for_flip():
    f, g = 0.7 - 0.2j, -1.3 + 0.4j
    out = twisted_commutator(S1, np.diag([f, g]), np.diag([g, f]))
    assert np.allclose(out.mat, 0)


def test_twisted_commutator_untwisted_is_plain_commutator():
    a = np.diag([1.0, 2.0])
    out = twisted_commutator(S1, a, a)
    assert np.allclose(out.mat, S1 @ a - a @ S1)
    assert np.allclose(out.mat, [[0, 1], [-1, 0]])


def test_twisted_commutator_identity_and_shape_check():
    assert np.allclose(twisted_commutator(S1, np.eye(2), np.eye(2)).mat, 0)
    with pytest.raises(DimensionError):
        twisted_commutator(S1, np.eye(3), np.eye(3))


def test_antilinear_squares():
    J = AntilinearOp(S1)
    assert isinstance(J @ J, LinearOp)
    assert np.allclose((J @ J).mat, np.eye(2))
    K = AntilinearOp(np.eye(3))
    assert np.allclose((K @ K).mat, np.eye(3))


def test_antilinear_adjoint_inner_product(rng):
    # <C xi, zeta> = conj(<xi, C* zeta>)
    n = 4
    X = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    U, _ = np.linalg.qr(X)
    C = AntilinearOp(U)
    for _ in range(100):
        xi = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        ze = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        lhs = np.vdot(ze, C.apply(xi))
        rhs = np.conj(np.vdot(C.H.apply(ze), xi))
        assert abs(lhs - rhs) < 1e-12


def test_compose_mixed_kinds(rng):
    T = LinearOp(rng.standard_normal((3, 3)))
    J = AntilinearOp(np.eye(3)[[2, 0, 1]])
    psi = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    assert np.allclose((T @ J).apply(psi), T.mat @ J.apply(psi))
    assert np.allclose(compose_antilinear(J, T).apply(psi), J.apply(T.mat @ psi))


def test_conjugate_by_opposite_of_diagonal():
    J = AntilinearOp(S1)
    f, g = 0.3 + 1j, -2.0 + 0.5j
    astar = np.diag([f, g]).conj().T
    assert np.allclose(conjugate_by(J, astar).mat, np.diag([g, f]))
    assert np.allclose(conjugate_by(J, np.eye(2)).mat, np.eye(2))


def test_conjugate_adjoint_of_unitaries(rng):
    n = 5
    W, _ = np.linalg.qr(rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)))
    J = AntilinearOp(W)
    for _ in range(20):
        u, _ = np.linalg.qr(rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)))
        lhs = conjugate_by(J, u).mat.conj().T
        assert residual(lhs, conjugate_by(J, u.conj().T)) < 1e-12


def test_unconjugate_inverts(rng):
    n = 4
    W, _ = np.linalg.qr(rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)))
    J = AntilinearOp(W)
    T = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    assert residual(unconjugate_by(J, conjugate_by(J, T)), T) < 1e-12


def test_non_antiunitary_rejected():
    with pytest.raises(NotAntiunitaryError):
        conjugate_by(AntilinearOp(2 * np.eye(2)), np.eye(2))


def test_residuals():
    T = np.arange(9.0).reshape(3, 3)
    assert residual(T, T) == 0
    assert np.isclose(residual(np.zeros((4, 4)), np.eye(4)), 2.0)
    A, B = np.eye(2), S1
    assert residual(A, B) == residual(B, A)
    assert relative_residual(np.zeros((2, 2)), np.zeros((2, 2))) == 0.0
    assert np.isclose(norm(np.eye(3), "spectral"), 1.0)


def test_tolerance_threshold_and_env(monkeypatch):
    tol = Tolerance(1e-8, 1e-12)
    assert tol.threshold(10.0, 2.0) == pytest.approx(1e-7 + 1e-12)
    monkeypatch.setenv("TWISTFLUCT_REL_TOL", "1e-6")
    assert Tolerance.from_env().rel_tol == 1e-6
    with pytest.raises(ValueError):
        Tolerance(0.0, 1e-12)
