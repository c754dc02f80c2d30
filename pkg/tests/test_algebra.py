import numpy as np
import pytest

from twistfluct.algebra import (Automorphism, Representation, StarAlgebra, check_regular, opposite_element,
                                rho_opposite)
from twistfluct.errors import IrregularTwistError
from twistfluct.opcore import AntilinearOp, residual

S1 = np.array([[0, 1], [1, 0]], dtype=complex)


def test_flip_and_identity():
    A = StarAlgebra((1, 1))
    a = A.element([[[2.0]], [[-1j]]])
    flip = Automorphism(A, (1, 0))
    assert np.allclose(flip(a).parts[0], -1j) and np.allclose(flip(a).parts[1], 2.0)
    assert flip.inverse(flip(a)).distance(a) == 0
    assert Automorphism.identity(A)(a).distance(a) == 0


def test_inner_twist_roundtrip():
    A = StarAlgebra((2,))
    rho = Automorphism(A, (0,), [np.diag([1, 1j])])
    for e in A.basis():
        assert rho(rho.inverse(e)).distance(e) < 1e-14


def test_regularity():
    A = StarAlgebra((1, 1))
    assert check_regular(Automorphism(A, (1, 0))).regular
    assert check_regular(Automorphism.identity(A)).residual == 0
    # W^2 = diag(1, -1) is not central, so rho(a*) != (rho^-1(a))*
    B = StarAlgebra((2,))
    rep = check_regular(Automorphism(B, (0,), [np.diag([1, 1j])]))
    assert not rep.regular and rep.residual > 1
    with pytest.raises(ValueError):
        Automorphism(B, (0,), [np.array([[1, 1], [0, 1]])])


def test_representation_homomorphism(rng):
    A = StarAlgebra((2, 1))
    V, _ = np.linalg.qr(rng.standard_normal((7, 7)) + 1j * rng.standard_normal((7, 7)))
    rep = Representation(A, (2, 3), V)
    r = rep.homomorphism_residuals(rng, 10)
    assert max(r.values()) < 1e-12
    assert rep.embed(A.unit()).mat.shape == (7, 7)
    assert residual(rep.embed(A.unit()), np.eye(7)) < 1e-12


def test_opposite_two_point():
    J = AntilinearOp(S1)
    A = StarAlgebra((1, 1))
    rep = Representation(A, (1, 1))
    a = A.element([[[0.4 + 1j]], [[-2.0]]])
    ao = opposite_element(J, rep.embed(a))
    assert np.allclose(ao.mat, np.diag([-2.0, 0.4 - 1j]).conj())
    assert residual(opposite_element(J, np.eye(2)), np.eye(2)) == 0


def test_opposite_antihomomorphism(rng):
    A = StarAlgebra((2, 1))
    rep = Representation(A, (1, 2))
    n = 4
    W, _ = np.linalg.qr(rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)))
    J = AntilinearOp(W)
    for _ in range(50):
        a, b = A.random_element(rng), A.random_element(rng)
        lhs = opposite_element(J, rep.embed(a @ b))
        rhs = opposite_element(J, rep.embed(b)) @ opposite_element(J, rep.embed(a))
        assert residual(lhs, rhs) < 1e-12 * max(1, np.linalg.norm(lhs.mat))


def test_rho_opposite_routes(rng):
    A = StarAlgebra((1, 1))
    rep = Representation(A, (1, 1))
    J = AntilinearOp(S1)
    b = A.element([[[1.5j]], [[0.2]]])
    assert rho_opposite(Automorphism(A, (1, 0)), J, b, rep).route_residual <= 1e-12
    assert residual(rho_opposite(Automorphism.identity(A), J, b, rep).value, opposite_element(J, rep.embed(b))) == 0
    # random regular twist: swap of two M_2 blocks dressed by (W, W*)
    B = StarAlgebra((2, 2))
    rep2 = Representation(B, (1, 1))
    W, _ = np.linalg.qr(rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2)))
    rho = Automorphism(B, (1, 0), [W, W.conj().T])
    assert check_regular(rho).regular
    V, _ = np.linalg.qr(rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4)))
    for _ in range(20):
        x = B.random_element(rng)
        assert rho_opposite(rho, AntilinearOp(V), x, rep2).route_residual < 1e-12
    with pytest.raises(IrregularTwistError):
        rho_opposite(Automorphism(B, (0, 1), [np.diag([1, 1j]), np.eye(2)]), AntilinearOp(V), x, rep2)


def test_bad_block_sizes():
    with pytest.raises(ValueError):
        StarAlgebra(())
    with pytest.raises(ValueError):
        StarAlgebra((2, 0))
