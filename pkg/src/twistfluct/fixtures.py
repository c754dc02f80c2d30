"""Built-in triples and modules."""

from __future__ import annotations

import numpy as np

from .algebra import Automorphism, Representation, StarAlgebra
from .morita import HermitianModule
from .opcore import AntilinearOp, LinearOp
from .triple import KOSignature, RealTwistedTriple

SIGMA1 = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA3 = np.array([[1, 0], [0, -1]], dtype=complex)


def two_point() -> RealTwistedTriple:
    """C^2 on C^2, D = sigma_1, Gamma = sigma_3, J = sigma_1∘conj, rho = flip."""
    A = StarAlgebra((1, 1))
    rep = Representation(A, (1, 1))
    flip = Automorphism(A, (1, 0))
    return RealTwistedTriple(A, rep, LinearOp(SIGMA1), AntilinearOp(SIGMA1), LinearOp(SIGMA3), flip,
                             KOSignature(1, 1, -1, 6), name="two-point")


def four_point(n: int = 2, twisted: bool = True, seed: int = 0) -> RealTwistedTriple:
    """C^2 acting on C^4 ⊗ C^n by diag(f, f, g, g) ⊗ 1, KO-dimension 0.

    Gamma = diag(+, -, +, -), J = (swap of the indices 1 and 3)∘conj, and D
    couples 0-1, 0-3, 2-3, 2-1 with blocks A, conj(A), B, conj(B) (A, B random
    n x n), which makes J D = D J. With the flip twist the twisted 1-forms
    live in the 0-1 and 2-3 blocks; with rho = id in the 0-3 and 2-1 blocks.
    """
    rng = np.random.default_rng(seed)
    A_ = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    B_ = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    D = np.zeros((4 * n, 4 * n), dtype=complex)

    def put(i, j, X):
        D[i * n:(i + 1) * n, j * n:(j + 1) * n] = X
        D[j * n:(j + 1) * n, i * n:(i + 1) * n] = X.conj().T

    put(0, 1, A_)
    put(0, 3, A_.conj())
    put(2, 3, B_)
    put(2, 1, B_.conj())
    swap = np.eye(4)[[0, 3, 2, 1]]
    U = np.kron(swap, np.eye(n))
    Gam = np.kron(np.diag([1.0, -1.0, 1.0, -1.0]), np.eye(n))
    alg = StarAlgebra((1, 1))
    rep = Representation(alg, (2 * n, 2 * n))
    rho = Automorphism(alg, (1, 0)) if twisted else Automorphism.identity(alg)
    return RealTwistedTriple(alg, rep, LinearOp(D), AntilinearOp(U), LinearOp(Gam), rho,
                             KOSignature(1, 1, 1, 0),
                             name=f"four-point-{'twisted' if twisted else 'untwisted'}-n{n}")


def rotated_projection(angle: float, phase: float = 0.0) -> np.ndarray:
    v = np.array([np.cos(angle), np.exp(1j * phase) * np.sin(angle)])
    return np.outer(v, v.conj())


def pA2_modules(t: RealTwistedTriple, side: str = "right") -> dict:
    """Module fixtures over the two-block algebra C^2: E = p A^2 with

    - "diag": p = diag(1, 0),
    - "rotated": scalar rank-one projections (invariant under any twist),
    - "free": p = 1,
    - "noninvariant": p = diag((1, 0), 0), i.e. the first block only in the first slot.
    """
    A = t.algebra
    one, zero = A.unit(), A.zero()
    out = {
        "free": HermitianModule.free(A, side, 2, t.rho),
        "diag": HermitianModule.build(A, side, [[one, zero], [zero, zero]], t.rho),
    }
    P = rotated_projection(0.6, 0.3)
    out["rotated"] = HermitianModule.build(A, side, [[A.scalar(P[i, j]) for j in range(2)] for i in range(2)],
                                           t.rho)
    e1 = A.element([np.eye(A.blocks[0])] + [np.zeros((n, n)) for n in A.blocks[1:]])
    out["noninvariant"] = HermitianModule.build(A, side, [[e1, zero], [zero, zero]], t.rho)
    return out


CATALOG = ("two-point", "four-point", "lattice-m1", "lattice-m2", "pA2-module")


def fixture_triple(name: str) -> RealTwistedTriple:
    from .manifold import lattice_minimal_twist

    if name == "two-point":
        return two_point()
    if name == "four-point":
        return four_point()
    if name == "four-point-untwisted":
        return four_point(twisted=False)
    if name == "lattice-m1":
        return lattice_minimal_twist(1, 9).triple
    if name == "lattice-m2":
        return lattice_minimal_twist(2, 3).triple
    raise KeyError(name)
