"""Finite-dimensional *-algebras (direct sums of full complex matrix blocks),
their representations, automorphisms of block-permutation-times-inner type,
and the opposite-algebra action a° = J a* J^-1.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from .errors import AlgebraMismatchError, DimensionError, IrregularTwistError
from .opcore import AntilinearOp, LinearOp, Tolerance, conjugate_by, residual


@dataclass(frozen=True)
class StarAlgebra:
    """Direct sum of full matrix algebras M_{n_1} ⊕ ... ⊕ M_{n_k}."""

    blocks: tuple[int, ...]

    def __post_init__(self):
        b = tuple(int(n) for n in self.blocks)
        if not b or any(n < 1 for n in b):
            raise ValueError("blocks must be a non-empty list of positive integers")
        object.__setattr__(self, "blocks", b)

    @property
    def dim(self) -> int:
        return sum(n * n for n in self.blocks)

    @cached_property
    def offsets(self) -> np.ndarray:
        """Start of each block in the flattened coefficient vector."""
        return np.concatenate([[0], np.cumsum([n * n for n in self.blocks])]).astype(int)

    def element(self, parts: Sequence) -> "AlgebraElement":
        return AlgebraElement(self, tuple(np.array(p, dtype=complex) for p in parts))

    def zero(self) -> "AlgebraElement":
        return self.element([np.zeros((n, n)) for n in self.blocks])

    def unit(self) -> "AlgebraElement":
        return self.element([np.eye(n) for n in self.blocks])

    def scalar(self, c: complex) -> "AlgebraElement":
        return self.element([c * np.eye(n) for n in self.blocks])

    def basis_labels(self) -> list[tuple[int, int, int]]:
        """(block, row, col) for every matrix unit, in coefficient order."""
        return [(b, k, l) for b, n in enumerate(self.blocks) for k in range(n) for l in range(n)]

    def basis(self) -> list["AlgebraElement"]:
        out = []
        for b, k, l in self.basis_labels():
            parts = [np.zeros((n, n), dtype=complex) for n in self.blocks]
            parts[b][k, l] = 1.0
            out.append(AlgebraElement(self, tuple(parts)))
        return out

    def from_coeffs(self, c) -> "AlgebraElement":
        c = np.asarray(c, dtype=complex)
        if c.shape != (self.dim,):
            raise DimensionError(f"expected {self.dim} coefficients, got {c.shape}")
        o = self.offsets
        return AlgebraElement(self, tuple(c[o[i]:o[i + 1]].reshape(n, n)
                                          for i, n in enumerate(self.blocks)))

    def random_element(self, rng: np.random.Generator, scale: float = 1.0) -> "AlgebraElement":
        return self.element([scale * (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)))
                             for n in self.blocks])

    def random_hermitian(self, rng: np.random.Generator) -> "AlgebraElement":
        a = self.random_element(rng)
        return (a + a.star()) * 0.5

    def random_unitary(self, rng: np.random.Generator, max_norm: float = np.pi) -> "AlgebraElement":
        """u = exp(iH) with H Hermitian, ||H|| <= max_norm blockwise (operator norm)."""
        parts = []
        for n in self.blocks:
            X = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
            Hm = (X + X.conj().T) / 2
            w, V = np.linalg.eigh(Hm)
            s = np.max(np.abs(w))
            if s > 0:
                w = w * (max_norm * rng.uniform(0.0, 1.0) / s)
            parts.append((V * np.exp(1j * w)) @ V.conj().T)
        return self.element(parts)


@dataclass(frozen=True, eq=False)
class AlgebraElement:
    parent: StarAlgebra
    parts: tuple

    def __post_init__(self):
        if len(self.parts) != len(self.parent.blocks):
            raise DimensionError("number of parts does not match the algebra blocks")
        for p, n in zip(self.parts, self.parent.blocks):
            if np.shape(p) != (n, n):
                raise DimensionError(f"block of shape {np.shape(p)} where {n}x{n} expected")

    def _same(self, other: "AlgebraElement"):
        if not isinstance(other, AlgebraElement) or other.parent != self.parent:
            raise AlgebraMismatchError("elements belong to different algebras")

    def __add__(self, other):
        self._same(other)
        return AlgebraElement(self.parent, tuple(x + y for x, y in zip(self.parts, other.parts)))

    def __sub__(self, other):
        self._same(other)
        return AlgebraElement(self.parent, tuple(x - y for x, y in zip(self.parts, other.parts)))

    def __neg__(self):
        return AlgebraElement(self.parent, tuple(-x for x in self.parts))

    def __mul__(self, c):
        if isinstance(c, AlgebraElement):
            return NotImplemented
        return AlgebraElement(self.parent, tuple(x * complex(c) for x in self.parts))

    __rmul__ = __mul__

    def __matmul__(self, other):
        self._same(other)
        return AlgebraElement(self.parent, tuple(x @ y for x, y in zip(self.parts, other.parts)))

    def star(self) -> "AlgebraElement":
        return AlgebraElement(self.parent, tuple(x.conj().T for x in self.parts))

    def coeffs(self) -> np.ndarray:
        return np.concatenate([np.asarray(p).ravel() for p in self.parts])

    def norm(self) -> float:
        return float(np.linalg.norm(self.coeffs()))

    def distance(self, other: "AlgebraElement") -> float:
        self._same(other)
        return float(np.linalg.norm(self.coeffs() - other.coeffs()))

    def is_unit(self) -> bool:
        return all(np.array_equal(p, np.eye(p.shape[0])) for p in self.parts)

    def __repr__(self):
        return f"AlgebraElement(blocks={self.parent.blocks})"


class Representation:
    """pi(a) = V (⊕_i a_i ⊗ 1_{m_i}) V^*.

    ``basis`` may be None (identity), a permutation given as an integer array
    (block-ordered index j sits at Hilbert index basis[j]), or a unitary matrix
    whose columns are the images of the block-ordered basis vectors.
    """

    def __init__(self, parent: StarAlgebra, multiplicities: Sequence[int], basis=None):
        self.parent = parent
        self.multiplicities = tuple(int(m) for m in multiplicities)
        if len(self.multiplicities) != len(parent.blocks) or any(m < 0 for m in self.multiplicities):
            raise DimensionError("one non-negative multiplicity per block is required")
        self.hilbert_dim = sum(n * m for n, m in zip(parent.blocks, self.multiplicities))
        if self.hilbert_dim == 0:
            raise DimensionError("representation on a zero-dimensional space")
        self.perm = None
        self.V = None
        if basis is not None:
            b = np.asarray(basis)
            if b.ndim == 1:
                b = b.astype(int)
                if sorted(b.tolist()) != list(range(self.hilbert_dim)):
                    raise DimensionError("basis permutation is not a permutation of the Hilbert indices")
                self.perm = b
            else:
                b = np.asarray(basis, dtype=complex)
                if b.shape != (self.hilbert_dim, self.hilbert_dim):
                    raise DimensionError("basis matrix has the wrong shape")
                if np.linalg.norm(b.conj().T @ b - np.eye(self.hilbert_dim)) > 1e-10 * self.hilbert_dim:
                    raise DimensionError("basis matrix is not unitary")
                self.V = b
        # block-ordered offsets
        sizes = [n * m for n, m in zip(parent.blocks, self.multiplicities)]
        self.block_offsets = np.concatenate([[0], np.cumsum(sizes)]).astype(int)

    @property
    def is_diagonal(self) -> bool:
        return self.V is None and all(n == 1 for n in self.parent.blocks)

    def positions(self, block: int, k: int) -> np.ndarray:
        """Block-ordered indices (block, k, r) for r over the multiplicity."""
        m = self.multiplicities[block]
        start = self.block_offsets[block] + k * m
        return np.arange(start, start + m)

    def block_matrix(self, a: AlgebraElement) -> np.ndarray:
        """⊕_i a_i ⊗ 1_{m_i} in block-ordered coordinates."""
        out = np.zeros((self.hilbert_dim, self.hilbert_dim), dtype=complex)
        for i, (p, m) in enumerate(zip(a.parts, self.multiplicities)):
            if m == 0:
                continue
            o, o2 = self.block_offsets[i], self.block_offsets[i + 1]
            out[o:o2, o:o2] = np.kron(p, np.eye(m))
        return out

    def to_hilbert(self, M: np.ndarray) -> np.ndarray:
        """Map a block-ordered matrix to Hilbert coordinates."""
        if self.perm is not None:
            out = np.empty_like(M)
            out[np.ix_(self.perm, self.perm)] = M
            return out
        if self.V is not None:
            return self.V @ M @ self.V.conj().T
        return M

    def to_blocks(self, M: np.ndarray) -> np.ndarray:
        """Inverse of ``to_hilbert``."""
        if self.perm is not None:
            return M[np.ix_(self.perm, self.perm)]
        if self.V is not None:
            return self.V.conj().T @ M @ self.V
        return M

    def diagonal(self, a: AlgebraElement) -> np.ndarray:
        """Diagonal of pi(a) when the representation is diagonal."""
        if not self.is_diagonal:
            raise ValueError("representation is not diagonal")
        d = np.repeat(np.array([p[0, 0] for p in a.parts], dtype=complex), self.multiplicities)
        if self.perm is None:
            return d
        out = np.empty_like(d)
        out[self.perm] = d
        return out

    def embed(self, a: AlgebraElement) -> LinearOp:
        if a.parent != self.parent:
            raise AlgebraMismatchError("element is not from the represented algebra")
        if self.is_diagonal:
            return LinearOp._wrap(np.diag(self.diagonal(a)))
        return LinearOp._wrap(self.to_hilbert(self.block_matrix(a)))

    __call__ = embed

    def homomorphism_residuals(self, rng: np.random.Generator, samples: int = 5) -> dict:
        """Max of ||pi(ab) - pi(a)pi(b)||, ||pi(a*) - pi(a)*|| and ||pi(1) - 1||."""
        A = self.parent
        mult = adj = 0.0
        elems = A.basis() + [A.random_element(rng) for _ in range(samples)]
        for a in elems:
            pa = self.embed(a)
            adj = max(adj, residual(self.embed(a.star()), pa.H))
        for _ in range(samples):
            a, b = A.random_element(rng), A.random_element(rng)
            mult = max(mult, residual(self.embed(a @ b), self.embed(a) @ self.embed(b)))
        unit = residual(self.embed(A.unit()), np.eye(self.hilbert_dim))
        return {"multiplicative": mult, "star": adj, "unital": unit}

    def to_json(self) -> dict:
        d: dict = {"multiplicity": list(self.multiplicities)}
        if self.perm is not None:
            d["basis_perm"] = self.perm.tolist()
        elif self.V is not None:
            from .opcore import to_json_matrix

            d["basis"] = to_json_matrix(self.V)
        return d


class Automorphism:
    """rho(a)_i = W_i a_{perm(i)} W_i^* with W_i unitary."""

    def __init__(self, parent: StarAlgebra, block_perm: Sequence[int], block_unitaries=None):
        self.parent = parent
        perm = [int(p) for p in block_perm]
        k = len(parent.blocks)
        if sorted(perm) != list(range(k)):
            raise ValueError("block_perm must be a permutation of the block indices")
        if any(parent.blocks[perm[i]] != parent.blocks[i] for i in range(k)):
            raise ValueError("block_perm must map blocks onto blocks of equal size")
        self.block_perm = tuple(perm)
        if block_unitaries is None:
            self.block_unitaries = tuple(np.eye(n, dtype=complex) for n in parent.blocks)
        else:
            ws = tuple(np.array(w, dtype=complex) for w in block_unitaries)
            if len(ws) != k:
                raise ValueError("one unitary per block is required")
            for w, n in zip(ws, parent.blocks):
                if w.shape != (n, n) or np.linalg.norm(w.conj().T @ w - np.eye(n)) > 1e-10 * n:
                    raise ValueError("block unitaries must be unitary of the block size")
            self.block_unitaries = ws

    @classmethod
    def identity(cls, parent: StarAlgebra) -> "Automorphism":
        return cls(parent, range(len(parent.blocks)))

    @property
    def is_identity(self) -> bool:
        return (self.block_perm == tuple(range(len(self.block_perm)))
                and all(np.array_equal(w, np.eye(w.shape[0])) for w in self.block_unitaries))

    @property
    def has_trivial_unitaries(self) -> bool:
        return all(np.array_equal(w, np.eye(w.shape[0])) for w in self.block_unitaries)

    def __call__(self, a: AlgebraElement) -> AlgebraElement:
        return apply_automorphism(self, a)

    @cached_property
    def inverse(self) -> "Automorphism":
        k = len(self.block_perm)
        inv = [0] * k
        for i, p in enumerate(self.block_perm):
            inv[p] = i
        ws = [self.block_unitaries[inv[j]].conj().T for j in range(k)]
        return Automorphism(self.parent, inv, ws)

    def to_json(self) -> dict:
        from .opcore import to_json_matrix

        return {"perm": list(self.block_perm),
                "unitaries": [to_json_matrix(w) for w in self.block_unitaries]}


def apply_automorphism(rho: Automorphism, a: AlgebraElement) -> AlgebraElement:
    if a.parent != rho.parent:
        raise AlgebraMismatchError("element and automorphism live on different algebras")
    parts = tuple(w @ a.parts[p] @ w.conj().T for w, p in zip(rho.block_unitaries, rho.block_perm))
    return AlgebraElement(a.parent, parts)


@dataclass(frozen=True)
class RegularityReport:
    residual: float
    regular: bool
    worst_basis_index: int


def check_regular(rho: Automorphism, tol: Tolerance | None = None) -> RegularityReport:
    """max over matrix units of ||rho(a*) - (rho^-1(a))*||."""
    tol = tol or Tolerance()
    worst, idx = 0.0, 0
    inv = rho.inverse
    for i, e in enumerate(rho.parent.basis()):
        r = rho(e.star()).distance(inv(e).star())
        if r > worst:
            worst, idx = r, i
    return RegularityReport(worst, worst <= tol.threshold(1.0), idx)


def opposite_element(J: AntilinearOp, a) -> LinearOp:
    """a° = J a* J^-1."""
    am = a.mat if isinstance(a, LinearOp) else np.asarray(a, dtype=complex)
    return conjugate_by(J, am.conj().T, check=False)


@dataclass(frozen=True)
class OppositeTwist:
    value: LinearOp
    route_residual: float


def rho_opposite(rho: Automorphism, J: AntilinearOp, b: AlgebraElement, rep: Representation,
                 tol: Tolerance | None = None) -> OppositeTwist:
    """rho°(b°) computed as (rho^-1(b))° and as J rho(b*) J^-1; both must agree."""
    tol = tol or Tolerance()
    reg = check_regular(rho, tol)
    if not reg.regular:
        raise IrregularTwistError(f"twist is not regular (residual {reg.residual:.3e})")
    r1 = opposite_element(J, rep.embed(rho.inverse(b)))
    r2 = conjugate_by(J, rep.embed(rho(b.star())), check=False)
    res = residual(r1, r2)
    if res > tol.threshold(np.linalg.norm(r1.mat), np.linalg.norm(r2.mat)):
        raise IrregularTwistError(f"the two routes to rho°(b°) differ by {res:.3e}")
    return OppositeTwist(r1, res)
