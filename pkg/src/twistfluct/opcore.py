"""Dense operator arithmetic: linear and antilinear operators, twisted
commutators and the residual/tolerance policy used by every identity check.

Antilinear operators are kept in the normal form ``psi -> U @ conj(psi)``.
Compositions are normalized eagerly, so any word in linear and antilinear
factors reduces to one of the two kinds according to the parity of
antilinear factors.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .errors import DimensionError, NotAntiunitaryError

NORM_KIND = "fro"  # global residual norm; "spectral" is available per call


def _as_matrix(x) -> np.ndarray:
    if isinstance(x, LinearOp):
        return x.mat
    m = np.asarray(x, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {m.shape}")
    return m


class LinearOp:
    """Dense complex square matrix acting on the Hilbert space."""

    __slots__ = ("mat",)
    __array_priority__ = 100

    def __init__(self, mat):
        m = np.array(mat, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
            raise DimensionError(f"LinearOp needs a non-empty square matrix, got {m.shape}")
        m.setflags(write=False)
        self.mat = m

    @classmethod
    def _wrap(cls, m: np.ndarray) -> "LinearOp":
        # trusted constructor: skips the copy
        op = cls.__new__(cls)
        m.setflags(write=False)
        op.mat = m
        return op

    @classmethod
    def identity(cls, dim: int) -> "LinearOp":
        return cls._wrap(np.eye(dim, dtype=complex))

    @classmethod
    def zeros(cls, dim: int) -> "LinearOp":
        return cls._wrap(np.zeros((dim, dim), dtype=complex))

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    @property
    def H(self) -> "LinearOp":
        return LinearOp._wrap(self.mat.conj().T.copy())

    adjoint = H

    def is_hermitian(self, tol: "Tolerance | None" = None) -> bool:
        tol = tol or Tolerance()
        return residual(self, self.H) <= tol.rel_tol * norm(self) + tol.abs_tol

    def __array__(self, dtype=None, copy=None):
        return self.mat if dtype is None else self.mat.astype(dtype)

    def _check(self, other: "LinearOp"):
        if other.dim != self.dim:
            raise DimensionError(f"dimension mismatch: {self.dim} vs {other.dim}")

    def __add__(self, other):
        other = other if isinstance(other, LinearOp) else LinearOp(other)
        self._check(other)
        return LinearOp._wrap(self.mat + other.mat)

    def __sub__(self, other):
        other = other if isinstance(other, LinearOp) else LinearOp(other)
        self._check(other)
        return LinearOp._wrap(self.mat - other.mat)

    def __neg__(self):
        return LinearOp._wrap(-self.mat)

    def __mul__(self, c):
        if isinstance(c, (LinearOp, AntilinearOp)):
            return NotImplemented
        return LinearOp._wrap(self.mat * complex(c))

    __rmul__ = __mul__

    def __truediv__(self, c):
        return LinearOp._wrap(self.mat / complex(c))

    def __matmul__(self, other):
        if isinstance(other, AntilinearOp):
            return compose_antilinear(self, other)
        if isinstance(other, LinearOp):
            self._check(other)
            return LinearOp._wrap(self.mat @ other.mat)
        v = np.asarray(other)
        if v.shape[0] != self.dim:
            raise DimensionError(f"dimension mismatch: {self.dim} vs {v.shape[0]}")
        return self.mat @ v

    def __repr__(self):
        return f"LinearOp(dim={self.dim})"


def _monomial_structure(U: np.ndarray):
    """Return (cols, phases) if U has exactly one nonzero per row and column."""
    nz = np.abs(U) > 0
    if not (np.all(nz.sum(axis=1) == 1) and np.all(nz.sum(axis=0) == 1)):
        return None
    cols = np.argmax(nz, axis=1)
    return cols, U[np.arange(U.shape[0]), cols]


@dataclass(frozen=True, eq=False)
class AntilinearOp:
    """Antilinear operator psi -> U conj(psi)."""

    unitary_part: np.ndarray
    _mono: object = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        U = np.array(self.unitary_part, dtype=complex)
        if U.ndim != 2 or U.shape[0] != U.shape[1] or U.shape[0] == 0:
            raise DimensionError(f"AntilinearOp needs a square matrix, got {U.shape}")
        U.setflags(write=False)
        object.__setattr__(self, "unitary_part", U)
        object.__setattr__(self, "_mono", _monomial_structure(U))

    @property
    def U(self) -> np.ndarray:
        return self.unitary_part

    @property
    def dim(self) -> int:
        return self.unitary_part.shape[0]

    def apply(self, psi) -> np.ndarray:
        psi = np.asarray(psi, dtype=complex)
        return self.U @ psi.conj()

    @property
    def H(self) -> "AntilinearOp":
        # <C xi, zeta> = conj(<xi, C* zeta>) gives C* = U^T conj
        return AntilinearOp(self.U.T.copy())

    adjoint = H

    def inverse(self) -> "AntilinearOp":
        # (U K)^-1 = K U^-1 = conj(U^-1) K
        return AntilinearOp(np.linalg.inv(self.U).conj())

    def is_antiunitary(self, tol: "Tolerance | None" = None) -> bool:
        tol = tol or Tolerance()
        d = self.dim
        r = np.linalg.norm(self.U.conj().T @ self.U - np.eye(d))
        return r <= tol.rel_tol * np.sqrt(d) + tol.abs_tol

    def __matmul__(self, other):
        if isinstance(other, (LinearOp, AntilinearOp)):
            return compose_antilinear(self, other)
        return self.apply(other)

    def __rmatmul__(self, other):
        return compose_antilinear(LinearOp(other), self)

    def __mul__(self, c):
        return AntilinearOp(self.U * complex(c))

    def __neg__(self):
        return AntilinearOp(-self.U)

    def __repr__(self):
        return f"AntilinearOp(dim={self.dim})"


Operator = Union[LinearOp, AntilinearOp]


@dataclass(frozen=True)
class Tolerance:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("tolerances must be positive")

    def threshold(self, *scales: float) -> float:
        s = max((float(x) for x in scales), default=0.0)
        return self.rel_tol * s + self.abs_tol

    def close(self, x, y) -> bool:
        return residual(x, y) <= self.threshold(norm(x), norm(y))

    @classmethod
    def from_env(cls) -> "Tolerance":
        """Default tolerance, overridable through TWISTFLUCT_REL_TOL / TWISTFLUCT_ABS_TOL."""
        rel = float(os.environ.get("TWISTFLUCT_REL_TOL", cls.rel_tol))
        ab = float(os.environ.get("TWISTFLUCT_ABS_TOL", cls.abs_tol))
        return cls(rel, ab)


def norm(x, kind: str | None = None) -> float:
    m = _as_matrix(x)
    kind = kind or NORM_KIND
    if kind == "fro":
        return float(np.linalg.norm(m))
    if kind == "spectral":
        return float(np.linalg.norm(m, 2))
    raise ValueError(f"unknown norm kind {kind!r}")


def residual(x, y, kind: str | None = None) -> float:
    """||x - y|| in the global norm (Frobenius unless ``kind`` says otherwise)."""
    a, b = _as_matrix(x), _as_matrix(y)
    if a.shape != b.shape:
        raise DimensionError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return norm(a - b, kind)


def relative_residual(x, y) -> float:
    """Residual scaled by the larger operand norm (0 when both vanish)."""
    s = max(norm(x), norm(y))
    r = residual(x, y)
    return 0.0 if s == 0.0 else r / s


def twisted_commutator(D, a, rho_a) -> LinearOp:
    """D a - rho(a) D."""
    Dm, am, rm = _as_matrix(D), _as_matrix(a), _as_matrix(rho_a)
    if not (Dm.shape == am.shape == rm.shape):
        raise DimensionError(f"dimension mismatch: {Dm.shape}, {am.shape}, {rm.shape}")
    return LinearOp._wrap(Dm @ am - rm @ Dm)


def compose_antilinear(x: Operator, y: Operator) -> Operator:
    """Product x∘y normalized to LinearOp or AntilinearOp."""
    if x.dim != y.dim:
        raise DimensionError(f"dimension mismatch: {x.dim} vs {y.dim}")
    xl, yl = isinstance(x, LinearOp), isinstance(y, LinearOp)
    if xl and yl:
        return LinearOp._wrap(x.mat @ y.mat)
    if xl:  # T (U K) = (T U) K
        return AntilinearOp(x.mat @ y.U)
    if yl:  # (U K) T = U conj(T) K
        return AntilinearOp(x.U @ y.mat.conj())
    # (U1 K)(U2 K) = U1 conj(U2)
    return LinearOp._wrap(x.U @ y.U.conj())


def _conj_matrix(J: AntilinearOp, T: np.ndarray) -> np.ndarray:
    """U conj(T) U^* for antiunitary J (fast path for monomial U)."""
    if J._mono is not None:
        cols, ph = J._mono
        # (U X U^*)_{ij} = ph_i X_{c_i c_j} conj(ph_j)
        X = T.conj()[np.ix_(cols, cols)]
        return ph[:, None] * X * ph.conj()[None, :]
    return J.U @ T.conj() @ J.U.conj().T


def conjugate_by(J: AntilinearOp, T, tol: Tolerance | None = None, check: bool = True) -> LinearOp:
    """J T J^-1 = U conj(T) U^-1 for antiunitary J."""
    Tm = _as_matrix(T)
    if Tm.shape[0] != J.dim:
        raise DimensionError(f"dimension mismatch: {J.dim} vs {Tm.shape[0]}")
    if check and not J.is_antiunitary(tol):
        raise NotAntiunitaryError("J is not antiunitary")
    return LinearOp._wrap(_conj_matrix(J, Tm))


def unconjugate_by(J: AntilinearOp, T) -> LinearOp:
    """J^-1 T J for antiunitary J, i.e. U^T conj(T) conj(U)."""
    Tm = _as_matrix(T)
    return LinearOp._wrap(J.U.T @ Tm.conj() @ J.U.conj())


def antilinear_residual(x: Operator, y: Operator, kind: str | None = None) -> float:
    """Distance between two operators of the same kind (antilinear ones compare U)."""
    if isinstance(x, AntilinearOp) != isinstance(y, AntilinearOp):
        raise TypeError("cannot compare a linear with an antilinear operator")
    if isinstance(x, AntilinearOp):
        return residual(x.U, y.U, kind)
    return residual(x, y, kind)


def to_json_matrix(m) -> list:
    """Nested [re, im] pairs, row-major."""
    a = np.asarray(m, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in a]


def from_json_matrix(obj, pointer: str = "") -> np.ndarray:
    from .errors import SchemaError

    if not isinstance(obj, list) or not obj:
        raise SchemaError("matrix must be a non-empty list of rows", pointer)
    n = None
    rows = []
    for i, row in enumerate(obj):
        if not isinstance(row, list):
            raise SchemaError("row must be a list", f"{pointer}/{i}")
        if n is None:
            n = len(row)
        elif len(row) != n:
            raise SchemaError(f"row length {len(row)} differs from {n}", f"{pointer}/{i}")
        vals = []
        for j, z in enumerate(row):
            if (not isinstance(z, list) or len(z) != 2
                    or not all(isinstance(t, (int, float)) and not isinstance(t, bool) for t in z)):
                raise SchemaError("entry must be a [re, im] pair of numbers", f"{pointer}/{i}/{j}")
            vals.append(complex(z[0], z[1]))
        rows.append(vals)
    return np.array(rows, dtype=complex)
