"""Hermitian modules pA^N (right) and A^N p (left), connections, balanced
tensor products and the covariant operators whose quotients give twisted
fluctuations.

Coordinates on the ambient space A^N ⊗ H are (slot i, algebra coefficient k,
Hilbert index h), row-major. The same layout is used for left modules, where
the ambient space stands for H ⊗ A^N.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal, Optional, Sequence

import numpy as np

from .algebra import AlgebraElement, Automorphism, StarAlgebra
from .errors import (AlgebraMismatchError, NotInvariantError, NotWellDefinedError,
                     RankDeficiencyError)
from .forms import TwistedOneForm, bimodule_act, zero_form
from .gauge import fluctuated_dirac
from .opcore import LinearOp, Tolerance, conjugate_by, norm, residual
from .triple import RealTwistedTriple

ModSide = Literal["right", "left"]
RANK_REL = 1e-9  # singular values below RANK_REL * s_max count as zero
MIN_GAP = 1e3  # required ratio between the smallest kept and largest dropped value


def _mult_matrix(A: StarAlgebra, a: AlgebraElement, side: str) -> np.ndarray:
    """Matrix of x -> a x (side='left') or x -> x a (side='right') on coefficients."""
    cols = []
    for e in A.basis():
        cols.append((a @ e if side == "left" else e @ a).coeffs())
    return np.array(cols).T


@dataclass(frozen=True, eq=False)
class HermitianModule:
    algebra: StarAlgebra
    side: ModSide
    p: tuple  # N x N tuple of AlgebraElements
    rho_invariant: Optional[bool] = None

    @property
    def N(self) -> int:
        return len(self.p)

    @classmethod
    def build(cls, algebra: StarAlgebra, side: ModSide, p, rho: Automorphism | None = None,
              tol: Tolerance | None = None) -> "HermitianModule":
        if side not in ("right", "left"):
            raise ValueError(f"unknown module side {side!r}")
        p = tuple(tuple(x for x in row) for row in p)
        N = len(p)
        if N == 0 or any(len(row) != N for row in p):
            raise ValueError("p must be a square matrix over the algebra")
        for row in p:
            for x in row:
                if x.parent != algebra:
                    raise AlgebraMismatchError("entry of p is not in the algebra")
        m = cls(algebra, side, p)
        tol = tol or Tolerance()
        r = m.projection_residual()
        if r > tol.threshold(1.0):
            raise ValueError(f"p is not a projection (residual {r:.3e})")
        inv = None if rho is None else m.invariance_residual(rho) <= tol.threshold(1.0)
        return cls(algebra, side, p, inv)

    @classmethod
    def free(cls, algebra: StarAlgebra, side: ModSide, N: int = 1, rho=None) -> "HermitianModule":
        one, zero = algebra.unit(), algebra.zero()
        p = [[one if i == j else zero for j in range(N)] for i in range(N)]
        return cls.build(algebra, side, p, rho)

    def projection_residual(self) -> float:
        N, worst = self.N, 0.0
        for i in range(N):
            for j in range(N):
                sq = self.algebra.zero()
                for k in range(N):
                    sq = sq + self.p[i][k] @ self.p[k][j]
                worst = max(worst, sq.distance(self.p[i][j]), self.p[j][i].star().distance(self.p[i][j]))
        return worst

    def invariance_residual(self, rho: Automorphism) -> float:
        return max(rho(x).distance(x) for row in self.p for x in row)

    def coefficient_dim(self) -> int:
        return self.N * self.algebra.dim

    def coeffs(self, eta: Sequence[AlgebraElement]) -> np.ndarray:
        return np.concatenate([x.coeffs() for x in eta])

    def element(self, c) -> tuple:
        d = self.algebra.dim
        return tuple(self.algebra.from_coeffs(c[i * d:(i + 1) * d]) for i in range(self.N))

    def project(self, xi: Sequence[AlgebraElement]) -> tuple:
        """p xi (right) or xi p (left)."""
        N, A = self.N, self.algebra
        out = []
        for i in range(N):
            acc = A.zero()
            for j in range(N):
                acc = acc + (self.p[i][j] @ xi[j] if self.side == "right" else xi[j] @ self.p[j][i])
            out.append(acc)
        return tuple(out)

    def projector_matrix(self) -> np.ndarray:
        """Matrix of the projection onto E on A^N coefficients."""
        N, d = self.N, self.algebra.dim
        M = np.zeros((N * d, N * d), dtype=complex)
        for i in range(N):
            for j in range(N):
                s = "left" if self.side == "right" else "right"
                x = self.p[i][j] if self.side == "right" else self.p[j][i]
                M[i * d:(i + 1) * d, j * d:(j + 1) * d] = _mult_matrix(self.algebra, x, s)
        return M

    def random_element(self, rng: np.random.Generator) -> tuple:
        return self.project([self.algebra.random_element(rng) for _ in range(self.N)])

    def act(self, eta, a: AlgebraElement) -> tuple:
        """eta a (right module) or a eta (left module)."""
        return tuple(x @ a if self.side == "right" else a @ x for x in eta)

    def hermitian_form(self, xi, eta) -> AlgebraElement:
        """sum_i xi_i* eta_i (right) or sum_i xi_i eta_i* (left)."""
        acc = self.algebra.zero()
        for x, y in zip(xi, eta):
            acc = acc + (x.star() @ y if self.side == "right" else x @ y.star())
        return acc

    def to_json(self) -> dict:
        from .opcore import to_json_matrix

        return {"side": self.side, "N": self.N,
                "p": [[[to_json_matrix(b) for b in x.parts] for x in row] for row in self.p]}


def lift_automorphism(m: HermitianModule, rho: Automorphism, eta, tol: Tolerance | None = None,
                      inverse: bool = False) -> tuple:
    """rho~(eta) = p rho(eta) (right) or rho(eta) p (left); ``inverse`` lifts rho^-1."""
    tol = tol or Tolerance()
    r = m.invariance_residual(rho)
    if r > tol.threshold(1.0):
        raise NotInvariantError(f"p is not invariant under the twist (residual {r:.3e})")
    sigma = rho.inverse if inverse else rho
    return m.project([sigma(x) for x in eta])


@dataclass(frozen=True, eq=False)
class Connection:
    """Grassmann connection plus an N x N potential of twisted 1-forms."""

    module: HermitianModule
    potential: tuple  # N x N of TwistedOneForm
    target: Literal["plain", "opposite"]

    @classmethod
    def grassmann(cls, t: RealTwistedTriple, m: HermitianModule) -> "Connection":
        side = "plain" if m.side == "right" else "opposite"
        z = zero_form(t, side)
        return cls(m, tuple(tuple(z for _ in range(m.N)) for _ in range(m.N)), side)

    @classmethod
    def with_potential(cls, t: RealTwistedTriple, m: HermitianModule, potential,
                       compress: bool = True) -> "Connection":
        side = "plain" if m.side == "right" else "opposite"
        pot = tuple(tuple(w for w in row) for row in potential)
        if len(pot) != m.N or any(len(r) != m.N for r in pot):
            raise ValueError("potential must be N x N")
        for row in pot:
            for w in row:
                if w.side != side:
                    raise ValueError(f"{m.side} modules need {side}-side potentials")
        if compress:
            pot = compress_potential(m, pot)
        return cls(m, pot, side)


def compress_potential(m: HermitianModule, pot) -> tuple:
    """(p A p)_ij = sum_kl p_ik · A_kl · p_lj with the bimodule actions of the forms."""
    N = m.N
    out = []
    for i in range(N):
        row = []
        for j in range(N):
            acc = None
            for k in range(N):
                for l in range(N):
                    w = pot[k][l]
                    if w.side == "plain":
                        term = bimodule_act(m.p[i][k], w, m.p[l][j])
                    else:
                        # opposite side: a·w·b = rho°(b°) w a°, so the left factor enters as b
                        term = bimodule_act(m.p[l][j], w, m.p[i][k])
                    acc = term if acc is None else acc + term
            row.append(acc)
        out.append(tuple(row))
    return tuple(out)


# ---------------------------------------------------------------------------
# balanced tensor product


@dataclass(frozen=True, eq=False)
class BalancedSpace:
    module: HermitianModule
    hilbert_dim: int
    E_basis: np.ndarray  # orthonormal basis of E in A^N coefficients
    relations: np.ndarray  # orthonormal basis of the relation span, ambient coordinates
    quotient: np.ndarray  # orthonormal complement of the relations inside E ⊗ H
    model_map: np.ndarray  # Phi: ambient -> H^N
    model_projector: np.ndarray  # projection onto the concrete model inside H^N
    intertwiner: np.ndarray  # Phi restricted to the quotient
    isometry: np.ndarray  # polar part of the intertwiner
    singular_values: np.ndarray = field(repr=False, default=None)
    gap: float = np.inf
    rank_threshold: float = 0.0

    @property
    def abstract_dim(self) -> int:
        return self.quotient.shape[1]

    @property
    def concrete_dim(self) -> int:
        return int(round(np.real(np.trace(self.model_projector))))

    @property
    def ambient_dim(self) -> int:
        return self.model_map.shape[1]

    def EH_basis(self) -> np.ndarray:
        return np.kron(self.E_basis, np.eye(self.hilbert_dim))

    def intertwiner_residual(self) -> float:
        """||T* T - 1|| for the polar isometry and ||P_model T - T||."""
        W = self.isometry
        r1 = np.linalg.norm(W.conj().T @ W - np.eye(W.shape[1]))
        r2 = np.linalg.norm(self.model_projector @ self.intertwiner - self.intertwiner)
        return float(max(r1, r2))


def _orth(M: np.ndarray, rel: float = RANK_REL):
    U, s, _ = np.linalg.svd(M, full_matrices=True)
    smax = s[0] if s.size else 0.0
    thr = rel * smax
    r = int(np.sum(s > thr))
    return U, s, r, thr


def _check_gap(s: np.ndarray, r: int, what: str) -> float:
    if r == 0 or r == s.size:
        return np.inf
    gap = np.inf if s[r] == 0 else s[r - 1] / s[r]
    if gap < MIN_GAP:
        raise RankDeficiencyError(f"numerical rank of the {what} is ambiguous (gap {gap:.3e})", s, gap)
    return float(gap)


def balanced_tensor(m: HermitianModule, t: RealTwistedTriple) -> BalancedSpace:
    """Quotient (E ⊗ H)/relations and its concrete model in H^N, with the intertwiner."""
    A, rep = m.algebra, t.rep
    if A != t.algebra:
        raise AlgebraMismatchError("module and triple use different algebras")
    nH, d, N = rep.hilbert_dim, A.dim, m.N
    IH = np.eye(nH)
    UE, sE, rE, _ = _orth(m.projector_matrix())
    _check_gap(sE, rE, "module projection")
    Eb = UE[:, :rE]
    EH = np.kron(Eb, IH)
    basis = A.basis()
    # relation generators: (eta a) ⊗ psi - eta ⊗ a psi (right), psi ⊗ (a eta) - a° psi ⊗ eta (left)
    mside = "right" if m.side == "right" else "left"
    blocks = []
    for a in basis:
        Ma = np.kron(np.eye(N), _mult_matrix(A, a, mside))
        act = t.pi(a).mat if m.side == "right" else t.opposite(a).mat
        blocks.append(np.kron(Ma @ Eb, IH) - np.kron(Eb, act))
    R = np.hstack(blocks)
    RE = EH.conj().T @ R
    UR, sR, rR, thr = _orth(RE)
    gap = _check_gap(sR, rR, "relation span")
    rel = EH @ UR[:, :rR]
    Q = EH @ UR[:, rR:]
    # concrete model
    Phi = np.zeros((N * nH, N * d * nH), dtype=complex)
    for i in range(N):
        for k, e in enumerate(basis):
            op = t.pi(e).mat if m.side == "right" else t.opposite(e).mat
            c0 = (i * d + k) * nH
            Phi[i * nH:(i + 1) * nH, c0:c0 + nH] = op
    P = np.zeros((N * nH, N * nH), dtype=complex)
    for i in range(N):
        for j in range(N):
            blk = t.pi(m.p[i][j]).mat if m.side == "right" else t.opposite(m.p[j][i]).mat
            P[i * nH:(i + 1) * nH, j * nH:(j + 1) * nH] = blk
    T = Phi @ Q
    if T.shape[1]:
        Ut, st, Vh = np.linalg.svd(T, full_matrices=False)
        W = Ut @ Vh
    else:
        W = T
    return BalancedSpace(m, nH, Eb, rel, Q, Phi, P, T, W, sR, gap, thr)


# ---------------------------------------------------------------------------
# covariant operators


@dataclass
class CovariantOperator:
    space: BalancedSpace
    ambient: np.ndarray  # on A^N ⊗ H
    quotient: np.ndarray  # Q* D~ Q
    model: np.ndarray  # on H^N, supported on the model subspace
    relation_residual: float
    invariance_residual: float

    def to_linear_op(self) -> LinearOp:
        return LinearOp(self.model)


def _connection_blocks(t: RealTwistedTriple, m: HermitianModule, c: Connection,
                       eta_slot: int, b: AlgebraElement, left_twist: str = "inverse") -> list:
    """Per-slot operators X_j with nabla(e_slot b) = sum_j (module vector j) ⊗ X_j."""
    N = m.N
    out = []
    for j in range(N):
        if m.side == "right":
            # rho(p_j,slot) delta(b) + A_j,slot b
            X = t.pi(t.rho(m.p[j][eta_slot])).mat @ t.delta(b).mat
            X = X + c.potential[j][eta_slot].value.mat @ t.pi(b).mat
        else:
            sig = t.rho.inverse if left_twist == "inverse" else t.rho
            X = t.opposite(sig(m.p[eta_slot][j])).mat @ t.delta_opposite(b).mat
            X = X + c.potential[eta_slot][j].value.mat @ t.opposite(b).mat
        out.append(X)
    return out


def _module_vector(m: HermitianModule, j: int) -> np.ndarray:
    """Coefficients of p e_j (right) or e_j p (left)."""
    A = m.algebra
    if m.side == "right":
        col = [m.p[i][j] for i in range(m.N)]
    else:
        col = [m.p[j][i] for i in range(m.N)]
    return np.concatenate([x.coeffs() for x in col])


def covariant_operator(t: RealTwistedTriple, m: HermitianModule, c: Connection,
                       space: BalancedSpace | None = None, tol: Tolerance | None = None,
                       left_twist: str = "inverse") -> CovariantOperator:
    """D~_R = (rho~ ⊗ 1)(D_R + nabla) or D~_L = (1 ⊗ rho~^-1)(D_L + nabla°), then compressed."""
    tol = tol or Tolerance()
    expected = "plain" if m.side == "right" else "opposite"
    if c.target != expected or c.module is not m:
        raise ValueError(f"connection target {c.target!r} does not fit a {m.side} module")
    space = space or balanced_tensor(m, t)
    A, N, nH, d = m.algebra, m.N, t.dim, m.algebra.dim
    sigma = t.rho if m.side == "right" else (t.rho.inverse if left_twist == "inverse" else t.rho)
    r = m.invariance_residual(t.rho)
    if r > tol.threshold(1.0):
        raise NotInvariantError(f"p is not invariant under the twist (residual {r:.3e})")
    vecs = [_module_vector(m, j) for j in range(N)]
    Dm = t.D.mat
    Dt = np.zeros((N * d * nH, N * d * nH), dtype=complex)
    basis = A.basis()
    for i in range(N):
        for k, b in enumerate(basis):
            xi = [A.zero()] * N
            xi[i] = sigma(b)
            lifted = m.coeffs(m.project(xi))
            col = np.kron(lifted[:, None], Dm)
            for j, X in enumerate(_connection_blocks(t, m, c, i, b, left_twist)):
                col = col + np.kron(vecs[j][:, None], X)
            c0 = (i * d + k) * nH
            Dt[:, c0:c0 + nH] = col
    scale = np.linalg.norm(Dt)
    R = space.relations
    leak = R.size and np.linalg.norm(Dt @ R - R @ (R.conj().T @ (Dt @ R)))
    EH = space.EH_basis()
    leak_E = np.linalg.norm(Dt @ EH - EH @ (EH.conj().T @ (Dt @ EH)))
    thr = tol.threshold(scale)
    if leak > thr:
        raise NotWellDefinedError(f"covariant operator does not preserve the relation span "
                                  f"(residual {leak:.3e})", float(leak))
    if leak_E > thr:
        raise NotWellDefinedError(f"covariant operator leaves E ⊗ H (residual {leak_E:.3e})", float(leak_E))
    Q = space.quotient
    Dq = Q.conj().T @ Dt @ Q
    T = space.intertwiner
    model = T @ Dq @ np.linalg.pinv(T) if T.shape[1] else np.zeros((N * nH, N * nH), dtype=complex)
    return CovariantOperator(space, Dt, Dq, model, float(leak), float(leak_E))


def relation_annihilation_residual(op: CovariantOperator) -> float:
    """max over relation basis vectors v of ||(1 - P_R) D~ v|| relative to ||D~||."""
    R = op.space.relations
    if R.size == 0:
        return 0.0
    V = op.ambient @ R
    V = V - R @ (R.conj().T @ V)
    s = np.linalg.norm(op.ambient)
    return float(np.max(np.linalg.norm(V, axis=0)) / s) if s else 0.0


def endomorphism_residual(space: BalancedSpace, b) -> float:
    """pi_R(b)(eta ⊗ psi) = b eta ⊗ psi must preserve the relation span (b in End_A(E))."""
    m = space.module
    N, d, A = m.N, m.algebra.dim, m.algebra
    B = np.zeros((N * d, N * d), dtype=complex)
    for i in range(N):
        for j in range(N):
            s = "left" if m.side == "right" else "right"
            x = b[i][j] if m.side == "right" else b[j][i]
            B[i * d:(i + 1) * d, j * d:(j + 1) * d] = _mult_matrix(A, x, s)
    Bt = np.kron(B, np.eye(space.hilbert_dim))
    R = space.relations
    if R.size == 0:
        return 0.0
    V = Bt @ R
    return float(np.linalg.norm(V - R @ (R.conj().T @ V)))


# ---------------------------------------------------------------------------
# Leibniz rule in the normal form H^N


def connection_apply(t: RealTwistedTriple, m: HermitianModule, c: Connection, eta, psi) -> np.ndarray:
    """nabla(eta) psi pushed to H^N: right (sum_j pi(p_lj) X_j psi)_l, left (sum_j p_jl° X_j psi)_l."""
    N, nH = m.N, t.dim
    X = [np.zeros((nH, nH), dtype=complex) for _ in range(N)]
    for j in range(N):
        for i in range(N):
            if m.side == "right":
                X[j] += t.pi(t.rho(m.p[j][i])).mat @ t.delta(eta[i]).mat
                X[j] += c.potential[j][i].value.mat @ t.pi(eta[i]).mat
            else:
                X[j] += t.opposite(t.rho.inverse(m.p[i][j])).mat @ t.delta_opposite(eta[i]).mat
                X[j] += c.potential[i][j].value.mat @ t.opposite(eta[i]).mat
    out = np.zeros(N * nH, dtype=complex)
    for l in range(N):
        for j in range(N):
            P = t.pi(m.p[l][j]).mat if m.side == "right" else t.opposite(m.p[j][l]).mat
            out[l * nH:(l + 1) * nH] += P @ (X[j] @ psi)
    return out


def leibniz_residual(t: RealTwistedTriple, m: HermitianModule, c: Connection, eta, a: AlgebraElement,
                     psi, mis_twisted: bool = False) -> float:
    """Right: ||nabla(eta a)psi - nabla(eta)(a psi) - (rho(eta_i) delta(a) psi)_i||.
    Left: ||nabla(a eta)psi - nabla(eta)(a° psi) - (rho°(eta_i°) delta°(a) psi)_i||.

    ``mis_twisted`` replaces rho(eta_i) by eta_i (resp. rho°(eta_i°) by eta_i°),
    the module law without the twist, as a negative control.
    """
    psi = np.asarray(psi, dtype=complex)
    nH = t.dim
    if m.side == "right":
        lhs = connection_apply(t, m, c, m.act(eta, a), psi)
        first = connection_apply(t, m, c, eta, t.pi(a).mat @ psi)
        da = t.delta(a).mat @ psi
        third = np.concatenate([(t.pi(x if mis_twisted else t.rho(x)).mat @ da) for x in eta])
    else:
        lhs = connection_apply(t, m, c, m.act(eta, a), psi)
        first = connection_apply(t, m, c, eta, t.opposite(a).mat @ psi)
        da = t.delta_opposite(a).mat @ psi
        third = np.concatenate([((t.opposite(x) if mis_twisted else t.rho_opposite(x)).mat @ da)
                                for x in eta])
    return float(np.linalg.norm(lhs - first - third))


# ---------------------------------------------------------------------------
# assembled fluctuation


@dataclass
class FluctuationResult:
    D_prime: LinearOp
    compatibility_residual: float
    compatible: bool
    symmetrized_residual: float
    symmetric_form: Optional[TwistedOneForm]
    violation_residual: float
    threshold: float

    def to_json(self) -> dict:
        return {"compatibility_residual": self.compatibility_residual, "compatible": self.compatible,
                "symmetrized_residual": self.symmetrized_residual,
                "violation_residual": self.violation_residual, "threshold": self.threshold}


def assemble_fluctuation(t: RealTwistedTriple, w_R: TwistedOneForm, w_L: TwistedOneForm,
                         tol: Tolerance | None = None) -> FluctuationResult:
    """D' = D + w_L + eps' J w_R J^-1 and the test J D' = eps' D' J."""
    tol = tol or Tolerance()
    ep = t.signs.eps_prime
    Dp = t.D + w_L.value + ep * t.jconj(w_R.value)
    U = t.J.U
    comp = residual(U @ Dp.mat.conj(), ep * Dp.mat @ U)
    diff = w_R.value - w_L.value
    viol = residual(diff, ep * t.jconj(diff))
    omega = (w_R + w_L) * 0.5
    sym = residual(Dp, fluctuated_dirac(t, omega))
    thr = tol.threshold(norm(Dp))
    ok = comp <= thr
    return FluctuationResult(Dp, comp, ok, sym, omega if ok else None, viol, thr)


def fluct(t: RealTwistedTriple, D, w) -> LinearOp:
    """D + w + eps' J w J^-1 with w a fixed operator."""
    v = w.value if isinstance(w, TwistedOneForm) else (w if isinstance(w, LinearOp) else LinearOp(w))
    Dm = D if isinstance(D, LinearOp) else LinearOp(D)
    return Dm + v + t.signs.eps_prime * t.jconj(v)


def fluctuation_monoid_check(t: RealTwistedTriple, w1, w2) -> float:
    v1 = w1.value if isinstance(w1, TwistedOneForm) else w1
    v2 = w2.value if isinstance(w2, TwistedOneForm) else w2
    return residual(fluct(t, fluct(t, t.D, v1), v2), fluct(t, t.D, v1 + v2))
