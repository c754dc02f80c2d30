"""Real twisted spectral triples and their axiom verifier."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from functools import cached_property
from importlib import resources
from typing import Optional

import numpy as np

from . import __version__
from .algebra import (AlgebraElement, Automorphism, Representation, StarAlgebra, check_regular,
                      rho_opposite)
from .errors import DimensionError
from .opcore import (AntilinearOp, LinearOp, Tolerance, _conj_matrix, conjugate_by, norm,
                     residual, twisted_commutator)


@dataclass(frozen=True)
class KOSignature:
    eps: int
    eps_prime: int
    eps_second: int
    dim_mod8: Optional[int] = None

    def __post_init__(self):
        for s in (self.eps, self.eps_prime, self.eps_second):
            if s not in (1, -1):
                raise ValueError("KO signs must be +1 or -1")
        if self.dim_mod8 is not None and not 0 <= self.dim_mod8 <= 7:
            raise ValueError("dim_mod8 must lie in 0..7")

    @classmethod
    def preset(cls, dim_mod8: int) -> "KOSignature":
        table = load_ko_presets()
        key = str(int(dim_mod8) % 8)
        if key not in table:
            raise KeyError(f"no preset for KO-dimension {dim_mod8} (available: {sorted(table)})")
        return cls(**table[key], dim_mod8=int(key))

    def to_json(self) -> dict:
        return {"eps": self.eps, "eps_prime": self.eps_prime, "eps_second": self.eps_second,
                "dim_mod8": self.dim_mod8}


def load_ko_presets() -> dict:
    text = resources.files("twistfluct").joinpath("data/ko_signs.json").read_text()
    return json.loads(text)["presets"]


@dataclass(frozen=True, eq=False)
class RealTwistedTriple:
    algebra: StarAlgebra
    rep: Representation
    D: LinearOp
    J: AntilinearOp
    grading: Optional[LinearOp]
    rho: Automorphism
    signs: KOSignature
    name: str = "triple"

    def __post_init__(self):
        n = self.rep.hilbert_dim
        if self.D.dim != n or self.J.dim != n or (self.grading is not None and self.grading.dim != n):
            raise DimensionError("D, J, Gamma and the representation must share the Hilbert dimension")
        if self.rep.parent != self.algebra or self.rho.parent != self.algebra:
            raise DimensionError("representation and twist must belong to the triple's algebra")

    @property
    def dim(self) -> int:
        return self.rep.hilbert_dim

    @property
    def Gamma(self) -> Optional[LinearOp]:
        return self.grading

    def pi(self, a: AlgebraElement) -> LinearOp:
        return self.rep.embed(a)

    def delta(self, b: AlgebraElement) -> LinearOp:
        """[D, b]_rho."""
        return twisted_commutator(self.D, self.pi(b), self.pi(self.rho(b)))

    def jconj(self, T) -> LinearOp:
        """J T J^-1."""
        return conjugate_by(self.J, T, check=False)

    def opposite(self, a: AlgebraElement) -> LinearOp:
        """a° = J a* J^-1."""
        return self.jconj(self.pi(a.star()))

    def rho_opposite(self, b: AlgebraElement) -> LinearOp:
        """rho°(b°) = (rho^-1(b))°."""
        return self.opposite(self.rho.inverse(b))

    def delta_opposite(self, b: AlgebraElement) -> LinearOp:
        """[D, b°]_{rho°}."""
        return twisted_commutator(self.D, self.opposite(b), self.rho_opposite(b))

    def with_dirac(self, D, name: str | None = None) -> "RealTwistedTriple":
        D = D if isinstance(D, LinearOp) else LinearOp(D)
        return replace(self, D=D, name=name or self.name)

    def with_twist(self, rho: Automorphism, name: str | None = None) -> "RealTwistedTriple":
        return replace(self, rho=rho, name=name or self.name)

    @cached_property
    def identity(self) -> LinearOp:
        return LinearOp.identity(self.dim)


# ---------------------------------------------------------------------------
# block-structured residual sweeps

def _hilbert_columns(rep: Representation, pos: np.ndarray) -> np.ndarray:
    """Hilbert-space images of block-ordered basis vectors."""
    if rep.V is not None:
        return rep.V[:, pos]
    out = np.zeros((rep.hilbert_dim, len(pos)), dtype=complex)
    idx = rep.perm[pos] if rep.perm is not None else pos
    out[idx, np.arange(len(pos))] = 1.0
    return out


def _rows_to_blocks(rep: Representation, A: np.ndarray) -> np.ndarray:
    if rep.perm is not None:
        return A[rep.perm]
    if rep.V is not None:
        return rep.V.conj().T @ A
    return A


def _twist_rotation(rep: Representation, sigma: Automorphism) -> Optional[np.ndarray]:
    """blockdiag(W_i ⊗ 1_{m_i}) in block coordinates, or None when trivial."""
    if sigma.has_trivial_unitaries:
        return None
    R = np.zeros((rep.hilbert_dim, rep.hilbert_dim), dtype=complex)
    for i, (w, m) in enumerate(zip(sigma.block_unitaries, rep.multiplicities)):
        o, o2 = rep.block_offsets[i], rep.block_offsets[i + 1]
        R[o:o2, o:o2] = np.kron(w, np.eye(m))
    return R


def bracket_norms(rep: Representation, Yhat: np.ndarray, sigma: Automorphism | None = None) -> np.ndarray:
    """||Y pi(c) - pi(sigma(c)) Y|| for every matrix unit c.

    ``Yhat`` is Y in block coordinates. Only the rows and columns touched by
    pi(c) are read, and the residual is assembled from masked slices so that
    small residuals are not lost to cancellation.
    """
    A = rep.parent
    nb = len(A.blocks)
    if sigma is None:
        sigma = Automorphism.identity(A)
    R = _twist_rotation(rep, sigma)
    Yt = Yhat if R is None else R.conj().T @ Yhat
    inv_perm = sigma.inverse.block_perm  # block beta' with sigma.perm[beta'] = beta
    mults = rep.multiplicities
    labels = A.basis_labels()
    out = np.zeros(len(labels))

    if all(n == 1 for n in A.blocks) and len(set(mults)) == 1 and mults[0] > 0:
        m = mults[0]
        T = Yt.reshape(nb, m, nb, m)
        S = np.einsum("iajb,iajb->ij", T.conj(), T).real
        src = np.asarray(inv_perm)
        S[src, np.arange(nb)] = 0.0  # overlap entries cancel exactly for 1x1 blocks
        return np.sqrt(S.sum(axis=0) + S[src].sum(axis=1))

    for idx, (beta, k, l) in enumerate(labels):
        if mults[beta] == 0:
            continue
        bp = inv_perm[beta]
        Pk, Pl = rep.positions(beta, k), rep.positions(beta, l)
        Qk, Ql = rep.positions(bp, k), rep.positions(bp, l)
        col = Yt[:, Pk].copy()
        col[Qk, :] -= Yt[np.ix_(Ql, Pl)]
        row = Yt[Ql, :].copy()
        row[:, Pl] = 0.0
        out[idx] = np.sqrt(np.sum(np.abs(col) ** 2) + np.sum(np.abs(row) ** 2))
    return out


def _unit_factors(rep: Representation, beta: int, k: int, l: int):
    """pi(E_kl in block beta) = H_k H_l^*."""
    return _hilbert_columns(rep, rep.positions(beta, k)), _hilbert_columns(rep, rep.positions(beta, l))


def _twisted_unit_factors(rep: Representation, rho: Automorphism, beta: int, k: int, l: int):
    """pi(rho(E_kl in block beta)) = G_k G_l^*."""
    i = rho.inverse.block_perm[beta]
    W = rho.block_unitaries[i]
    n = rep.parent.blocks[i]
    Hk = sum(W[kk, k] * _hilbert_columns(rep, rep.positions(i, kk)) for kk in range(n))
    Hl = sum(W[ll, l] * _hilbert_columns(rep, rep.positions(i, ll)) for ll in range(n))
    return Hk, Hl


def order_zero_sweep(t: RealTwistedTriple) -> tuple[float, float]:
    """(max_{a,b} ||[pi(a), b°]||, scale) over matrix units."""
    rep, U = t.rep, t.J.U
    worst, bnorm = 0.0, 0.0
    for beta, k, l in t.algebra.basis_labels():
        if rep.multiplicities[beta] == 0:
            continue
        Hk, Hl = _unit_factors(rep, beta, k, l)
        # b = E_kl, b* = E_lk = Hl Hk^*, b° = (U conj Hl)(U conj Hk)^*
        A_, B_ = U @ Hl.conj(), U @ Hk.conj()
        Yhat = _rows_to_blocks(rep, A_) @ _rows_to_blocks(rep, B_).conj().T
        bnorm = max(bnorm, float(np.linalg.norm(Yhat)))
        worst = max(worst, float(bracket_norms(rep, Yhat).max()))
    pimax = float(np.sqrt(max(rep.multiplicities)))
    return worst, pimax * bnorm


def first_order_sweep(t: RealTwistedTriple) -> tuple[float, float]:
    """(max_{a,b} ||[[D,a]_rho, b°]_{rho°}||, scale) over matrix units.

    Conjugating by J^-1 turns the outer bracket into Y b* - rho^-1(b*) Y with
    Y = J^-1 [D,a]_rho J, which the block sweep evaluates for all b at once.
    """
    rep, U, D = t.rep, t.J.U, t.D.mat
    DH = D.conj().T
    sigma = t.rho.inverse
    worst, xnorm = 0.0, 0.0
    for beta, k, l in t.algebra.basis_labels():
        if rep.multiplicities[beta] == 0:
            continue
        Hk, Hl = _unit_factors(rep, beta, k, l)
        Gk, Gl = _twisted_unit_factors(rep, t.rho, beta, k, l)
        # X = D Hk Hl^* - Gk Gl^* D = [D Hk, -Gk] [Hl, D^* Gl]^*
        A_ = np.hstack([D @ Hk, -Gk])
        B_ = np.hstack([Hl, DH @ Gl])
        # J^-1 X J = (U^T conj A)(U^T conj B)^*
        A2, B2 = U.T @ A_.conj(), U.T @ B_.conj()
        Yhat = _rows_to_blocks(rep, A2) @ _rows_to_blocks(rep, B2).conj().T
        xnorm = max(xnorm, float(np.linalg.norm(Yhat)))
        worst = max(worst, float(bracket_norms(rep, Yhat, sigma).max()))
    pimax = float(np.sqrt(max(rep.multiplicities)))
    return worst, pimax * xnorm


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AxiomResult:
    residual: Optional[float]
    threshold: Optional[float]
    passed: bool
    status: str = "checked"  # checked | vacuous | skipped

    def to_json(self) -> dict:
        d = {"residual": self.residual, "pass": self.passed}
        if self.status != "checked":
            d["status"] = self.status
        return d


@dataclass
class ValidationReport:
    axioms: dict
    seed: Optional[int] = None
    tool_version: str = __version__
    triple_name: str = ""

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.axioms.values())

    @property
    def failures(self) -> list[str]:
        return [k for k, r in self.axioms.items() if not r.passed]

    def max_residual(self) -> float:
        return max((r.residual for r in self.axioms.values() if r.residual is not None), default=0.0)

    def to_json(self) -> dict:
        return {"tool_version": self.tool_version, "seed": self.seed, "triple": self.triple_name,
                "pass": self.passed, "axioms": {k: v.to_json() for k, v in self.axioms.items()}}


AXIOM_DESCRIPTIONS = {
    "D_hermitian": "D = D*",
    "J_antiunitary": "J^* J = 1",
    "J_squared": "J^2 = eps",
    "J_D": "J D = eps' D J",
    "J_Gamma": "J Gamma = eps'' Gamma J",
    "Gamma_hermitian": "Gamma = Gamma*",
    "Gamma_involution": "Gamma^2 = 1",
    "Gamma_commutes_algebra": "[Gamma, pi(a)] = 0",
    "Gamma_anticommutes_D": "Gamma D + D Gamma = 0",
    "order_zero": "[a, J b* J^-1] = 0",
    "first_order_twisted": "[[D,a]_rho, J b* J^-1]_rho° = 0",
    "rho_regular": "rho(a*) = (rho^-1(a))*",
    "bounded_commutators": "twisted commutators bounded",
    "compact_resolvent": "D has compact resolvent",
}


def validate_triple(t: RealTwistedTriple, tol: Tolerance | None = None,
                    seed: Optional[int] = None) -> ValidationReport:
    """Check every testable axiom over a full algebra basis; failures are reported."""
    tol = tol or Tolerance()
    s = t.signs
    D, U = t.D.mat, t.J.U
    n = t.dim
    res: dict[str, AxiomResult] = {}

    def put(name, r, scale):
        thr = tol.threshold(scale)
        res[name] = AxiomResult(float(r), thr, bool(r <= thr))

    dn = norm(D)
    put("D_hermitian", residual(D, D.conj().T), dn)
    put("J_antiunitary", residual(U.conj().T @ U, np.eye(n)), np.sqrt(n))
    put("J_squared", residual(U @ U.conj(), s.eps * np.eye(n)), np.sqrt(n))
    put("J_D", residual(U @ D.conj(), s.eps_prime * D @ U), dn)
    G = t.grading
    if G is not None:
        Gm = G.mat
        gn = norm(Gm)
        put("J_Gamma", residual(U @ Gm.conj(), s.eps_second * Gm @ U), gn)
        put("Gamma_hermitian", residual(Gm, Gm.conj().T), gn)
        put("Gamma_involution", residual(Gm @ Gm, np.eye(n)), np.sqrt(n))
        gc = float(bracket_norms(t.rep, t.rep.to_blocks(Gm)).max())
        put("Gamma_commutes_algebra", gc, gn * np.sqrt(max(t.rep.multiplicities)))
        put("Gamma_anticommutes_D", norm(Gm @ D + D @ Gm), gn * dn)
    else:
        for k in ("J_Gamma", "Gamma_hermitian", "Gamma_involution", "Gamma_commutes_algebra",
                  "Gamma_anticommutes_D"):
            res[k] = AxiomResult(None, None, True, "skipped")
    oz, oz_scale = order_zero_sweep(t)
    put("order_zero", oz, oz_scale)
    fo, fo_scale = first_order_sweep(t)
    put("first_order_twisted", fo, fo_scale)
    reg = check_regular(t.rho, tol)
    put("rho_regular", reg.residual, 1.0)
    res["bounded_commutators"] = AxiomResult(None, None, True, "vacuous")
    res["compact_resolvent"] = AxiomResult(None, None, True, "vacuous")
    return ValidationReport(res, seed=seed, triple_name=t.name)


def twisted_first_order_residual(t: RealTwistedTriple, a: AlgebraElement, b: AlgebraElement,
                                 tol: Tolerance | None = None) -> float:
    """||[[D,a]_rho, b°]_{rho°}|| with rho°(b°) from the dual-route computation."""
    X = t.delta(a)
    bo = t.opposite(b)
    rb = rho_opposite(t.rho, t.J, b, t.rep, tol).value
    return residual(X @ bo, rb @ X)
