"""Lattice model of the minimal twist of a flat 2m-torus.

Hilbert index convention: site x (row-major over (Z/L)^{2m}) times spinor
index s, i.e. index = x * 2^m + s. The algebra F(sites) ⊕ F(sites) acts by
f on the Gamma = +1 spinor components and g on the Gamma = -1 ones, so the
flip (f, g) -> (g, f) is intertwined by every gamma matrix.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .algebra import AlgebraElement, Automorphism, Representation, StarAlgebra
from .errors import NoSuchConjugationError, UnsupportedDimensionError
from .forms import TwistedOneForm, form_from_generators
from .opcore import AntilinearOp, LinearOp, Tolerance, conjugate_by, norm, residual
from .triple import KOSignature, RealTwistedTriple

PAULI = (
    np.eye(2, dtype=complex),
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)
MAX_M = 2


@dataclass(frozen=True, eq=False)
class CliffordData:
    m: int
    gammas: tuple
    chirality: np.ndarray

    @property
    def size(self) -> int:
        return 2 ** self.m

    def anticommutator_residual(self) -> float:
        n = self.size
        worst = 0.0
        for mu, g in enumerate(self.gammas):
            for nu, h in enumerate(self.gammas):
                target = 2.0 * np.eye(n) if mu == nu else np.zeros((n, n))
                worst = max(worst, float(np.linalg.norm(g @ h + h @ g - target)))
        return worst


def gamma_basis(m: int) -> CliffordData:
    """Hermitian Euclidean gammas of size 2^m by the iterated tensor construction."""
    if m < 1:
        raise ValueError("m must be >= 1")
    gam = [PAULI[1], PAULI[2]]
    chi = PAULI[3]
    for k in range(2, m + 1):
        s1, s2 = PAULI[1], PAULI[2]
        gam = [np.kron(g, s1) for g in gam] + [np.kron(chi, s1), np.kron(np.eye(2 ** (k - 1)), s2)]
        chi = _chirality(gam, k)
    return CliffordData(m, tuple(gam), chi)


def _chirality(gammas: Sequence[np.ndarray], m: int) -> np.ndarray:
    prod = np.eye(gammas[0].shape[0], dtype=complex)
    for g in gammas:
        prod = prod @ g
    return (-1j) ** m * prod


@dataclass(frozen=True, eq=False)
class LatticeGeometry:
    m: int
    L: int
    derivative: str = "central"

    def __post_init__(self):
        if self.L < 3 or self.L % 2 == 0:
            raise ValueError("L must be an odd integer >= 3")
        if self.derivative not in ("central", "spectral"):
            raise ValueError(f"unknown derivative {self.derivative!r}")

    @property
    def h(self) -> float:
        return 1.0 / self.L

    @property
    def ndirs(self) -> int:
        return 2 * self.m

    @property
    def nsites(self) -> int:
        return self.L ** self.ndirs

    def derivative_1d(self) -> np.ndarray:
        L, h = self.L, self.h
        if self.derivative == "central":
            S = np.roll(np.eye(L), 1, axis=1)  # (S f)(x) = f(x + 1)
            return (S - S.T) / (2 * h)
        k = 2 * np.pi * np.fft.fftfreq(L, d=h)
        return np.real(np.fft.ifft(1j * k[:, None] * np.fft.fft(np.eye(L), axis=0), axis=0))

    def nablas(self) -> list[np.ndarray]:
        d1 = self.derivative_1d()
        I = np.eye(self.L)
        out = []
        for mu in range(self.ndirs):
            M = np.ones((1, 1))
            for nu in range(self.ndirs):
                M = np.kron(M, d1 if nu == mu else I)
            out.append(M)
        return out

    def coords(self) -> np.ndarray:
        """(nsites, 2m) integer coordinates, first direction slowest."""
        grids = np.meshgrid(*[np.arange(self.L)] * self.ndirs, indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=1)

    def positions(self) -> np.ndarray:
        """Physical coordinates in [0, 1)."""
        return self.coords() * self.h


def charge_conjugation(m: int, signs: KOSignature, tol: Tolerance | None = None,
                       cliff: CliffordData | None = None) -> AntilinearOp:
    """Search s·P1⊗...⊗Pm (Pauli words, s in {±1, ±i}) for the spinor part C of J = C∘conj.

    Constraints: C conj(C) = eps, C conj(gamma) C^-1 = -eps' gamma (so that
    J D = eps' D J for D = -i gamma ∇ with real ∇), C conj(Gamma) = eps'' Gamma C,
    and the algebra branch: chirality preserved for KO 0,4, swapped for KO 2,6.
    """
    tol = tol or Tolerance()
    if signs.dim_mod8 is not None and signs.dim_mod8 != (2 * m) % 8:
        raise NoSuchConjugationError(
            f"requested KO-dimension {signs.dim_mod8} differs from 2m mod 8 = {(2 * m) % 8}")
    cliff = cliff or gamma_basis(m)
    n = cliff.size
    G = cliff.chirality
    for word in itertools.product(range(4), repeat=m):
        P = np.ones((1, 1), dtype=complex)
        for w in word:
            P = np.kron(P, PAULI[w])
        for s in (1, -1, 1j, -1j):
            C = s * P
            thr = tol.threshold(np.sqrt(n))
            if np.linalg.norm(C @ C.conj() - signs.eps * np.eye(n)) > thr:
                continue
            Ci = C.conj().T
            if any(np.linalg.norm(C @ g.conj() @ Ci + signs.eps_prime * g) > thr for g in cliff.gammas):
                continue
            if np.linalg.norm(C @ G.conj() - signs.eps_second * G @ C) > thr:
                continue
            # branch: C conj(P+) C^-1 = P+ (KO 0,4) or P- (KO 2,6)
            Pp = (np.eye(n) + G) / 2
            target = Pp if signs.eps_second == 1 else np.eye(n) - Pp
            if np.linalg.norm(C @ Pp.conj() @ Ci - target) > thr:
                continue
            return AntilinearOp(C)
    raise NoSuchConjugationError(f"no Pauli word satisfies the signs {signs.to_json()} for m = {m}")


@dataclass(frozen=True, eq=False)
class MinimalTwistTriple:
    triple: RealTwistedTriple
    geometry: LatticeGeometry
    clifford: CliffordData
    C: np.ndarray
    nablas: tuple = field(repr=False, default=())
    model_note: str = "flat torus, vanishing spin connection"

    @property
    def m(self) -> int:
        return self.geometry.m

    @property
    def L(self) -> int:
        return self.geometry.L

    @property
    def nsites(self) -> int:
        return self.geometry.nsites

    @property
    def ko_class(self) -> int:
        return (2 * self.m) % 8

    def element(self, f, g) -> AlgebraElement:
        """(f, g) -> algebra element with f, g arrays over sites."""
        f = np.broadcast_to(np.asarray(f, dtype=complex), (self.nsites,))
        g = np.broadcast_to(np.asarray(g, dtype=complex), (self.nsites,))
        vals = np.concatenate([f, g])
        return self.triple.algebra.element([np.array([[v]]) for v in vals])

    def functions(self, a: AlgebraElement) -> tuple[np.ndarray, np.ndarray]:
        v = np.array([p[0, 0] for p in a.parts])
        return v[: self.nsites], v[self.nsites:]

    def unitary(self, theta1, theta2) -> AlgebraElement:
        return self.element(np.exp(1j * np.asarray(theta1)), np.exp(1j * np.asarray(theta2)))

    def chiral_projectors(self) -> tuple[np.ndarray, np.ndarray]:
        n = self.clifford.size
        Pp = (np.eye(n) + self.clifford.chirality) / 2
        return Pp, np.eye(n) - Pp

    def site_gradient_norm(self, phi) -> float:
        phi = np.asarray(phi, dtype=complex)
        return float(np.sqrt(sum(np.linalg.norm(nb @ phi) ** 2 for nb in self.nablas)))


def lattice_minimal_twist(m: int, L: int, signs: KOSignature | None = None,
                          derivative: str = "central", tol: Tolerance | None = None) -> MinimalTwistTriple:
    if m > MAX_M:
        raise UnsupportedDimensionError(f"m = {m} exceeds the supported maximum {MAX_M}")
    if m < 1:
        raise ValueError("m must be >= 1")
    geom = LatticeGeometry(m, L, derivative)
    signs = signs or KOSignature.preset(2 * m)
    cliff = gamma_basis(m)
    J_spin = charge_conjugation(m, signs, tol, cliff)
    ns, n = geom.nsites, cliff.size
    chi = np.real(np.diag(cliff.chirality))
    if np.linalg.norm(cliff.chirality - np.diag(np.diag(cliff.chirality))) > 0:
        raise ValueError("chirality is expected to be diagonal in the spinor basis")
    plus, minus = np.flatnonzero(chi > 0), np.flatnonzero(chi < 0)
    A = StarAlgebra((1,) * (2 * ns))
    sites = np.arange(ns)[:, None] * n
    perm = np.concatenate([(sites + plus[None, :]).ravel(), (sites + minus[None, :]).ravel()])
    rep = Representation(A, [n // 2] * (2 * ns), perm)
    nab = geom.nablas()
    D = np.zeros((ns * n, ns * n), dtype=complex)
    for nb, g in zip(nab, cliff.gammas):
        D += -1j * np.kron(nb, g)
    U = np.kron(np.eye(ns), J_spin.U)
    Gam = np.kron(np.eye(ns), cliff.chirality)
    flip = Automorphism(A, [(i + ns) % (2 * ns) for i in range(2 * ns)])
    t = RealTwistedTriple(A, rep, LinearOp(D), AntilinearOp(U), LinearOp(Gam), flip,
                          KOSignature(signs.eps, signs.eps_prime, signs.eps_second, (2 * m) % 8),
                          name=f"lattice-m{m}-L{L}")
    return MinimalTwistTriple(t, geom, cliff, J_spin.U, tuple(nab))


def gamma_intertwining_residual(mt: MinimalTwistTriple, a: AlgebraElement) -> float:
    """max_mu ||gamma^mu pi(a) - pi(rho(a)) gamma^mu|| (pointwise, no derivative)."""
    t = mt.triple
    pa, pra = t.pi(a).mat, t.pi(t.rho(a)).mat
    I = np.eye(mt.nsites)
    worst = 0.0
    for g in mt.clifford.gammas:
        G = np.kron(I, g)
        worst = max(worst, residual(G @ pa, pra @ G))
    return worst


def smooth_function(geom: LatticeGeometry, rng: np.random.Generator, modes: int = 2,
                    complex_valued: bool = False) -> np.ndarray:
    """Random low-frequency trigonometric polynomial on the lattice."""
    x = geom.positions()
    out = np.zeros(geom.nsites, dtype=complex)
    for _ in range(modes):
        k = rng.integers(-1, 2, size=geom.ndirs)
        phase = rng.uniform(0, 2 * np.pi)
        amp = rng.standard_normal() + (1j * rng.standard_normal() if complex_valued else 0)
        out += amp * np.cos(2 * np.pi * x @ k + phase)
    return out if complex_valued else out.real


# ---------------------------------------------------------------------------
# experiments


def prop53_experiment(mt: MinimalTwistTriple, theta1, theta2, D_omega=None,
                      tol: Tolerance | None = None, strict: bool = True):
    """Self-adjointness certificate for u = (e^{i theta1}, e^{i theta2})."""
    from .gauge import GaugeUnitary, selfadjointness_certificate

    t = mt.triple
    u = mt.unitary(theta1, theta2)
    cert = selfadjointness_certificate(t, GaugeUnitary.from_element(t, u, tol), D_omega, tol, strict)
    phi = np.asarray(theta1) - np.asarray(theta2)
    cert.annotations.update({
        "ko_class": mt.ko_class,
        "grad_phi_norm": mt.site_gradient_norm(np.broadcast_to(phi, (mt.nsites,))),
        "model": mt.model_note,
    })
    return cert


@dataclass
class Prop55Report:
    omega: TwistedOneForm
    D_prime: LinearOp
    F: list
    G: list
    ko_class: int
    selfadjoint_residual: float
    selfadjoint: bool
    reconstruction_residual: float
    extraction_residual: Optional[float]
    decomposition_residual: Optional[float]
    max_block: float
    zero_blocks: bool
    threshold: float

    def to_json(self) -> dict:
        return {
            "ko_class": self.ko_class,
            "selfadjoint_residual": self.selfadjoint_residual,
            "selfadjoint": self.selfadjoint,
            "reconstruction_residual": self.reconstruction_residual,
            "extraction_residual": self.extraction_residual,
            "decomposition_residual": self.decomposition_residual,
            "max_block_norm": self.max_block,
            "blocks_vanish": self.zero_blocks,
            "threshold": self.threshold,
        }


def _site_blocks(mt: MinimalTwistTriple, pairs) -> tuple[list, list]:
    """Lattice analogues of f_mu, g_mu from generator pairs (rho(a), a')."""
    ko26 = mt.triple.signs.eps_second == -1
    F, G = [], []
    for nb in mt.nablas:
        Fm = np.zeros((mt.nsites, mt.nsites), dtype=complex)
        Gm = np.zeros_like(Fm)
        for a, ap in pairs:
            f, g = mt.functions(a)
            fp, gp = mt.functions(ap)
            Xf = f[:, None] * (nb * fp[None, :] - fp[:, None] * nb)  # f [∇, f']
            Xg = g[:, None] * (nb * gp[None, :] - gp[:, None] * nb)
            if ko26:
                Fm += Xf + Xg.conj()
                Gm += Xg + Xf.conj()
            else:
                Fm += Xf + Xf.conj()
                Gm += Xg + Xg.conj()
        F.append(Fm)
        G.append(Gm)
    return F, G


def _assemble(mt: MinimalTwistTriple, F, G) -> np.ndarray:
    """-i sum_mu gamma^mu (F_mu on H+ , G_mu on H-)."""
    Pp, Pm = mt.chiral_projectors()
    out = np.zeros((mt.triple.dim,) * 2, dtype=complex)
    for g, Fm, Gm in zip(mt.clifford.gammas, F, G):
        out += -1j * (np.kron(Fm, g @ Pp) + np.kron(Gm, g @ Pm))
    return out


def _extract(mt: MinimalTwistTriple, M: np.ndarray) -> tuple[list, list]:
    """Trace extraction of F_mu, G_mu; valid when the gamma^mu P± are independent (m >= 2)."""
    ns, n = mt.nsites, mt.clifford.size
    T = M.reshape(ns, n, ns, n)
    Pp, Pm = mt.chiral_projectors()
    F, G = [], []
    for g in mt.clifford.gammas:
        Bp, Bm = -1j * g @ Pp, -1j * g @ Pm
        F.append(np.einsum("st,xsyt->xy", Bp.conj(), T) / (n // 2))
        G.append(np.einsum("st,xsyt->xy", Bm.conj(), T) / (n // 2))
    return F, G


def prop55_fluctuate(mt: MinimalTwistTriple, a, a_prime, tol: Tolerance | None = None) -> Prop55Report:
    """omega = sum_i rho(a_i)[D, a'_i]_rho, its J-symmetrization and block structure."""
    tol = tol or Tolerance()
    t = mt.triple
    a_list = [a] if isinstance(a, AlgebraElement) else list(a)
    ap_list = [a_prime] if isinstance(a_prime, AlgebraElement) else list(a_prime)
    pairs = list(zip(a_list, ap_list))
    omega = form_from_generators(t, [(t.rho(x), y) for x, y in pairs])
    jw = conjugate_by(t.J, omega.value, check=False)
    sym = omega.value.mat + t.signs.eps_prime * jw.mat
    Dp = LinearOp._wrap(t.D.mat + sym)
    F, G = _site_blocks(mt, pairs)
    recon = float(np.linalg.norm(sym - _assemble(mt, F, G)))
    extr = None
    if mt.m >= 2:
        Fe, Ge = _extract(mt, sym)
        extr = float(max(np.linalg.norm(x - y) for x, y in zip(Fe + Ge, F + G)))
    scale = max(norm(t.D), norm(sym))
    thr = tol.threshold(scale)
    sa_res = float(np.linalg.norm(sym - sym.conj().T))
    sa = sa_res <= thr
    max_block = float(max(np.linalg.norm(x) for x in F + G))
    decomp = None
    if sa:
        # D' = D - i gamma^mu Gamma 𝔣_mu, 𝔣_mu = F_mu on H+ and F_mu^T on H-
        Pp, Pm = mt.chiral_projectors()
        chi = mt.clifford.chirality
        target = t.D.mat.copy()
        for g, Fm in zip(mt.clifford.gammas, F):
            frak = np.kron(Fm, Pp) + np.kron(Fm.T, Pm)
            target += -1j * np.kron(np.eye(mt.nsites), g @ chi) @ frak
        decomp = residual(Dp, target)
    return Prop55Report(omega, Dp, F, G, mt.ko_class, sa_res, sa, recon, extr, decomp, max_block,
                        max_block <= thr, thr)


def selfadjoint_pair_generators(mt: MinimalTwistTriple, f, fp) -> tuple[list, list]:
    """Generator lists (a_i), (a'_i) whose fluctuation satisfies G_mu = -F_mu^T (KO 0,4).

    a_1 = (f, -1), a'_1 = (f', f f'), a_2 = (0, f'), a'_2 = (0, f), for real f, f'.
    """
    f, fp = np.asarray(f, dtype=float), np.asarray(fp, dtype=float)
    a = [mt.element(f, -1.0), mt.element(0.0, fp)]
    ap = [mt.element(fp, f * fp), mt.element(0.0, f)]
    return a, ap


def convergence_experiment(Ls: Sequence[int] = (9, 17, 33), m: int = 1, seed: int = 0) -> dict:
    """RMS error of [D, a]_rho against -i gamma^mu pi(∂_mu a) on a smooth spinor, per L."""
    hs, errs = [], []
    for L in Ls:
        mt = lattice_minimal_twist(m, L)
        t = mt.triple
        x = mt.geometry.positions()
        tp = 2 * np.pi
        f = np.sin(tp * x[:, 0]) * np.cos(tp * x[:, 1]) + 0.5 * np.cos(tp * (x[:, 0] + x[:, 1]))
        g = np.cos(tp * x[:, 1]) + 0.3 * np.sin(tp * (x[:, 0] - x[:, 1]))
        df = [tp * np.cos(tp * x[:, 0]) * np.cos(tp * x[:, 1]) - 0.5 * tp * np.sin(tp * (x[:, 0] + x[:, 1])),
              -tp * np.sin(tp * x[:, 0]) * np.sin(tp * x[:, 1]) - 0.5 * tp * np.sin(tp * (x[:, 0] + x[:, 1]))]
        dg = [0.3 * tp * np.cos(tp * (x[:, 0] - x[:, 1])),
              -tp * np.sin(tp * x[:, 1]) - 0.3 * tp * np.cos(tp * (x[:, 0] - x[:, 1]))]
        rng = np.random.default_rng(seed)
        c = rng.standard_normal(mt.clifford.size) + 1j * rng.standard_normal(mt.clifford.size)
        psi = np.kron(np.exp(1j * tp * x[:, 0]) * (1 + 0.5 * np.cos(tp * x[:, 1])), c)
        a = mt.element(f, g)
        lat = t.delta(a).mat @ psi
        Pp, Pm = mt.chiral_projectors()
        cont = np.zeros(t.dim, dtype=complex)
        for mu, gam in enumerate(mt.clifford.gammas):
            cont += -1j * np.kron(np.diag(df[mu]), gam @ Pp) @ psi + -1j * np.kron(np.diag(dg[mu]), gam @ Pm) @ psi
        hs.append(mt.geometry.h)
        errs.append(float(np.linalg.norm(lat - cont) / np.sqrt(t.dim)))
    slope = float(np.polyfit(np.log(hs), np.log(errs), 1)[0])
    return {"L": list(Ls), "h": hs, "rms_error": errs, "order": slope}
