"""Unitaries, Ad(u), twisted gauge transformations and the self-adjointness certificate."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .algebra import AlgebraElement
from .errors import InconsistentCertificate, PrecheckError
from .forms import TwistedOneForm, bimodule_act, form_from_generators, j_conjugate_form
from .opcore import LinearOp, Tolerance, conjugate_by, norm, residual, twisted_commutator
from .triple import RealTwistedTriple


@dataclass(frozen=True, eq=False)
class GaugeUnitary:
    u: AlgebraElement
    as_op: LinearOp
    ad: LinearOp

    @classmethod
    def from_element(cls, t: RealTwistedTriple, u: AlgebraElement, tol: Tolerance | None = None):
        tol = tol or Tolerance()
        pu = t.pi(u)
        r = residual(pu.H @ pu, np.eye(t.dim))
        if r > tol.threshold(np.sqrt(t.dim)):
            raise ValueError(f"element is not unitary (residual {r:.3e})")
        ad = pu @ t.jconj(pu)
        return cls(u, pu, ad)

    @classmethod
    def random(cls, t: RealTwistedTriple, rng: np.random.Generator, tol: Tolerance | None = None):
        return cls.from_element(t, t.algebra.random_unitary(rng), tol)


def ad_unitarity_residual(g: GaugeUnitary) -> float:
    """||Ad(u)* Ad(u) - 1||."""
    A = g.ad.mat
    return residual(A.conj().T @ A, np.eye(A.shape[0]))


def twist_of_adjoint(t: RealTwistedTriple, g: GaugeUnitary) -> LinearOp:
    """rho(Ad u) = rho(u) J rho(u) J^-1."""
    ru = t.pi(t.rho(g.u))
    return ru @ t.jconj(ru)


def twist_of_adjoint_orders(t: RealTwistedTriple, g: GaugeUnitary) -> dict:
    """Compare rho(u) rho°(v), rho°(v) rho(u) (v = J u J^-1) with rho(Ad u)."""
    ru = t.pi(t.rho(g.u)).mat
    # v = (u*)°, so rho°(v) = (rho^-1(u*))°
    rv = t.opposite(t.rho.inverse(g.u.star())).mat
    ref = twist_of_adjoint(t, g).mat
    return {"left_order": residual(ref, ru @ rv), "right_order": residual(ref, rv @ ru)}


def rho_ad_adjoint_residual(t: RealTwistedTriple, g: GaugeUnitary) -> float:
    """||rho(Ad u)* - rho^-1(Ad(u)*)|| with rho^-1(Ad(u)*) = rho^-1(u*) J rho^-1(u*) J^-1."""
    lhs = twist_of_adjoint(t, g).H
    x = t.pi(t.rho.inverse(g.u.star()))
    return residual(lhs, x @ t.jconj(x))


def gauge_transform_potential(t: RealTwistedTriple, w: TwistedOneForm, g: GaugeUnitary) -> TwistedOneForm:
    """w^u = rho(u)[D, u*]_rho + rho(u) w u*."""
    if w.side != "plain":
        raise ValueError("gauge_transform_potential expects a plain-side form")
    u, us = g.u, g.u.star()
    pure = form_from_generators(t, [(t.rho(u), us)])
    moved = bimodule_act(u, w, us)
    return TwistedOneForm(t, pure.value + moved.value, pure.generators + moved.generators, "plain")


def gauge_transform_opposite(t: RealTwistedTriple, wo: TwistedOneForm, g: GaugeUnitary) -> TwistedOneForm:
    """(w°)^u = rho°(u*°)[D, u°]_{rho°} + rho°(u*°) w° u°."""
    if wo.side != "opposite":
        raise ValueError("gauge_transform_opposite expects an opposite-side form")
    u, us = g.u, g.u.star()
    pure = form_from_generators(t, [(t.rho.inverse(us), u)], "opposite")
    moved = bimodule_act(u, wo, us)
    return TwistedOneForm(t, pure.value + moved.value, pure.generators + moved.generators, "opposite")


def opposite_bridge_residual(t: RealTwistedTriple, w: TwistedOneForm, g: GaugeUnitary,
                             tol: Tolerance | None = None) -> float:
    """||(w°)^u - eps' J (w^u) J^-1|| with w° the opposite form attached to w."""
    wo = j_conjugate_form(t, w, tol)
    lhs = gauge_transform_opposite(t, wo, g)
    rhs = t.signs.eps_prime * t.jconj(gauge_transform_potential(t, w, g).value)
    return residual(lhs.value, rhs)


def fluctuated_dirac(t: RealTwistedTriple, w) -> LinearOp:
    """D + w + eps' J w J^-1."""
    v = w.value if isinstance(w, TwistedOneForm) else w
    return t.D + v + t.signs.eps_prime * t.jconj(v)


@dataclass
class GaugeIdentityReport:
    residual: float
    pure_gauge_residual: float
    threshold: float

    @property
    def passed(self) -> bool:
        return self.residual <= self.threshold and self.pure_gauge_residual <= self.threshold

    def to_json(self) -> dict:
        return {"residual": self.residual, "pure_gauge_residual": self.pure_gauge_residual,
                "threshold": self.threshold, "pass": self.passed}


def twisted_conjugate_dirac(t: RealTwistedTriple, D_gauged, w: TwistedOneForm, g: GaugeUnitary,
                            tol: Tolerance | None = None) -> GaugeIdentityReport:
    """Compare rho(Ad u) D_w Ad(u)^-1 with D + w^u + eps' J w^u J^-1."""
    tol = tol or Tolerance()
    Dg = D_gauged if isinstance(D_gauged, LinearOp) else LinearOp(D_gauged)
    expected = fluctuated_dirac(t, w)
    pre = residual(Dg, expected)
    if pre > tol.threshold(norm(Dg), norm(expected)):
        raise PrecheckError(f"supplied operator is not the declared fluctuation (residual {pre:.3e})")
    rad, adinv = twist_of_adjoint(t, g), g.ad.H
    lhs = rad @ Dg @ adinv
    rhs = fluctuated_dirac(t, gauge_transform_potential(t, w, g))
    lhs0 = rad @ t.D @ adinv
    pure = form_from_generators(t, [(t.rho(g.u), g.u.star())])
    rhs0 = fluctuated_dirac(t, pure)
    thr = tol.threshold(norm(lhs), norm(rhs), norm(lhs0), norm(rhs0))
    return GaugeIdentityReport(residual(lhs, rhs), residual(lhs0, rhs0), thr)


@dataclass
class SelfAdjointnessCertificate:
    variant_a_residual: float
    variant_b_residual: float
    direct_residual: float
    verdict: bool
    direct_verdict: bool
    threshold: float
    frak_u: AlgebraElement
    omega_norm: float
    consistent: bool = True
    annotations: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "variant_a_residual": self.variant_a_residual,
            "variant_b_residual": self.variant_b_residual,
            "direct_residual": self.direct_residual,
            "verdict": self.verdict,
            "direct_verdict": self.direct_verdict,
            "threshold": self.threshold,
            "omega_norm": self.omega_norm,
            "consistent": self.consistent,
            **self.annotations,
        }


def selfadjointness_certificate(t: RealTwistedTriple, g: GaugeUnitary, D_omega=None,
                                tol: Tolerance | None = None, strict: bool = True
                                ) -> SelfAdjointnessCertificate:
    """Decide whether rho(Ad u) D_w Ad(u)* is self-adjoint through J omega(u) J^-1 = -eps' omega(u).

    omega(u) is built from frak_u = rho(u)* u in two ways, conjugated by u° or
    by u; a direct self-adjointness check of the conjugated operator is run
    alongside. With ``strict`` a disagreement raises InconsistentCertificate;
    otherwise it is recorded in ``consistent``.
    """
    tol = tol or Tolerance()
    D = t.D if D_omega is None else (D_omega if isinstance(D_omega, LinearOp) else LinearOp(D_omega))
    u = g.u
    frak = t.rho(u).star() @ u
    inner = twisted_commutator(D, t.pi(frak), t.pi(t.rho(frak))).mat
    uo, uso = t.opposite(u).mat, t.opposite(u.star()).mat
    pu = g.as_op.mat
    om_a = uo @ inner @ uso
    om_b = pu @ inner @ pu.conj().T
    ep = t.signs.eps_prime
    r_a = residual(t.jconj(om_a), -ep * om_a)
    r_b = residual(t.jconj(om_b), -ep * om_b)
    X = (twist_of_adjoint(t, g) @ D @ g.ad.H).mat
    r_d = residual(X, X.conj().T)
    om_norm = max(norm(om_a), norm(om_b))
    thr = tol.threshold(norm(D), om_norm)
    verdict, direct = r_a <= thr, r_d <= thr
    consistent = abs(r_a - r_b) <= thr and (verdict == direct or abs(r_a - r_d) <= thr)
    cert = SelfAdjointnessCertificate(r_a, r_b, r_d, verdict, direct, thr, frak, om_norm, consistent)
    if strict and not consistent:
        raise InconsistentCertificate(
            f"certificate variants disagree (a={r_a:.3e}, b={r_b:.3e}, direct={r_d:.3e})", cert)
    return cert
