"""Command-line front-end: validate, fluctuate, gauge, morita, lattice, emit-fixture."""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Optional

import numpy as np

from . import __version__
from .errors import (InconsistentCertificate, IrregularTwistError, NoSuchConjugationError,
                     NotInvariantError, NotWellDefinedError, RankDeficiencyError, SchemaError,
                     TwistFluctError, UnsupportedDimensionError)
from .opcore import Tolerance

EXIT_OK, EXIT_CHECK, EXIT_INPUT = 0, 1, 2

ANCHORS = {
    "D_hermitian": "triple axioms: self-adjoint Dirac operator",
    "J_antiunitary": "real structure: antiunitary J",
    "J_squared": "KO sign relations: J^2 = eps",
    "J_D": "KO sign relations: J D = eps' D J",
    "J_Gamma": "KO sign relations: J Gamma = eps'' Gamma J",
    "Gamma_hermitian": "grading: self-adjoint",
    "Gamma_involution": "grading: involution",
    "Gamma_commutes_algebra": "grading: even algebra",
    "Gamma_anticommutes_D": "grading: odd Dirac operator",
    "order_zero": "order-zero condition",
    "first_order_twisted": "twisted first-order condition",
    "rho_regular": "regularity of the twist",
    "bounded_commutators": "bounded twisted commutators",
    "compact_resolvent": "compact resolvent",
    "compatibility_matches_violation": "J-compatibility of D + w_L + eps' J w_R J^-1",
    "compatible_iff_symmetrized": "fluctuation from the symmetrized potential",
    "monoid": "twisted fluctuations form a monoid",
    "ad_unitary": "Ad(u) = u J u J^-1 is unitary",
    "twist_of_adjoint_orders": "rho(Ad u) as a product of commuting factors",
    "rho_ad_adjoint": "rho(Ad u)* = rho^-1(Ad(u)*)",
    "gauge_identity": "twisted conjugation of the fluctuated Dirac operator",
    "gauge_identity_pure": "twisted conjugation of the bare Dirac operator",
    "opposite_bridge": "gauge law of opposite potentials",
    "certificate_consistency": "self-adjointness certificate: equivalent variants",
    "ko_prediction": "self-adjoint gauged operators in the minimal twist",
    "projection": "hermitian module: p = p* = p^2",
    "quotient_dimension": "balanced tensor product: quotient vs model",
    "intertwiner": "balanced tensor product: intertwining isometry",
    "relation_annihilation": "covariant operator well defined on the balanced tensor product",
    "module_invariance": "covariant operator preserves E ⊗ H",
    "leibniz": "twisted Leibniz rule of the connection",
    "endomorphism_action": "endomorphism algebra acts on the balanced tensor product",
    "reduction": "covariant operator on E = A reduces to the fluctuated operator",
    "selfadjoint": "self-adjoint twisted fluctuation of the minimal twist",
    "decomposition": "decomposition D - i gamma^mu Gamma f_mu",
    "block_reconstruction": "block structure of omega + J omega J^-1",
    "block_extraction": "trace extraction of the f_mu, g_mu blocks",
    "revalidation": "fluctuated triple keeps the real structure",
    "selfadjoint_forces_zero": "self-adjointness forces vanishing blocks",
    "ad_trivial": "Ad(u) = 1 in KO-dimension 0,4",
    "convergence_order": "lattice twisted commutator vs continuum multiplication",
}


@dataclass
class Report:
    verb: str
    config: dict
    seed: int
    checks: list = field(default_factory=list)
    results: dict = field(default_factory=dict)

    def add(self, name: str, residual: Optional[float], threshold: Optional[float],
            passed: Optional[bool] = None, anchor: Optional[str] = None):
        if passed is None:
            passed = residual is not None and threshold is not None and residual <= threshold
        self.checks.append({
            "name": name,
            "anchor": anchor or ANCHORS.get(name, name),
            "residual": None if residual is None else float(residual),
            "threshold": None if threshold is None else float(threshold),
            "pass": bool(passed),
        })

    @property
    def passed(self) -> bool:
        return all(c["pass"] for c in self.checks)

    def to_json(self, wall_ms: float) -> dict:
        return {
            "tool_version": __version__,
            "verb": self.verb,
            "config": self.config,
            "seed": self.seed,
            "checks": self.checks,
            "results": self.results,
            "pass": self.passed,
            "wall_time_ms": round(wall_ms, 3),
            "timestamp": datetime.now(timezone.utc).isoformat(),
        }


def _tol(args) -> Tolerance:
    base = Tolerance.from_env()
    return Tolerance(args.rel_tol if args.rel_tol is not None else base.rel_tol,
                     args.abs_tol if args.abs_tol is not None else base.abs_tol)


# ---------------------------------------------------------------------------
# verbs


def _add_validation(rep: Report, vr, prefix: str = ""):
    for name, r in vr.axioms.items():
        rep.add(prefix + name, r.residual, r.threshold, r.passed, ANCHORS.get(name))


def run_validate(args, rep: Report, tol: Tolerance):
    from .descriptors import load_json, triple_from_json
    from .triple import validate_triple

    t = triple_from_json(load_json(args.triple))
    vr = validate_triple(t, tol, rep.seed)
    _add_validation(rep, vr)
    rep.results["triple"] = t.name
    rep.results["signs"] = t.signs.to_json()


def run_fluctuate(args, rep: Report, tol: Tolerance):
    from .descriptors import form_from_json, load_json, triple_from_json
    from .forms import self_adjoint_check
    from .morita import assemble_fluctuation, fluctuation_monoid_check
    from .opcore import norm
    from .triple import validate_triple

    t = triple_from_json(load_json(args.triple))
    wR = form_from_json(load_json(args.form), t)
    wL = form_from_json(load_json(args.form_left), t) if args.form_left else wR
    for w, flag in ((wR, "--form"), (wL, "--form-left")):
        if w.side != "plain":
            raise SchemaError(f"{flag} must be a plain-side form", "/side")
    res = assemble_fluctuation(t, wR, wL, tol)
    thr = res.threshold
    rep.add("compatibility_matches_violation", abs(res.compatibility_residual - res.violation_residual), thr)
    rep.add("compatible_iff_symmetrized", res.symmetrized_residual, thr,
            res.compatible == (res.symmetrized_residual <= thr))
    sa = float(np.linalg.norm(res.D_prime.mat - res.D_prime.mat.conj().T))
    rep.results.update(res.to_json())
    rep.results["selfadjoint_residual"] = sa
    if res.compatible and sa <= tol.threshold(norm(res.D_prime)):
        vr = validate_triple(t.with_dirac(res.D_prime), tol, rep.seed)
        rep.results["revalidation"] = vr.to_json()["axioms"]
        rep.results["revalidation_pass"] = vr.passed
    if args.form2:
        w2 = form_from_json(load_json(args.form2), t)
        r = fluctuation_monoid_check(t, wR, w2)
        rep.add("monoid", r, tol.threshold(norm(t.D), norm(wR.value), norm(w2.value)))


def run_gauge(args, rep: Report, tol: Tolerance):
    from .descriptors import form_from_json, load_json, triple_from_json, unitary_from_json
    from .forms import zero_form
    from .gauge import (GaugeUnitary, ad_unitarity_residual, fluctuated_dirac, opposite_bridge_residual,
                        rho_ad_adjoint_residual, selfadjointness_certificate, twist_of_adjoint_orders,
                        twisted_conjugate_dirac)
    from .opcore import norm

    t = triple_from_json(load_json(args.triple))
    try:
        g = GaugeUnitary.from_element(t, unitary_from_json(load_json(args.unitary), t), tol)
    except ValueError as e:
        if isinstance(e, SchemaError):
            raise
        raise SchemaError(str(e), "/") from None
    w = form_from_json(load_json(args.form), t) if args.form else zero_form(t)
    n = np.sqrt(t.dim)
    rep.add("ad_unitary", ad_unitarity_residual(g), tol.threshold(n))
    orders = twist_of_adjoint_orders(t, g)
    rep.add("twist_of_adjoint_orders", max(orders.values()), tol.threshold(n))
    rep.add("rho_ad_adjoint", rho_ad_adjoint_residual(t, g), tol.threshold(n))
    Dw = fluctuated_dirac(t, w)
    gi = twisted_conjugate_dirac(t, Dw, w, g, tol)
    rep.add("gauge_identity", gi.residual, gi.threshold)
    rep.add("gauge_identity_pure", gi.pure_gauge_residual, gi.threshold)
    rep.add("opposite_bridge", opposite_bridge_residual(t, w, g, tol), tol.threshold(norm(Dw)))
    cert = selfadjointness_certificate(t, g, Dw, tol, strict=False)
    rep.add("certificate_consistency", abs(cert.variant_a_residual - cert.variant_b_residual),
            cert.threshold, cert.consistent)
    rep.results["certificate"] = cert.to_json()


def run_morita(args, rep: Report, tol: Tolerance):
    from .descriptors import load_json, module_from_json, triple_from_json
    from .morita import (balanced_tensor, covariant_operator, endomorphism_residual, leibniz_residual,
                         relation_annihilation_residual)

    t = triple_from_json(load_json(args.triple)) if args.triple else None
    t, m, c = module_from_json(load_json(args.module), t)
    rep.add("projection", m.projection_residual(), tol.threshold(1.0))
    bs = balanced_tensor(m, t)
    rep.add("quotient_dimension", float(abs(bs.abstract_dim - bs.concrete_dim)), 0.0)
    rep.add("intertwiner", bs.intertwiner_residual(), tol.threshold(np.sqrt(max(bs.abstract_dim, 1))))
    op = covariant_operator(t, m, c, bs, tol)
    rep.add("relation_annihilation", relation_annihilation_residual(op), tol.threshold(1.0))
    rep.add("module_invariance", op.invariance_residual, tol.threshold(float(np.linalg.norm(op.ambient))))
    rng = np.random.default_rng(rep.seed)
    worst, scale = 0.0, 1.0
    for _ in range(args.samples):
        eta, a = m.random_element(rng), t.algebra.random_element(rng)
        psi = rng.standard_normal(t.dim) + 1j * rng.standard_normal(t.dim)
        worst = max(worst, leibniz_residual(t, m, c, eta, a, psi))
        scale = max(scale, float(np.linalg.norm(t.D.mat)) * float(np.linalg.norm(psi))
                    * max(x.norm() for x in eta) * a.norm())
    rep.add("leibniz", worst, tol.threshold(scale))
    b = [[x for x in row] for row in m.p]
    rep.add("endomorphism_action", endomorphism_residual(bs, b), tol.threshold(1.0))
    if m.N == 1 and m.p[0][0].distance(t.algebra.unit()) <= tol.threshold(1.0):
        target = t.D.mat + c.potential[0][0].value.mat
        r = float(np.linalg.norm(op.model - target))
        rep.add("reduction", r, tol.threshold(float(np.linalg.norm(target))))
    rep.results.update({"abstract_dim": bs.abstract_dim, "concrete_dim": bs.concrete_dim,
                        "relation_gap": None if not np.isfinite(bs.gap) else bs.gap,
                        "rank_threshold": bs.rank_threshold, "side": m.side, "N": m.N})


def run_lattice(args, rep: Report, tol: Tolerance):
    from .gauge import GaugeUnitary, ad_unitarity_residual
    from .manifold import (convergence_experiment, lattice_minimal_twist, prop53_experiment, prop55_fluctuate,
                           selfadjoint_pair_generators, smooth_function)
    from .triple import validate_triple

    rng = np.random.default_rng(rep.seed)
    exp = args.experiment
    if exp == "convergence":
        Ls = (args.L, 2 * args.L - 1, 4 * args.L - 3)
        out = convergence_experiment(Ls, args.m, rep.seed)
        rep.add("convergence_order", abs(out["order"] - 2.0), 0.3)
        rep.results.update(out)
        return
    mt = lattice_minimal_twist(args.m, args.L, tol=tol)
    t = mt.triple
    rep.results.update({"m": mt.m, "L": mt.L, "ko_class": mt.ko_class, "hilbert_dim": t.dim,
                        "model": mt.model_note})
    if exp == "validate":
        _add_validation(rep, validate_triple(t, tol, rep.seed))
    elif exp == "prop53":
        x = mt.geometry.positions()
        th1 = smooth_function(mt.geometry, rng)
        if args.constant_phi:
            phi = np.full(mt.nsites, rng.uniform(0, 2 * np.pi))
        else:
            phi = np.cos(2 * np.pi * x[:, 0]) + 0.5 * smooth_function(mt.geometry, rng)
        cert = prop53_experiment(mt, th1, th1 - phi, tol=tol, strict=False)
        rep.add("certificate_consistency", abs(cert.variant_a_residual - cert.variant_b_residual),
                cert.threshold, cert.consistent)
        trivial = cert.annotations["grad_phi_norm"] <= tol.threshold(1.0)
        expected = True if mt.ko_class in (0, 4) else trivial
        rep.add("ko_prediction", cert.variant_a_residual, cert.threshold, cert.verdict == expected)
        rep.results["certificate"] = cert.to_json()
        rep.results["expected_verdict"] = expected
    elif exp == "prop55":
        if mt.ko_class in (0, 4):
            f, fp = smooth_function(mt.geometry, rng), smooth_function(mt.geometry, rng)
            a, ap = selfadjoint_pair_generators(mt, f, fp)
            r = prop55_fluctuate(mt, a, ap, tol)
            rep.add("selfadjoint", r.selfadjoint_residual, r.threshold)
            rep.add("block_reconstruction", r.reconstruction_residual, r.threshold)
            if r.extraction_residual is not None:
                rep.add("block_extraction", r.extraction_residual, r.threshold)
            rep.add("decomposition", r.decomposition_residual, r.threshold, None if r.selfadjoint else False)
            vr = validate_triple(t.with_dirac(r.D_prime), tol, rep.seed)
            rep.add("revalidation", vr.max_residual(), None, vr.passed)
            rep.results["revalidation_failures"] = vr.failures
            rep.results["prop55"] = r.to_json()
        else:
            A = t.algebra
            worst_gap, rows = 0.0, []
            cases = [(A.unit(), A.unit())] + [(A.random_element(rng), A.random_element(rng))
                                              for _ in range(args.samples)]
            ok = True
            for a, ap in cases:
                r = prop55_fluctuate(mt, a, ap, tol)
                rows.append({"selfadjoint": r.selfadjoint, "max_block_norm": r.max_block})
                if r.selfadjoint and not r.zero_blocks:
                    ok = False
                    worst_gap = max(worst_gap, r.max_block)
            rep.add("selfadjoint_forces_zero", worst_gap, None, ok)
            rep.results["scan"] = rows
    elif exp == "ad-trivial":
        worst_ad, worst_u = 0.0, 0.0
        for _ in range(args.samples):
            g = GaugeUnitary.random(t, rng, tol)
            worst_ad = max(worst_ad, float(np.linalg.norm(g.ad.mat - np.eye(t.dim))))
            worst_u = max(worst_u, ad_unitarity_residual(g))
        thr = tol.threshold(np.sqrt(t.dim))
        rep.add("ad_unitary", worst_u, thr)
        trivial = worst_ad <= thr
        rep.add("ad_trivial", worst_ad, thr, trivial == (mt.ko_class in (0, 4)))
        rep.results["ad_is_identity"] = trivial


def run_emit(args) -> int:
    from .descriptors import module_to_json, triple_to_json
    from .fixtures import four_point, pA2_modules, two_point
    from .forms import random_form
    from .manifold import lattice_minimal_twist
    from .morita import Connection

    name = args.name
    if name == "two-point":
        doc = triple_to_json(two_point())
    elif name == "four-point":
        doc = triple_to_json(four_point())
    elif name == "lattice-m1":
        doc = triple_to_json(lattice_minimal_twist(1, 9).triple)
    elif name == "lattice-m2":
        doc = triple_to_json(lattice_minimal_twist(2, 3).triple)
    else:  # pA2-module
        t = four_point()
        m = pA2_modules(t, "right")["diag"]
        rng = np.random.default_rng(0)
        pot = [[random_form(t, rng, 1) for _ in range(2)] for _ in range(2)]
        doc = module_to_json(m, Connection.with_potential(t, m, pot), t)
    text = json.dumps(doc, sort_keys=True)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text + "\n")
    return EXIT_OK


VERBS = {"validate": run_validate, "fluctuate": run_fluctuate, "gauge": run_gauge,
         "morita": run_morita, "lattice": run_lattice}
FIXTURES = ("two-point", "four-point", "lattice-m1", "lattice-m2", "pA2-module")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="twistfluct", description=__doc__)
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="verb", required=True)

    def common(sp):
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--out", help="write the report here instead of stdout")
        sp.add_argument("--rel-tol", type=float, default=None)
        sp.add_argument("--abs-tol", type=float, default=None)

    sp = sub.add_parser("validate", help="check every axiom of a triple descriptor")
    sp.add_argument("triple")
    common(sp)
    sp = sub.add_parser("fluctuate", help="assemble D + w_L + eps' J w_R J^-1")
    sp.add_argument("triple")
    sp.add_argument("--form", required=True, help="plain form used as w_R (and w_L by default)")
    sp.add_argument("--form-left", help="plain form used as w_L")
    sp.add_argument("--form2", help="second form for the monoid check")
    common(sp)
    sp = sub.add_parser("gauge", help="gauge identities and self-adjointness certificate")
    sp.add_argument("triple")
    sp.add_argument("--unitary", required=True)
    sp.add_argument("--form", help="plain gauge potential (default 0)")
    common(sp)
    sp = sub.add_parser("morita", help="balanced tensor product and covariant operator")
    sp.add_argument("triple", nargs="?")
    sp.add_argument("--module", required=True)
    sp.add_argument("--samples", type=int, default=5)
    common(sp)
    sp = sub.add_parser("lattice", help="minimal twist of the flat torus")
    sp.add_argument("--m", type=int, choices=(1, 2), required=True)
    sp.add_argument("--L", type=int, required=True)
    sp.add_argument("--experiment", choices=("validate", "prop53", "prop55", "ad-trivial", "convergence"),
                    default="validate")
    sp.add_argument("--constant-phi", action="store_true", help="prop53 with constant theta1 - theta2")
    sp.add_argument("--samples", type=int, default=50)
    common(sp)
    sp = sub.add_parser("emit-fixture", help="write a built-in fixture descriptor")
    sp.add_argument("name", choices=FIXTURES)
    sp.add_argument("--out")
    return p


def _config(args) -> dict:
    d = {k: v for k, v in sorted(vars(args).items()) if k not in ("out",)}
    return d


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if e.code is not None else EXIT_INPUT
    if args.verb == "emit-fixture":
        return run_emit(args)
    if args.verb == "lattice" and (args.L < 3 or args.L % 2 == 0):
        print("error: --L must be an odd integer >= 3", file=sys.stderr)
        return EXIT_INPUT
    t0 = time.perf_counter()
    try:
        tol = _tol(args)
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    rep = Report(args.verb, _config(args), args.seed)
    rep.config["tolerance"] = {"rel_tol": tol.rel_tol, "abs_tol": tol.abs_tol}
    try:
        VERBS[args.verb](args, rep, tol)
    except (SchemaError, FileNotFoundError, NotInvariantError, IrregularTwistError,
            NoSuchConjugationError, UnsupportedDimensionError) as e:
        print(f"input error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except (InconsistentCertificate, NotWellDefinedError, RankDeficiencyError, TwistFluctError) as e:
        rep.add(type(e).__name__, None, None, False, "library identity check")
        rep.results["error"] = str(e)
    doc = rep.to_json((time.perf_counter() - t0) * 1e3)
    text = json.dumps(doc, sort_keys=True, indent=2)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
        npass = sum(c["pass"] for c in rep.checks)
        print(f"{args.verb}: {npass}/{len(rep.checks)} checks passed -> {args.out}", file=sys.stderr)
    else:
        sys.stdout.write(text + "\n")
    return EXIT_OK if rep.passed else EXIT_CHECK


if __name__ == "__main__":
    sys.exit(main())
