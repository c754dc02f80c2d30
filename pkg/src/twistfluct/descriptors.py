"""JSON descriptors for triples, elements, forms, unitaries and modules."""

from __future__ import annotations

import json
from functools import lru_cache
from importlib import resources

import jsonschema
import numpy as np
from referencing import Registry, Resource

from .algebra import AlgebraElement, Automorphism, Representation, StarAlgebra
from .errors import SchemaError
from .forms import TwistedOneForm, form_from_generators
from .morita import Connection, HermitianModule
from .opcore import AntilinearOp, LinearOp, from_json_matrix, to_json_matrix
from .triple import KOSignature, RealTwistedTriple

SCHEMAS = ("defs", "triple", "form", "unitary", "module")


@lru_cache(maxsize=None)
def _schema_texts() -> dict:
    root = resources.files("twistfluct").joinpath("schemas")
    return {n: json.loads(root.joinpath(f"{n}.schema.json").read_text()) for n in SCHEMAS}


@lru_cache(maxsize=None)
def _registry() -> Registry:
    texts = _schema_texts()
    return Registry().with_resources(
        (f"twistfluct/{n}.schema.json", Resource.from_contents(s)) for n, s in texts.items())


def check_schema(doc, kind: str, pointer: str = ""):
    """Validate ``doc`` against a shipped schema; SchemaError carries a JSON pointer."""
    schema = _schema_texts()[kind]
    v = jsonschema.Draft202012Validator(schema, registry=_registry())
    errors = sorted(v.iter_errors(doc), key=lambda e: (len(e.absolute_path), list(map(str, e.absolute_path))))
    if errors:
        e = errors[0]
        path = "".join(f"/{p}" for p in e.absolute_path)
        raise SchemaError(e.message[:300], pointer + path)


def _square(obj, pointer: str, n: int | None = None) -> np.ndarray:
    M = from_json_matrix(obj, pointer)
    if M.shape[0] != M.shape[1]:
        raise SchemaError(f"matrix is {M.shape[0]}x{M.shape[1]}, expected square", pointer)
    if n is not None and M.shape[0] != n:
        raise SchemaError(f"matrix has size {M.shape[0]}, expected {n}", pointer)
    return M


# ---------------------------------------------------------------------------
# triples


def triple_to_json(t: RealTwistedTriple) -> dict:
    alg = {"blocks": list(t.algebra.blocks), "rep": t.rep.to_json(), "auto": t.rho.to_json()}
    return {
        "name": t.name,
        "algebra": alg,
        "D": to_json_matrix(t.D.mat),
        "J": to_json_matrix(t.J.U),
        "Gamma": None if t.grading is None else to_json_matrix(t.grading.mat),
        "signs": t.signs.to_json(),
    }


def triple_from_json(doc) -> RealTwistedTriple:
    check_schema(doc, "triple")
    a = doc["algebra"]
    A = StarAlgebra(tuple(a["blocks"]))
    r = a["rep"]
    if len(r["multiplicity"]) != len(A.blocks):
        raise SchemaError("one multiplicity per block is required", "/algebra/rep/multiplicity")
    n = sum(b * m for b, m in zip(A.blocks, r["multiplicity"]))
    basis = None
    if "basis_perm" in r:
        basis = np.asarray(r["basis_perm"], dtype=int)
        if sorted(basis.tolist()) != list(range(n)):
            raise SchemaError("basis_perm is not a permutation of the Hilbert indices", "/algebra/rep/basis_perm")
    elif "basis" in r:
        basis = _square(r["basis"], "/algebra/rep/basis", n)
    try:
        rep = Representation(A, r["multiplicity"], basis)
    except ValueError as e:
        raise SchemaError(str(e), "/algebra/rep") from None
    auto = a.get("auto", {"perm": list(range(len(A.blocks)))})
    ws = None
    if "unitaries" in auto:
        ws = [_square(w, f"/algebra/auto/unitaries/{i}", nb)
              for i, (w, nb) in enumerate(zip(auto["unitaries"], A.blocks))]
        if len(ws) != len(A.blocks):
            raise SchemaError("one unitary per block is required", "/algebra/auto/unitaries")
    try:
        rho = Automorphism(A, auto["perm"], ws)
    except ValueError as e:
        raise SchemaError(str(e), "/algebra/auto") from None
    D = _square(doc["D"], "/D", n)
    J = _square(doc["J"], "/J", n)
    G = doc.get("Gamma")
    G = None if G is None else LinearOp(_square(G, "/Gamma", n))
    if "signs" in doc:
        s = doc["signs"]
        signs = KOSignature(s["eps"], s["eps_prime"], s["eps_second"], s.get("dim_mod8"))
    else:
        try:
            signs = KOSignature.preset(doc["ko_preset"])
        except KeyError as e:
            raise SchemaError(str(e), "/ko_preset") from None
    return RealTwistedTriple(A, rep, LinearOp(D), AntilinearOp(J), G, rho, signs, doc.get("name", "triple"))


# ---------------------------------------------------------------------------
# elements, forms, unitaries, modules


def element_to_json(a: AlgebraElement) -> dict:
    return {"parts": [to_json_matrix(p) for p in a.parts]}


def element_from_json(obj, A: StarAlgebra, pointer: str = "") -> AlgebraElement:
    parts = obj["parts"]
    if len(parts) != len(A.blocks):
        raise SchemaError(f"{len(parts)} parts for {len(A.blocks)} blocks", pointer + "/parts")
    return A.element([_square(p, f"{pointer}/parts/{i}", n) for i, (p, n) in enumerate(zip(parts, A.blocks))])


def form_to_json(w: TwistedOneForm) -> dict:
    return {"side": w.side, "pairs": [[element_to_json(a), element_to_json(b)] for a, b in w.generators]}


def form_from_json(obj, t: RealTwistedTriple, pointer: str = "", validate: bool = True) -> TwistedOneForm:
    if validate:
        check_schema(obj, "form", pointer)
    pairs = [(element_from_json(a, t.algebra, f"{pointer}/pairs/{i}/0"),
              element_from_json(b, t.algebra, f"{pointer}/pairs/{i}/1"))
             for i, (a, b) in enumerate(obj["pairs"])]
    return form_from_generators(t, pairs, obj["side"])


def unitary_from_json(obj, t: RealTwistedTriple) -> AlgebraElement:
    check_schema(obj, "unitary")
    A = t.algebra
    if "theta" in obj:
        th = np.asarray(obj["theta"], dtype=float)
        if any(n != 1 for n in A.blocks):
            raise SchemaError("theta descriptors need an algebra of 1x1 blocks", "/theta")
        if th.size != len(A.blocks):
            raise SchemaError(f"theta has {th.size} entries for {len(A.blocks)} blocks", "/theta")
        return A.element([np.array([[np.exp(1j * x)]]) for x in th])
    return element_from_json(obj, A)


def module_to_json(m: HermitianModule, c: Connection | None = None, t: RealTwistedTriple | None = None) -> dict:
    d = {"side": m.side, "N": m.N, "p": [[element_to_json(x) for x in row] for row in m.p]}
    if c is not None:
        d["connection"] = {"potential": [[form_to_json(w) for w in row] for row in c.potential]}
    if t is not None:
        d["triple"] = triple_to_json(t)
    return d


def module_from_json(obj, t: RealTwistedTriple | None = None):
    """Returns (triple, module, connection)."""
    check_schema(obj, "module")
    if t is None:
        if "triple" not in obj:
            raise SchemaError("no triple given and none embedded in the module descriptor", "/triple")
        try:
            t = triple_from_json(obj["triple"])
        except SchemaError as e:
            raise SchemaError(str(e).split(": ", 1)[-1], "/triple" + e.pointer.rstrip("/")) from None
    N = obj["N"]
    if len(obj["p"]) != N or any(len(r) != N for r in obj["p"]):
        raise SchemaError(f"p must be {N}x{N}", "/p")
    p = [[element_from_json(x, t.algebra, f"/p/{i}/{j}") for j, x in enumerate(row)]
         for i, row in enumerate(obj["p"])]
    try:
        m = HermitianModule.build(t.algebra, obj["side"], p, t.rho)
    except ValueError as e:
        raise SchemaError(str(e), "/p") from None
    pot = obj.get("connection", {}).get("potential")
    if pot is None:
        c = Connection.grassmann(t, m)
    else:
        if len(pot) != N or any(len(r) != N for r in pot):
            raise SchemaError(f"potential must be {N}x{N}", "/connection/potential")
        forms = [[form_from_json(w, t, f"/connection/potential/{i}/{j}", validate=False)
                  for j, w in enumerate(row)] for i, row in enumerate(pot)]
        try:
            c = Connection.with_potential(t, m, forms)
        except ValueError as e:
            raise SchemaError(str(e), "/connection/potential") from None
    return t, m, c


def load_json(path: str):
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as e:
        raise SchemaError(f"invalid JSON: {e.msg} (line {e.lineno})", "/") from None
