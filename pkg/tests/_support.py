"""Shared builders for the test suite."""

import numpy as np

from twistfluct.fixtures import four_point, pA2_modules, two_point
from twistfluct.morita import HermitianModule

ACCEPTANCE_LINES: list[str] = []


def random_projection(rng: np.random.Generator, N: int) -> np.ndarray:
    k = int(rng.integers(1, N + 1))
    X = rng.standard_normal((N, k)) + 1j * rng.standard_normal((N, k))
    Q, _ = np.linalg.qr(X)
    return Q @ Q.conj().T


def random_module_case(seed: int):
    """Random (p, H): four-point triple of random size and twist, random projection p in M_N(C^2)."""
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 4))
    twisted = bool(rng.random() < 0.5)
    t = four_point(n=n, twisted=twisted, seed=seed)
    side = "right" if rng.random() < 0.5 else "left"
    N = int(rng.integers(1, 3))
    P1 = random_projection(rng, N)
    P2 = P1 if twisted else random_projection(rng, N)
    A = t.algebra
    p = [[A.element([[[P1[i, j]]], [[P2[i, j]]]]) for j in range(N)] for i in range(N)]
    return t, HermitianModule.build(A, side, p, t.rho)


def builtin_module_cases():
    """Every built-in module fixture on both sides over the two- and four-point triples."""
    out = []
    for t in (two_point(), four_point(), four_point(twisted=False)):
        for side in ("right", "left"):
            for name, m in pA2_modules(t, side).items():
                out.append((f"{t.name}/{side}/{name}", t, m))
    return out
