import numpy as np
import pytest

from twistfluct.errors import InconsistentCertificate, NoSuchConjugationError, UnsupportedDimensionError
from twistfluct.gauge import GaugeUnitary, selfadjointness_certificate
from twistfluct.manifold import (PAULI, charge_conjugation, convergence_experiment, gamma_basis,
                                 gamma_intertwining_residual, lattice_minimal_twist, prop53_experiment,
                                 prop55_fluctuate, selfadjoint_pair_generators, smooth_function)
from twistfluct.opcore import conjugate_by, residual
from twistfluct.triple import KOSignature, validate_triple


@pytest.mark.parametrize("m", [1, 2, 3])
def test_clifford(m):
    c = gamma_basis(m)
    assert len(c.gammas) == 2 * m and c.size == 2 ** m
    assert c.anticommutator_residual() <= 1e-14
    assert residual(c.chirality @ c.chirality, np.eye(c.size)) <= 1e-14
    for g in c.gammas:
        assert residual(g @ c.chirality, -c.chirality @ g) <= 1e-14


def test_clifford_m1_is_pauli():
    c = gamma_basis(1)
    assert np.allclose(c.gammas[0], PAULI[1]) and np.allclose(c.gammas[1], PAULI[2])
    assert np.allclose(c.chirality, PAULI[3])


@pytest.mark.parametrize("m", [1, 2])
def test_charge_conjugation_signs(m):
    s = KOSignature.preset(2 * m)
    C = charge_conjugation(m, s)
    assert residual(C.U @ C.U.conj(), s.eps * np.eye(2 ** m)) <= 1e-14
    with pytest.raises(NoSuchConjugationError):
        charge_conjugation(m, KOSignature.preset((2 * m + 2) % 8))


def test_algebra_branches(lat1, lat2, rng):
    # KO 2: J u J^-1 swaps the two functions (and conjugates); KO 4: J u J^-1 = u*
    for mt in (lat1, lat2):
        t = mt.triple
        theta1 = rng.uniform(0, 2 * np.pi, mt.nsites)
        theta2 = rng.uniform(0, 2 * np.pi, mt.nsites)
        u = mt.unitary(theta1, theta2)
        JuJ = conjugate_by(t.J, t.pi(u))
        if mt.ko_class == 2:
            swapped = mt.unitary(-theta2, -theta1)
            assert residual(JuJ, t.pi(swapped)) <= 1e-12
        else:
            assert residual(JuJ, t.pi(u.star())) <= 1e-12
        assert gamma_intertwining_residual(mt, u) <= 1e-12


def test_dimensions(lat1, lat2):
    assert lat1.triple.dim == 162 and lat2.triple.dim == 324
    assert lat1.triple.signs.dim_mod8 == 2 and lat2.triple.signs.dim_mod8 == 4
    with pytest.raises(UnsupportedDimensionError):
        lattice_minimal_twist(3, 3)
    with pytest.raises(ValueError):
        lattice_minimal_twist(1, 4)


@pytest.mark.parametrize("name", ["lat1", "lat2"])
def test_lattice_validates(name, request):
    t = request.getfixturevalue(name).triple
    rep = validate_triple(t)
    assert rep.passed, {k: rep.axioms[k].residual for k in rep.failures}


def test_frak_u_is_phase(lat1, rng):
    th1, th2 = rng.uniform(0, 6, lat1.nsites), rng.uniform(0, 6, lat1.nsites)
    u = lat1.unitary(th1, th2)
    t = lat1.triple
    frak = t.rho(u).star() @ u
    f, g = lat1.functions(frak)
    assert np.allclose(f, np.exp(1j * (th1 - th2)), atol=1e-15)
    assert np.allclose(g, np.exp(-1j * (th1 - th2)), atol=1e-15)


def test_certificate_m1_branches(lat1, rng):
    x = lat1.geometry.positions()
    for _ in range(5):
        th1 = smooth_function(lat1.geometry, rng)
        cert = prop53_experiment(lat1, th1, th1 - rng.uniform(0, 6))
        assert cert.verdict and cert.variant_a_residual <= 1e-12
        cert = prop53_experiment(lat1, th1, th1 - np.cos(2 * np.pi * x[:, 0]))
        assert not cert.verdict and cert.variant_a_residual > 0.1 * cert.omega_norm


def test_certificate_m2_every_unitary(lat2, rng):
    th1, th2 = smooth_function(lat2.geometry, rng), smooth_function(lat2.geometry, rng)
    cert = prop53_experiment(lat2, th1, th2)
    assert cert.verdict and cert.variant_a_residual <= 1e-8


def test_certificate_strict_flag_on_lattice(lat2, rng):
    g = GaugeUnitary.random(lat2.triple, rng)
    # strict mode raises exactly when the non-strict certificate is flagged inconsistent
    cert = selfadjointness_certificate(lat2.triple, g, strict=False)
    if cert.consistent:
        assert selfadjointness_certificate(lat2.triple, g).consistent
    else:
        with pytest.raises(InconsistentCertificate):
            selfadjointness_certificate(lat2.triple, g)


def test_pair_fluctuation_selfadjoint_construction(lat2, rng):
    f, fp = smooth_function(lat2.geometry, rng), smooth_function(lat2.geometry, rng)
    a, ap = selfadjoint_pair_generators(lat2, f, fp)
    r = prop55_fluctuate(lat2, a, ap)
    assert r.selfadjoint
    assert r.decomposition_residual <= 1e-10 * max(1.0, np.linalg.norm(lat2.triple.D.mat))
    assert r.reconstruction_residual <= r.threshold and r.extraction_residual <= r.threshold


def test_pair_fluctuation_units(lat1, lat2):
    for mt in (lat1, lat2):
        one = mt.triple.algebra.unit()
        r = prop55_fluctuate(mt, one, one)
        assert r.max_block == 0 and residual(r.D_prime, mt.triple.D) == 0


def test_pair_fluctuation_unitary_blocks(lat2, rng):
    th = smooth_function(lat2.geometry, rng)
    u = lat2.unitary(th, th)
    r = prop55_fluctuate(lat2, u, u.star())
    assert r.zero_blocks, r.max_block


def test_pair_fluctuation_unitary_blocks_shrink(rng):
    # the discrete-derivative blocks of the unitary pair shrink under refinement (m = 1)
    sizes = []
    for L in (9, 15, 21):
        mt = lattice_minimal_twist(1, L)
        x = mt.geometry.positions()
        th = np.sin(2 * np.pi * x[:, 0]) + np.cos(2 * np.pi * x[:, 1])
        u = mt.unitary(th, th)
        r = prop55_fluctuate(mt, u, u.star())
        sizes.append(r.max_block / np.sqrt(mt.nsites))
    assert sizes[0] > sizes[1] > sizes[2]


def test_pair_fluctuation_m1_scan(lat1, rng):
    A = lat1.triple.algebra
    for _ in range(10):
        r = prop55_fluctuate(lat1, A.random_element(rng), A.random_element(rng))
        assert (not r.selfadjoint) or r.zero_blocks


def test_convergence_order():
    out = convergence_experiment((9, 17, 33), 1, seed=0)
    assert abs(out["order"] - 2.0) <= 0.3
    assert out["rms_error"][0] > out["rms_error"][1] > out["rms_error"][2]
