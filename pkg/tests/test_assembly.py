import numpy as np
import pytest
import scipy.sparse as sp

from oracles import (
    GOLDEN_BLENDED_MASS_H1,
    GOLDEN_CONSISTENT_MASS_H1,
    GOLDEN_STIFFNESS_H1_KX,
    GOLDEN_STIFFNESS_H1_KX_DECIMAL,
    STANDARD_LAPLACIAN_Q1,
    monolithic,
)
from phcgap.assembly import (
    assemble,
    assemble_family,
    element_matrices,
    evaluate,
    write_triplets,
)
from phcgap.lattice import DielectricDesign, build_grid, build_symmetry_map


def _setup(n):
    g = build_grid(n)
    return g, build_symmetry_map(g)


def test_golden_is_self_consistent():
    assert np.allclose(GOLDEN_STIFFNESS_H1_KX, GOLDEN_STIFFNESS_H1_KX_DECIMAL, rtol=0, atol=1e-15)


def test_element_golden_h1():
    ke, me = element_matrices(1.0, (np.pi / 2, 0.0), mass_rule="consistent")
    assert np.allclose(ke, GOLDEN_STIFFNESS_H1_KX, rtol=0, atol=1e-14)
    assert np.allclose(me, GOLDEN_CONSISTENT_MASS_H1, rtol=0, atol=1e-15)
    _, mb = element_matrices(1.0, (np.pi / 2, 0.0))
    assert np.allclose(mb, GOLDEN_BLENDED_MASS_H1, rtol=0, atol=1e-15)


@pytest.mark.parametrize("h", [1.0, 0.125, 0.3])
def test_element_at_gamma_is_laplacian(h):
    ke, _ = element_matrices(h, (0.0, 0.0))
    assert np.allclose(ke, STANDARD_LAPLACIAN_Q1, atol=1e-14)
    assert np.all(ke.imag == 0)
    assert np.allclose(ke.sum(axis=1), 0, atol=1e-14)


@pytest.mark.parametrize("rule", ["blended", "consistent"])
def test_element_mass_area_and_hermitian(rule, rng):
    for _ in range(5):
        h = rng.uniform(0.05, 2)
        k = rng.uniform(-np.pi, np.pi, 2)
        ke, me = element_matrices(h, k, mass_rule=rule)
        assert me.sum() == pytest.approx(h * h, rel=1e-14)
        assert np.array_equal(ke, ke.conj().T)
        assert np.array_equal(me, me.T)
        assert np.linalg.eigvalsh(ke).min() > -1e-14


@pytest.mark.parametrize("bad", [0.0, -1.0])
def test_element_rejects_degenerate(bad):
    with pytest.raises(ValueError):
        element_matrices(bad, (0.0, 0.0))


def test_family_shapes_and_terms():
    g, sym = _setup(8)
    fam = assemble_family(g, sym, (0.3, 0.1), "TE")
    assert fam.dof_count == 64
    assert fam.n_terms == sym.n_eps
    total = sum(fam.terms())
    plain = assemble(g, fam.elem_stiffness)
    assert abs(total - plain).max() < 1e-14


def test_te_unit_design_equals_plain_assembly():
    g, sym = _setup(8)
    k = (np.pi / 2, np.pi / 4)
    fam = assemble_family(g, sym, k, "TE")
    A, M = evaluate(fam, np.ones(sym.n_eps))
    A_ref, M_ref = monolithic(8, k, np.ones(64), np.ones(64))
    assert np.abs(A.toarray() - A_ref).max() < 1e-14
    assert np.abs(M.toarray() - M_ref).max() < 1e-14


def test_tm_mass_terms_sum_to_plain_mass():
    g, sym = _setup(8)
    fam = assemble_family(g, sym, (0.2, 0.0), "TM")
    total = sum(fam.terms())
    _, M_ref = monolithic(8, (0.2, 0.0), np.ones(64), np.ones(64))
    assert np.abs(total.toarray() - M_ref).max() < 1e-14


@pytest.mark.parametrize("pol", ["TE", "TM"])
def test_random_design_matches_monolithic_n4(pol, rng):
    g, sym = _setup(4)
    k = (np.pi / 2, 0.0)
    fam = assemble_family(g, sym, k, pol)
    eps = rng.uniform(1, 11.4, sym.n_eps)
    A, M = evaluate(fam, DielectricDesign(eps, sym))
    cell_eps = eps[sym.orbit_of_cell]
    if pol == "TE":
        A_ref, M_ref = monolithic(4, k, 1 / cell_eps, np.ones(16))
    else:
        A_ref, M_ref = monolithic(4, k, np.ones(16), cell_eps)
    assert np.linalg.norm(A.toarray() - A_ref) <= 1e-12 * np.linalg.norm(A_ref)
    assert np.linalg.norm(M.toarray() - M_ref) <= 1e-12 * np.linalg.norm(M_ref)


def test_constant_design_linearity():
    g, sym = _setup(8)
    c = 3.7
    tm = assemble_family(g, sym, (0.4, 0.2), "TM")
    _, M1 = evaluate(tm, np.ones(sym.n_eps))
    _, Mc = evaluate(tm, np.full(sym.n_eps, c))
    assert abs(Mc - c * M1).max() < 1e-14
    te = assemble_family(g, sym, (0.4, 0.2), "TE")
    A1, _ = evaluate(te, np.ones(sym.n_eps))
    Ac, _ = evaluate(te, np.full(sym.n_eps, c))
    assert abs(Ac - A1 / c).max() < 1e-14


@pytest.mark.parametrize("pol", ["TE", "TM"])
def test_hermitian_and_definite_for_random_designs(pol, rng):
    g, sym = _setup(8)
    fam = assemble_family(g, sym, rng.uniform(-np.pi / 2, np.pi / 2, 2), pol)
    for _ in range(10):
        A, M = evaluate(fam, DielectricDesign(rng.uniform(1, 11.4, sym.n_eps), sym))
        Ad, Md = A.toarray(), M.toarray()
        assert np.linalg.norm(Ad - Ad.conj().T) == 0
        assert np.linalg.norm(Md - Md.conj().T) == 0
        assert np.linalg.eigvalsh(Md).min() > 0
        assert np.linalg.eigvalsh(Ad).min() > -1e-12


def test_gamma_is_real_and_conjugation_symmetry():
    g, sym = _setup(8)
    f0 = assemble_family(g, sym, (0.0, 0.0), "TM")
    assert np.all(f0.fixed.toarray().imag == 0)
    k = np.array([0.7, -0.3])
    fp = assemble_family(g, sym, k, "TM")
    fm = assemble_family(g, sym, -k, "TM")
    assert np.array_equal(fm.fixed.toarray(), fp.fixed.toarray().conj())


def test_bad_inputs():
    g, sym = _setup(4)
    with pytest.raises(ValueError):
        assemble_family(g, sym, (0, 0), "TX")
    fam = assemble_family(g, sym, (0, 0), "te")
    assert fam.polarization == "TE"
    with pytest.raises(ValueError):
        evaluate(fam, np.ones(sym.n_eps + 1))
    with pytest.raises(ValueError):
        evaluate(fam, -np.ones(sym.n_eps))
    with pytest.raises(ValueError):
        fam.combine(np.ones(2))


def test_project_matches_dense(rng):
    g, sym = _setup(6)
    fam = assemble_family(g, sym, (0.5, 0.25), "TE")
    phi = rng.normal(size=(36, 3)) + 1j * rng.normal(size=(36, 3))
    blocks, fixed = fam.project(phi)
    for i in range(fam.n_terms):
        ref = phi.conj().T @ fam.term(i).toarray() @ phi
        assert np.allclose(blocks[i], ref, atol=1e-12)
    assert np.allclose(fixed, phi.conj().T @ fam.fixed.toarray() @ phi, atol=1e-12)


def test_triplet_dump_roundtrip(tmp_path):
    g, sym = _setup(4)
    fam = assemble_family(g, sym, (0.3, 0.6), "TM")
    write_triplets(fam.fixed, tmp_path / "a.txt")
    rows = np.loadtxt(tmp_path / "a.txt")
    back = sp.coo_matrix((rows[:, 2] + 1j * rows[:, 3], (rows[:, 0].astype(int), rows[:, 1].astype(int))), shape=(16, 16))
    assert abs(back - fam.fixed).max() == 0
