import numpy as np
import pytest

from chiralcurl.curl import assemble_curl, assemble_shift_blocks, export_matrix_market
from chiralcurl.lattice import lattice_from_shifts, simple_cubic
from chiralcurl.spectral import dense_T, lambda_diagonals
from conftest import SHIFT_MATRIX, shift_spec


def test_shift_blocks_no_split_is_identity_phase():
    # with zero split and zero flag the shift permutation degenerates to I
    spec = simple_cubic((5, 4, 3), k=(0.1, 0.2, 0.08))
    j11, j12, j13, j2 = assemble_shift_blocks(spec)
    for J in (j11, j12, j13):
        assert np.allclose(J.toarray(), np.eye(spec.n1))
    # C2 then has the plain block-cyclic-shift pattern of K_{n2}(1)
    blocks = assemble_curl(spec)
    n1, n2 = spec.n1, spec.n2
    C2 = blocks.C2.toarray()[: n1 * n2, : n1 * n2]
    off = C2 - np.diag(np.diag(C2))
    for b in range(n2 - 1):
        sub = off[b * n1 : (b + 1) * n1, (b + 1) * n1 : (b + 2) * n1]
        assert np.allclose(sub, np.eye(n1) / spec.delta2)


def test_shift_blocks_zero_k_are_permutations():
    spec = lattice_from_shifts((4, 4, 4), k=(0, 0, 0), rho2=1, m2=2,
                               m11=2, m12=4, m13=2, rho12=1, rho13=1)
    for J in assemble_shift_blocks(spec):
        A = J.toarray()
        assert np.allclose(np.abs(A[A != 0]), 1.0)
        assert np.allclose(A.imag, 0.0)
        assert np.allclose(A @ A.conj().T, np.eye(A.shape[0]))


@pytest.mark.parametrize("i", [1, 4, 5, 7])
def test_shift_blocks_unitary(i):
    spec = shift_spec(i, n=(5, 4, 3), k=(0.11, 0.21, -0.17))
    for J in assemble_shift_blocks(spec):
        JJ = (J.conj().T @ J).toarray()
        assert np.allclose(JJ, np.eye(J.shape[0]), atol=1e-13)


def test_curl_hand_enumerated_2cube():
    # n_ell = 2, k = 0: C1 = (1/d1) [-I + I (x) I (x) K_2(1)], written out
    spec = simple_cubic((2, 2, 2), k=(0, 0, 0))
    d = spec.delta1
    blocks = assemble_curl(spec)
    k2 = np.array([[0.0, 1.0], [1.0, 0.0]])
    expect = (np.kron(np.eye(4), k2) - np.eye(8)) / d
    assert np.allclose(blocks.C1.toarray(), expect)
    assert np.allclose(np.diag(blocks.C2.toarray()), -1.0 / spec.delta2)


def test_gradient_fields_in_nullspace(cubic4, blocks4, basis4):
    rng = np.random.default_rng(1)
    y = rng.standard_normal(cubic4.n) + 1j * rng.standard_normal(cubic4.n)
    e = basis4.Q0 @ y  # discrete gradient field
    resid = np.linalg.norm(blocks4.C @ e) / np.linalg.norm(e)
    assert resid < 1e-12


def test_delta_scaling_doubles_norm():
    a = simple_cubic((2, 2, 2), k=(0.1, 0.1, 0.1))
    b = simple_cubic((4, 4, 4), k=(0.1, 0.1, 0.1))
    na = np.abs(assemble_curl(a).C1.diagonal()).max()
    nb = np.abs(assemble_curl(b).C1.diagonal()).max()
    assert np.isclose(nb, 2 * na)


@pytest.mark.parametrize("i", range(len(SHIFT_MATRIX)))
def test_single_offdiagonal_structure(i):
    spec = shift_spec(i, n=(4, 3, 5), k=(0.11, 0.07, 0.2))
    blocks = assemble_curl(spec)
    for Cl, d in zip((blocks.C1, blocks.C2, blocks.C3), spec.deltas):
        A = Cl.toarray()
        assert np.allclose(np.diag(A), -1.0 / d)
        off = A - np.diag(np.diag(A))
        assert (np.count_nonzero(off, axis=0) == 1).all()
        assert (np.count_nonzero(off, axis=1) == 1).all()
        assert np.allclose(np.abs(off[off != 0]), 1.0 / d)


@pytest.mark.parametrize("i", [0, 2, 4, 5, 7, 9])
def test_lambda_consistency(i):
    spec = shift_spec(i, n=(4, 3, 5), k=(0.11, 0.07, 0.2))
    blocks = assemble_curl(spec)
    T = dense_T(spec)
    lams = lambda_diagonals(spec)
    worst = max(
        np.linalg.norm(T.conj().T @ (Cl.toarray() @ T) - np.diag(lam), "fro")
        for Cl, lam in zip((blocks.C1, blocks.C2, blocks.C3), lams)
    )
    scale = max(
        np.linalg.norm(Cl.toarray(), "fro")
        for Cl in (blocks.C1, blocks.C2, blocks.C3)
    )
    assert worst <= 1e-12 * scale


@pytest.mark.parametrize("i", [0, 4])
def test_reflection_identity(i):
    # C_ell = -C_ell^H (I + delta_ell C_ell), inherited from the diagonals
    spec = shift_spec(i, n=(4, 4, 4))
    blocks = assemble_curl(spec)
    for Cl, d in zip((blocks.C1, blocks.C2, blocks.C3), spec.deltas):
        A = Cl.toarray()
        assert np.allclose(A, -A.conj().T @ (np.eye(spec.n) + d * A), atol=1e-12)


def test_skew_parts(cubic4, blocks4):
    m1, m2, m3 = blocks4.M_blocks
    for M in (m1, m2, m3):
        A = M.toarray()
        assert np.allclose(A, -A.conj().T)
    # simultaneous diagonalizability forces commuting skew parts
    assert np.allclose((m1 @ m2 - m2 @ m1).toarray(), 0.0, atol=1e-12)
    # every column nonzero when n_ell > 2
    for M in (m1, m2, m3):
        A = np.abs(M.toarray())
        assert (A.sum(axis=0) > 1e-12).all()


def test_skew_zero_diag_real_case():
    spec = simple_cubic((2, 2, 2), k=(0, 0, 0))
    for M in assemble_curl(spec).M_blocks:
        assert np.allclose(M.diagonal(), 0.0)


def test_matrix_market_export(tmp_path, cubic3, blocks3):
    path = tmp_path / "curl.mtx"
    export_matrix_market(blocks3, str(path))
    import scipy.io

    back = scipy.io.mmread(str(path))
    assert np.allclose(back.toarray(), blocks3.C.toarray())
