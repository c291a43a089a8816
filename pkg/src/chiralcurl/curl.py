"""Sparse assembly of the discretized single-curl operator.

The three one-direction factors C1, C2, C3 are n x n with a uniform
-1/delta_ell diagonal and exactly one off-diagonal entry per row and per
column; the quasi-periodic face couplings carry unimodular Bloch phases
and the lattice shift permutations J_{1,l} and J2.  The full single-curl
block operator C is 3n x 3n with the usual cross-product layout.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .lattice import LatticeSpec

__all__ = ["CurlBlocks", "assemble_shift_blocks", "assemble_curl", "skew_parts",
           "export_matrix_market"]


def _phase(x: float) -> complex:
    """exp(i*2*pi*x) in double precision, no unwrapping."""
    return complex(np.exp(2j * np.pi * x))


def _k_block(m: int, x: sp.spmatrix | complex) -> sp.csr_matrix:
    """Block companion shift: identity blocks on the superdiagonal, x at (m, 1)."""
    if np.isscalar(x):
        x = sp.csr_matrix(np.array([[x]], dtype=complex))
    nb = x.shape[0]
    rows = []
    for r in range(m):
        row = [None] * m
        if r < m - 1:
            row[r + 1] = sp.identity(nb, dtype=complex, format="csr")
        else:
            row[0] = x.tocsr()
        rows.append(row)
    if m == 1:
        # degenerate single-block case: the corner and the diagonal coincide
        return x.tocsr()
    return sp.bmat(rows, format="csr", dtype=complex)


def _j1_block(spec: LatticeSpec, which: int) -> sp.csr_matrix:
    """The n1 x n1 phase-weighted cyclic shift J_{1,which}, which in {1,2,3}."""
    n1 = spec.n1
    m = {1: spec.m11, 2: spec.m12, 3: spec.m13}[which]
    rho = {1: spec.rho11, 2: spec.rho12, 3: spec.rho13}[which]
    if not 0 <= m <= n1:
        raise ValueError("shift count out of range")
    ka1 = spec.k_dot_a[0]
    pref = _phase(rho * ka1)
    wrap = _phase(-ka1)
    cols = np.arange(1, n1 + 1)
    rows = (cols + m - 1) % n1 + 1
    vals = np.where(cols > n1 - m, pref * wrap, pref).astype(complex)
    return sp.csr_matrix((vals, (rows - 1, cols - 1)), shape=(n1, n1))


def assemble_shift_blocks(
    spec: LatticeSpec,
) -> tuple[sp.csr_matrix, sp.csr_matrix, sp.csr_matrix, sp.csr_matrix]:
    """Return (J_{1,1}, J_{1,2}, J_{1,3}, J2); all unitary.

    J2 is the n1*n2 block shift with split at m2: the non-wrapped block
    rows carry J_{1,2}, the wrapped ones carry J_{1,3} with the extra
    conjugate Bloch phase of the a2 translation.
    """
    j11 = _j1_block(spec, 1)
    j12 = _j1_block(spec, 2)
    j13 = _j1_block(spec, 3)
    n2, m2 = spec.n2, spec.m2
    ka2 = spec.k_dot_a[1]
    pref = _phase(spec.rho2 * ka2)
    tr = sp.kron(sp.identity(m2, format="csr"), _phase(-ka2) * j13, format="csr")
    bl = sp.kron(sp.identity(n2 - m2, format="csr"), j12, format="csr")
    if m2 == 0:
        j2 = pref * bl
    elif m2 == n2:
        j2 = pref * tr
    else:
        j2 = pref * sp.bmat([[None, tr], [bl, None]], format="csr")
    return j11, j12, j13, j2.tocsr()


@dataclass(frozen=True)
class CurlBlocks:
    """One-direction factors, the block single-curl, and skew parts."""

    spec: LatticeSpec
    C1: sp.csr_matrix
    C2: sp.csr_matrix
    C3: sp.csr_matrix

    @property
    def C(self) -> sp.csr_matrix:
        z = None
        return sp.bmat(
            [
                [z, -self.C3, self.C2],
                [self.C3, z, -self.C1],
                [-self.C2, self.C1, z],
            ],
            format="csr",
        )

    @property
    def M_blocks(self) -> tuple[sp.csr_matrix, sp.csr_matrix, sp.csr_matrix]:
        return tuple((Cl - Cl.conj().T).tocsr() for Cl in (self.C1, self.C2, self.C3))

    @property
    def M(self) -> sp.csr_matrix:
        return sp.vstack(self.M_blocks, format="csr")


def assemble_curl(spec: LatticeSpec) -> CurlBlocks:
    """Assemble C1, C2, C3 from the shift blocks.

    C1 = (1/d1) [-I + I (x) I (x) K_{n1}(phi1)],
    C2 = (1/d2) [-I + I (x) K_{n2}(phi2 J1)],
    C3 = (1/d3) [-I + K_{n3}(phi3 J2)],
    with phi_ell the Bloch phase of the a_ell translation and J1 = J_{1,1}.
    """
    n1, n2, n3 = spec.dims
    d1, d2, d3 = spec.deltas
    ka = spec.k_dot_a
    j11, _, _, j2 = assemble_shift_blocks(spec)
    eye_n = sp.identity(spec.n, dtype=complex, format="csr")

    k1 = _k_block(n1, _phase(ka[0]))
    c1 = (sp.kron(sp.identity(n3 * n2, format="csr"), k1, format="csr") - eye_n) / d1

    k2 = _k_block(n2, (_phase(ka[1]) * j11).tocsr())
    c2 = (sp.kron(sp.identity(n3, format="csr"), k2, format="csr") - eye_n) / d2

    k3 = _k_block(n3, (_phase(ka[2]) * j2).tocsr())
    c3 = (k3 - eye_n) / d3

    c1.sort_indices()
    c2.sort_indices()
    c3.sort_indices()
    return CurlBlocks(spec, c1.tocsr(), c2.tocsr(), c3.tocsr())


def skew_parts(
    blocks: CurlBlocks,
) -> tuple[sp.csr_matrix, sp.csr_matrix, sp.csr_matrix, sp.csr_matrix]:
    """Skew-Hermitian parts M_ell = C_ell - C_ell^H and the stack M."""
    m1, m2, m3 = blocks.M_blocks
    return m1, m2, m3, sp.vstack([m1, m2, m3], format="csr")


def export_matrix_market(blocks: CurlBlocks, path: str) -> None:
    """Write the full single-curl operator in coordinate format."""
    from scipy.io import mmwrite

    mmwrite(path, blocks.C.tocoo())
