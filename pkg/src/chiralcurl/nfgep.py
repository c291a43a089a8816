"""Null-space-free reduction of the pencil to 4n x 4n.

Away from gamma_star the 2n trivial zero eigenvalues of the full pencil
can be deflated exactly: restricting to the range factors P_r, Q_r of the
curl SVD gives a Hermitian pair (A_r, B_r) with B_r = i [[0, S^-1],
[-S^-1, 0]] nonsingular, whose spectrum is the nontrivial spectrum of the
full pencil.  A_r is positive definite below gamma_star, which also
yields the drift direction of the real eigenvalues through the
derivative quadratic form d(gamma).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .lattice import LatticeSpec, MaterialMask
from .pencil import _triple, inside_projector_diag, phi_diagonal
from .spectral import SpectralBasis, spectral_basis

__all__ = [
    "NfgepAssembly",
    "assemble_nfgep",
    "recover_fields",
    "derivative_indicator",
    "solve_nfgep",
]

_GAMMA_STAR_TOL = 1e-13


@dataclass(frozen=True)
class NfgepAssembly:
    """Reduced Hermitian pair (A_r, B_r) with its recovery data."""

    spec: LatticeSpec
    mask: MaterialMask
    gamma: float
    basis: SpectralBasis = field(repr=False)
    A_r: np.ndarray = field(repr=False)
    B_r: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return self.spec.n

    @property
    def phi_diag(self) -> np.ndarray:
        return phi_diagonal(self.mask, self.gamma)


def _check_gamma(mask: MaterialMask, gamma: float) -> None:
    if abs(gamma - mask.gamma_star) < _GAMMA_STAR_TOL * max(1.0, mask.gamma_star):
        raise ValueError(
            "the null-space-free reduction is undefined at the critical "
            "chirality sqrt(eps_i)"
        )


def assemble_nfgep(
    spec: LatticeSpec,
    mask: MaterialMask,
    gamma: float,
    basis: SpectralBasis | None = None,
) -> NfgepAssembly:
    """Assemble (A_r, B_r) at gamma != gamma_star.

    A_r = diag(P_r, Q_r)^H [[g^2 Pi/phi + I, -i g Pi/phi],
                            [ i g Pi/phi,       1/phi    ]] diag(P_r, Q_r)
    written with the diagonal weights; B_r couples the two halves through
    the inverse singular values.
    """
    _check_gamma(mask, gamma)
    if basis is None:
        basis = spectral_basis(spec)
    n = spec.n
    phi = phi_diagonal(mask, gamma)
    phi_inv = 1.0 / phi
    ind3 = _triple(inside_projector_diag(mask))

    Pr, Qr = basis.P_r, basis.Q_r
    # top-left: P_r^H (I + g^2 Pi phi^-1) P_r  (Pi and phi commute)
    w_tl = 1.0 + gamma**2 * ind3 * phi_inv
    tl = Pr.conj().T @ (w_tl[:, None] * Pr)
    # off-diagonal: -i g P_r^H Pi phi^-1 Q_r
    w_off = gamma * ind3 * phi_inv
    tr = -1j * (Pr.conj().T @ (w_off[:, None] * Qr))
    # bottom-right: Q_r^H phi^-1 Q_r
    br = Qr.conj().T @ (phi_inv[:, None] * Qr)

    A_r = np.block([[tl, tr], [tr.conj().T, br]])
    s_inv = 1.0 / basis.sigma
    B_r = np.zeros((4 * n, 4 * n), dtype=complex)
    B_r[: 2 * n, 2 * n :] = 1j * np.diag(s_inv)
    B_r[2 * n :, : 2 * n] = -1j * np.diag(s_inv)
    return NfgepAssembly(spec, mask, gamma, basis, A_r, B_r)


def recover_fields(
    y_r: np.ndarray, assembly: NfgepAssembly
) -> tuple[np.ndarray, np.ndarray]:
    """Map a reduced vector back to the physical fields (h, e).

    The 2x2 block matrix inverted here is diagonal per node, with Schur
    complement phi, so the inverse is closed-form; gamma != gamma_star
    keeps it nonsingular.
    """
    y_r = np.asarray(y_r, dtype=complex)
    n = assembly.n
    if y_r.shape[0] != 4 * n:
        raise ValueError("reduced vector must have length 4n")
    _check_gamma(assembly.mask, assembly.gamma)
    gamma = assembly.gamma
    ind3 = _triple(inside_projector_diag(assembly.mask))
    phi_inv = 1.0 / assembly.phi_diag

    zp = assembly.basis.P_r @ y_r[: 2 * n]
    zq = assembly.basis.Q_r @ y_r[2 * n :]
    gi = gamma * ind3 * phi_inv
    h = 1j * ((-1.0 - gamma * gi) * zp + 1j * gi * zq)
    e = 1j * (1j * gi * zp + phi_inv * zq)
    return h, e


def derivative_weight(eps_i: float, gamma: float) -> np.ndarray:
    """2x2 Hermitian kernel of the gamma-derivative of A_r on inside nodes."""
    s = (eps_i - gamma**2) ** -2
    return s * np.array(
        [
            [2.0 * gamma * eps_i, -1j * (eps_i + gamma**2)],
            [1j * (eps_i + gamma**2), 2.0 * gamma],
        ]
    )


def derivative_indicator(assembly: NfgepAssembly, y_r: np.ndarray) -> float:
    """Quadratic form d(gamma) controlling the drift of real eigenvalues.

    y_r is normalized so y^H A_r y = 1 first.  For gamma below gamma_star
    and d > 0, a positive eigenvalue moves right and a negative one moves
    left as gamma grows; d = 0 leaves it stationary.
    """
    if assembly.gamma >= assembly.mask.gamma_star:
        raise ValueError("the drift indicator is defined below the critical value")
    y_r = np.asarray(y_r, dtype=complex)
    n = assembly.n
    nrm2 = np.real(np.vdot(y_r, assembly.A_r @ y_r))
    if nrm2 <= 0:
        raise ValueError("y_r must have positive A_r-energy below the critical value")
    y_r = y_r / np.sqrt(nrm2)
    zp = assembly.basis.P_r @ y_r[: 2 * n]
    zq = assembly.basis.Q_r @ y_r[2 * n :]
    ind3 = _triple(inside_projector_diag(assembly.mask))
    W = derivative_weight(assembly.mask.eps_i, assembly.gamma)
    d = (
        W[0, 0] * np.vdot(zp, ind3 * zp)
        + W[0, 1] * np.vdot(zp, ind3 * zq)
        + W[1, 0] * np.vdot(zq, ind3 * zp)
        + W[1, 1] * np.vdot(zq, ind3 * zq)
    )
    return float(np.real(d))


def solve_nfgep(assembly: NfgepAssembly) -> tuple[np.ndarray, np.ndarray]:
    """Dense eigensolve of (A_r, B_r); B_r is always nonsingular."""
    vals, vecs = sla.eig(assembly.A_r, assembly.B_r, right=True)
    order = np.lexsort((vals.imag, vals.real))
    return vals[order], vecs[:, order]
