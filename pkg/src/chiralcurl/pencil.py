"""The chirality-parameterized Hermitian pencil and its desk-scale solver.

For a medium with magnetoelectric coupling strength gamma, the 6n x 6n
Hermitian pair is

    A = [[0, -iC], [iC^H, -gamma (Pi C + C^H Pi)]],
    B = diag(I_3n, eps_o Po + (eps_i - gamma^2) Pi),

with Pi/Po the componentwise inside/outside projectors.  B is positive
definite below gamma_star = sqrt(eps_i), singular exactly at gamma_star,
and indefinite above.  The equivalent quadratic polynomial in omega acts
on the electric field alone and supplies Rayleigh-quotient scalars.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .curl import CurlBlocks, assemble_curl
from .lattice import LatticeSpec, MaterialMask

__all__ = [
    "PencilAssembly",
    "RayleighScalars",
    "PencilEigs",
    "assemble_pencil",
    "qep_residual",
    "rayleigh",
    "convert_eigenvector",
    "solve_dense_pencil",
]

DEFAULT_DENSE_CAP = 4000
_BETA_TOL = 1e-10


def inside_projector_diag(mask: MaterialMask) -> np.ndarray:
    """Length-n 0/1 diagonal of the inside projector."""
    return mask.inside_flags.astype(float)


def _triple(v: np.ndarray) -> np.ndarray:
    """diag entries of I_3 (x) diag(v)."""
    return np.concatenate([v, v, v])


@dataclass(frozen=True)
class PencilAssembly:
    """Dense Hermitian pair (A, B) at a fixed chirality gamma."""

    spec: LatticeSpec
    mask: MaterialMask
    gamma: float
    blocks: CurlBlocks = field(repr=False)
    A: np.ndarray = field(repr=False)
    B: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return self.spec.n

    @property
    def gamma_star(self) -> float:
        return self.mask.gamma_star

    @property
    def phi_diag(self) -> np.ndarray:
        """Diagonal of the lower-right 3n block of B."""
        return np.real(np.diag(self.B)[3 * self.n :]).copy()


def phi_diagonal(mask: MaterialMask, gamma: float) -> np.ndarray:
    """Diagonal of eps_o Po + (eps_i - gamma^2) Pi over 3n components.

    At gamma == gamma_star (exact float equality) the inside entries are
    snapped to exact zeros so the structural nullspace of B is literal.
    """
    ind = inside_projector_diag(mask)
    inside_val = 0.0 if gamma == mask.gamma_star else mask.eps_i - gamma**2
    d = mask.eps_o * (1.0 - ind) + inside_val * ind
    return _triple(d)


def assemble_pencil(
    spec: LatticeSpec,
    mask: MaterialMask,
    gamma: float,
    blocks: CurlBlocks | None = None,
) -> PencilAssembly:
    """Build the dense Hermitian pair (A, B) at the given gamma."""
    if gamma < 0:
        raise ValueError("gamma must be nonnegative")
    if mask.n != spec.n:
        raise ValueError("mask size does not match the lattice grid")
    if blocks is None:
        blocks = assemble_curl(spec)
    n = spec.n
    C = blocks.C.toarray()
    pi3 = _triple(inside_projector_diag(mask))
    pic = pi3[:, None] * C
    lower = -gamma * (pic + pic.conj().T)
    A = np.zeros((6 * n, 6 * n), dtype=complex)
    A[: 3 * n, 3 * n :] = -1j * C
    A[3 * n :, : 3 * n] = 1j * C.conj().T
    A[3 * n :, 3 * n :] = lower
    B = np.zeros((6 * n, 6 * n), dtype=complex)
    np.fill_diagonal(B[: 3 * n, : 3 * n], 1.0)
    B[3 * n :, 3 * n :] = np.diag(phi_diagonal(mask, gamma))
    return PencilAssembly(spec, mask, gamma, blocks, A, B)


@dataclass(frozen=True)
class RayleighScalars:
    """Quadratic-form scalars of a trial field e and the induced roots."""

    a_i: float
    a_o: float
    b: float
    c: float
    gamma: float
    eps_i: float
    eps_o: float

    @property
    def delta(self) -> float:
        return self.gamma**2 * self.b**2 + 4.0 * self.c * (
            self.eps_o * self.a_o + (self.eps_i - self.gamma**2) * self.a_i
        )

    @property
    def denominator(self) -> float:
        return -2.0 * (self.eps_o * self.a_o + (self.eps_i - self.gamma**2) * self.a_i)

    def omega_roots(self, tol: float = 1e-14) -> tuple[complex, complex] | complex | None:
        """Roots of the scalar quadratic; degenerates to the linear root
        c/(gamma b) when the leading coefficient vanishes, None if both do."""
        den = self.denominator
        scale = max(self.c, abs(self.b), self.a_i + self.a_o, 1.0)
        if abs(den) < tol * scale:
            if abs(self.gamma * self.b) < tol * scale:
                return None
            return self.c / (self.gamma * self.b)
        root = np.sqrt(complex(self.delta))
        return (
            (self.gamma * self.b + root) / den,
            (self.gamma * self.b - root) / den,
        )


def rayleigh(
    e: np.ndarray, mask: MaterialMask, gamma: float, blocks: CurlBlocks
) -> RayleighScalars:
    """Rayleigh-quotient scalars of the quadratic polynomial at e != 0."""
    e = np.asarray(e, dtype=complex)
    if e.ndim != 1 or e.size != 3 * mask.n:
        raise ValueError("e must be a vector of length 3n")
    if np.linalg.norm(e) == 0:
        raise ValueError("e must be nonzero")
    ind3 = _triple(inside_projector_diag(mask))
    Ce = blocks.C @ e
    c = float(np.real(np.vdot(Ce, Ce)))
    b = 2.0 * float(np.real(np.vdot(e, ind3 * Ce)))
    a_i = float(np.real(np.vdot(e, ind3 * e)))
    a_o = float(np.real(np.vdot(e, e))) - a_i
    return RayleighScalars(
        a_i=a_i, a_o=a_o, b=b, c=c, gamma=gamma,
        eps_i=mask.eps_i, eps_o=mask.eps_o,
    )


def qep_apply(
    omega: complex, e: np.ndarray, mask: MaterialMask, gamma: float, blocks: CurlBlocks
) -> np.ndarray:
    """Apply the Hermitian quadratic polynomial Q(omega) to e."""
    ind3 = _triple(inside_projector_diag(mask))
    phi = phi_diagonal(mask, gamma)
    Ce = blocks.C @ e
    ChPiCe = blocks.C.conj().T.dot(ind3 * e)
    return (
        blocks.C.conj().T.dot(Ce)
        - omega * gamma * (ind3 * Ce + ChPiCe)
        - omega**2 * (phi * e)
    )


def qep_residual(
    omega: complex, e: np.ndarray, mask: MaterialMask, gamma: float, blocks: CurlBlocks
) -> float:
    """Relative residual |Q(omega) e| / |e|; ~0 iff (omega, e) is an eigenpair."""
    e = np.asarray(e, dtype=complex)
    nrm = np.linalg.norm(e)
    if nrm == 0:
        raise ValueError("e must be nonzero")
    return float(np.linalg.norm(qep_apply(omega, e, mask, gamma, blocks)) / nrm)


def convert_eigenvector(
    direction: str,
    omega: complex,
    vec: np.ndarray,
    mask: MaterialMask,
    gamma: float,
    blocks: CurlBlocks | None = None,
) -> np.ndarray:
    """Map eigenvectors between the field pair [e; h] and the pencil form.

    directions: 'maxwell_to_pencil' ([e;h] -> [h - i g Pi e; e]),
    'pencil_to_maxwell' (inverse), 'e_to_h' (h = i(g Pi - C/omega) e,
    needs omega != 0 and the curl blocks).
    """
    vec = np.asarray(vec, dtype=complex)
    n3 = 3 * mask.n
    ind3 = _triple(inside_projector_diag(mask))
    if direction == "maxwell_to_pencil":
        e, h = vec[:n3], vec[n3:]
        return np.concatenate([h - 1j * gamma * (ind3 * e), e])
    if direction == "pencil_to_maxwell":
        z1, e = vec[:n3], vec[n3:]
        h = z1 + 1j * gamma * (ind3 * e)
        return np.concatenate([e, h])
    if direction == "e_to_h":
        if omega == 0:
            raise ValueError("e_to_h conversion needs omega != 0")
        if blocks is None:
            raise ValueError("e_to_h conversion needs the curl blocks")
        e = vec
        return 1j * (gamma * (ind3 * e) - (blocks.C @ e) / omega)
    raise ValueError(f"unknown direction {direction!r}")


def maxwell_residual(
    omega: complex, e: np.ndarray, h: np.ndarray, mask: MaterialMask,
    gamma: float, blocks: CurlBlocks,
) -> float:
    """Residual of the first-order discretized field equations."""
    ind3 = _triple(inside_projector_diag(mask))
    eps_d = mask.eps_o * (1.0 - ind3) + mask.eps_i * ind3
    zeta = -1j * gamma * ind3
    xi = 1j * gamma * ind3
    r1 = blocks.C @ e - 1j * omega * (zeta * e + h)
    r2 = blocks.C.conj().T @ h - 1j * omega * (-eps_d * e - xi * h)
    nrm = np.linalg.norm(np.concatenate([e, h]))
    return float(np.hypot(np.linalg.norm(r1), np.linalg.norm(r2)) / nrm)


@dataclass(frozen=True)
class PencilEigs:
    """Full dense solve of (A, B): finite/infinite split plus eigenvectors."""

    values: np.ndarray
    vectors: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    finite: np.ndarray
    trivial_zero: np.ndarray

    @property
    def n_infinite(self) -> int:
        return int(np.count_nonzero(~self.finite))

    def finite_values(self) -> np.ndarray:
        return self.values[self.finite]


def trivial_null_basis(basis, mask: MaterialMask, gamma: float) -> np.ndarray:
    """6n x 2n matrix whose columns span the nullspace of A at this gamma."""
    n = mask.n
    ind3 = _triple(inside_projector_diag(mask))
    L = np.zeros((6 * n, 2 * n), dtype=complex)
    L[: 3 * n, :n] = -1j * gamma * (ind3[:, None] * basis.Q0)
    L[3 * n :, :n] = basis.Q0
    L[: 3 * n, n:] = basis.P0
    return L


def solve_dense_pencil(
    assembly: PencilAssembly,
    basis=None,
    cap: int = DEFAULT_DENSE_CAP,
    zero_tol: float = 1e-8,
) -> PencilEigs:
    """QZ-based reference solve of the full 6n pencil.

    Handles the singular-B case at gamma_star through the homogeneous
    (alpha, beta) form; eigenvalues with |beta| below 1e-10 of the largest
    are reported as infinite.  Zero eigenvalues whose eigenvectors lie in
    the range of the structural null basis (when given) are flagged
    trivial.
    """
    m = assembly.A.shape[0]
    if m > cap:
        raise ValueError(f"dense solve dimension {m} exceeds cap {cap}")
    ab, vecs = sla.eig(
        assembly.A, assembly.B, right=True, homogeneous_eigvals=True
    )
    alpha, beta = ab[0], ab[1]
    finite = np.abs(beta) > _BETA_TOL * max(np.abs(beta).max(), 1e-300)
    values = np.full(m, np.inf + 0j, dtype=complex)
    values[finite] = alpha[finite] / beta[finite]

    trivial = np.zeros(m, dtype=bool)
    if basis is not None:
        L = trivial_null_basis(basis, assembly.mask, assembly.gamma)
        Q, _ = np.linalg.qr(L)
        scale = np.abs(values[finite]).max() if finite.any() else 1.0
        for j in range(m):
            if finite[j] and abs(values[j]) < zero_tol * max(scale, 1.0):
                x = vecs[:, j]
                resid = np.linalg.norm(x - Q @ (Q.conj().T @ x)) / np.linalg.norm(x)
                trivial[j] = resid <= 1e-8
    order = np.lexsort((values.imag, values.real, ~finite))
    return PencilEigs(
        values=values[order],
        vectors=vecs[:, order],
        alpha=alpha[order],
        beta=beta[order],
        finite=finite[order],
        trivial_zero=trivial[order],
    )


def residual_check(assembly: PencilAssembly, eigs: PencilEigs) -> float:
    """Max scaled residual |A x - w B x| / (|A| + |w||B|) over finite pairs."""
    nA = np.linalg.norm(assembly.A)
    nB = np.linalg.norm(assembly.B)
    worst = 0.0
    for j in range(eigs.values.size):
        if not eigs.finite[j]:
            continue
        w = eigs.values[j]
        x = eigs.vectors[:, j]
        r = np.linalg.norm(assembly.A @ x - w * (assembly.B @ x)) / (
            (nA + abs(w) * nB) * np.linalg.norm(x)
        )
        worst = max(worst, float(r))
    return worst
