"""Eigenstructure certificates at and beyond the critical chirality.

Everything here is about what happens when B loses definiteness: the
structural nullspaces of A and B, regularity of the pair through their
intersection, size-2 Jordan blocks at infinity and their interior-node
witnesses, inertia bookkeeping under congruence, the coupling blocks
U0/U1/U2 whose third combination controls how many conjugate pairs can
ever be born, and the line-segment sufficient condition for regularity
with its Vandermonde-product rank checks.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import gcd

import numpy as np

from .curl import CurlBlocks, assemble_curl
from .lattice import LatticeSpec, MaterialMask
from .pencil import (
    PencilAssembly,
    PencilEigs,
    _triple,
    inside_projector_diag,
    trivial_null_basis,
)
from .spectral import SpectralBasis, spectral_basis

__all__ = [
    "NullspaceBasis",
    "InertiaSignature",
    "UMatrices",
    "RegularityCertificate",
    "null_basis",
    "b_null_basis",
    "regularity_test",
    "jordan_block_test",
    "jordan_reduced_matrix",
    "infinite_eigen_census",
    "inertia",
    "small_alpha_congruence",
    "u_matrices",
    "appendix_condition",
    "sign_characteristic",
    "infinite_chain_extension_residuals",
]

_RANK_TOL = 1e-10
_ANGLE_TOL = 1e-8


@dataclass(frozen=True)
class NullspaceBasis:
    """Structural null bases: columns of L span null(A), nb spans null(B)."""

    L: np.ndarray = field(repr=False)
    nb: np.ndarray = field(repr=False)
    gamma: float


def b_null_basis(mask: MaterialMask) -> np.ndarray:
    """6n x 3|inside| selection basis [0; I_3 (x) I_sigma] of null(B) at gamma_star."""
    n = mask.n
    inside0 = mask.inside - 1
    d = inside0.size
    nb = np.zeros((6 * n, 3 * d))
    for c in range(3):
        for col, j in enumerate(inside0):
            nb[3 * n + c * n + j, c * d + col] = 1.0
    return nb


def null_basis(gamma: float, basis: SpectralBasis, mask: MaterialMask) -> NullspaceBasis:
    """Assemble L_gamma (nullspace of A) and the structural null basis of B."""
    L = trivial_null_basis(basis, mask, gamma)
    return NullspaceBasis(L=L, nb=b_null_basis(mask), gamma=gamma)


@dataclass(frozen=True)
class InertiaSignature:
    p_plus: int
    p_minus: int
    p_zero: int
    tol: float

    @property
    def triple(self) -> tuple[int, int, int]:
        return (self.p_plus, self.p_minus, self.p_zero)

    def __add__(self, other: "InertiaSignature") -> "InertiaSignature":
        return InertiaSignature(
            self.p_plus + other.p_plus,
            self.p_minus + other.p_minus,
            self.p_zero + other.p_zero,
            max(self.tol, other.tol),
        )


def inertia(H: np.ndarray, tol: float = 1e-12) -> InertiaSignature:
    """Counts of positive/negative/zero-class eigenvalues of a Hermitian H.

    The zero class collects |eig| <= tol * max|eig|.
    """
    H = np.asarray(H)
    herm_err = np.abs(H - H.conj().T).max()
    if herm_err > 1e-12 * max(1.0, np.abs(H).max()):
        raise ValueError("input is not Hermitian")
    w = np.linalg.eigvalsh((H + H.conj().T) / 2.0)
    scale = np.abs(w).max() if w.size else 0.0
    thresh = tol * scale
    p_plus = int((w > thresh).sum())
    p_minus = int((w < -thresh).sum())
    return InertiaSignature(p_plus, p_minus, w.size - p_plus - p_minus, tol)


def regularity_test(
    mask: MaterialMask, spec: LatticeSpec, basis: SpectralBasis | None = None
) -> tuple[bool, int]:
    """Numerical intersection dim(null(A) ^ null(B)) at the critical chirality.

    Zero intersection is equivalent to regularity of the pair there; the
    dimension is the count of principal angles below the 1e-8 threshold.
    """
    if basis is None:
        basis = spectral_basis(spec)
    if mask.size_inside == 0:
        return True, 0
    L = trivial_null_basis(basis, mask, mask.gamma_star)
    QL, _ = np.linalg.qr(L)
    nb = b_null_basis(mask)
    cross = QL.conj().T @ nb
    s = np.linalg.svd(cross, compute_uv=False)
    dim = int((s > 1.0 - _ANGLE_TOL).sum())
    return dim == 0, dim


def jordan_reduced_matrix(
    mask: MaterialMask, spec: LatticeSpec, blocks: CurlBlocks | None = None
) -> np.ndarray:
    """-gamma_star (I_3 (x) I_sigma)^H (C + C^H) (I_3 (x) I_sigma), 3d x 3d."""
    if blocks is None:
        blocks = assemble_curl(spec)
    n = spec.n
    S = (blocks.C + blocks.C.conj().T).tocsc()
    inside0 = mask.inside - 1
    idx = np.concatenate([c * n + inside0 for c in range(3)])
    sub = S[idx, :][:, idx].toarray()
    return -mask.gamma_star * sub


@dataclass(frozen=True)
class JordanReport:
    has_defective_infinity: bool
    nullity: int
    conclusive: bool
    witness_vectors: np.ndarray = field(repr=False)


def jordan_block_test(
    mask: MaterialMask,
    spec: LatticeSpec,
    blocks: CurlBlocks | None = None,
    regular: bool | None = None,
) -> JordanReport:
    """Detect size-2 Jordan blocks of the infinite eigenvalue at gamma_star.

    The pair has one exactly when the reduced matrix nb^H A nb is
    singular; witness columns span its nullspace (coordinates in the
    inside selection basis).  Inconclusive unless the pair is known (or
    verified here) to be regular.
    """
    if regular is None:
        regular = regularity_test(mask, spec)[0]
    if mask.size_inside == 0:
        return JordanReport(False, 0, bool(regular), np.zeros((0, 0)))
    R = jordan_reduced_matrix(mask, spec, blocks)
    w, V = np.linalg.eigh((R + R.conj().T) / 2.0)
    scale = np.abs(w).max() if w.size else 0.0
    null_mask = np.abs(w) <= _RANK_TOL * max(scale, 1e-300)
    nullity = int(null_mask.sum())
    return JordanReport(
        has_defective_infinity=nullity > 0 and bool(regular),
        nullity=nullity,
        conclusive=bool(regular),
        witness_vectors=V[:, null_mask],
    )


@dataclass(frozen=True)
class InfiniteCensus:
    count_infinite: int
    count_defective: int
    jordan_blocks: int
    divisor_count: int
    bound: int
    positive_type_floor: int

    @property
    def within_bound(self) -> bool:
        return self.count_infinite <= self.bound


def infinite_eigen_census(
    gamma_star_solve: PencilEigs, mask: MaterialMask, jordan_nullity: int
) -> InfiniteCensus:
    """Count infinite eigenvalues at gamma_star.

    The structural count is 3|inside| Jordan blocks plus one extra
    multiplicity per defective block; the QZ divisor count (|beta| below
    threshold) is reported alongside for cross-checking.  The floor
    6n - 6|inside| on semisimple positive-type finite eigenvalues is
    reported, never asserted (it involves sign characteristics of
    possibly multiple eigenvalues).
    """
    d = mask.size_inside
    n6 = gamma_star_solve.values.size
    return InfiniteCensus(
        count_infinite=3 * d + jordan_nullity,
        count_defective=jordan_nullity,
        jordan_blocks=3 * d,
        divisor_count=gamma_star_solve.n_infinite,
        bound=6 * d,
        positive_type_floor=n6 - 6 * d,
    )


@dataclass(frozen=True)
class UMatrices:
    """Coupling blocks between the curl range/null factors and the medium."""

    U0: np.ndarray = field(repr=False)
    U1: np.ndarray = field(repr=False)
    U2: np.ndarray = field(repr=False)
    rank_U2: int

    @property
    def u2_norm(self) -> float:
        return float(np.linalg.norm(self.U2, 2))


def u_matrices(basis: SpectralBasis, mask: MaterialMask) -> UMatrices:
    """U0 = Po Q0, U1 = P_r^H Pi Q0, U2 = P0^H Pi Q0 with rank of U2."""
    if np.allclose(basis.spec.k, 0.0):
        raise ValueError("the coupling blocks require a nonzero Bloch vector")
    ind3 = _triple(inside_projector_diag(mask))
    U0 = (1.0 - ind3)[:, None] * basis.Q0
    piQ0 = ind3[:, None] * basis.Q0
    U1 = basis.P_r.conj().T @ piQ0
    U2 = basis.P0.conj().T @ piQ0
    s = np.linalg.svd(U2, compute_uv=False)
    smax = s.max() if s.size else 0.0
    rank = int((s > _RANK_TOL * max(smax, 1e-300)).sum())
    return UMatrices(U0=U0, U1=U1, U2=U2, rank_U2=rank)


def small_alpha_bracket(u: UMatrices, mask: MaterialMask, gamma: float) -> np.ndarray:
    """eps_o U0^H U0 + eps_i U1^H U1 + (eps_i - gamma^2) U2^H U2."""
    return (
        mask.eps_o * (u.U0.conj().T @ u.U0)
        + mask.eps_i * (u.U1.conj().T @ u.U1)
        + (mask.eps_i - gamma**2) * (u.U2.conj().T @ u.U2)
    )


@dataclass(frozen=True)
class CongruenceReport:
    alpha: float
    gamma: float
    pencil_inertia: InertiaSignature
    model_inertia: InertiaSignature

    @property
    def match(self) -> bool:
        return self.pencil_inertia.triple == self.model_inertia.triple


def small_alpha_congruence(
    assembly: PencilAssembly,
    alpha: float,
    basis: SpectralBasis,
    u: UMatrices | None = None,
    tol: float = 1e-12,
) -> CongruenceReport:
    """Check inertia(A - alpha B) against the three-block small-alpha model.

    The model is diag(-alpha I_3n, (1/alpha) Sigma^2, -alpha [bracket]);
    valid for |alpha| well below the singular-value scale.
    """
    if alpha == 0:
        raise ValueError("alpha must be nonzero")
    if abs(alpha) > 1e-3 * float(basis.sigma.min()):
        raise ValueError("alpha too large for the small-alpha congruence")
    if u is None:
        u = u_matrices(basis, assembly.mask)
    n = assembly.n
    H = assembly.A - alpha * assembly.B
    pencil_sig = inertia(H, tol)

    sgn_neg_alpha = 1 if alpha < 0 else -1  # sign of -alpha
    block1 = InertiaSignature(
        3 * n if sgn_neg_alpha > 0 else 0,
        3 * n if sgn_neg_alpha < 0 else 0,
        0,
        tol,
    )
    block2 = InertiaSignature(2 * n if alpha > 0 else 0, 2 * n if alpha < 0 else 0, 0, tol)
    bracket = small_alpha_bracket(u, assembly.mask, assembly.gamma)
    br = inertia(bracket, tol)
    if sgn_neg_alpha > 0:
        block3 = InertiaSignature(br.p_plus, br.p_minus, br.p_zero, tol)
    else:
        block3 = InertiaSignature(br.p_minus, br.p_plus, br.p_zero, tol)
    model = block1 + block2 + block3
    return CongruenceReport(alpha, assembly.gamma, pencil_sig, model)


# -- line-segment sufficient condition -------------------------------------


def _axis_line_indices(spec: LatticeSpec, axis: int, fixed: tuple[int, int]) -> np.ndarray:
    """0-based linear indices of a full grid line along the given axis."""
    im = spec.index_map
    n_ax = spec.dims[axis]
    out = np.empty(n_ax, dtype=np.int64)
    for t in range(1, n_ax + 1):
        if axis == 0:
            tri = (t, fixed[0], fixed[1])
        elif axis == 1:
            tri = (fixed[0], t, fixed[1])
        else:
            tri = (fixed[0], fixed[1], t)
        out[t - 1] = im.linear(*tri) - 1
    return out


def _find_outside_line(spec: LatticeSpec, mask: MaterialMask, axis: int):
    inside = mask.inside_flags
    dims = spec.dims
    other = [d for a, d in enumerate(dims) if a != axis]
    for u in range(1, other[0] + 1):
        for v in range(1, other[1] + 1):
            idx = _axis_line_indices(spec, axis, (u, v))
            if not inside[idx].any():
                return (u, v)
    return None


def vandermonde_product_matrix(
    spec: LatticeSpec, m: int, dirs: tuple[int, int, int]
) -> np.ndarray:
    """n x m matrix of Kronecker geometric columns with ratio eta_m^p.

    Column p has entries eta_m^(p * [(i1-1) d1 + (i2-1) d2 + (i3-1) d3]);
    a zero in dirs degenerates that direction to the all-ones column.
    """
    n1, n2, n3 = spec.dims
    i1 = np.arange(n1)[None, None, :] * dirs[0]
    i2 = np.arange(n2)[None, :, None] * dirs[1]
    i3 = np.arange(n3)[:, None, None] * dirs[2]
    expo = (i1 + i2 + i3).reshape(-1)
    p = np.arange(1, m + 1)
    return np.exp(2j * np.pi * np.outer(expo, p) / m)


@dataclass(frozen=True)
class AppendixReport:
    segments_found: bool
    segment_witnesses: dict
    u_rank_flags: dict
    regularity_guaranteed: bool


def appendix_condition(mask: MaterialMask, spec: LatticeSpec) -> AppendixReport:
    """Line-segment sufficient condition for regularity at gamma_star.

    Searches for one full grid line outside the medium along each of the
    three mesh axes, then verifies full column rank of the eight
    outside-restricted Vandermonde-product matrices (sizes driven by the
    gcds of n1, n2 + m1, n3 + m2 + mhat1).  The guarantee is the
    conjunction; when it reports True, the numerical intersection test
    must find dimension zero.
    """
    witnesses = {
        "axis1": _find_outside_line(spec, mask, 0),
        "axis2": _find_outside_line(spec, mask, 1),
        "axis3": _find_outside_line(spec, mask, 2),
    }
    segments_found = all(w is not None for w in witnesses.values())

    n1, n2, n3 = spec.dims
    nh1 = n1
    nh2 = n2 + spec.m1
    nh3 = n3 + spec.m2 + spec.mhat1
    sizes = {
        "u123": (gcd(gcd(nh1, nh2), nh3), (1, 1, 1)),
        "u12": (gcd(nh1, nh2), (1, 1, 0)),
        "u23": (gcd(nh2, nh3), (0, 1, 1)),
        "u13": (gcd(nh1, nh3), (1, 0, 1)),
        "u1": (n1, (1, 0, 0)),
        "u2": (n2, (0, 1, 0)),
        "u3": (n3, (0, 0, 1)),
        "u_const": (1, (0, 0, 0)),
    }
    outside0 = mask.outside - 1
    flags = {}
    for name, (m, dirs) in sizes.items():
        U = vandermonde_product_matrix(spec, m, dirs)
        sub = U[outside0, :]
        if sub.shape[0] < m:
            flags[name] = False
            continue
        s = np.linalg.svd(sub, compute_uv=False)
        flags[name] = bool(s[-1] > _RANK_TOL * max(s[0], 1e-300))
    return AppendixReport(
        segments_found=segments_found,
        segment_witnesses=witnesses,
        u_rank_flags=flags,
        regularity_guaranteed=segments_found and all(flags.values()),
    )


@dataclass(frozen=True)
class RegularityCertificate:
    """Bundle of the structural checks at the critical chirality."""

    dim_intersection: int
    is_regular: bool
    jordan_nullity: int
    has_defective_infinity: bool
    interior_witness: int | None
    segments_found: bool
    u_rank_checks: dict
    regularity_guaranteed: bool
    census: InfiniteCensus | None = None


def sign_characteristic(
    alpha: float,
    x: np.ndarray,
    B: np.ndarray,
    simple: bool = True,
    tol: float = 1e-8,
) -> int | None:
    """Sign characteristic of a simple real eigenvalue from its eigenvector.

    Returns sign(x^H B x) for the normalized eigenvector, None when the
    eigenvalue is non-simple or the form is too close to zero to call.
    """
    if not simple:
        return None
    x = np.asarray(x, dtype=complex)
    x = x / np.linalg.norm(x)
    q = float(np.real(np.vdot(x, B @ x)))
    if abs(q) <= tol:
        return None
    return 1 if q > 0 else -1


def infinite_chain_extension_residuals(
    assembly: PencilAssembly, nb: np.ndarray, witnesses: np.ndarray
) -> list[float]:
    """Obstruction norms against length-3 Jordan chains at infinity.

    For each defective-block eigenvector u (a null direction of
    nb^H A nb), a chain vector v solves B v = A u; the chain would extend
    once more only if nb^H A v lay in range(nb^H A nb).  Returns the norm
    of the component outside that range, scaled by |nb^H A v|; every
    entry should stay well above zero on a regular pair.
    """
    A, B = assembly.A, assembly.B
    bdiag = np.real(np.diag(B))
    nz = np.abs(bdiag) > 1e-14
    R = nb.conj().T @ (A @ nb)
    w, V = np.linalg.eigh((R + R.conj().T) / 2.0)
    scale = np.abs(w).max()
    keep = np.abs(w) > _RANK_TOL * scale
    Vr = V[:, keep]  # range(A22) directions
    out = []
    for j in range(witnesses.shape[1]):
        u6 = nb @ witnesses[:, j]
        rhs = A @ u6
        v = np.zeros_like(rhs)
        v[nz] = rhs[nz] / bdiag[nz]
        g = nb.conj().T @ (A @ v)
        resid = g - Vr @ (Vr.conj().T @ g)
        out.append(float(np.linalg.norm(resid) / max(np.linalg.norm(g), 1e-300)))
    return out
