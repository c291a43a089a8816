"""Unitary FFT basis that simultaneously diagonalizes C1, C2, C3.

Column <i1,i2,i3> of the basis T is a Kronecker product of three geometric
columns whose ratios carry the Bloch phases and the lattice shift twiddles;
every entry has modulus 1/sqrt(n).  The one-direction factors become the
diagonal matrices Lambda1..3, from which C inherits a structured SVD
C = P_r Sigma Q_r^H with Sigma = diag(Lambda_q^(1/2), Lambda_q^(1/2)) and
explicit nullspace factors Q0 (right) and P0 (left).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .lattice import LatticeSpec, _wrap

__all__ = [
    "SpectralBasis",
    "basis_vector",
    "apply_T",
    "apply_T_adjoint",
    "lambda_diagonals",
    "spectral_basis",
    "default_tau",
]


def _canonical_i(i: int, n: int) -> int:
    return _wrap(i, n)


def _column_args(spec: LatticeSpec, i1: int, i2: int, i3: int):
    """The three geometric ratios (z1, z2, z3) of column <i1,i2,i3>."""
    n1, n2, n3 = spec.dims
    t1, t2, t3 = spec.k_dot_ahat
    m1, m2, mh1 = spec.m1, spec.m2, spec.mhat1
    z1 = np.exp(2j * np.pi * (t1 + i1) / n1)
    z2 = np.exp(2j * np.pi * ((t2 + i2) / n2 - m1 * i1 / (n1 * n2)))
    z3 = np.exp(
        2j
        * np.pi
        * (
            (t3 + i3) / n3
            - m2 * i2 / (n2 * n3)
            - mh1 * i1 / (n1 * n3)
            + m1 * m2 * i1 / (n1 * n2 * n3)
        )
    )
    return z1, z2, z3


def basis_vector(i1: int, i2: int, i3: int, spec: LatticeSpec) -> np.ndarray:
    """Explicit column t_<i1,i2,i3> of the unitary basis, length n.

    Out-of-range indices are canonicalized into [1, n_ell] first; the
    formula is then evaluated at the canonical representative.
    """
    n1, n2, n3 = spec.dims
    i1 = _canonical_i(i1, n1)
    i2 = _canonical_i(i2, n2)
    i3 = _canonical_i(i3, n3)
    z1, z2, z3 = _column_args(spec, i1, i2, i3)
    v1 = z1 ** np.arange(n1)
    v2 = z2 ** np.arange(n2)
    v3 = z3 ** np.arange(n3)
    return np.kron(v3, np.kron(v2, v1)) / np.sqrt(spec.n)


def dense_T(spec: LatticeSpec) -> np.ndarray:
    """All n columns of the basis as a dense unitary matrix (oracle path)."""
    n1, n2, n3 = spec.dims
    n = spec.n
    t1, t2, t3 = spec.k_dot_ahat
    m1, m2, mh1 = spec.m1, spec.m2, spec.mhat1
    i1 = np.arange(1, n1 + 1)
    i2 = np.arange(1, n2 + 1)
    i3 = np.arange(1, n3 + 1)
    r1 = np.arange(n1)
    r2 = np.arange(n2)
    r3 = np.arange(n3)
    # pairwise phase factors; output rows (j3,j2,j1), input cols (i3,i2,i1)
    A1 = np.exp(2j * np.pi * np.outer(r1, (t1 + i1)) / n1)
    A2 = np.exp(2j * np.pi * np.outer(r2, (t2 + i2)) / n2)
    A3 = np.exp(2j * np.pi * np.outer(r3, (t3 + i3)) / n3)
    B12 = np.exp(-2j * np.pi * m1 * np.outer(r2, i1) / (n1 * n2))
    B13 = np.exp(
        2j * np.pi * np.outer(r3, i1) * (-mh1 / (n1 * n3) + m1 * m2 / (n1 * n2 * n3))
    )
    B23 = np.exp(-2j * np.pi * m2 * np.outer(r3, i2) / (n2 * n3))
    T = np.einsum("Aa,Bb,Cc,Ba,Ca,Cb->CBAcba", A1, A2, A3, B12, B13, B23)
    return T.reshape(n, n) / np.sqrt(n)


def _axis_phases(spec: LatticeSpec):
    n1, n2, n3 = spec.dims
    t1, t2, t3 = spec.k_dot_ahat
    s1 = np.arange(n1)
    s2 = np.arange(n2)
    s3 = np.arange(n3)
    p1 = np.exp(2j * np.pi * (t1 + 1) * s1 / n1)
    p2 = np.exp(2j * np.pi * (t2 + 1) * s2 / n2)
    p3 = np.exp(2j * np.pi * (t3 + 1) * s3 / n3)
    return p1, p2, p3


def _twiddles(spec: LatticeSpec):
    """Cross-direction twiddles on (input index, output index) pairs."""
    n1, n2, n3 = spec.dims
    m1, m2, mh1 = spec.m1, spec.m2, spec.mhat1
    i1 = np.arange(1, n1 + 1)
    i2 = np.arange(1, n2 + 1)
    s2 = np.arange(n2)
    s3 = np.arange(n3)
    w23 = np.exp(-2j * np.pi * m2 * np.outer(s3, i2) / (n2 * n3))  # (s3, i2)
    g13 = (-mh1 / (n1 * n3) + m1 * m2 / (n1 * n2 * n3)) * np.outer(s3, i1)
    w13 = np.exp(2j * np.pi * g13)  # (s3, i1)
    w12 = np.exp(-2j * np.pi * m1 * np.outer(s2, i1) / (n1 * n2))  # (s2, i1)
    return w12, w13, w23


def apply_T(x: np.ndarray, spec: LatticeSpec) -> np.ndarray:
    """FFT-backed product T @ x.

    Axis order matters: the i3 transform runs first, then the (i2, j3)
    twiddle and the i2 transform, then the (i1, j2/j3) twiddles and the i1
    transform.  Matches the dense columns to ~1e-14.
    """
    n1, n2, n3 = spec.dims
    x = np.asarray(x)
    if x.shape[0] != spec.n:
        raise ValueError("length mismatch with the grid size")
    vec = x.ndim == 1
    cols = 1 if vec else x.shape[1]
    arr = x.reshape(n3, n2, n1, cols)
    p1, p2, p3 = _axis_phases(spec)
    w12, w13, w23 = _twiddles(spec)

    # sum over i3 (axis 0); extra +1 in p3 accounts for 1-based i3
    arr = n3 * np.fft.ifft(arr, axis=0)
    arr = arr * p3[:, None, None, None]
    # (i2, s3) twiddle, then sum over i2 (axis 1)
    arr = arr * w23[:, :, None, None]
    arr = n2 * np.fft.ifft(arr, axis=1)
    arr = arr * p2[None, :, None, None]
    # (i1, s2) and (i1, s3) twiddles, then sum over i1 (axis 2)
    arr = arr * w12[None, :, :, None] * w13[:, None, :, None]
    arr = n1 * np.fft.ifft(arr, axis=2)
    arr = arr * p1[None, None, :, None]
    out = arr.reshape(spec.n, cols) / np.sqrt(spec.n)
    return out[:, 0] if vec else out


def apply_T_adjoint(x: np.ndarray, spec: LatticeSpec) -> np.ndarray:
    """FFT-backed product T^H @ x (inverse of apply_T on the unit sphere)."""
    n1, n2, n3 = spec.dims
    x = np.asarray(x)
    if x.shape[0] != spec.n:
        raise ValueError("length mismatch with the grid size")
    vec = x.ndim == 1
    cols = 1 if vec else x.shape[1]
    arr = x.reshape(n3, n2, n1, cols)
    p1, p2, p3 = _axis_phases(spec)
    w12, w13, w23 = _twiddles(spec)

    arr = arr * p1.conj()[None, None, :, None]
    arr = np.fft.fft(arr, axis=2)
    arr = arr * w12.conj()[None, :, :, None] * w13.conj()[:, None, :, None]
    arr = arr * p2.conj()[None, :, None, None]
    arr = np.fft.fft(arr, axis=1)
    arr = arr * w23.conj()[:, :, None, None]
    arr = arr * p3.conj()[:, None, None, None]
    arr = np.fft.fft(arr, axis=0)
    out = arr.reshape(spec.n, cols) / np.sqrt(spec.n)
    return out[:, 0] if vec else out


def lambda_diagonals(spec: LatticeSpec) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Diagonals of Lambda1..3 ordered by linear column index <i1,i2,i3>."""
    n1, n2, n3 = spec.dims
    d1, d2, d3 = spec.deltas
    t1, t2, t3 = spec.k_dot_ahat
    m1, m2, mh1 = spec.m1, spec.m2, spec.mhat1
    i1 = np.arange(1, n1 + 1)[None, None, :]
    i2 = np.arange(1, n2 + 1)[None, :, None]
    i3 = np.arange(1, n3 + 1)[:, None, None]
    z1 = np.exp(2j * np.pi * (t1 + i1) / n1)
    z2 = np.exp(2j * np.pi * ((t2 + i2) / n2 - m1 * i1 / (n1 * n2)))
    z3 = np.exp(
        2j
        * np.pi
        * (
            (t3 + i3) / n3
            - m2 * i2 / (n2 * n3)
            - mh1 * i1 / (n1 * n3)
            + m1 * m2 * i1 / (n1 * n2 * n3)
        )
    )
    shape = (n3, n2, n1)
    lam1 = ((z1 - 1.0) / d1 * np.ones(shape)).reshape(-1)
    lam2 = ((z2 - 1.0) / d2 * np.ones(shape)).reshape(-1)
    lam3 = ((z3 - 1.0) / d3 * np.ones(shape)).reshape(-1)
    return lam1, lam2, lam3


def default_tau(spec: LatticeSpec) -> tuple[float, float, float]:
    """(1, 2, 3), nudging tau3 up until tau_ell * delta_ell are distinct."""
    tau = [1.0, 2.0, 3.0]
    d = spec.deltas

    def clashes(t):
        prods = sorted(t[i] * d[i] for i in range(3))
        return any(abs(prods[i + 1] - prods[i]) < 1e-12 for i in range(2))

    while clashes(tau):
        tau[2] += 1.0
    return tuple(tau)


@dataclass(frozen=True)
class SpectralBasis:
    """Diagonal factors and dense SVD factors of the single-curl operator.

    P_r, Q_r are 3n x 2n; P0, Q0 are 3n x n; sigma is the length-2n
    diagonal of Sigma (sqrt of Lambda_q, repeated).  [P_r P0] and [Q_r Q0]
    are unitary.
    """

    spec: LatticeSpec
    tau: tuple[float, float, float]
    lambda1: np.ndarray
    lambda2: np.ndarray
    lambda3: np.ndarray
    lambda_q: np.ndarray
    sigma: np.ndarray
    T: np.ndarray = field(repr=False)
    P_r: np.ndarray = field(repr=False)
    Q_r: np.ndarray = field(repr=False)
    P0: np.ndarray = field(repr=False)
    Q0: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return self.spec.n

    def apply_T(self, x: np.ndarray) -> np.ndarray:
        return apply_T(x, self.spec)

    def apply_T_adjoint(self, x: np.ndarray) -> np.ndarray:
        return apply_T_adjoint(x, self.spec)


def _stack_diag_blocks(T: np.ndarray, blocks: list[np.ndarray]) -> np.ndarray:
    """(I3 (x) T) applied to a stack of three diagonal blocks (as vectors)."""
    return np.vstack([T * b[None, :] for b in blocks])


def spectral_basis(
    spec: LatticeSpec, tau: tuple[float, float, float] | None = None
) -> SpectralBasis:
    """Assemble the diagonal factors and the structured SVD of C.

    Requires a nonzero Bloch vector; with k = 0 the quadratic diagonal
    Lambda_q is singular and the rank-2n factorization does not exist.
    """
    if np.allclose(spec.k, 0.0):
        raise ValueError("the curl SVD factorization requires a nonzero Bloch vector k")
    if tau is None:
        tau = default_tau(spec)
    t1, t2, t3 = (float(x) for x in tau)
    d = spec.deltas
    prods = sorted((t1 * d[0], t2 * d[1], t3 * d[2]))
    if any(abs(prods[i + 1] - prods[i]) < 1e-12 for i in range(2)):
        raise ValueError("tau_ell * delta_ell must be pairwise distinct")

    lam1, lam2, lam3 = lambda_diagonals(spec)
    lam_q = (np.abs(lam1) ** 2 + np.abs(lam2) ** 2 + np.abs(lam3) ** 2).real
    if lam_q.min() <= 0:
        raise ValueError("Lambda_q is singular; need a nonzero Bloch vector")

    lam_q_isqrt = 1.0 / np.sqrt(lam_q)
    # cross(tau) applied to the conjugate diagonals
    p1 = -t3 * lam2.conj() + t2 * lam3.conj()
    p2 = t3 * lam1.conj() - t1 * lam3.conj()
    p3 = -t2 * lam1.conj() + t1 * lam2.conj()
    q_p = (np.abs(p1) ** 2 + np.abs(p2) ** 2 + np.abs(p3) ** 2).real
    if q_p.min() <= 0:
        raise ValueError("tau selection leaves the transverse factor rank-deficient")
    q_p_isqrt = 1.0 / np.sqrt(q_p)

    # right factors
    pi0 = [lam1 * lam_q_isqrt, lam2 * lam_q_isqrt, lam3 * lam_q_isqrt]
    pi2 = [p1 * q_p_isqrt, p2 * q_p_isqrt, p3 * q_p_isqrt]
    # left factor pi1_bar = cross(Lambda) Lambda_p (Lambda_p^H Lambda_p Lambda_q)^(-1/2)
    s = q_p_isqrt * lam_q_isqrt
    b1 = (-lam3 * p2 + lam2 * p3) * s
    b2 = (lam3 * p1 - lam1 * p3) * s
    b3 = (-lam2 * p1 + lam1 * p2) * s
    pi1_bar = [b1, b2, b3]
    pi1 = [b.conj() for b in pi1_bar]
    pi2_bar = [p.conj() for p in pi2]
    pi0_bar = [p.conj() for p in pi0]

    T = dense_T(spec)
    Q_r = np.hstack(
        [_stack_diag_blocks(T, pi1), _stack_diag_blocks(T, pi2)]
    )
    P_r = np.hstack(
        [-_stack_diag_blocks(T, pi2_bar), _stack_diag_blocks(T, pi1_bar)]
    )
    Q0 = _stack_diag_blocks(T, pi0)
    P0 = _stack_diag_blocks(T, pi0_bar)
    sigma = np.concatenate([np.sqrt(lam_q), np.sqrt(lam_q)])
    return SpectralBasis(
        spec=spec,
        tau=(t1, t2, t3),
        lambda1=lam1,
        lambda2=lam2,
        lambda3=lam3,
        lambda_q=lam_q,
        sigma=sigma,
        T=T,
        P_r=P_r,
        Q_r=Q_r,
        P0=P0,
        Q0=Q0,
    )
