"""Grid indexing, Bravais-lattice geometry, and material masks.

A uniform Yee grid with n1*n2*n3 vertices is laid over one unit cell of a
Bravais lattice with translation vectors a1, a2, a3.  Quasi-periodic wrap
across cell faces is encoded by integer shift counts (m2, m11, m12, m13)
and flags (rho2, rho11, rho12, rho13); the orthogonalized vectors
ahat1..ahat3 they induce must come out mutually orthogonal for the spec to
be geometrically admissible.  Linear indices are 1-based throughout the
public API: node <i1,i2,i3> = (i3-1)*n1*n2 + (i2-1)*n1 + i1 after periodic
reduction of each i_ell into [1, n_ell].
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

__all__ = [
    "IndexMap",
    "LatticeSpec",
    "MaterialMask",
    "Sphere",
    "Spheroid",
    "linear_index",
    "neighbor_set",
    "classify_boundary",
    "build_mask",
    "lattice_from_shifts",
    "simple_cubic",
]

# 2*pi*k in the first Brillouin zone constrains each k.a_ell to this window.
BLOCH_DOT_MIN = -2.0 / 3.0
BLOCH_DOT_MAX = 5.0 / 6.0

_ORTHO_TOL = 1e-10


def _wrap(i: int, n: int) -> int:
    """Reduce a (possibly out-of-range) 1-based index into [1, n]."""
    return (i - 1) % n + 1


@dataclass(frozen=True)
class IndexMap:
    """Bijection between periodic triple indices and linear indices [1, n]."""

    n1: int
    n2: int
    n3: int

    @property
    def n(self) -> int:
        return self.n1 * self.n2 * self.n3

    def linear(self, i1: int, i2: int, i3: int) -> int:
        i1p = _wrap(i1, self.n1)
        i2p = _wrap(i2, self.n2)
        i3p = _wrap(i3, self.n3)
        return (i3p - 1) * self.n1 * self.n2 + (i2p - 1) * self.n1 + i1p

    def triple(self, j: int) -> tuple[int, int, int]:
        """Inverse of :meth:`linear` on the canonical range [1, n]."""
        if not 1 <= j <= self.n:
            raise ValueError(f"linear index {j} outside [1, {self.n}]")
        r = j - 1
        i1 = r % self.n1 + 1
        i2 = (r // self.n1) % self.n2 + 1
        i3 = r // (self.n1 * self.n2) + 1
        return i1, i2, i3


def linear_index(i1: int, i2: int, i3: int, dims: tuple[int, int, int]) -> int:
    """Linear index of node <i1,i2,i3> with periodic wrap, 1-based."""
    n1, n2, n3 = dims
    if min(n1, n2, n3) < 1:
        raise ValueError("grid dimensions must be positive")
    return IndexMap(n1, n2, n3).linear(i1, i2, i3)


@dataclass(frozen=True)
class LatticeSpec:
    """Geometry and shift data of one Bravais unit cell on a Yee grid.

    Parameters
    ----------
    a1, a2, a3 : array_like, shape (3,)
        Lattice translation vectors (length units).
    n1, n2, n3 : int
        Grid vertex counts per direction.
    k : array_like, shape (3,)
        Bloch wave-vector argument; 2*pi*k lies in the first Brillouin
        zone, which we validate through the k.a_ell bounds only.
    rho2, rho11 : int in {0, 1}
    rho12, rho13 : int in {-1, 0, 1, 2} with rho12 - rho13 - rho11 in {0, 1}
    m2 : int in [0, n2];  m11, m12, m13 : int in [0, n1]
        with m12 - m13 - m11 in {0, n1}.

    Derived quantities (computed in ``__post_init__``): ``m1 = m11``,
    ``rho1 = rho11``, ``mhat1``, ``rhohat1``, the orthogonalized vectors
    ``ahat1..3`` (validated mutually orthogonal), mesh lengths
    ``delta_ell = |ahat_ell| / n_ell``, and the Bloch dot products.
    """

    a1: np.ndarray
    a2: np.ndarray
    a3: np.ndarray
    n1: int
    n2: int
    n3: int
    k: np.ndarray
    rho2: int = 0
    rho11: int = 0
    rho12: int = 0
    rho13: int = 0
    m2: int = 0
    m11: int = 0
    m12: int = 0
    m13: int = 0

    # filled in __post_init__
    ahat1: np.ndarray = field(init=False, repr=False)
    ahat2: np.ndarray = field(init=False, repr=False)
    ahat3: np.ndarray = field(init=False, repr=False)
    delta1: float = field(init=False, repr=False)
    delta2: float = field(init=False, repr=False)
    delta3: float = field(init=False, repr=False)

    def __post_init__(self):
        for name in ("a1", "a2", "a3", "k"):
            v = np.asarray(getattr(self, name), dtype=float).reshape(3)
            object.__setattr__(self, name, v)
        if min(self.n1, self.n2, self.n3) < 1:
            raise ValueError("grid dimensions must be positive")
        if self.rho2 not in (0, 1) or self.rho11 not in (0, 1):
            raise ValueError("rho2 and rho11 must be 0 or 1")
        for name in ("rho12", "rho13"):
            if getattr(self, name) not in (-1, 0, 1, 2):
                raise ValueError(f"{name} must be in {{-1,0,1,2}}")
        if self.rho12 - self.rho13 - self.rho11 not in (0, 1):
            raise ValueError("rho12 - rho13 - rho11 must be 0 or 1")
        if not 0 <= self.m2 <= self.n2:
            raise ValueError("m2 out of [0, n2]")
        for name in ("m11", "m12", "m13"):
            if not 0 <= getattr(self, name) <= self.n1:
                raise ValueError(f"{name} out of [0, n1]")
        if self.m12 - self.m13 - self.m11 not in (0, self.n1):
            raise ValueError("m12 - m13 - m11 must be 0 or n1")
        # the two excess flags must agree, otherwise the three shift
        # permutations admit no simultaneous eigenbasis at all
        if (self.rho12 - self.rho13 - self.rho11) * self.n1 != (
            self.m12 - self.m13 - self.m11
        ):
            raise ValueError(
                "rho12 - rho13 - rho11 must equal (m12 - m13 - m11)/n1"
            )

        ahat1 = self.a1.copy()
        ahat2 = self.a2 + (self.rho1 - self.m1 / self.n1) * ahat1
        ahat3 = (
            self.a3
            + (self.rho2 - self.m2 / self.n2) * ahat2
            + (
                self.rhohat1
                - self.mhat1 / self.n1
                - self.rho2 * (self.rho1 - self.m1 / self.n1)
            )
            * ahat1
        )
        scale = max(np.linalg.norm(v) for v in (ahat1, ahat2, ahat3))
        for u, v in ((ahat1, ahat2), (ahat1, ahat3), (ahat2, ahat3)):
            if abs(np.dot(u, v)) > _ORTHO_TOL * scale * scale:
                raise ValueError(
                    "orthogonalized vectors ahat1..3 are not mutually "
                    "orthogonal; the (a, m, rho) combination is inconsistent"
                )
        object.__setattr__(self, "ahat1", ahat1)
        object.__setattr__(self, "ahat2", ahat2)
        object.__setattr__(self, "ahat3", ahat3)
        object.__setattr__(self, "delta1", np.linalg.norm(ahat1) / self.n1)
        object.__setattr__(self, "delta2", np.linalg.norm(ahat2) / self.n2)
        object.__setattr__(self, "delta3", np.linalg.norm(ahat3) / self.n3)

        for dot in self.k_dot_a:
            if not BLOCH_DOT_MIN - 1e-12 <= dot <= BLOCH_DOT_MAX + 1e-12:
                raise ValueError(
                    f"k.a_ell = {dot:.6g} outside the Brillouin-zone window "
                    f"[{BLOCH_DOT_MIN:.4g}, {BLOCH_DOT_MAX:.4g}]"
                )

    # -- derived scalars ------------------------------------------------

    @property
    def m1(self) -> int:
        return self.m11

    @property
    def rho1(self) -> int:
        return self.rho11

    # The composite a3-face shift: crossing the a3 face moves i1 by m12 or
    # m13 depending on the simultaneous i2 wrap, and the two branches
    # share an eigenbasis only for mhat1 = m11 + m13 (mod n1) with the
    # flag rhohat1 tied to it the same way.
    @property
    def mhat1(self) -> int:
        return self.m11 + self.m13

    @property
    def rhohat1(self) -> int:
        return self.rho11 + self.rho13

    @property
    def dims(self) -> tuple[int, int, int]:
        return (self.n1, self.n2, self.n3)

    @property
    def n(self) -> int:
        return self.n1 * self.n2 * self.n3

    @property
    def deltas(self) -> tuple[float, float, float]:
        return (self.delta1, self.delta2, self.delta3)

    @property
    def index_map(self) -> IndexMap:
        return IndexMap(self.n1, self.n2, self.n3)

    @property
    def k_dot_a(self) -> tuple[float, float, float]:
        return (
            float(np.dot(self.k, self.a1)),
            float(np.dot(self.k, self.a2)),
            float(np.dot(self.k, self.a3)),
        )

    @property
    def k_dot_ahat(self) -> tuple[float, float, float]:
        return (
            float(np.dot(self.k, self.ahat1)),
            float(np.dot(self.k, self.ahat2)),
            float(np.dot(self.k, self.ahat3)),
        )

    def positions(self) -> np.ndarray:
        """Physical positions of all n nodes, ordered by linear index.

        Node <i1,i2,i3> sits at (i1-1)/n1*a1 + (i2-1)/n2*a2 + (i3-1)/n3*a3.
        """
        r1 = np.arange(self.n1) / self.n1
        r2 = np.arange(self.n2) / self.n2
        r3 = np.arange(self.n3) / self.n3
        f3, f2, f1 = np.meshgrid(r3, r2, r1, indexing="ij")
        frac = np.stack([f1.ravel(), f2.ravel(), f3.ravel()], axis=1)
        return frac @ np.vstack([self.a1, self.a2, self.a3])


def neighbor_set(i1: int, i2: int, i3: int, spec: LatticeSpec) -> frozenset[int]:
    """The node and its <= 6 lattice neighbors, as linear indices.

    Neighbors are the off-diagonal row/column partners of the node in the
    three one-direction curl factors; crossing a periodic face applies the
    shift counts m1 (a2-face) and m12/m13 with m2 (a3-face).
    """
    im = spec.index_map
    n1, n2, n3 = spec.dims
    m1, m2 = spec.m1, spec.m2
    out = {im.linear(i1, i2, i3)}
    i1 = _wrap(i1, n1)
    i2 = _wrap(i2, n2)
    i3 = _wrap(i3, n3)

    # direction a1: plain cyclic coupling
    out.add(im.linear(i1 + 1, i2, i3))
    out.add(im.linear(i1 - 1, i2, i3))

    # direction a2: i1 shifts by m1 across the i2 face
    if i2 < n2:
        out.add(im.linear(i1, i2 + 1, i3))
    else:
        out.add(im.linear(i1 - m1, 1, i3))
    if i2 > 1:
        out.add(im.linear(i1, i2 - 1, i3))
    else:
        out.add(im.linear(i1 + m1, n2, i3))

    # direction a3: i2 shifts by m2 and i1 by m12/m13 across the i3 face
    if i3 < n3:
        out.add(im.linear(i1, i2, i3 + 1))
    else:
        if i2 > m2:
            out.add(im.linear(i1 - spec.m12, i2 - m2, 1))
        else:
            out.add(im.linear(i1 - spec.m13, i2 - m2 + n2, 1))
    if i3 > 1:
        out.add(im.linear(i1, i2, i3 - 1))
    else:
        if i2 <= n2 - m2:
            out.add(im.linear(i1 + spec.m12, i2 + m2, n3))
        else:
            out.add(im.linear(i1 + spec.m13, i2 + m2 - n2, n3))
    return frozenset(out)


@dataclass(frozen=True)
class MaterialMask:
    """Partition of the grid into medium (inside) and background (outside).

    ``inside`` holds sorted 1-based linear indices of the nodes inside the
    medium; every other node is outside.  One scalar permittivity per node.
    """

    n: int
    inside: np.ndarray
    eps_i: float
    eps_o: float

    def __post_init__(self):
        idx = np.unique(np.asarray(self.inside, dtype=np.int64))
        if idx.size and (idx[0] < 1 or idx[-1] > self.n):
            raise ValueError("inside indices must lie in [1, n]")
        object.__setattr__(self, "inside", idx)
        if not (self.eps_i > 0 and self.eps_o > 0):
            raise ValueError("permittivities must be positive")

    @property
    def outside(self) -> np.ndarray:
        flags = np.ones(self.n, dtype=bool)
        flags[self.inside - 1] = False
        return np.nonzero(flags)[0] + 1

    @property
    def inside_flags(self) -> np.ndarray:
        """Boolean indicator over nodes (0-based positions)."""
        flags = np.zeros(self.n, dtype=bool)
        flags[self.inside - 1] = True
        return flags

    @property
    def gamma_star(self) -> float:
        return float(np.sqrt(self.eps_i))

    @property
    def size_inside(self) -> int:
        return int(self.inside.size)


def classify_boundary(
    mask: MaterialMask, spec: LatticeSpec
) -> tuple[frozenset[int], frozenset[int]]:
    """Split the inside set into boundary and interior nodes.

    A node of the inside set is interior when its full neighbor set stays
    inside, boundary otherwise.  Returns (boundary, interior).
    """
    if mask.n != spec.n:
        raise ValueError("mask size does not match the lattice grid")
    inside = frozenset(int(j) for j in mask.inside)
    im = spec.index_map
    boundary, interior = set(), set()
    for j in inside:
        nb = neighbor_set(*im.triple(j), spec)
        if nb <= inside:
            interior.add(j)
        else:
            boundary.add(j)
    return frozenset(boundary), frozenset(interior)


@dataclass(frozen=True)
class Sphere:
    """Ball in physical space; center in fractional coordinates of (a1,a2,a3)."""

    center: tuple[float, float, float]
    radius: float

    def contains(self, points: np.ndarray, basis: np.ndarray) -> np.ndarray:
        if self.radius < 0:
            raise ValueError("sphere radius must be nonnegative")
        c = np.asarray(self.center, dtype=float) @ basis
        d = np.linalg.norm(points - c, axis=1)
        return d <= self.radius + 1e-12 * max(1.0, self.radius)


@dataclass(frozen=True)
class Spheroid:
    """Ellipsoid of revolution: semi-axis along ``axis``, semi-radius across.

    ``center`` and ``axis`` are in fractional coordinates; the containment
    test runs in physical space.
    """

    center: tuple[float, float, float]
    axis: tuple[float, float, float]
    semi_axis: float
    semi_radius: float

    def contains(self, points: np.ndarray, basis: np.ndarray) -> np.ndarray:
        if self.semi_axis < 0 or self.semi_radius < 0:
            raise ValueError("spheroid semi-axes must be nonnegative")
        c = np.asarray(self.center, dtype=float) @ basis
        u = np.asarray(self.axis, dtype=float) @ basis
        nu = np.linalg.norm(u)
        if nu == 0:
            raise ValueError("spheroid axis must be nonzero")
        u = u / nu
        d = points - c
        para = d @ u
        perp2 = np.maximum(np.einsum("ij,ij->i", d, d) - para**2, 0.0)
        a = max(self.semi_axis, 1e-300)
        b = max(self.semi_radius, 1e-300)
        q = (para / a) ** 2 + perp2 / b**2
        return q <= 1.0 + 1e-12


def build_mask(
    geometry: Sequence[Sphere | Spheroid],
    spec: LatticeSpec,
    eps_i: float,
    eps_o: float,
) -> MaterialMask:
    """Mark every node whose physical position lies in the shape union.

    Boundary points count as inside (closed-set convention), which keeps
    masks deterministic across platforms.
    """
    if spec.n < 1:
        raise ValueError("empty grid")
    pts = spec.positions()
    basis = np.vstack([spec.a1, spec.a2, spec.a3])
    flags = np.zeros(spec.n, dtype=bool)
    for shape in geometry:
        flags |= shape.contains(pts, basis)
    return MaterialMask(spec.n, np.nonzero(flags)[0] + 1, eps_i, eps_o)


def lattice_from_shifts(
    n: tuple[int, int, int],
    lengths: tuple[float, float, float] = (1.0, 1.0, 1.0),
    k: Sequence[float] = (0.0, 0.0, 0.0),
    *,
    rho2: int = 0,
    rho11: int = 0,
    rho12: int = 0,
    rho13: int = 0,
    m2: int = 0,
    m11: int = 0,
    m12: int = 0,
    m13: int = 0,
) -> LatticeSpec:
    """Construct a consistent LatticeSpec from shift data.

    Chooses axis-aligned orthogonal ahat1..3 with |ahat_ell| = lengths[ell]
    and inverts the orthogonalization relations for a1..a3, so any shift
    combination satisfying the integer constraints yields an admissible
    spec.
    """
    n1, n2, n3 = n
    m1, rho1 = m11, rho11
    rho2_, m2_ = rho2, m2
    mhat1 = m11 + m13
    rhohat1 = rho11 + rho13
    ahat1 = np.array([lengths[0], 0.0, 0.0])
    ahat2 = np.array([0.0, lengths[1], 0.0])
    ahat3 = np.array([0.0, 0.0, lengths[2]])
    a1 = ahat1
    a2 = ahat2 - (rho1 - m1 / n1) * ahat1
    a3 = (
        ahat3
        - (rho2_ - m2_ / n2) * ahat2
        - (rhohat1 - mhat1 / n1 - rho2_ * (rho1 - m1 / n1)) * ahat1
    )
    return LatticeSpec(
        a1, a2, a3, n1, n2, n3, np.asarray(k, dtype=float),
        rho2=rho2, rho11=rho11, rho12=rho12, rho13=rho13,
        m2=m2, m11=m11, m12=m12, m13=m13,
    )


def simple_cubic(
    n: tuple[int, int, int],
    k: Sequence[float] = (0.0, 0.0, 0.0),
    lengths: tuple[float, float, float] = (1.0, 1.0, 1.0),
) -> LatticeSpec:
    """Axis-aligned lattice with no face shifts."""
    return lattice_from_shifts(n, lengths, k)
