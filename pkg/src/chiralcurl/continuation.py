"""Chirality sweeps: eigenvalue curves, event detection, and refinement.

A sweep solves the reduced 4n pencil on an increasing gamma grid, matches
eigenvalues between consecutive samples by minimal total displacement
(with a penalty against real/nonreal mixing), and appends the 2n trivial
zero curves so the full 6n multiset is accounted for at every sample.
Detected events are conjugate-pair births, pair/axis collisions with real
splits, the reverse merges, and new-ground-state takeovers; collisions are
refined by bisection to a requested bracket width.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
from scipy.optimize import linear_sum_assignment

from .curl import CurlBlocks, assemble_curl
from .lattice import LatticeSpec, MaterialMask
from .pencil import _triple, inside_projector_diag, phi_diagonal
from .spectral import SpectralBasis, spectral_basis
from .nfgep import NfgepAssembly, recover_fields

__all__ = [
    "GammaSolver",
    "EigenCurveSet",
    "BifurcationEvent",
    "sweep",
    "detect_events",
    "refine_event",
    "event_types_after",
    "verify_imaginary_axis",
    "write_curves_csv",
    "read_curves_csv",
    "events_to_jsonable",
]

REAL_TOL = 1e-8          # |Im| below this (scale-aware) counts as collided/real
MATCH_PENALTY = 1e6      # discourages real<->nonreal matches in assignment
TYPE_FORM_TOL = 1e-8     # |x^H B x| below this leaves the type undefined


def _is_real(v: np.ndarray | complex, tol: float = REAL_TOL):
    return np.abs(np.imag(v)) <= tol * (1.0 + np.abs(np.real(v)))


class GammaSolver:
    """Reduced-pencil solver for one fixture, reusable across gamma.

    The gamma dependence of the reduced matrix enters through three scalar
    coefficients, so the Gram blocks against the inside projector are
    precomputed once and each solve costs one dense eigendecomposition.
    """

    def __init__(
        self,
        spec: LatticeSpec,
        mask: MaterialMask,
        basis: SpectralBasis | None = None,
        blocks: CurlBlocks | None = None,
    ):
        self.spec = spec
        self.mask = mask
        self.blocks = blocks if blocks is not None else assemble_curl(spec)
        self.basis = basis if basis is not None else spectral_basis(spec)
        n = spec.n
        ind3 = _triple(inside_projector_diag(mask))
        Pr, Qr = self.basis.P_r, self.basis.Q_r
        self._G_pp = Pr.conj().T @ (ind3[:, None] * Pr)
        self._G_pq = Pr.conj().T @ (ind3[:, None] * Qr)
        self._G_qq = Qr.conj().T @ (ind3[:, None] * Qr)
        self._eye2n = np.eye(2 * n)
        s_inv = 1.0 / self.basis.sigma
        B = np.zeros((4 * n, 4 * n), dtype=complex)
        B[: 2 * n, 2 * n :] = 1j * np.diag(s_inv)
        B[2 * n :, : 2 * n] = -1j * np.diag(s_inv)
        self.B_r = B
        # closed-form inverse keeps the per-gamma solve a standard problem
        Binv = np.zeros_like(B)
        Binv[: 2 * n, 2 * n :] = 1j * np.diag(self.basis.sigma)
        Binv[2 * n :, : 2 * n] = -1j * np.diag(self.basis.sigma)
        self._B_inv = Binv
        self.n = n

    def reduced_matrix(self, gamma: float) -> np.ndarray:
        if abs(gamma - self.mask.gamma_star) < 1e-13 * max(1.0, self.mask.gamma_star):
            raise ValueError("reduced pencil undefined at the critical chirality")
        w = self.mask.eps_i - gamma**2
        tl = self._eye2n + (gamma**2 / w) * self._G_pp
        tr = (-1j * gamma / w) * self._G_pq
        br = (self._eye2n - self._G_qq) / self.mask.eps_o + self._G_qq / w
        return np.block([[tl, tr], [tr.conj().T, br]])

    def eigenvalues(self, gamma: float) -> np.ndarray:
        vals = sla.eig(self._B_inv @ self.reduced_matrix(gamma), right=False)
        return vals[np.lexsort((vals.imag, vals.real))]

    def eigenpairs(self, gamma: float) -> tuple[np.ndarray, np.ndarray]:
        vals, vecs = sla.eig(self._B_inv @ self.reduced_matrix(gamma), right=True)
        order = np.lexsort((vals.imag, vals.real))
        return vals[order], vecs[:, order]

    def _assembly(self, gamma: float) -> NfgepAssembly:
        return NfgepAssembly(
            self.spec, self.mask, gamma, self.basis,
            self.reduced_matrix(gamma), self.B_r,
        )

    def fields(self, gamma: float, y_r: np.ndarray):
        return recover_fields(y_r, self._assembly(gamma))

    def pencil_b_form(self, gamma: float, e: np.ndarray, h: np.ndarray) -> float:
        """x^H B x of the pencil eigenvector built from the fields (h, e)."""
        ind3 = _triple(inside_projector_diag(self.mask))
        z1 = h - 1j * gamma * (ind3 * e)
        phi = phi_diagonal(self.mask, gamma)
        q = np.real(np.vdot(z1, z1)) + np.real(np.vdot(e, phi * e))
        return float(q / (np.vdot(z1, z1).real + np.vdot(e, e).real))

    def mu_types(self, gamma: float, vals: np.ndarray, vecs: np.ndarray) -> np.ndarray:
        """Sign characteristics for the simple real eigenvalues, else 0."""
        m = vals.size
        out = np.zeros(m, dtype=int)
        real = _is_real(vals)
        gaps = np.full(m, np.inf)
        for j in range(m):
            d = np.abs(vals - vals[j])
            d[j] = np.inf
            gaps[j] = d.min()
        scale = 1.0 + np.abs(vals.real).max()
        for j in range(m):
            if not real[j] or gaps[j] <= 1e-10 * scale:
                continue
            h, e = self.fields(gamma, vecs[:, j])
            q = self.pencil_b_form(gamma, e, h)
            if abs(q) > TYPE_FORM_TOL:
                out[j] = 1 if q > 0 else -1
        return out


@dataclass
class EigenCurveSet:
    """Matched eigenvalue trajectories over an ordered gamma grid.

    values has shape (n_curves, n_samples); the final 2n rows are the
    trivial zero curves.  types uses +1/-1 for classified simple real
    eigenvalues and 0 for unknown.
    """

    gammas: np.ndarray
    values: np.ndarray
    types: np.ndarray
    n_trivial: int
    matching_flags: list = field(default_factory=list)

    @property
    def n_curves(self) -> int:
        return self.values.shape[0]

    @property
    def n_samples(self) -> int:
        return self.gammas.size

    def nontrivial(self) -> np.ndarray:
        return self.values[: self.n_curves - self.n_trivial]


def _match(prev: np.ndarray, cur: np.ndarray) -> np.ndarray:
    """Assignment of previous-sample eigenvalues onto current ones."""
    D = np.abs(prev[:, None] - cur[None, :])
    mix = _is_real(prev)[:, None] != _is_real(cur)[None, :]
    scale = 1.0 + np.abs(cur).max()
    rows, cols = linear_sum_assignment(D + MATCH_PENALTY * scale * mix)
    perm = np.empty_like(cols)
    perm[rows] = cols
    return perm


def sweep(
    spec: LatticeSpec,
    mask: MaterialMask,
    gamma_grid: np.ndarray,
    solver: GammaSolver | None = None,
    compute_types: bool = True,
    adaptive: bool = False,
    max_inserts: int = 40,
) -> EigenCurveSet:
    """Track the full spectrum over an increasing gamma grid.

    With ``adaptive`` set, midpoints are inserted wherever a conjugate
    pair's |Im| shrinks by more than half between neighbors, up to
    ``max_inserts`` extra samples, so collisions are bracketed tightly
    enough for refinement.
    """
    gammas = np.asarray(gamma_grid, dtype=float)
    if gammas.size < 1 or np.any(np.diff(gammas) < 0):
        raise ValueError("gamma grid must be nondecreasing")
    if solver is None:
        solver = GammaSolver(spec, mask)

    def solve(g):
        if compute_types:
            vals, vecs = solver.eigenpairs(g)
            return vals, solver.mu_types(g, vals, vecs)
        return solver.eigenvalues(g), np.zeros(4 * solver.n, dtype=int)

    glist = list(gammas)
    vals_list, types_list = [], []
    for g in glist:
        v, t = solve(g)
        vals_list.append(v)
        types_list.append(t)

    if adaptive:
        inserts = 0
        i = 0
        while i < len(glist) - 1 and inserts < max_inserts:
            v0, v1 = vals_list[i], vals_list[i + 1]
            im0 = np.abs(v0.imag)
            cand = im0 > REAL_TOL * (1.0 + np.abs(v0.real))
            needs = False
            if cand.any() and (glist[i + 1] - glist[i]) > 1e-9:
                perm = _match(v0, v1)
                im1 = np.abs(v1.imag[perm])
                shrunk = cand & (im1 < 0.5 * im0)
                needs = bool(shrunk.any())
            if needs:
                gm = 0.5 * (glist[i] + glist[i + 1])
                vm, tm = solve(gm)
                glist.insert(i + 1, gm)
                vals_list.insert(i + 1, vm)
                types_list.insert(i + 1, tm)
                inserts += 1
            else:
                i += 1

    S = len(glist)
    m = vals_list[0].size
    values = np.empty((m, S), dtype=complex)
    types = np.zeros((m, S), dtype=int)
    values[:, 0] = vals_list[0]
    types[:, 0] = types_list[0]
    flags = []
    for s in range(1, S):
        perm = _match(values[:, s - 1], vals_list[s])
        values[:, s] = vals_list[s][perm]
        types[:, s] = types_list[s][perm]
        mixed = _is_real(values[:, s - 1]) != _is_real(values[:, s])
        if mixed.any():
            flags.append((glist[s - 1], glist[s], int(mixed.sum())))

    n_trivial = 2 * solver.n
    zeros = np.zeros((n_trivial, S), dtype=complex)
    values = np.vstack([values, zeros])
    types = np.vstack([types, np.zeros((n_trivial, S), dtype=int)])
    return EigenCurveSet(
        gammas=np.asarray(glist),
        values=values,
        types=types,
        n_trivial=n_trivial,
        matching_flags=flags,
    )


@dataclass
class BifurcationEvent:
    kind: str
    gamma_located: float
    location: complex
    bracket: tuple[float, float]
    types_after: tuple[int, int] | None = None
    confidence: str = "high"
    curves: tuple[int, ...] = ()


def detect_events(
    curves: EigenCurveSet, gamma_star: float | None = None
) -> list[BifurcationEvent]:
    """Scan matched curves for births, collisions, merges, ground states.

    A nonreal pair appearing in an interval containing the critical
    chirality is a birth; appearing elsewhere is a real-collision merge;
    a pair turning real is a collision/split.  A new ground state is a
    change of identity of the smallest positive real eigenvalue.
    """
    ev: list[BifurcationEvent] = []
    V = curves.nontrivial()
    g = curves.gammas
    S = curves.n_samples
    real = np.abs(V.imag) <= REAL_TOL * (1.0 + np.abs(V.real))

    for s in range(S - 1):
        went_complex = real[:, s] & ~real[:, s + 1]
        went_real = ~real[:, s] & real[:, s + 1]
        lo, hi = float(g[s]), float(g[s + 1])

        if went_complex.any():
            idx = np.nonzero(went_complex)[0]
            pos = idx[V.imag[idx, s + 1] > 0]
            crossing_star = (
                gamma_star is not None and lo < gamma_star <= hi
            )
            kind = "imaginary_birth" if crossing_star else "real_collision_merge"
            conf = "high" if pos.size == 1 or kind == "imaginary_birth" else "low"
            for c in pos:
                ev.append(
                    BifurcationEvent(
                        kind=kind,
                        gamma_located=0.5 * (lo + hi),
                        location=complex(V[c, s + 1]),
                        bracket=(lo, hi),
                        confidence=conf,
                        curves=(int(c),),
                    )
                )
        if went_real.any():
            idx = np.nonzero(went_real)[0]
            pos = idx[V.imag[idx, s] > 0]
            conf = "high" if pos.size == 1 else "low"
            for c in pos:
                ev.append(
                    BifurcationEvent(
                        kind="collision_split",
                        gamma_located=0.5 * (lo + hi),
                        location=complex(V[c, s].real),
                        bracket=(lo, hi),
                        confidence=conf,
                        curves=(int(c),),
                    )
                )

    # new smallest positive eigenvalue
    prev_id, prev_val = None, None
    for s in range(S):
        vals = V[:, s]
        mask_pos = real[:, s] & (vals.real > REAL_TOL)
        if not mask_pos.any():
            prev_id, prev_val = None, None
            continue
        cand = np.nonzero(mask_pos)[0]
        c = cand[np.argmin(vals.real[cand])]
        val = float(vals.real[c])
        if prev_id is not None and c != prev_id and prev_id in set(np.nonzero(mask_pos)[0]):
            ev.append(
                BifurcationEvent(
                    kind="new_ground_state",
                    gamma_located=float(g[s]),
                    location=complex(val),
                    bracket=(float(g[max(s - 1, 0)]), float(g[s])),
                    curves=(int(c), int(prev_id)),
                )
            )
        prev_id, prev_val = c, val
    ev.sort(key=lambda e: (e.gamma_located, e.kind))
    return ev


def _refine_birth(event, solver, tol, max_depth):
    lo, hi = event.bracket

    def indicator(g):
        return bool((~_is_real(solver(g))).any())

    if indicator(lo) or not indicator(hi):
        raise RuntimeError("bracket orientation does not match a pair birth")
    depth = 0
    while hi - lo > tol and depth < max_depth:
        mid = 0.5 * (lo + hi)
        if indicator(mid):
            hi = mid
        else:
            lo = mid
        depth += 1
    vals = solver(hi)
    nr = vals[(~_is_real(vals)) & (vals.imag > 0)]
    location = (
        complex(nr[np.argmin(np.abs(nr - event.location))]) if nr.size else event.location
    )
    return BifurcationEvent(
        kind=event.kind,
        gamma_located=0.5 * (lo + hi),
        location=location,
        bracket=(float(lo), float(hi)),
        types_after=event.types_after,
        confidence=event.confidence,
        curves=event.curves,
    )


def refine_event(
    event: BifurcationEvent,
    solver,
    tol: float = 1e-9,
    max_depth: int = 60,
    max_evals: int = 400,
) -> BifurcationEvent:
    """Refine an event bracket to the requested width.

    ``solver`` maps gamma to the eigenvalue array.  Births bisect on the
    existence of any nonreal eigenvalue.  Collisions and merges follow the
    specific conjugate pair by complex-distance continuity from the side
    where it exists: each trial step toward the far end is accepted only
    when a nonreal eigenvalue continues the tracked pair within an
    adaptive cap, so an unrelated pair parked near the same real part
    cannot hijack the bracket; rejected steps halve, which is exactly a
    bisection on the pair's disappearance.
    """
    if event.kind == "imaginary_birth":
        return _refine_birth(event, solver, tol, max_depth)
    if event.kind not in ("collision_split", "real_collision_merge"):
        return event

    lo, hi = event.bracket
    direction = 1.0 if event.kind == "collision_split" else -1.0
    g_ok = lo if direction > 0 else hi
    g_bad = hi if direction > 0 else lo

    vals = solver(g_ok)
    nr = vals[(~_is_real(vals)) & (vals.imag > 0)]
    if nr.size == 0:
        raise RuntimeError("no conjugate pair on the event's live side")
    j = int(np.argmin(np.abs(nr.real - event.location.real)))
    pair = complex(nr[j])
    im_seed = abs(pair.imag)
    others = np.delete(nr, j)
    # accept continuation steps up to a cap below the nearest bystander
    base_cap = 0.25 * (1.0 + abs(pair))
    if others.size:
        base_cap = min(base_cap, 0.45 * float(np.abs(others - pair).min()))
    cap = max(base_cap, 100.0 * tol)

    evals = 0
    last_move = None
    while abs(g_bad - g_ok) > tol and evals < max_evals:
        mid = 0.5 * (g_ok + g_bad)
        vals = solver(mid)
        evals += 1
        nr = vals[(~_is_real(vals)) & (vals.imag > 0)]
        accept = False
        if nr.size:
            j = int(np.argmin(np.abs(nr - pair)))
            d = float(abs(nr[j] - pair))
            step_cap = cap if last_move is None else max(6.0 * last_move, 100.0 * tol)
            if d <= min(cap, step_cap):
                accept = True
        if accept:
            last_move = max(d, 1e-15)
            pair = complex(nr[j])
            g_ok = mid
        else:
            g_bad = mid
    if abs(g_bad - g_ok) > tol:
        raise RuntimeError("pair tracking did not converge inside the bracket")
    # a genuine collision drives the tracked pair onto the real axis; a pair
    # that merely ran away (detection artifact) still has sizable imaginary
    # part at the bracket edge
    if abs(pair.imag) > max(
        10.0 * REAL_TOL * (1.0 + abs(pair.real)), 0.05 * im_seed
    ):
        raise RuntimeError("tracked pair never reached the real axis")
    lo_f, hi_f = sorted((g_ok, g_bad))
    return BifurcationEvent(
        kind=event.kind,
        gamma_located=0.5 * (lo_f + hi_f),
        location=complex(pair.real),
        bracket=(float(lo_f), float(hi_f)),
        types_after=event.types_after,
        confidence=event.confidence,
        curves=event.curves,
    )


def event_types_after(
    event: BifurcationEvent, solver: GammaSolver, offset: float = 1e-6
) -> tuple[int, int] | None:
    """Sign characteristics (mu_left, mu_right) just after a split."""
    if event.kind != "collision_split":
        return None
    g = event.gamma_located
    loc = event.location.real
    for trial in range(6):
        gp = g + offset * (10.0**trial)
        vals, vecs = solver.eigenpairs(gp)
        real_idx = np.nonzero(_is_real(vals))[0]
        x = vals[real_idx].real
        below = real_idx[x < loc]
        above = real_idx[x >= loc]
        if below.size == 0 or above.size == 0:
            continue
        # the split pair straddles the collision point
        left = below[np.argmax(vals[below].real)]
        right = above[np.argmin(vals[above].real)]
        mus = []
        for c in (left, right):
            h, e = solver.fields(gp, vecs[:, c])
            q = solver.pencil_b_form(gp, e, h)
            mus.append(0 if abs(q) <= TYPE_FORM_TOL else (1 if q > 0 else -1))
        if 0 not in mus:
            return (mus[0], mus[1])
    return None


@dataclass(frozen=True)
class ImaginaryAxisCheck:
    gamma: float
    omega: complex
    outside_component: float
    cross_term: float
    modulus_rel_err: float


def verify_imaginary_axis(
    solver: GammaSolver, gammas: np.ndarray
) -> tuple[list[ImaginaryAxisCheck], bool]:
    """Checks on every nonreal eigenpair near the critical chirality.

    Per pair: the field should vanish outside the medium, the inside
    cross term Re[e^H Pi C e] should vanish, and |omega| should follow
    (gamma^2 - eps_i)^(-1/2) |C e| / |e|.  Returns the per-pair reports
    and whether max |omega| strictly decreases along the gamma ascent.
    """
    mask = solver.mask
    ind3 = _triple(inside_projector_diag(mask))
    C = solver.blocks.C
    reports = []
    peak = []
    for g in np.asarray(gammas, dtype=float):
        vals, vecs = solver.eigenpairs(g)
        nonreal = ~_is_real(vals)
        peak.append(np.abs(vals[nonreal].imag).max() if nonreal.any() else 0.0)
        for j in np.nonzero(nonreal)[0]:
            if vals[j].imag < 0:
                continue
            h, e = solver.fields(g, vecs[:, j])
            e = e / np.linalg.norm(e)
            Ce = C @ e
            outside = float(np.abs((1.0 - ind3) * e).max())
            cross = float(abs(np.real(np.vdot(e, ind3 * Ce))))
            pred = np.linalg.norm(Ce) / np.sqrt(g**2 - mask.eps_i)
            rel = float(abs(abs(vals[j]) - pred) / pred)
            reports.append(ImaginaryAxisCheck(g, complex(vals[j]), outside, cross, rel))
    decreasing = all(b < a for a, b in zip(peak, peak[1:]))
    return reports, decreasing


# -- file formats -----------------------------------------------------------


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def write_curves_csv(path: str, curves: EigenCurveSet) -> None:
    """Rows (gamma, curve_id, re, im, type) sorted by (curve_id, gamma)."""
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["gamma", "curve_id", "re", "im", "type"])
        for c in range(curves.n_curves):
            for s in range(curves.n_samples):
                v = curves.values[c, s]
                t = int(curves.types[c, s])
                w.writerow(
                    [_fmt(curves.gammas[s]), c, _fmt(v.real), _fmt(v.imag), t]
                )


def read_curves_csv(path: str) -> dict[int, list[tuple[float, complex, int]]]:
    out: dict[int, list[tuple[float, complex, int]]] = {}
    with open(path, newline="") as f:
        r = csv.DictReader(f)
        for row in r:
            c = int(row["curve_id"])
            out.setdefault(c, []).append(
                (
                    float(row["gamma"]),
                    complex(float(row["re"]), float(row["im"])),
                    int(row["type"]),
                )
            )
    return out


def events_to_jsonable(events: list[BifurcationEvent]) -> list[dict]:
    out = []
    for e in events:
        d = {
            "kind": e.kind,
            "gamma_located": e.gamma_located,
            "location": {"re": e.location.real, "im": e.location.imag},
            "bracket": [e.bracket[0], e.bracket[1]],
            "types_after": list(e.types_after) if e.types_after else None,
            "confidence": e.confidence,
            "curves": list(e.curves),
        }
        out.append(d)
    return out
