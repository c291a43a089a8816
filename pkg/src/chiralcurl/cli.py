"""Command-line entry points and the JSON run-configuration schema.

Subcommands: verify (cross-module identity checks), sweep (eigencurves +
events), analyze (structural certificate), nfgep (reduced spectra).
Exit codes: 0 ok, 1 invariant failure, 2 configuration error, 3 resource
cap exceeded.  All outputs carry the configuration hash and the package
version; files are written atomically.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import tempfile

import numpy as np

from . import __version__
from .curl import assemble_curl
from .lattice import (
    LatticeSpec,
    MaterialMask,
    Sphere,
    Spheroid,
    build_mask,
)
from .spectral import spectral_basis, dense_T, lambda_diagonals, default_tau
from .pencil import assemble_pencil, solve_dense_pencil, residual_check, trivial_null_basis
from .nfgep import assemble_nfgep, solve_nfgep
from .structure import (
    appendix_condition,
    infinite_eigen_census,
    jordan_block_test,
    regularity_test,
    u_matrices,
)
from .continuation import (
    GammaSolver,
    detect_events,
    event_types_after,
    events_to_jsonable,
    refine_event,
    sweep,
    write_curves_csv,
)

EXIT_OK = 0
EXIT_INVARIANT = 1
EXIT_CONFIG = 2
EXIT_RESOURCE = 3


class ConfigError(Exception):
    pass


class ResourceCapError(Exception):
    pass


def _atomic_write(path: str, text: str) -> None:
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def config_hash(cfg: dict) -> str:
    return hashlib.sha256(
        json.dumps(cfg, sort_keys=True, separators=(",", ":")).encode()
    ).hexdigest()[:16]


def _get(cfg: dict, key: str, default=None, required: bool = False):
    if key in cfg:
        return cfg[key]
    if required:
        raise ConfigError(f"missing required config field {key!r}")
    return default


def load_config(path: str) -> dict:
    try:
        with open(path) as f:
            return json.load(f)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except json.JSONDecodeError as e:
        raise ConfigError(f"malformed JSON in {path}: line {e.lineno} col {e.colno}: {e.msg}")


def lattice_from_config(cfg: dict) -> LatticeSpec:
    lat = _get(cfg, "lattice", required=True)
    try:
        n = lat["n"]
        spec = LatticeSpec(
            a1=np.asarray(lat["a1"], dtype=float),
            a2=np.asarray(lat["a2"], dtype=float),
            a3=np.asarray(lat["a3"], dtype=float),
            n1=int(n[0]),
            n2=int(n[1]),
            n3=int(n[2]),
            k=np.asarray(lat.get("k", [0.0, 0.0, 0.0]), dtype=float),
            rho2=int(lat.get("rho2", 0)),
            rho11=int(lat.get("rho11", 0)),
            rho12=int(lat.get("rho12", 0)),
            rho13=int(lat.get("rho13", 0)),
            m2=int(lat.get("m2", 0)),
            m11=int(lat.get("m11", 0)),
            m12=int(lat.get("m12", 0)),
            m13=int(lat.get("m13", 0)),
        )
    except KeyError as e:
        raise ConfigError(f"lattice config missing field {e}")
    except ValueError as e:
        raise ConfigError(f"invalid lattice: {e}")
    return spec


def mask_from_config(cfg: dict, spec: LatticeSpec) -> MaterialMask:
    mat = _get(cfg, "material", required=True)
    eps_i = float(_get(mat, "eps_i", required=True))
    eps_o = float(_get(mat, "eps_o", required=True))
    shapes = []
    for g in mat.get("geometry", []):
        kind = g.get("kind")
        if kind == "sphere":
            shapes.append(Sphere(center=tuple(g["center"]), radius=float(g["radius"])))
        elif kind == "spheroid":
            shapes.append(
                Spheroid(
                    center=tuple(g["center"]),
                    axis=tuple(g["axis"]),
                    semi_axis=float(g["semi_axis"]),
                    semi_radius=float(g["semi_radius"]),
                )
            )
        else:
            raise ConfigError(f"unknown geometry kind {kind!r}")
    if "inside_indices" in mat:
        return MaterialMask(
            spec.n, np.asarray(mat["inside_indices"], dtype=int), eps_i, eps_o
        )
    try:
        return build_mask(shapes, spec, eps_i, eps_o)
    except ValueError as e:
        raise ConfigError(f"invalid material geometry: {e}")


def _dense_cap(cfg: dict) -> int:
    return int(_get(cfg.get("caps", {}), "max_dense_dim", 4000))


def _check_cap(dim: int, cap: int) -> None:
    if dim > cap:
        raise ResourceCapError(
            f"problem dimension {dim} exceeds the configured cap {cap}"
        )


def _provenance(cfg: dict) -> dict:
    return {"config_hash": config_hash(cfg), "version": __version__}


def cmd_verify(cfg: dict, out_dir: str) -> int:
    """Cross-module identity battery; exit 0 iff every check passes."""
    spec = lattice_from_config(cfg)
    mask = mask_from_config(cfg, spec)
    if np.allclose(spec.k, 0.0):
        raise ConfigError(
            "verification exercises the curl factorization, which requires "
            "a nonzero Bloch vector k"
        )
    _check_cap(6 * spec.n, _dense_cap(cfg))
    checks = []

    def add(name, residual, tol):
        checks.append(
            {"name": name, "residual": float(residual), "tol": tol,
             "pass": bool(residual <= tol)}
        )

    blocks = assemble_curl(spec)
    T = dense_T(spec)
    lams = lambda_diagonals(spec)
    diag_err = max(
        np.linalg.norm(T.conj().T @ (Cl.toarray() @ T) - np.diag(lam))
        / np.linalg.norm(Cl.toarray())
        for Cl, lam in zip((blocks.C1, blocks.C2, blocks.C3), lams)
    )
    add("simultaneous_diagonalization", diag_err, 1e-12)

    tau = default_tau(spec)
    tau_reported = list(tau)
    basis = spectral_basis(spec, tau)
    C = blocks.C.toarray()
    add(
        "svd_residual",
        np.linalg.norm(C - basis.P_r @ (basis.sigma[:, None] * basis.Q_r.conj().T))
        / np.linalg.norm(C),
        1e-10,
    )
    Q = np.hstack([basis.Q_r, basis.Q0])
    add("right_factor_unitarity", np.linalg.norm(Q.conj().T @ Q - np.eye(3 * spec.n)), 1e-12 * 3 * spec.n)

    gamma = float(_get(cfg.get("sweep", {}), "gamma_min", 0.5 * mask.gamma_star))
    if abs(gamma - mask.gamma_star) < 1e-9:
        gamma *= 0.9
    asm = assemble_pencil(spec, mask, gamma, blocks)
    eigs = solve_dense_pencil(asm, basis, cap=_dense_cap(cfg))
    add("pencil_residual", residual_check(asm, eigs), 1e-9)
    L = trivial_null_basis(basis, mask, gamma)
    add("null_basis_residual", np.linalg.norm(asm.A @ L) / np.linalg.norm(L), 1e-10)

    red = assemble_nfgep(spec, mask, gamma, basis)
    rv, _ = solve_nfgep(red)
    pv = eigs.values[~eigs.trivial_zero]
    from scipy.optimize import linear_sum_assignment

    D = np.abs(pv[:, None] - rv[None, :])
    r, c = linear_sum_assignment(D)
    add("nfgep_equivalence", (D[r, c] / (1.0 + np.abs(rv[c]))).max(), 1e-8)

    report = {
        **_provenance(cfg),
        "tau": tau_reported,
        "gamma": gamma,
        "checks": checks,
        "all_pass": all(c["pass"] for c in checks),
    }
    _atomic_write(os.path.join(out_dir, "verify.json"), json.dumps(report, indent=2))
    return EXIT_OK if report["all_pass"] else EXIT_INVARIANT


def cmd_sweep(cfg: dict, out_dir: str) -> int:
    """Gamma sweep: curves.csv, events.json, and a sidecar metadata file."""
    spec = lattice_from_config(cfg)
    mask = mask_from_config(cfg, spec)
    sw = _get(cfg, "sweep", required=True)
    gmin = float(_get(sw, "gamma_min", required=True))
    gmax = float(_get(sw, "gamma_max", required=True))
    steps = int(_get(sw, "steps", required=True))
    refine_tol = float(_get(sw, "refine_tol", 1e-9))
    if gmin < 0 or gmax <= gmin:
        raise ConfigError("sweep range must satisfy 0 <= gamma_min < gamma_max")
    if steps < 2:
        raise ConfigError("sweep needs at least 2 steps")
    _check_cap(6 * spec.n, _dense_cap(cfg))

    solver = GammaSolver(spec, mask)
    grid = np.linspace(gmin, gmax, steps)
    keep = np.abs(grid - mask.gamma_star) > 1e-12
    curves = sweep(
        spec,
        mask,
        grid[keep],
        solver=solver,
        compute_types=bool(sw.get("compute_types", True)),
        adaptive=bool(sw.get("adaptive", True)),
    )
    events = detect_events(curves, gamma_star=mask.gamma_star)
    refined = []
    birth_brackets: dict = {}  # births share one bracket per interval
    for ev in events:
        if ev.kind == "imaginary_birth" and ev.bracket in birth_brackets:
            got = birth_brackets[ev.bracket]
            if got is not None:
                ev.gamma_located = got.gamma_located
                ev.bracket = got.bracket
        elif ev.kind in ("collision_split", "real_collision_merge", "imaginary_birth"):
            try:
                key = ev.bracket
                ev = refine_event(ev, solver.eigenvalues, tol=refine_tol)
                if ev.kind == "collision_split":
                    ev.types_after = event_types_after(ev, solver)
                elif ev.kind == "imaginary_birth":
                    birth_brackets[key] = ev
            except RuntimeError:
                ev.confidence = "low"
                if ev.kind == "imaginary_birth":
                    birth_brackets[ev.bracket] = None
        refined.append(ev)
    refined.sort(key=lambda e: (e.gamma_located, e.kind))

    curves_path = os.path.join(out_dir, "curves.csv")
    os.makedirs(out_dir, exist_ok=True)
    write_curves_csv(curves_path, curves)
    _atomic_write(
        os.path.join(out_dir, "events.json"),
        json.dumps(events_to_jsonable(refined), indent=2),
    )
    meta = {
        **_provenance(cfg),
        "gamma_min": gmin,
        "gamma_max": gmax,
        "gamma_star": mask.gamma_star,
        "samples": int(curves.n_samples),
        "curve_count": int(curves.n_curves),
        "matching_flags": curves.matching_flags,
    }
    _atomic_write(os.path.join(out_dir, "sweep_meta.json"), json.dumps(meta, indent=2))
    return EXIT_OK


def cmd_analyze(cfg: dict, out_dir: str) -> int:
    """Structural certificate at the critical chirality."""
    spec = lattice_from_config(cfg)
    mask = mask_from_config(cfg, spec)
    _check_cap(6 * spec.n, _dense_cap(cfg))
    blocks = assemble_curl(spec)
    basis = spectral_basis(spec)

    regular, dim = regularity_test(mask, spec, basis)
    jr = jordan_block_test(mask, spec, blocks, regular=regular)
    asm = assemble_pencil(spec, mask, mask.gamma_star, blocks)
    eigs = solve_dense_pencil(asm, basis, cap=_dense_cap(cfg))
    census = infinite_eigen_census(eigs, mask, jr.nullity)
    ap = appendix_condition(mask, spec)
    u = u_matrices(basis, mask) if not np.allclose(spec.k, 0.0) else None

    from .lattice import classify_boundary

    boundary, interior = classify_boundary(mask, spec)
    witness = min(interior) if interior else None

    cert = {
        **_provenance(cfg),
        "dim_intersection": dim,
        "is_regular": bool(regular),
        "jordan_nullity": jr.nullity,
        "has_defective_infinity": bool(jr.has_defective_infinity),
        "interior_witness": witness,
        "inside_count": mask.size_inside,
        "segments_found": bool(ap.segments_found),
        "segment_witnesses": {k: list(v) if v else None for k, v in ap.segment_witnesses.items()},
        "u_rank_checks": ap.u_rank_flags,
        "regularity_guaranteed": bool(ap.regularity_guaranteed),
        "census": {
            "count_infinite": census.count_infinite,
            "count_defective": census.count_defective,
            "jordan_blocks": census.jordan_blocks,
            "divisor_count": census.divisor_count,
            "bound": census.bound,
            "within_bound": bool(census.within_bound),
            "positive_type_floor": census.positive_type_floor,
        },
        "u_matrices": None
        if u is None
        else {"rank_U2": u.rank_U2, "u2_norm": u.u2_norm},
    }
    _atomic_write(os.path.join(out_dir, "certificate.json"), json.dumps(cert, indent=2))
    return EXIT_OK


def cmd_nfgep(cfg: dict, out_dir: str) -> int:
    """Reduced spectra over the sweep grid endpoints and midpoint."""
    spec = lattice_from_config(cfg)
    mask = mask_from_config(cfg, spec)
    _check_cap(4 * spec.n, _dense_cap(cfg))
    sw = cfg.get("sweep", {})
    gammas = cfg.get("nfgep", {}).get("gammas")
    if gammas is None:
        gmin = float(_get(sw, "gamma_min", 0.25 * mask.gamma_star))
        gmax = float(_get(sw, "gamma_max", 0.75 * mask.gamma_star))
        gammas = [gmin, 0.5 * (gmin + gmax), gmax]
    basis = spectral_basis(spec)
    out = []
    for g in gammas:
        g = float(g)
        red = assemble_nfgep(spec, mask, g, basis)
        vals, _ = solve_nfgep(red)
        w = np.linalg.eigvalsh(red.A_r)
        out.append(
            {
                "gamma": g,
                "ar_positive_definite": bool(w.min() > 0),
                "eigenvalues": [{"re": v.real, "im": v.imag} for v in vals],
            }
        )
    report = {**_provenance(cfg), "spectra": out}
    _atomic_write(os.path.join(out_dir, "nfgep.json"), json.dumps(report, indent=2))
    return EXIT_OK


_COMMANDS = {
    "verify": cmd_verify,
    "sweep": cmd_sweep,
    "analyze": cmd_analyze,
    "nfgep": cmd_nfgep,
}


def main(argv: list[str] | None = None) -> int:
    p = argparse.ArgumentParser(
        prog="chiralcurl",
        description="Discrete single-curl eigenstructure for chiral media",
    )
    p.add_argument("command", choices=sorted(_COMMANDS))
    p.add_argument("--config", required=True, help="path to a JSON run configuration")
    p.add_argument("--out", default=None, help="output directory (default: config output_dir or '.')")
    p.add_argument("--threads", type=int, default=None, help="worker hint passed to the BLAS layer")
    args = p.parse_args(argv)

    if args.threads is not None:
        os.environ.setdefault("OMP_NUM_THREADS", str(args.threads))
    try:
        cfg = load_config(args.config)
        out_dir = args.out or cfg.get("output_dir", ".")
        tasks = cfg.get("tasks")
        if tasks is not None and args.command not in tasks:
            raise ConfigError(
                f"command {args.command!r} is not among the configured tasks {tasks}"
            )
        return _COMMANDS[args.command](cfg, out_dir)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except ResourceCapError as e:
        print(f"resource cap: {e}", file=sys.stderr)
        return EXIT_RESOURCE


if __name__ == "__main__":
    sys.exit(main())
