#!/usr/bin/env python3
"""Quick look at the eigenvalue curves of a one-interior-node medium.

Sweeps the chirality across the critical value and prints the count of
conjugate pairs plus the extreme eigenvalues per sample; writes the curve
file for plotting.

Usage: python scripts/eigencurve_demo.py [outdir]
"""

import sys

import numpy as np

from chiralcurl.continuation import (
    GammaSolver,
    detect_events,
    sweep,
    write_curves_csv,
    _is_real,
)
from chiralcurl.lattice import MaterialMask, neighbor_set, simple_cubic


def main(outdir="out/demo"):
    import os

    os.makedirs(outdir, exist_ok=True)
    spec = simple_cubic((4, 4, 4), k=(0.12, -0.3, 0.45))
    mask = MaterialMask(
        spec.n, np.array(sorted(neighbor_set(2, 2, 2, spec))), eps_i=13.0, eps_o=1.0
    )
    gs = mask.gamma_star
    sol = GammaSolver(spec, mask)
    grid = np.concatenate([[gs - 0.05], np.linspace(gs + 0.01, gs + 0.9, 14)])
    curves = sweep(spec, mask, grid, solver=sol, compute_types=False, adaptive=True)

    for s, g in enumerate(curves.gammas):
        v = curves.values[:, s]
        nonreal = v[~_is_real(v)]
        pairs = int((nonreal.imag > 0).sum())
        reals = v[_is_real(v)].real
        pos = reals[reals > 1e-8]
        ground = pos.min() if pos.size else np.nan
        print(
            f"gamma={g:8.4f}  pairs={pairs:3d}  smallest positive={ground:10.4f}  "
            f"max|Im|={np.abs(v.imag).max():9.3e}"
        )

    events = detect_events(curves, gamma_star=gs)
    print(f"\n{len(events)} events:")
    for e in events:
        print(f"  {e.kind:22s} gamma~{e.gamma_located:.4f}  at {e.location:.4g}")
    write_curves_csv(f"{outdir}/curves.csv", curves)
    print(f"\ncurves -> {outdir}/curves.csv")


if __name__ == "__main__":
    main(*sys.argv[1:])
