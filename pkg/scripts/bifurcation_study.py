#!/usr/bin/env python3
"""Collision study on the 27-node block fixture.

Sweeps the chirality through the fixture's first off-axis collision
window, refines every detected collision to a 1e-9 bracket, reports the
split types and the square-root approach/departure exponents, and leaves
curves.csv + events.json + sweep_meta.json in the output directory (the
same files the plot frontend consumes).

Usage: python scripts/bifurcation_study.py [outdir]
"""

import sys

import numpy as np

from chiralcurl.cli import cmd_sweep, load_config
from chiralcurl.continuation import GammaSolver, _is_real
from chiralcurl.lattice import MaterialMask, simple_cubic


def main(outdir="out/block5"):
    cfg = load_config("configs/collision_block5.json")
    rc = cmd_sweep(cfg, outdir)
    assert rc == 0

    import json

    events = json.load(open(f"{outdir}/events.json"))
    print(f"{len(events)} events -> {outdir}/events.json")
    spec = simple_cubic((5, 5, 5), k=(0.12, -0.3, 0.45))
    inside = np.asarray(cfg["material"]["inside_indices"])
    mask = MaterialMask(spec.n, inside, cfg["material"]["eps_i"], cfg["material"]["eps_o"])
    sol = GammaSolver(spec, mask)

    for ev in events:
        if ev["kind"] != "collision_split" or ev["types_after"] is None:
            continue
        g1 = ev["gamma_located"]
        loc = ev["location"]["re"]
        ds = np.geomspace(1e-7, 1e-4, 8)
        ims, gaps = [], []
        for d in ds:
            v = sol.eigenvalues(g1 - d)
            nr = v[(~_is_real(v)) & (v.imag > 0)]
            w = nr[np.abs(nr.real - loc) < 0.2 * (1 + abs(loc))]
            ims.append(np.abs(w.imag).min())
            v2 = sol.eigenvalues(g1 + d)
            rl = np.sort(v2[_is_real(v2)].real)
            gaps.append(rl[rl >= loc].min() - rl[rl < loc].max())
        s_im = np.polyfit(np.log(ds), np.log(ims), 1)[0]
        s_gap = np.polyfit(np.log(ds), np.log(gaps), 1)[0]
        print(
            f"collision at gamma={g1:.9f}  location={loc:+.5f}  "
            f"types={tuple(ev['types_after'])}  "
            f"approach/departure exponents=({s_im:.3f}, {s_gap:.3f})"
        )


if __name__ == "__main__":
    main(*sys.argv[1:])
