import json

import numpy as np

from chiralcurl.cli import (
    EXIT_CONFIG,
    EXIT_OK,
    EXIT_RESOURCE,
    config_hash,
    main,
)
from chiralcurl import __version__


def base_config(**over):
    cfg = {
        "lattice": {
            "a1": [1.0, 0.0, 0.0],
            "a2": [0.0, 1.0, 0.0],
            "a3": [0.0, 0.0, 1.0],
            "n": [3, 3, 3],
            "k": [0.12, -0.3, 0.45],
        },
        "material": {
            "eps_i": 13.0,
            "eps_o": 1.0,
            "geometry": [
                {"kind": "sphere", "center": [0.34, 0.34, 0.34], "radius": 0.35}
            ],
        },
        "sweep": {"gamma_min": 1.0, "gamma_max": 2.0, "steps": 3},
        "tasks": ["verify", "sweep", "analyze", "nfgep"],
        "seed": 0,
    }
    cfg.update(over)
    return cfg


def write_config(tmp_path, cfg, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg, indent=2))
    return str(path)


def test_verify_ok(tmp_path):
    path = write_config(tmp_path, base_config())
    out = tmp_path / "out"
    assert main(["verify", "--config", path, "--out", str(out)]) == EXIT_OK
    rep = json.loads((out / "verify.json").read_text())
    assert rep["all_pass"] is True
    assert rep["version"] == __version__
    assert rep["config_hash"] == config_hash(base_config())
    assert {c["name"] for c in rep["checks"]} >= {
        "simultaneous_diagonalization",
        "svd_residual",
        "nfgep_equivalence",
    }


def test_verify_rejects_zero_k(tmp_path):
    cfg = base_config()
    cfg["lattice"]["k"] = [0.0, 0.0, 0.0]
    path = write_config(tmp_path, cfg)
    assert main(["verify", "--config", path, "--out", str(tmp_path)]) == EXIT_CONFIG


def test_malformed_config(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    assert main(["verify", "--config", str(p)]) == EXIT_CONFIG


def test_missing_field(tmp_path):
    cfg = base_config()
    del cfg["material"]["eps_i"]
    path = write_config(tmp_path, cfg)
    assert main(["verify", "--config", path, "--out", str(tmp_path)]) == EXIT_CONFIG


def test_resource_cap(tmp_path):
    cfg = base_config(caps={"max_dense_dim": 10})
    path = write_config(tmp_path, cfg)
    assert main(["verify", "--config", path, "--out", str(tmp_path)]) == EXIT_RESOURCE


def test_task_not_configured(tmp_path):
    cfg = base_config(tasks=["verify"])
    path = write_config(tmp_path, cfg)
    assert main(["sweep", "--config", path, "--out", str(tmp_path)]) == EXIT_CONFIG


def test_sweep_below_critical_empty_events(tmp_path):
    path = write_config(tmp_path, base_config())
    out = tmp_path / "out"
    assert main(["sweep", "--config", path, "--out", str(out)]) == EXIT_OK
    events = json.loads((out / "events.json").read_text())
    assert events == []
    header = (out / "curves.csv").read_text().splitlines()[0]
    assert header == "gamma,curve_id,re,im,type"
    meta = json.loads((out / "sweep_meta.json").read_text())
    assert meta["config_hash"] == config_hash(base_config())
    assert meta["version"] == __version__


def test_sweep_deterministic_rerun(tmp_path):
    path = write_config(tmp_path, base_config())
    out1, out2 = tmp_path / "o1", tmp_path / "o2"
    assert main(["sweep", "--config", path, "--out", str(out1)]) == EXIT_OK
    assert main(["sweep", "--config", path, "--out", str(out2)]) == EXIT_OK
    assert (out1 / "curves.csv").read_bytes() == (out2 / "curves.csv").read_bytes()
    assert (out1 / "events.json").read_bytes() == (out2 / "events.json").read_bytes()


def test_sweep_straddle_records_births(tmp_path):
    gs = float(np.sqrt(13.0))
    cfg = base_config()
    cfg["sweep"] = {
        "gamma_min": gs - 0.02,
        "gamma_max": gs + 0.05,
        "steps": 3,
        "adaptive": False,
        "compute_types": False,
    }
    path = write_config(tmp_path, cfg)
    out = tmp_path / "out"
    assert main(["sweep", "--config", path, "--out", str(out)]) == EXIT_OK
    events = json.loads((out / "events.json").read_text())
    assert any(e["kind"] == "imaginary_birth" for e in events)
    for e in events:
        assert {"kind", "gamma_located", "location", "bracket"} <= set(e)
        assert isinstance(e["location"], dict) and {"re", "im"} <= set(e["location"])


def test_analyze_certificate(tmp_path):
    path = write_config(tmp_path, base_config())
    out = tmp_path / "out"
    assert main(["analyze", "--config", path, "--out", str(out)]) == EXIT_OK
    cert = json.loads((out / "certificate.json").read_text())
    assert cert["is_regular"] is True
    assert cert["census"]["within_bound"] is True
    assert set(cert["u_rank_checks"]) == {
        "u123", "u12", "u23", "u13", "u1", "u2", "u3", "u_const"
    }
    assert cert["inside_count"] > 0
    # the sphere fixture hosts an interior node, hence a defective infinity
    assert cert["has_defective_infinity"] == (cert["jordan_nullity"] > 0)


def test_analyze_empty_medium(tmp_path):
    cfg = base_config()
    cfg["material"]["geometry"] = []
    path = write_config(tmp_path, cfg)
    out = tmp_path / "out"
    assert main(["analyze", "--config", path, "--out", str(out)]) == EXIT_OK
    cert = json.loads((out / "certificate.json").read_text())
    assert cert["is_regular"] is True
    assert cert["census"]["count_infinite"] == 0
    assert cert["regularity_guaranteed"] is True


def test_nfgep_report(tmp_path):
    path = write_config(tmp_path, base_config())
    out = tmp_path / "out"
    assert main(["nfgep", "--config", path, "--out", str(out)]) == EXIT_OK
    rep = json.loads((out / "nfgep.json").read_text())
    assert len(rep["spectra"]) == 3
    for entry in rep["spectra"]:
        assert entry["ar_positive_definite"] is True  # all below critical here
        assert len(entry["eigenvalues"]) == 4 * 27


def test_verify_reports_perturbed_tau(tmp_path):
    # anisotropic cell with tau1*delta1 == tau3*delta3 under the default
    # choice: the report must carry the nudged value
    cfg = base_config()
    cfg["lattice"]["a1"] = [3.0, 0.0, 0.0]
    cfg["lattice"]["a2"] = [0.0, 5.0, 0.0]
    cfg["lattice"]["a3"] = [0.0, 0.0, 1.0]
    cfg["lattice"]["k"] = [0.05, -0.08, 0.3]
    path = write_config(tmp_path, cfg)
    out = tmp_path / "out"
    assert main(["verify", "--config", path, "--out", str(out)]) == EXIT_OK
    rep = json.loads((out / "verify.json").read_text())
    assert rep["all_pass"] is True
    assert rep["tau"] != [1.0, 2.0, 3.0]
    d = [3.0 / 3, 5.0 / 3, 1.0 / 3]
    prods = sorted(t * dd for t, dd in zip(rep["tau"], d))
    assert min(b - a for a, b in zip(prods, prods[1:])) > 1e-12


def test_sweep_straddle_birth_located_near_critical(tmp_path):
    gs = float(np.sqrt(13.0))
    cfg = base_config()
    cfg["sweep"] = {
        "gamma_min": gs - 0.02,
        "gamma_max": gs + 0.05,
        "steps": 3,
        "adaptive": False,
        "compute_types": False,
        "refine_tol": 1e-7,
    }
    path = write_config(tmp_path, cfg)
    out = tmp_path / "out"
    assert main(["sweep", "--config", path, "--out", str(out)]) == EXIT_OK
    events = json.loads((out / "events.json").read_text())
    births = [e for e in events if e["kind"] == "imaginary_birth"]
    assert births
    for e in births:
        assert abs(e["gamma_located"] - gs) < 1e-4


def test_config_round_trip_idempotent(tmp_path):
    cfg = base_config()
    p1 = write_config(tmp_path, cfg, "a.json")
    loaded = json.loads(open(p1).read())
    p2 = write_config(tmp_path, loaded, "b.json")
    assert json.loads(open(p2).read()) == cfg
    assert config_hash(loaded) == config_hash(cfg)
