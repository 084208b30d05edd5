import csv
import json
import os
import subprocess
import sys

import numpy as np
import pytest
from scipy.optimize import brentq
from scipy.special import j0

from gcinverse.cli import main
from gcinverse.forward import DtnKernel, dtn_difference
from gcinverse.geometry import make_disc
from gcinverse.synthetic import PotentialSpec, generate

DOMAIN = {"kind": "disc", "M": 32, "N_radial": 12, "n_theta": 32}


def run(tmp_path, command, cfg, name="cfg.json", extra=()):
    path = tmp_path / name
    path.write_text(json.dumps(cfg) if not isinstance(cfg, str) else cfg)
    out = tmp_path / f"out_{command}_{name}"
    return main([command, "--config", str(path), "--out", str(out), *extra]), out


def load(out, name):
    with open(out / name) as fh:
        return json.load(fh)


def rows(path):
    with open(path) as fh:
        return list(csv.DictReader(ln for ln in fh if not ln.startswith("#")))


def test_forward_zero_potential(tmp_path):
    cfg = {"domain": DOMAIN, "potential": {"kind": "radial_bump", "amplitude": 0.0}}
    code, out = run(tmp_path, "forward", cfg)
    assert code == 0
    D = DtnKernel.from_dict(load(out, "difference_kernel.json")["kernel"])
    assert D.norm() <= 1e-10
    rep = load(out, "forward_report.json")
    assert rep["direig"]["ratio"] > 1e-10
    assert load(out, "config.json")["config"]["potential"]["amplitude"] == 0.0


def test_kernel_round_trip_and_reconstruct(tmp_path):
    pot = {"kind": "radial_bump", "amplitude": 2.0, "support_radius": 0.6}
    code, out = run(tmp_path, "forward", {"domain": DOMAIN, "potential": pot})
    assert code == 0
    path = out / "difference_kernel.json"
    K = DtnKernel.from_dict(load(out, "difference_kernel.json")["kernel"])
    g = make_disc(1.0, 32, 12, n_theta=32)
    ref = dtn_difference(generate(PotentialSpec("radial_bump", amplitude=2.0, support_radius=0.6), g))
    assert np.array_equal(K.matrix, ref.matrix)
    cfg = {"domain": DOMAIN, "kernel_path": str(path), "lambda_schedule": [2.0, 4.0], "z0_set": [0.0, [0.1, 0.1]],
           "rech_exponent_variant": "printed"}
    code, out = run(tmp_path, "reconstruct", cfg, "rec.json")
    assert code == 0
    rec = load(out, "reconstruction.json")
    assert rec["rech_exponent_variant"] == "printed"
    assert len(rows(out / "reconstruction.csv")) == 2
    assert not (out / "errors.csv").exists()


def test_reconstruct_zero_kernel(tmp_path):
    cfg = {"domain": DOMAIN, "potential": {"kind": "radial_bump", "amplitude": 0.0},
           "lambda_schedule": [2.0, 4.0], "z0_set": [0.0, 0.3]}
    code, out = run(tmp_path, "reconstruct", cfg)
    assert code == 0
    vals = [float(r[k]) for r in rows(out / "reconstruction.csv") for k in ("re_00", "im_00")]
    assert vals == [0.0] * 4


def test_reconstruct_truth_tables(tmp_path):
    cfg = {"domain": DOMAIN, "potential": {"kind": "radial_bump", "amplitude": 2.0},
           "lambda_schedule": [2.0, 4.0, 6.0], "z0_set": [0.0, 0.1]}
    code, out = run(tmp_path, "reconstruct", cfg)
    assert code == 0
    err = rows(out / "errors.csv")
    assert [float(r["lambda_re"]) for r in err] == [2.0, 4.0, 6.0]
    assert all(int(r["points"]) == 2 for r in err)
    diag = rows(out / "diagnostics.csv")
    assert len(diag) == 6 and all(r["status"] == "ok" for r in diag)
    assert float(err[-1]["linf"]) < float(err[0]["linf"])


def test_unknown_suite_and_fields(tmp_path):
    assert run(tmp_path, "verify", {"domain": DOMAIN, "suites": ["nope"]})[0] == 2
    assert run(tmp_path, "verify", {"domain": DOMAIN, "colour": 1}, "b.json")[0] == 2
    assert run(tmp_path, "verify", {"domain": dict(DOMAIN, M=31)}, "c.json")[0] == 2
    assert run(tmp_path, "forward", "{not json", "d.json")[0] == 2
    assert run(tmp_path, "forward", {"domain": DOMAIN}, "e.json")[0] == 2     # no potential
    assert main(["bogus"]) == 2
    assert main(["verify", "--threads", "0"]) == 2


def test_bad_config_message(tmp_path, capsys):
    run(tmp_path, "forward", '{"domain": {"kind": "disc",}}', "f.json")
    assert "line 1" in capsys.readouterr().err


def test_direig_violation_exits_3(tmp_path):
    lam1 = brentq(j0, 2.0, 3.0, xtol=1e-15) ** 2
    cfg = {"domain": DOMAIN, "potential": {"kind": "constant_plus_bump", "constant": -lam1, "amplitude": 0.0}}
    assert run(tmp_path, "forward", cfg)[0] == 3


def test_cap_violations(tmp_path):
    # one point past the cap is recorded; the run still succeeds
    cfg = {"domain": DOMAIN, "potential": {"kind": "radial_bump"}, "lambda_schedule": [4.0],
           "z0_set": [0.0, 0.9], "conditioning_cap": 1e4}
    code, out = run(tmp_path, "reconstruct", cfg)
    assert code == 0
    assert list(load(out, "reconstruction.json")["field"]["failures"]) == ["1"]
    diag = rows(out / "diagnostics.csv")
    assert [r["status"] for r in diag] == ["ok", "IllConditionedRegime"]
    # no usable point at all is a numerical failure
    cfg = dict(cfg, lambda_schedule=[40.0])
    assert run(tmp_path, "reconstruct", cfg, "all.json")[0] == 3


def test_reduce3d_z_independent(tmp_path):
    cfg = {"domain": DOMAIN, "n": 3, "reduce3d": {"interval": [0.0, 2.0],
           "v3d_potential": {"kind": "radial_bump", "amplitude": 2.0}}}
    code, out = run(tmp_path, "reduce3d", cfg)
    assert code == 0
    d = load(out, "channel_potential.json")["field"]
    V = np.asarray(d["re"]) + 1j * np.asarray(d["im"])
    off = V.copy()
    off[:, np.arange(3), np.arange(3)] = 0
    assert np.abs(off).max() < 1e-12
    assert np.allclose(V[:, 0, 0], V[:, 2, 2])
    lam = load(out, "channel_lambda.json")["eigenvalues"]
    assert np.allclose(lam, (np.arange(1, 4) * np.pi / 2) ** 2)


def test_reduce3d_malformed_csv(tmp_path, capsys):
    g = make_disc(1.0, 32, 12, n_theta=32)
    q = 4 * 1 + 16
    lines = ["node,quad,re,im"] + [f"{p},{k},1.0,0.0" for p in range(g.N) for k in range(q)]
    lines[5] = "4,0,abc,0.0"
    (tmp_path / "v.csv").write_text("\n".join(lines) + "\n")
    cfg = {"domain": DOMAIN, "reduce3d": {"v3d_csv": str(tmp_path / "v.csv")}}
    assert run(tmp_path, "reduce3d", cfg)[0] == 2
    err = capsys.readouterr().err
    assert "row 6" in err and "'re'" in err


def test_seed_flag_overrides(tmp_path):
    cfg = {"domain": DOMAIN, "n": 2, "potential": {"kind": "random_hermitian_bump", "seed": 1}}
    code, out = run(tmp_path, "forward", cfg, extra=["--seed", "5"])
    assert code == 0
    assert load(out, "config.json")["config"]["potential"]["seed"] == 5


def test_console_script(tmp_path):
    env = dict(os.environ)
    r = subprocess.run([sys.executable, "-m", "gcinverse.cli", "verify", "--config", "/nonexistent.json",
                        "--out", str(tmp_path)], capture_output=True, text=True, env=env)
    assert r.returncode == 2 and "cannot read config" in r.stderr


def test_inputs_are_not_modified(tmp_path):
    import hashlib
    code, out = run(tmp_path, "forward", {"domain": DOMAIN, "potential": {"kind": "radial_bump", "amplitude": 1.0}})
    assert code == 0
    path = out / "difference_kernel.json"
    before = hashlib.sha256(path.read_bytes()).hexdigest()
    cfg = {"domain": DOMAIN, "kernel_path": str(path), "lambda_schedule": [2.0, 4.0], "z0_set": [0.0]}
    cfg_text = json.dumps(cfg)
    code, _ = run(tmp_path, "reconstruct", cfg_text, "rec.json")
    assert code == 0
    assert hashlib.sha256(path.read_bytes()).hexdigest() == before
    assert (tmp_path / "rec.json").read_text() == cfg_text
