import json
import math
import shutil
import subprocess
import sys

import pytest

from helly_quant import cli
from helly_quant.errors import CertificateFailure
from helly_quant.geometry import Ellipsoid
from helly_quant.harness import GenConfig, dumps, gen_family
from helly_quant.tverberg import EllipsoidMultiset, WeightedFamily


def _gen(tmp_path, kind, n, name="fam.json", **kw):
    out = tmp_path / name
    args = ["gen", "--kind", kind, "--n", str(n), "-o", str(out)]
    for k, v in kw.items():
        args += [f"--{k}", str(v)]
    assert cli.main(args) == cli.EXIT_OK
    return out


def _run(args):
    return cli.main([str(a) for a in args])


def test_gen_is_deterministic(tmp_path):
    a = _gen(tmp_path, "random_boxes", 6, "a.json", seed=4)
    b = _gen(tmp_path, "random_boxes", 6, "b.json", seed=4)
    assert a.read_bytes() == b.read_bytes()


def test_qfh_large_and_audit(tmp_path):
    fam = _gen(tmp_path, "common_core", 6)
    out = tmp_path / "r.json"
    assert _run(["qfh-large", "-i", fam, "-o", out, "--v", 1.0]) == cli.EXIT_OK
    env = json.loads(out.read_text())
    assert env["verified"] and env["command"] == "qfh-large"
    assert env["tolerances"]["feas"] == 1e-8 and env["solver"]["max_iters"] == 500
    assert _run(["audit-helly", "-i", fam, "-o", out, "--v", 1.0]) == cli.EXIT_OK
    assert json.loads(out.read_text())["result"]["ratio"] == pytest.approx(1.0)


def test_tolerance_flags_recorded(tmp_path):
    fam = _gen(tmp_path, "common_core", 8)
    out = tmp_path / "r.json"
    args = ["qfh-small", "-i", fam, "-o", out, "--v", 1.0, "--tol-feas", 1e-7,
            "--tol-vol-rel", 1e-5, "--max-iters", 300, "--primal-tol", 1e-8]
    assert _run(args) == cli.EXIT_OK
    env = json.loads(out.read_text())
    assert env["tolerances"]["feas"] == 1e-7 and env["tolerances"]["vol_rel"] == 1e-5
    assert env["solver"] == {"max_iters": 300, "barrier_mu": 10.0, "primal_tol": 1e-8,
                             "step_shrink": 0.5}


def test_build_hg_and_pq(tmp_path):
    fam = _gen(tmp_path, "clusters", 14, seed=3)
    out = tmp_path / "r.json"
    assert _run(["build-hg", "-i", fam, "-o", out, "--v", 1.0]) == cli.EXIT_OK
    assert json.loads(out.read_text())["result"]["nu_star"] == pytest.approx(2.0, abs=1e-7)
    assert _run(["pq-pierce", "-i", fam, "-o", out, "--v", 1.0, "--p", 14]) == cli.EXIT_OK
    env = json.loads(out.read_text())
    assert env["verified"] and env["result"]["H_achieved"] == 2


def test_pq_hypothesis_violation_exits_one(tmp_path):
    fam = _gen(tmp_path, "clusters", 12, seed=3)
    assert _run(["pq-pierce", "-i", fam, "--v", 1.0, "--p", 12]) == cli.EXIT_ERROR


def test_tverberg_select_eps_net(tmp_path):
    ms = _gen(tmp_path, "tverberg_hexagon", 7)
    out = tmp_path / "r.json"
    assert _run(["tverberg", "-i", ms, "-o", out, "--r", 2]) == cli.EXIT_OK
    assert json.loads(out.read_text())["verified"]
    discs = EllipsoidMultiset(tuple(Ellipsoid.ball((0.0, 0.0), 1.0) for _ in range(125)), math.pi)
    dpath = tmp_path / "discs.json"
    dpath.write_text(dumps(discs.to_json()))
    assert _run(["select", "-i", dpath, "-o", out]) == cli.EXIT_OK
    assert _run(["select", "-i", ms, "-o", out]) == cli.EXIT_ERROR
    disc = Ellipsoid.ball((0.0, 0.0), 1 / math.sqrt(math.pi))
    wf = WeightedFamily(gen_family(GenConfig("common_core", 5)),
                        EllipsoidMultiset((disc,) * 5, 1.0), [0.2] * 5)
    wpath = tmp_path / "w.json"
    wpath.write_text(dumps(wf.to_json()))
    assert _run(["eps-net", "-i", wpath, "-o", out, "--eps", 0.5]) == cli.EXIT_OK
    assert len(json.loads(out.read_text())["result"]["net"]) == 1


def test_sweep_to_directory_and_stdout(tmp_path, capsys):
    cfgp = tmp_path / "s.json"
    cfgp.write_text(json.dumps({"pipeline": "qfh-large",
                                "instances": [{"kind": "common_core", "n": 6}]}))
    assert _run(["sweep", "-i", cfgp, "-o", tmp_path / "out"]) == cli.EXIT_OK
    assert (tmp_path / "out" / "report.csv").exists()
    assert (tmp_path / "out" / "runtimes.csv").exists()
    capsys.readouterr()
    assert _run(["sweep", "-i", cfgp]) == cli.EXIT_OK
    assert capsys.readouterr().out.startswith("# format_version=1")


def test_budget_exit_code(tmp_path):
    fam = _gen(tmp_path, "common_core", 64)
    assert _run(["qfh-small", "-i", fam, "--v", 1.0]) == cli.EXIT_BUDGET


def test_certificate_failure_exit_code(tmp_path, monkeypatch):
    fam = _gen(tmp_path, "common_core", 6)

    def broken(*args, **kw):
        raise CertificateFailure("forced")
    monkeypatch.setattr(cli, "qfh_large", broken)
    assert _run(["qfh-large", "-i", fam, "--v", 1.0]) == cli.EXIT_CERT


def test_unverified_result_exit_code(tmp_path, monkeypatch):
    fam = _gen(tmp_path, "common_core", 6)
    real = cli.qfh_large

    class Wrapped:
        def __init__(self, res):
            self.res = res

        def verify(self, fam, tol):
            return False

        def to_json(self):
            return self.res.to_json()
    monkeypatch.setattr(cli, "qfh_large", lambda *a, **k: Wrapped(real(*a, **k)))
    assert _run(["qfh-large", "-i", fam, "--v", 1.0]) == cli.EXIT_CERT


def test_bad_arguments(tmp_path):
    with pytest.raises(SystemExit):
        cli.main(["gen", "--kind", "nope", "--n", "3"])
    with pytest.raises(SystemExit):
        cli.main(["qfh-large", "--v"])
    assert _run(["gen", "--kind", "clusters", "--n", 0]) == cli.EXIT_ERROR
    assert _run(["qfh-large", "-i", tmp_path / "missing.json", "--v", 1.0]) == cli.EXIT_ERROR


@pytest.mark.skipif(shutil.which("helly-quant") is None, reason="console script not installed")
def test_console_script(tmp_path):
    r = subprocess.run(["helly-quant", "gen", "--kind", "common_core", "--n", "4"],
                       capture_output=True, text=True)
    assert r.returncode == 0 and json.loads(r.stdout)["members"]
    r = subprocess.run([sys.executable, "-m", "helly_quant.cli", "gen", "--kind", "x", "--n", "4"],
                       capture_output=True, text=True)
    assert r.returncode == 2  # argparse usage error
