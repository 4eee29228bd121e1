import json
import subprocess
import sys

import numpy as np
import pytest

from invspec.core import PI, SpectralData, sample_potential, write_grid_function_csv
from invspec.roundtrip import example6_data


def run_cli(*args, cwd):
    return subprocess.run([sys.executable, "-m", "invspec", *args],
                          capture_output=True, text=True, cwd=cwd)


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    q = sample_potential(np.cos, 257)
    write_grid_function_csv(q, d / "q.csv")
    (d / "ref.json").write_text(example6_data(40).to_json())
    bad = example6_data(20)
    a = bad.norming.copy()
    a[2] = -0.5
    (d / "bad.json").write_text(SpectralData(bad.beta, bad.mu, a).to_json())
    return d


def test_usage_error_exit_code(workdir):
    r = run_cli("forward", "q.csv", cwd=workdir)  # --beta missing
    assert r.returncode == 64
    r = run_cli("nonsense", cwd=workdir)
    assert r.returncode == 64


def test_forward_then_validate_then_inverse(workdir):
    r = run_cli("forward", "q.csv", "--beta", repr(PI / 3), "-N", "16", "-o", "fw",
                cwd=workdir)
    assert r.returncode == 0, r.stderr
    doc = json.loads((workdir / "fw" / "spectral.json").read_text())
    assert doc["count"] == 16 and len(doc["mu"]) == 16
    assert doc["config"]["command"] == "forward"

    r = run_cli("validate", "fw/spectral.json", cwd=workdir)
    assert r.returncode == 0
    assert "overall: pass" in r.stdout

    r = run_cli("inverse", "fw/spectral.json", "-o", "inv", "--n-terms", "800",
                cwd=workdir)
    assert r.returncode == 0, r.stderr
    rep = json.loads((workdir / "inv" / "report.json").read_text())
    for key in ("beta_tilde", "cot_beta_tilde", "spread", "angle_identity_gap",
                "diagonal_residual_max", "parseval_defect", "gram_offdiag_max",
                "condition_max", "branch", "config"):
        assert key in rep
    assert rep["branch"] == "regular"
    assert (workdir / "inv" / "q_recovered.csv").exists()


def test_inverse_then_forward_consistency(workdir):
    # spectra of the recovered (q, angle) reproduce the input eigenvalues;
    # tight on the reference data (its tail model is exact), looser on the
    # truncated forward data where the tail model carries genuine error
    from invspec.core import read_potential_csv
    from invspec.forward import eigenvalues

    r = run_cli("inverse", "ref.json", "-o", "invref", cwd=workdir)
    assert r.returncode == 0, r.stderr
    rep = json.loads((workdir / "invref" / "report.json").read_text())
    q_hat = read_potential_csv(workdir / "invref" / "q_recovered.csv")
    mus = eigenvalues(q_hat, rep["beta_tilde"], 8)
    assert np.max(np.abs(mus - (np.arange(8) + 0.5) ** 2)) < 1e-4

    rep = json.loads((workdir / "inv" / "report.json").read_text())
    q_hat = read_potential_csv(workdir / "inv" / "q_recovered.csv")
    mus = eigenvalues(q_hat, rep["beta_tilde"], 8)
    doc = json.loads((workdir / "fw" / "spectral.json").read_text())
    assert np.max(np.abs(mus - np.asarray(doc["mu"][:8]))) < 2e-3


def test_validate_bad_data_exits_2(workdir):
    r = run_cli("validate", "bad.json", cwd=workdir)
    assert r.returncode == 2
    assert "FAIL" in r.stdout


def test_inverse_bad_data_blocked_unless_forced(workdir):
    r = run_cli("inverse", "bad.json", "-o", "blocked", cwd=workdir)
    assert r.returncode == 2


def test_example6_command(workdir):
    r = run_cli("example6", "-o", "ex6", cwd=workdir)
    assert r.returncode == 0, r.stderr
    assert r.stdout.count("PASS") == 4
    doc = json.loads((workdir / "ex6" / "example6.json").read_text())
    assert doc["all_pass"]


def test_roundtrip_command(workdir):
    r = run_cli("roundtrip", "q.csv", "--beta-deg", "60", "-N", "16",
                "--n-terms", "800", "-o", "rt", "--json-logs",
                "--trim", repr(0.1 * PI), repr(0.95 * PI), cwd=workdir)
    assert r.returncode == 0, r.stderr
    doc = json.loads((workdir / "rt" / "roundtrip.json").read_text())
    assert doc["q_sup_error"] < 5e-2
    assert (workdir / "rt" / "compare.csv").exists()
    header = (workdir / "rt" / "compare.csv").read_text().splitlines()[0]
    assert header == "x,q,q_hat"
    assert '"event"' in r.stderr  # json logs requested


def test_deterministic_outputs(workdir):
    for d in ("det1", "det2"):
        r = run_cli("inverse", "fw/spectral.json", "-o", d, "--n-terms", "800",
                    cwd=workdir)
        assert r.returncode == 0
    csv1 = (workdir / "det1" / "q_recovered.csv").read_bytes()
    csv2 = (workdir / "det2" / "q_recovered.csv").read_bytes()
    assert csv1 == csv2
    r1 = json.loads((workdir / "det1" / "report.json").read_text())
    r2 = json.loads((workdir / "det2" / "report.json").read_text())
    r1["config"].pop("out_dir")
    r2["config"].pop("out_dir")
    assert r1 == r2
