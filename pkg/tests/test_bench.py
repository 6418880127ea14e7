import json
import shutil

import numpy as np
import numpy.testing as npt
import pytest

from ccdownfold.bench import (RunConfig, accuracy_percent, correlation_percent, export_effective_hamiltonian,
                              load_config, run_pipeline, sweep_geometries)
from ccdownfold.casci import DavidsonOptions, solve_ci
from ccdownfold.cli import main
from ccdownfold.errors import ConvergenceError, DomainError
from ccdownfold.variants import VARIANTS, read_effective_fcidump
from conftest import DATA

H2 = str(DATA / "h2_631g.fcidump")
LIH = str(DATA / "lih_sto3g.fcidump")


@pytest.fixture(scope="module")
def lih_report():
    return run_pipeline(RunConfig(LIH, active=[3, 6]))


def test_report_rows(lih_report):
    rep = lih_report
    assert len(rep.rows) == 2 * len(VARIANTS)
    assert rep.e_fci is not None and rep.e_hf > rep.e_ccsd
    full = [r for r in rep.rows if r["active_size"] == 6]
    npt.assert_allclose([r["energy"] for r in full], rep.e_fci, atol=1e-8)
    for r in rep.rows:
        assert r["status"] == "ok"
        assert r["hermiticity_error"] < 1e-10
        npt.assert_allclose(r["error"], r["energy"] - rep.e_fci, atol=0)


def test_percentages():
    assert correlation_percent(-1.0, -1.0, None) is None
    npt.assert_allclose(correlation_percent(-1.5, -1.0, -2.0), 50.0)
    npt.assert_allclose(accuracy_percent(-1.5, -1.0, -2.0), 50.0)
    # overshooting the reference: signed share exceeds 100, the tables' measure does not
    npt.assert_allclose(correlation_percent(-2.5, -1.0, -2.0), 150.0)
    npt.assert_allclose(accuracy_percent(-2.5, -1.0, -2.0), 50.0)


def test_canonical_json_is_deterministic():
    cfg = RunConfig(H2, active=[2], variants=("A1", "A7"))
    a, b = run_pipeline(cfg), run_pipeline(cfg)
    assert a.to_json(canonical=True) == b.to_json(canonical=True)
    assert "timings" not in json.loads(a.to_json(canonical=True))
    assert "timings" in json.loads(a.to_json())


def test_text_table(lih_report):
    text = lih_report.to_text()
    assert "3 orbitals" in text and "A7" in text
    assert ("%.5f" % lih_report.rows[0]["energy"]) in text


def test_mp2_natural_orbitals_keep_fci():
    rhf = run_pipeline(RunConfig(LIH, active=[6], variants=("A1",)))
    nos = run_pipeline(RunConfig(LIH, orbital_mode="mp2no", active=[3, 6], variants=("A1", "A7")))
    npt.assert_allclose(nos.e_fci, rhf.e_fci, atol=1e-9)
    npt.assert_allclose(nos.e_hf, rhf.e_hf, atol=1e-12)
    assert all(r["status"] == "ok" for r in nos.rows)


@pytest.mark.parametrize("kw", [dict(variants=()), dict(variants=("A9",)), dict(active=[]),
                                dict(orbital_mode="uhf")])
def test_invalid_config(kw):
    with pytest.raises(DomainError):
        run_pipeline(RunConfig(LIH, **kw))


def test_convergence_failure_and_keep_going():
    bad = DavidsonOptions(tol=1e-15, max_iter=1)
    with pytest.raises(ConvergenceError) as info:
        run_pipeline(RunConfig(LIH, active=[3], davidson=bad, full_ci=False))
    assert info.value.stage.startswith("casci")
    rep = run_pipeline(RunConfig(LIH, active=[3], davidson=bad, keep_going=True))
    assert len(rep.errors) == 1 + len(VARIANTS)
    assert all(r["energy"] is None for r in rep.rows)


def test_sweep_isolates_failures(tmp_path):
    corrupt = tmp_path / "corrupt.fcidump"
    corrupt.write_text("not an fcidump\n")
    cfgs = [RunConfig(H2, active=[2], variants=("A7",), label="a"),
            RunConfig(str(corrupt), active=[2], variants=("A7",), label="b"),
            RunConfig(H2, active=[2], variants=("A7",), label="c")]
    reports, rows = sweep_geometries(cfgs)
    assert reports[1] is None
    assert [r["label"] for r in rows] == ["a", "b", "c"]
    assert rows[1]["status"].startswith("error") and rows[0]["status"] == "ok"
    assert sweep_geometries([]) == ([], [])


def test_export_effective_hamiltonian(tmp_path):
    path = export_effective_hamiltonian(RunConfig(LIH), "A7", 3, tmp_path / "a7.fcidump")
    rep = run_pipeline(RunConfig(LIH, active=[3], variants=("A7",)))
    npt.assert_allclose(solve_ci(read_effective_fcidump(path), 2, 2).energy, rep.rows[0]["energy"], atol=1e-9)


# ---------------------------------------------------------------------------
# command line
# ---------------------------------------------------------------------------

def test_cli_run_json(tmp_path):
    out = tmp_path / "r.json"
    assert main(["run", "--fcidump", LIH, "--active", "3", "--active", "0,1,3", "--variants", "A1,A4",
                 "--out", str(out), "--export-heff", str(tmp_path / "heff")]) == 0
    rep = json.loads(out.read_text())
    assert [(r["variant"], r["active_orbitals"]) for r in rep["rows"]] == \
        [("A1", [0, 1, 2]), ("A4", [0, 1, 2]), ("A1", [0, 1, 3]), ("A4", [0, 1, 3])]
    assert len(list((tmp_path / "heff").glob("*.fcidump"))) == 4


def test_cli_csv_and_text(tmp_path, capsys):
    assert main(["run", "--fcidump", H2, "--active", "2", "--variants", "A2", "--out", str(tmp_path / "r.csv")]) == 0
    lines = (tmp_path / "r.csv").read_text().splitlines()
    assert lines[0].startswith("label,variant") and len(lines) == 2
    assert main(["run", "--fcidump", H2, "--active", "2", "--variants", "A2"]) == 0
    assert "A2" in capsys.readouterr().out


@pytest.mark.parametrize("argv", [
    ["run", "--fcidump", "missing.fcidump"],
    ["run", "--fcidump", H2, "--variants", "A8"],
    ["run", "--fcidump", H2, "--active", "9"],
    ["run"],
])
def test_cli_input_errors(argv):
    assert main(argv) == 3


def test_cli_convergence_exit_code(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("fcidump = %s\nactive = 3\nvariants = A1\ndavidson_tol = 1e-15\n"
                   "davidson_max_iter = 1\nfull_ci = false\n" % LIH)
    assert main(["run", "--config", str(cfg)]) == 2
    assert main(["run", "--config", str(cfg), "--keep-going", "--out", str(tmp_path / "r.json")]) == 0


def test_config_file(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# beryllium-style run\nfcidump = %s\norbitals = mp2no\nactive = 3; 0,1,2\n"
                   "variants = A1, A7\nnelec = 4\nreference_energy = -7.88\nkeep_going = yes\n" % LIH)
    c = load_config(cfg)
    assert c.orbital_mode == "mp2no" and c.active == [3, [0, 1, 2]]
    assert c.variants == ("A1", "A7") and c.n_electrons == 4
    assert c.reference_energy == -7.88 and c.keep_going
    with pytest.raises(DomainError):
        load_config(tmp_path / "absent.cfg")


def test_cli_sweep(tmp_path):
    shutil.copy(H2, tmp_path / "g1.fcidump")
    (tmp_path / "g2.fcidump").write_text("garbage")
    out = tmp_path / "pes.csv"
    assert main(["sweep", str(tmp_path / "g1.fcidump"), str(tmp_path / "g2.fcidump"),
                 "--active", "2", "--variants", "A1,A7", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert len(lines) == 4 and "error" in lines[3]
    assert main(["sweep", "--out", str(tmp_path / "empty.csv")]) == 0
    assert (tmp_path / "empty.csv").read_text().startswith("label,")
