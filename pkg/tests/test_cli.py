import csv
import io
import json

import numpy as np
import pytest

from weldnrg import cli, serialize

SMALL = ["--order", "16", "--grid", "2048"]


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    return list(csv.DictReader(io.StringIO("\n".join(lines))))


# --- energy -----------------------------------------------------------------------

def test_energy_identity(capsys):
    code, out, _ = run(capsys, "energy", "--homeo", "identity", *SMALL)
    d = json.loads(out)
    assert code == 0
    assert all(abs(d[k]) < 1e-14 for k in cli.FORMULA_KEYS)
    assert d["spread"] < 1e-14


def test_energy_moebius(capsys):
    code, out, _ = run(capsys, "energy", "--homeo", "mobius:a=0.3+0i,beta=0", *SMALL)
    assert code == 0 and json.loads(out)["spread"] < 1e-4


def test_energy_trig_reference(capsys):
    code, out, _ = run(capsys, "energy", "--homeo", "trig:j1=0.2", "--order", "64", "--grid", "8192")
    d = json.loads(out)
    assert code == 0
    assert d["spread"] / max(1.0, d["il_xx"]) < 1e-3
    assert d["order"] == 64 and d["grid_size"] == 8192


def test_energy_output_is_deterministic_and_round_trips(capsys, tmp_path):
    p1, p2 = tmp_path / "a.json", tmp_path / "b.json"
    assert cli.main(["energy", "--homeo", "trig:j2=0.1@0.5", *SMALL, "--out", str(p1)]) == 0
    assert cli.main(["energy", "--homeo", "trig:j2=0.1@0.5", *SMALL, "--out", str(p2)]) == 0
    text = p1.read_text()
    assert text == p2.read_text()
    assert serialize.dumps(json.loads(text)) + "\n" == text
    assert list(json.loads(text)) == sorted(json.loads(text))


def test_energy_csv(capsys):
    code, out, _ = run(capsys, "energy", "--homeo", "trig:j1=0.1", "--format", "csv", *SMALL)
    r = rows(out)
    assert code == 0 and len(r) == 1
    assert float(r[0]["il_xx"]) > 0


def test_energy_iterates_with_bound(capsys):
    code, out, _ = run(capsys, "energy", "--homeo", "trig:j1=0.1", "--iterate", "2", "--k", "1.5",
                       *SMALL)
    assert code == 0
    d = json.loads(out)
    assert [it["n"] for it in d["iterates"]] == [1, 2]
    assert all(it["pass"] and it["energy"] <= it["bound"] for it in d["iterates"])


def test_parse_error_is_annotated(capsys):
    code, _, err = run(capsys, "energy", "--homeo", "trig:j1=0.2,q=1", *SMALL)
    assert code == 1
    assert "^" in err and "position" in err


@pytest.mark.parametrize("argv", [
    ["energy", "--homeo", "identity", "--order", "64", "--grid", "256"],
    ["energy", "--homeo", "identity", "--order", "8", "--grid", "128", "--k", "1.0"],
    ["energy", "--homeo", "identity", "--order", "8", "--grid", "128", "--iterate", "0"],
    ["sweep", "--homeo", "identity", "--orders", "64", "--grids", "128"],
])
def test_config_errors_exit_1(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 1 and err


def test_invalid_homeo_parameters_exit_1(capsys):
    code, _, _ = run(capsys, "energy", "--homeo", "mobius:a=1.2", *SMALL)
    assert code == 1


def test_partial_report_exits_2(capsys, monkeypatch):
    from weldnrg import spectral
    from weldnrg.errors import NumericFailure

    def broken(g):
        raise NumericFailure("injected")

    monkeypatch.setattr(spectral, "energy_minor", broken)
    code, out, err = run(capsys, "energy", "--homeo", "trig:j1=0.2", *SMALL)
    assert code == 2
    assert json.loads(out)["il_minor"] is None and json.loads(out)["il_xx"] > 0
    assert "il_minor failed: injected" in err


# --- spectrum ---------------------------------------------------------------------

def test_spectrum_identity(capsys):
    code, out, _ = run(capsys, "spectrum", "--homeo", "identity", *SMALL)
    assert code == 0
    assert out.startswith("# order=16,grid_size=2048")
    r = rows(out)
    # delta_k for k <= N, eigenvalues of the 2N x 2N assembly on every row
    assert len(r) == 32
    assert all(float(x["delta"]) < 1e-14 for x in r[:16])
    assert all(x["delta"] == "" for x in r[16:])
    assert all(abs(float(x["eig_lambda"])) < 1e-14 for x in r)


def test_spectrum_trig_with_bound(capsys):
    code, out, _ = run(capsys, "spectrum", "--homeo", "trig:j1=0.2", "--k", "1.5", *SMALL)
    r = rows(out)
    assert code == 0
    assert {"k", "delta", "eig_lambda", "delta_bound", "delta_pass"} <= set(r[0])
    assert float(r[0]["delta"]) < 1 and float(r[0]["eig_lambda"]) < 0.5
    assert float(r[0]["delta_bound"]) == pytest.approx(0.2)
    assert all(x["delta_pass"] == "true" and x["eig_pass"] == "true" for x in r[:16])
    deltas = [float(x["delta"]) for x in r[:16]]
    assert deltas == sorted(deltas, reverse=True)


# --- sweep ------------------------------------------------------------------------

def test_sweep_energy_spread(capsys):
    code, out, _ = run(capsys, "sweep", "--homeo", "trig:j1=0.2", "--orders", "16,32,64",
                       "--grids", "8192")
    r = rows(out)
    assert code == 0 and [int(x["order"]) for x in r] == [16, 32, 64]
    assert list(r[0]) == list(cli.SWEEP_COLUMNS["energy_spread"])
    spreads = [float(x["spread"]) for x in r]
    # all three orders sit at the rounding floor; monotone up to that floor
    assert all(b <= a + 1e-12 for a, b in zip(spreads, spreads[1:]))
    assert spreads[-1] < 1e-3 * max(1.0, float(r[-1]["il_xx"]))


def test_sweep_identity_rows(capsys):
    code, out, _ = run(capsys, "sweep", "--homeo", "identity", "--orders", "8,16", "--grids", "256",
                       "--quantity", "identity_residuals")
    r = rows(out)
    assert code == 0 and len(r) == 2
    assert all(float(v) < 1e-14 for x in r for k, v in x.items() if k not in ("order", "grid_size"))


def test_sweep_schatten_schema(capsys):
    code, out, _ = run(capsys, "sweep", "--homeo", "trig:j1=0.2", "--orders", "16", "--grids",
                       "2048", "--quantity", "schatten")
    r = rows(out)
    assert code == 0
    assert sorted(float(x["p"]) for x in r) == [1.5, 2.0, 3.0]
    norms = [float(x["norm"]) for x in sorted(r, key=lambda x: float(x["p"]))]
    assert norms == sorted(norms, reverse=True)


# --- selftest and table dump ---------------------------------------------------------

def test_selftest_passes_at_reference_resolution(capsys):
    code, out, _ = run(capsys, "selftest")
    assert code == 0
    assert "58/58 checks passed" in out


def test_selftest_detects_weight_sign_flip(capsys):
    code, out, _ = run(capsys, "selftest", *SMALL, "--inject", "lambda-sign")
    assert code != 0
    assert "failing:" in out and "Lambda = (I - C C^*)/2" in out


def test_selftest_rejects_small_grid(capsys):
    code, _, _ = run(capsys, "selftest", "--order", "64", "--grid", "256")
    assert code == 1


def test_grunsky_table_dump(capsys, tmp_path):
    bin_path = tmp_path / "lam.bin"
    code, out, _ = run(capsys, "grunsky-table", "--homeo", "trig:j1=0.2", "--order", "4",
                       "--grid", "64", "--matrix-out", str(bin_path))
    assert code == 0
    t = serialize.table_from_dict(json.loads(out))
    assert t.order == 4
    lam = serialize.read_matrix_binary(bin_path)
    assert lam.shape == (8, 8)
    np.testing.assert_allclose(lam, lam.conj().T, atol=1e-15)
