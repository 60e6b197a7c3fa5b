import json
import subprocess
import sys
from fractions import Fraction as F

import pytest

from topicsqif.cli import main, parse_int_list, parse_range


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def fields(out):
    return dict(line.split(": ", 1) for line in out.strip().splitlines())


# --- leakage -------------------------------------------------------------------


def test_leakage_topics_headline(capsys):
    code, out, err = run(capsys, "leakage", "topics", "--taxonomy", "350", "--k", "5")
    assert code == 0 and err == ""
    f = fields(out)
    assert f["multiplicative_leakage"] == "70 (exact 70)"
    assert f["prior_vulnerability"] == "1/N"
    assert f["posterior_vulnerability"] == "70/N"


def test_leakage_topics_no_leak(capsys):
    code, out, _ = run(capsys, "leakage", "topics", "--taxonomy", "5", "--k", "5")
    assert code == 0 and fields(out)["multiplicative_leakage"] == "1 (exact 1)"


def test_leakage_topics_with_users_json(capsys):
    code, out, _ = run(capsys, "leakage", "topics", "--taxonomy", "350", "--k", "5", "--users", "350", "--json")
    data = json.loads(out)
    assert code == 0
    assert (data["posterior_vulnerability"]["numerator"], data["posterior_vulnerability"]["denominator"]) == ("1", "5")
    assert data["additive_leakage"]["numerator"] == "69"
    assert data["multiplicative_leakage"]["numerator"] == "70"


def test_leakage_cookies_small(capsys):
    code, out, _ = run(capsys, "leakage", "cookies", "--domains", "3")
    f = fields(out)
    assert code == 0 and f["multiplicative_leakage"] == "4"
    assert "note" not in f


def test_leakage_cookies_500(capsys):
    code, out, _ = run(capsys, "leakage", "cookies", "--domains", "500")
    f = fields(out)
    assert code == 0
    assert abs(float(f["log10_multiplicative_leakage"]) - 150.5150) <= 1e-4
    assert "1.8e238" in f["note"] and "not reproduced" in f["note"]


def test_leakage_cookies_200_note(capsys):
    _, out, _ = run(capsys, "leakage", "cookies", "--domains", "200")
    f = fields(out)
    assert "1.3e95" in f["note"]
    assert abs(float(f["log10_multiplicative_leakage"]) - 60.2060) <= 1e-4


@pytest.mark.parametrize(
    "argv",
    [
        ["leakage", "topics", "--taxonomy", "4", "--k", "5"],
        ["leakage", "topics", "--taxonomy", "4"],
        ["leakage", "cookies", "--domains", "1"],
        ["leakage", "cookies"],
        ["leakage", "cookies", "--domains", "5", "--users", "3"],
        ["leakage", "topics", "--taxonomy", "40", "--k", "2", "--users", "3"],
    ],
)
def test_leakage_validation_errors(capsys, argv):
    code, out, err = run(capsys, *argv)
    assert code == 2 and out == "" and err.startswith("error:")


@pytest.mark.parametrize(
    "argv",
    [["leakage", "topics", "--bogus"], ["leakage"], [], ["frobnicate"], ["leakage", "topics", "--k", "x"]],
)
def test_malformed_flags_exit_2(capsys, argv):
    with pytest.raises(SystemExit) as exc:
        main(argv)
    assert exc.value.code == 2


# --- analyze ---------------------------------------------------------------------


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_analyze_identity(tmp_path, capsys):
    path = write(tmp_path, "id.csv", ",a,b,c\nx1,1,0,0\nx2,0,1,0\nx3,0,0,1\n")
    code, out, _ = run(capsys, "analyze", path)
    f = fields(out)
    assert code == 0 and f["mode"] == "exact"
    assert f["posterior_vulnerability"] == "1 (exact 1)"
    assert f["multiplicative_leakage"] == "3 (exact 3)"
    assert f["additive_leakage"] == "0.666667 (exact 2/3)"


def test_analyze_single_column(tmp_path, capsys):
    path = write(tmp_path, "one.csv", ",y\nx1,1\nx2,1\n")
    _, out, _ = run(capsys, "analyze", path)
    assert fields(out)["multiplicative_leakage"] == "1 (exact 1)"


def test_analyze_topics_six_by_four(tmp_path, capsys, six_by_four):
    cols = ["t1", "t2", "t3", "t4"]
    lines = [","+",".join(cols)]
    for i, p in enumerate(six_by_four, 1):
        lines.append(f"x{i}," + ",".join("1/2" if c in p else "0" for c in cols))
    path = write(tmp_path, "t.csv", "\n".join(lines) + "\n")
    code, out, _ = run(capsys, "analyze", path, "--hyper")
    head, hyper_csv = out.split("\n\n")
    assert code == 0
    assert fields(head)["posterior_vulnerability"] == "0.333333 (exact 1/3)"
    rows = hyper_csv.strip().splitlines()
    assert rows[0] == "output,outer,x1,x2,x3,x4,x5,x6"
    assert rows[1] == "t1,1/4,1/3,0,0,1/3,1/3,0"


def test_analyze_with_prior(tmp_path, capsys):
    ch = write(tmp_path, "c.csv", ",a,b\nx1,1,0\nx2,0,1\nx3,0,1\n")
    prior = write(tmp_path, "p.csv", "label,probability\nx3,1/2\nx1,1/4\nx2,1/4\n")
    code, out, _ = run(capsys, "analyze", ch, "--prior", prior, "--json")
    data = json.loads(out)
    assert code == 0
    # columns: a -> x1 (1/4), b -> max(x2 1/4, x3 1/2)
    assert F(int(data["posterior_vulnerability"]["numerator"]), int(data["posterior_vulnerability"]["denominator"])) == F(3, 4)


def test_analyze_float_flag(tmp_path, capsys):
    path = write(tmp_path, "id.csv", ",a,b\nx1,1,0\nx2,0,1\n")
    _, out, _ = run(capsys, "analyze", path, "--float")
    f = fields(out)
    assert f["mode"] == "float" and f["multiplicative_leakage"] == "2"


def test_analyze_invalid_channel(tmp_path, capsys):
    path = write(tmp_path, "bad.csv", ",a,b\nx1,0.5,0.6\n")
    code, out, err = run(capsys, "analyze", path)
    assert code == 2 and out == ""
    assert "row 0" in err


def test_analyze_prior_mismatch(tmp_path, capsys):
    ch = write(tmp_path, "c.csv", ",a\nx1,1\nx2,1\n")
    prior = write(tmp_path, "p.csv", "x1,1/2\nzz,1/2\n")
    code, _, _ = run(capsys, "analyze", ch, "--prior", prior)
    assert code == 2


def test_analyze_missing_file(tmp_path, capsys):
    code, _, err = run(capsys, "analyze", str(tmp_path / "nope.csv"))
    assert code == 3 and "error" in err


# --- sweep --------------------------------------------------------------------------


def test_parse_range():
    assert parse_range("350") == [350]
    assert parse_range("50:500:50") == list(range(50, 501, 50))
    assert parse_range("1:10:4") == [1, 5, 9]
    assert parse_int_list("1,3,5,10") == [1, 3, 5, 10]


def test_sweep_single(tmp_path, capsys):
    out = tmp_path / "s.csv"
    code, stdout, _ = run(capsys, "sweep", "--m", "350:350", "--k", "5", "--out", str(out))
    assert code == 0 and stdout == ""
    assert out.read_text().splitlines() == ["m,k,leakage,log10_leakage", "350,5,70,1.8451"]


def test_sweep_grid(tmp_path, capsys):
    out = tmp_path / "s.csv"
    code, _, _ = run(capsys, "sweep", "--m", "50:500:50", "--k", "1,3,5,10", "--out", str(out))
    rows = out.read_text().splitlines()[1:]
    assert code == 0 and len(rows) == 40
    by_k = {}
    for line in rows:
        m, k, leak, _ = line.split(",")
        by_k.setdefault(int(k), []).append(float(leak))
    for leaks in by_k.values():
        assert all(a < b for a, b in zip(leaks, leaks[1:]))


def test_sweep_skips_reported(tmp_path, capsys):
    out = tmp_path / "s.csv"
    code, _, err = run(capsys, "sweep", "--m", "2:3", "--k", "1,3", "--out", str(out))
    assert code == 0 and "skipped M=2, k=3" in err
    assert len(out.read_text().splitlines()) == 4


def test_sweep_stdout(capsys):
    code, out, _ = run(capsys, "sweep", "--m", "10", "--k", "1", "--out", "-")
    assert code == 0 and out.splitlines()[1] == "10,1,10,1"


def test_sweep_unwritable(tmp_path, capsys):
    code, _, err = run(capsys, "sweep", "--m", "10", "--k", "1", "--out", str(tmp_path / "no" / "dir" / "x.csv"))
    assert code == 3 and "error" in err


def test_sweep_bad_range(capsys):
    code, _, _ = run(capsys, "sweep", "--m", "10:1", "--k", "1", "--out", "-")
    assert code == 2


# --- simulate --------------------------------------------------------------------------


CONFIG = dict(users=6, domains=12, taxonomy_size=4, k=2, noise_p=0, epochs=1, seed=42, samples_per_user=20_000, trials=20_000)


def test_simulate_byte_identical(tmp_path, capsys):
    cfg = write(tmp_path, "c.json", json.dumps({**CONFIG, "taxonomy_size": 12, "k": 3, "noise_p": 0.05}))
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert run(capsys, "simulate", "--config", cfg, "--out", str(a))[0] == 0
    assert run(capsys, "simulate", "--config", cfg, "--out", str(b))[0] == 0
    assert a.read_bytes() == b.read_bytes()


def test_simulate_fixture(tmp_path, capsys, six_by_four):
    cfg = write(tmp_path, "c.json", json.dumps({**CONFIG, "profiles": six_by_four, "trials": 100_000}))
    out = tmp_path / "r.json"
    assert run(capsys, "simulate", "--config", cfg, "--out", str(out))[0] == 0
    ep = json.loads(out.read_text())["epochs"][0]
    se = (1 / 3 * 2 / 3 / 100_000) ** 0.5
    assert abs(ep["empirical"]["success_rate"] - 1 / 3) <= 3 * se


def test_simulate_full_noise(tmp_path, capsys):
    cfg = write(tmp_path, "c.json", json.dumps({**CONFIG, "noise_p": 1}))
    code, out, _ = run(capsys, "simulate", "--config", cfg, "--out", "-")
    ep = json.loads(out)["epochs"][0]
    assert code == 0
    assert ep["empirical"]["multiplicative_leakage"] == pytest.approx(1.0, abs=0.1)


def test_simulate_generation_failure(tmp_path, capsys, monkeypatch):
    from topicsqif import simulator

    monkeypatch.setattr(simulator, "MAX_RETRIES", 1)
    monkeypatch.setattr(simulator.synthesize_population, "__defaults__", (simulator.VISITS_PER_EPOCH, 1))
    cfg = write(tmp_path, "c.json", json.dumps({**CONFIG, "users": 3, "domains": 2, "taxonomy_size": 2, "seed": 5}))
    code, out, err = run(capsys, "simulate", "--config", cfg, "--out", "-")
    assert code == 4 and out == "" and "simulation failed" in err


@pytest.mark.parametrize("text", ["{not json", "[1, 2]", json.dumps({**CONFIG, "bogus": 1})])
def test_simulate_bad_config(tmp_path, capsys, text):
    cfg = write(tmp_path, "c.json", text)
    assert run(capsys, "simulate", "--config", cfg, "--out", "-")[0] == 2


def test_module_entry_point():
    res = subprocess.run(
        [sys.executable, "-m", "topicsqif", "leakage", "topics", "--taxonomy", "350", "--k", "5"],
        capture_output=True,
        text=True,
        check=False,
    )
    assert res.returncode == 0 and "70 (exact 70)" in res.stdout
