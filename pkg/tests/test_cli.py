import re
import subprocess
import sys

import pytest

from pmlhist.cli import EXIT_BUDGET, EXIT_INVALID, EXIT_IO, main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def table(out):
    return {line.split()[0]: float(line.split()[1]) for line in out.splitlines()}


def test_bound(capsys):
    code, out, _ = run(capsys, "bound", "--b", "2", "--alpha", "0.05", "--k", "10")
    assert code == 0
    t = table(out)
    assert t["eps_dp"] == 1.0
    assert abs(t["eps_pml_tight"] - 0.917578) < 1e-6
    assert t["eps_pml_simplified"] == 0.95125
    assert t["eps_pml_composition"] == 4.2778125
    assert abs(t["pml_cap"] - 2.99573227355) < 1e-10
    assert "0.917577887121" in out


@pytest.mark.parametrize("argv,needle", [
    (["bound", "--alpha", "0.2", "--k", "10"], "alpha"),
    (["bound", "--b", "0"], "noise scale"),
    (["bound", "--k", "1"], "k"),
])
def test_bound_rejects(capsys, argv, needle):
    code, out, err = run(capsys, *argv)
    assert code == EXIT_INVALID
    assert needle in err and out == ""


def test_calibrate(capsys):
    code, out, _ = run(capsys, "calibrate", "--epsilon", "0.5", "--alpha", "0.05", "--mechanism", "pml")
    assert code == 0 and abs(float(out) - 3.7401) < 1e-3
    code, out, _ = run(capsys, "calibrate", "--epsilon", "0.5", "--mechanism", "dp")
    assert code == 0 and float(out) == 4.0
    code, out, err = run(capsys, "calibrate", "--epsilon", "3.0", "--alpha", "0.05", "--mechanism", "pml")
    assert code == 0 and out.strip() == "none" and "no noise needed" in err
    code, _, _ = run(capsys, "calibrate", "--epsilon", "-1")
    assert code == EXIT_INVALID


@pytest.fixture
def labels(tmp_path):
    f = tmp_path / "labels.txt"
    f.write_text("1\n2\n1\n3\n")
    return f


def test_privatize_tiny_noise(capsys, labels):
    code, out, err = run(capsys, "privatize", "--input", str(labels), "--epsilon", "1000",
                         "--mechanism", "dp", "--seed", "7")
    assert code == 0
    assert out.splitlines() == ["bin,count", "1,2", "2,1", "3,1"]
    assert "guarantee" in err


def test_privatize_deterministic(capsys, labels):
    argv = ["privatize", "--input", str(labels), "--epsilon", "0.5", "--alpha", "0.3", "--seed", "11"]
    first = run(capsys, *argv)
    second = run(capsys, *argv)
    assert first[0] == 0 and first[1] == second[1]
    other = run(capsys, *argv[:-1], "12")
    assert other[0] == 0


def test_privatize_alpha_check(capsys, labels):
    assert run(capsys, "privatize", "--input", str(labels), "--epsilon", "1", "--alpha", "0.3")[0] == 0
    code, _, err = run(capsys, "privatize", "--input", str(labels), "--epsilon", "1", "--alpha", "0.4")
    assert code == EXIT_INVALID and "alpha" in err


def test_privatize_seed_from_env(capsys, labels, monkeypatch):
    argv = ["privatize", "--input", str(labels), "--epsilon", "0.5", "--alpha", "0.3"]
    monkeypatch.setenv("PMLHIST_SEED", "11")
    via_env = run(capsys, *argv)[1]
    monkeypatch.delenv("PMLHIST_SEED")
    assert via_env == run(capsys, *argv, "--seed", "11")[1]


def test_privatize_bad_inputs(capsys, tmp_path):
    empty = tmp_path / "empty.txt"
    empty.write_text("")
    assert run(capsys, "privatize", "--input", str(empty), "--epsilon", "1")[0] == EXIT_INVALID
    bad = tmp_path / "bad.txt"
    bad.write_text("k=2\n1\n3\n")
    assert run(capsys, "privatize", "--input", str(bad), "--epsilon", "1")[0] == EXIT_INVALID
    missing = tmp_path / "missing.txt"
    assert run(capsys, "privatize", "--input", str(missing), "--epsilon", "1")[0] == EXIT_IO


def test_simulate_defaults(capsys, tmp_path):
    out = tmp_path / "eps.csv"
    code, _, err = run(capsys, "simulate", "--sweep", "epsilon", "--reps", "100", "--out", str(out))
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "epsilon,k,alpha,mechanism,noise_scale,mean_tvd,stderr_tvd,degenerate_count,reps,seed"
    assert len(lines) == 41
    assert "wrote 40 rows" in err


def test_simulate_k_sweep(capsys, tmp_path):
    out = tmp_path / "k.csv"
    assert run(capsys, "simulate", "--sweep", "k", "--reps", "50", "--out", str(out))[0] == 0
    assert len(out.read_text().splitlines()) == 17
    bad = tmp_path / "bad.csv"
    code = run(capsys, "simulate", "--sweep", "k", "--ks", "21", "--reps", "5", "--out", str(bad))[0]
    assert code == EXIT_INVALID and not bad.exists()


def test_simulate_byte_identical(capsys, tmp_path):
    a, b, c = (tmp_path / f"{x}.csv" for x in "abc")
    common = ["simulate", "--reps", "300", "--seed", "5", "--ks", "5,10", "--epsilons", "0.2,1"]
    run(capsys, *common, "--out", str(a))
    run(capsys, *common, "--out", str(b))
    run(capsys, *common, "--workers", "3", "--out", str(c))
    assert a.read_bytes() == b.read_bytes() == c.read_bytes()


def test_simulate_io_error_leaves_nothing(capsys, tmp_path):
    target = tmp_path / "missing_dir" / "x.csv"
    code, _, err = run(capsys, "simulate", "--reps", "5", "--out", str(target))
    assert code == EXIT_IO
    assert not target.parent.exists()


def test_simulate_config_file(capsys, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# sweep settings\nreps=40\nks=5\nepsilons=0.5\nalphas=0.05\nseed=4\nout=%s\n"
                   % (tmp_path / "cfg.csv"))
    assert run(capsys, "simulate", "--config", str(cfg))[0] == 0
    rows = (tmp_path / "cfg.csv").read_text().splitlines()
    assert len(rows) == 3 and rows[1].endswith(",40,4")
    # flags override the file
    assert run(capsys, "simulate", "--config", str(cfg), "--reps", "7")[0] == 0
    assert (tmp_path / "cfg.csv").read_text().splitlines()[1].endswith(",7,4")


def test_config_rejects_unknown_key(capsys, tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("repetitions=40\n")
    code, _, err = run(capsys, "simulate", "--config", str(cfg), "--out", str(tmp_path / "o.csv"))
    assert code == EXIT_INVALID and "unknown key" in err


def test_verify_passes(capsys):
    code, out, _ = run(capsys, "verify", "--n", "2", "--k", "2", "--b", "1", "--probs", "0.5,0.5")
    assert code == 0 and out.strip().endswith("PASS")
    code, out, _ = run(capsys, "verify", "--n", "3", "--k", "3", "--b", "2", "--probs", "0.2,0.3,0.5")
    assert code == 0 and "violations     0" in out


def test_verify_budget(capsys):
    code, _, err = run(capsys, "verify", "--n", "50", "--k", "10")
    assert code == EXIT_BUDGET and "budget" in err


def test_verify_validation(capsys):
    assert run(capsys, "verify", "--probs", "0.5,0.6")[0] == EXIT_INVALID
    assert run(capsys, "verify", "--k", "3", "--probs", "0.5,0.5")[0] == EXIT_INVALID


def test_help_lists_defaults():
    for cmd in ["bound", "calibrate", "privatize", "simulate", "verify"]:
        out = subprocess.run([sys.executable, "-m", "pmlhist", cmd, "--help"],
                             capture_output=True, text=True, check=True).stdout
        options = out.split("options:", 1)[1]
        entries = re.split(r"\n  (?=-)", options)[1:]
        assert len(entries) >= 3
        for entry in entries:
            if entry.startswith("-h"):
                continue
            assert "default" in entry, f"{cmd}: {entry.split()[0]} has no default in help"


def test_argparse_errors_exit_2(capsys):
    assert main(["bound", "--b", "abc"]) == EXIT_INVALID
    assert main([]) == EXIT_INVALID
