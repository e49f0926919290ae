import argparse

import pytest

from smartkl import cli
from smartkl.solvers import Algorithm, BetaRule, SolverConfig


def test_parse_algorithm_forms():
    assert cli.parse_algorithm("smart").algorithm is Algorithm.SMART
    for text in ("RG-CG(PR)", "rg-cg:pr", " RG-CG ( PR ) "):
        cfg = cli.parse_algorithm(text)
        assert cfg.algorithm is Algorithm.RG_CG and cfg.cg_beta_rule is BetaRule.PR
    base = SolverConfig(max_iter=3)
    assert cli.parse_algorithm("FSMART-G", base).max_iter == 3
    for bad in ("SMART(PR)", "RG-CG(XX)", "WHAT", "RG CG"):
        with pytest.raises(argparse.ArgumentTypeError):
            cli.parse_algorithm(bad)


def test_generate_then_solve_from_files(tmp_path, capsys):
    inst_dir = tmp_path / "inst"
    assert cli.main(["generate", "--problem", "expander", "--param", "m=30", "--param", "n=60",
                     "--param", "sparsity=5", "--seed", "2", "--out", str(inst_dir)]) == 0
    assert (inst_dir / "matrix.mtx").exists() and (inst_dir / "meta.txt").exists()
    out_dir = tmp_path / "run"
    assert cli.main(["solve", "--problem", str(inst_dir), "--algorithm", "FSMART",
                     "--max-iter", "15", "--out", str(out_dir)]) == 0
    out = capsys.readouterr().out
    assert "m=30 n=60" in out and "FSMART" in out and "hamming=" in out
    assert (out_dir / "trace_fsmart.csv").exists() and (out_dir / "summary.csv").exists()


def test_compare_with_config_file(tmp_path, capsys):
    conf = tmp_path / "run.conf"
    conf.write_text("problem=blur\nparam.image_size=8\nparam.mask=3\nmax_iter=10\n"
                    "algorithms=SMART, RG-BB\narmijo_sigma=0.01\n")
    assert cli.main(["compare", "--config", str(conf), "--jobs", "2", "--out", str(tmp_path / "o")]) == 0
    out = capsys.readouterr().out
    assert "SMART" in out and "RG-BB" in out
    assert (tmp_path / "o" / "recon_rg_bb.pgm").exists()


def test_compare_repeated_algorithm_flags(capsys):
    assert cli.main(["compare", "--algorithm", "SMART,FSMART", "--algorithm", "RG-CG(HS)", "--max-iter", "5"]) == 0
    out = capsys.readouterr().out
    assert "RG-CG(HS)" in out and "FSMART" in out


def test_certify_sweep(tmp_path, capsys):
    assert cli.main(["certify", "--problem", "expander", "--sweep", "m=40,70", "--max-iter", "20",
                     "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "[m=40]" in out and "[m=70]" in out and "gamma_0=5" in out
    lines = (tmp_path / "certificates.csv").read_text().splitlines()
    assert lines[0] == "instance,iter,gamma,first_min_index" and len(lines) == 1 + 2 * 21


def test_errors_return_nonzero(tmp_path, capsys):
    assert cli.main(["solve", "--problem", "toy", "--config", str(tmp_path / "missing.conf")]) == 1
    assert cli.main(["compare", "--problem", "toy", "--algorithm", "SMART,SMART"]) == 1
    assert "duplicate" in capsys.readouterr().err
    assert cli.main(["solve", "--algorithm", "NOPE"]) == 2
    assert "NOPE" in capsys.readouterr().err
    with pytest.raises(SystemExit):
        cli.main(["generate", "--problem", "toy"])
