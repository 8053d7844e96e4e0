import io
import os
import subprocess
import sys

import numpy as np
import pytest

from conftest import rel
from krylov_frechet import bench
from krylov_frechet.cli import main
from krylov_frechet.frechet import CSV_COLUMNS, RankOneDirection, apply, load_factors, run_to_tolerance
from krylov_frechet.matfun import FunctionSpec
from krylov_frechet.oracle import reference_frechet_block, synthetic_decay_matrix
from krylov_frechet.sparse import (
    as_sparse,
    laplace2d,
    read_dense_matrix_market,
    read_vector,
    write_matrix_market,
    write_vector,
)

LAP8 = "builtin:laplace2d:8"


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_approx_apply_round_trip(tmp_path, capsys):
    fac = tmp_path / "fac"
    code, out, _ = run(["approx", "--matrix", LAP8, "--function", "exp", "--scale", "-0.02",
                        "--tol", "1e-10", "--out", str(fac)], capsys)
    assert code == 0 and "m=" in out
    for name in ("U.mtx", "X.mtx", "W.mtx", "meta.txt"):
        assert (fac / name).exists()
    A = laplace2d(8)
    y, _ = bench.make_vectors(A.n)
    R = reference_frechet_block(A.toarray(), np.outer(y, y), FunctionSpec.exp(-0.02))
    b = np.random.default_rng(5).standard_normal(A.n)
    write_vector(tmp_path / "b.txt", b)
    assert run(["apply", "--factors", str(fac), "--b", str(tmp_path / "b.txt"), "--out", str(tmp_path / "o1.txt")], capsys)[0] == 0
    assert rel(read_vector(tmp_path / "o1.txt"), R @ b) <= 1e-8
    # reload matches, and a second invocation is byte-identical
    assert np.array_equal(read_vector(tmp_path / "o1.txt"), apply(load_factors(str(fac)), b))
    run(["apply", "--factors", str(fac), "--b", str(tmp_path / "b.txt"), "--out", str(tmp_path / "o2.txt")], capsys)
    assert (tmp_path / "o1.txt").read_bytes() == (tmp_path / "o2.txt").read_bytes()
    write_vector(tmp_path / "zero.txt", np.zeros(A.n))
    run(["apply", "--factors", str(fac), "--b", str(tmp_path / "zero.txt"), "--out", str(tmp_path / "oz.txt")], capsys)
    assert not read_vector(tmp_path / "oz.txt").any()
    B = np.random.default_rng(6).standard_normal((A.n, 3))
    write_matrix_market(tmp_path / "B.mtx", B)
    run(["apply", "--factors", str(fac), "--b", str(tmp_path / "B.mtx"), "--out", str(tmp_path / "OB.mtx")], capsys)
    assert rel(read_dense_matrix_market(tmp_path / "OB.mtx"), R @ B) <= 1e-8
    write_vector(tmp_path / "short.txt", np.ones(5))
    assert run(["apply", "--factors", str(fac), "--b", str(tmp_path / "short.txt"), "--out", str(tmp_path / "x.txt")], capsys)[0] == 2


def test_approx_tol_one(tmp_path, capsys):
    code, out, _ = run(["approx", "--matrix", LAP8, "--tol", "1", "--out", str(tmp_path / "f")], capsys)
    assert code == 0
    assert load_factors(str(tmp_path / "f")).rank_bound <= 2


@pytest.mark.parametrize("argv", [
    ["approx", "--matrix", LAP8, "--tol", "1e-8", "--out", "x", "--bogus"],
    ["approx", "--matrix", LAP8, "--out", "x"],
    ["frobnicate"],
    ["approx", "--matrix", "builtin:nothing:3", "--tol", "1e-8", "--out", "x"],
    ["approx", "--matrix", LAP8, "--tol", "1e-8", "--out", "x", "--pole", "1"],
])
def test_usage_errors(argv, capsys, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert run(argv, capsys)[0] == 2


def test_numerical_failure_exit(tmp_path, capsys):
    code, _, err = run(["approx", "--matrix", LAP8, "--function", "invpow", "--tol", "1e-14",
                        "--max-dim", "3", "--out", str(tmp_path / "f")], capsys)
    assert code == 1 and "numerical" in err
    code, _, _ = run(["approx", "--matrix", LAP8, "--method", "block", "--tol", "1e-8",
                      "--out", str(tmp_path / "g")], capsys)
    assert code == 1


def test_convergence_csv(capsys):
    code, out, _ = run(["convergence", "--matrix", LAP8, "--function", "invpow", "--method", "lanczos",
                        "--max-dim", "5"], capsys)
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == ",".join(CSV_COLUMNS) == "m,error,est_diff,est_block,bound,wall_ns"
    assert len(lines) - 1 <= 5
    rec = bench.read_csv(io.StringIO(out))
    assert list(rec.column("m")) == [1, 2, 3, 4, 5]
    assert all(b >= e for b, e in zip(rec.column("bound"), rec.column("error")))
    assert rec.rows[0]["est_diff"] is None and np.isnan(rec.column("est_diff")[0])


def _strip_timing(text):
    return [line.rsplit(",", 1)[0] for line in text.splitlines()]


def test_convergence_deterministic(capsys):
    argv = ["convergence", "--matrix", "builtin:convdiff2d:6:0.5:0.25", "--function", "exp", "--scale", "-0.005",
            "--method", "arnoldi", "--z", "random", "--max-dim", "8", "--estimator", "block", "--seed", "7"]
    out1 = run(argv, capsys)[1]
    out2 = run(argv, capsys)[1]
    assert _strip_timing(out1) == _strip_timing(out2)
    rec = bench.read_csv(io.StringIO(out1))
    assert all(v is not None for v in rec.column("est_block"))
    assert bench.record_to_csv(rec) == out1


def test_convergence_extended_and_self(capsys):
    code, out, _ = run(["convergence", "--matrix", LAP8, "--function", "invpow", "--method", "extended",
                        "--reference", "self", "--max-dim", "8", "--dist", "uniform"], capsys)
    assert code == 0
    rec = bench.read_csv(io.StringIO(out))
    assert rec.rows[0]["bound"] == pytest.approx(rec.rows[0]["error"])


def test_spectrum(capsys, tmp_path):
    write_matrix_market(tmp_path / "I.mtx", as_sparse(3.0 * np.eye(12)))
    code, out, _ = run(["spectrum", "--matrix", str(tmp_path / "I.mtx"), "--function", "exp", "--k", "3"], capsys)
    # at A = 3 I the derivative is e^3 y y^T: rank one
    vals = [float(r.split(",")[1]) for r in out.strip().splitlines()[1:]]
    assert code == 0 and vals[0] == pytest.approx(np.exp(3.0)) and max(vals[1:]) <= 1e-13
    code, out, _ = run(["spectrum", "--matrix", "builtin:laplace2d:10", "--function", "invpow", "--z", "random",
                        "--k", "5"], capsys)
    oracle = [float(r.split(",")[1]) for r in out.strip().splitlines()[1:]]
    code, out, _ = run(["spectrum", "--matrix", "builtin:laplace2d:10", "--function", "invpow", "--z", "random",
                        "--k", "5", "--source", "krylov", "--tol", "1e-12"], capsys)
    krylov = [float(r.split(",")[1]) for r in out.strip().splitlines()[1:]]
    assert np.allclose(krylov, oracle, rtol=0, atol=1e-6 * oracle[0])


def test_sensitivity_cli(tmp_path, capsys):
    A = synthetic_decay_matrix()
    write_matrix_market(tmp_path / "A.mtx", A)
    rng = np.random.default_rng(3)
    write_vector(tmp_path / "f.txt", rng.random(A.n))
    write_vector(tmp_path / "x0.txt", rng.random(A.n))
    base = ["sensitivity", "--matrix", str(tmp_path / "A.mtx"), "--t", "1", "--f", str(tmp_path / "f.txt"),
            "--x0", str(tmp_path / "x0.txt"), "--k", "10", "--pattern-only"]
    out_o = run(base, capsys)[1].splitlines()
    out_k = run(base + ["--method", "arnoldi"], capsys)[1].splitlines()
    assert out_o[0] == "i,j,value" and len(out_o) == 11
    pos = lambda lines: {tuple(l.split(",")[:2]) for l in lines[1:]}
    assert pos(out_o) == pos(out_k)


def test_console_script_runs():
    r = subprocess.run([sys.executable, "-m", "krylov_frechet.cli", "--help"], capture_output=True, text=True)
    assert r.returncode == 0 and "approx" in r.stdout
    r = subprocess.run([sys.executable, "-m", "krylov_frechet.cli"], capture_output=True, text=True)
    assert r.returncode == 2


def test_sum_of_rank_ones(rng):
    A = laplace2d(6)
    f = FunctionSpec.invpow(0.5)
    y, z = rng.standard_normal(A.n), rng.standard_normal(A.n)
    Ls = bench.sum_of_rank_ones(A, [RankOneDirection(1.0, y, z), RankOneDirection(-1.0, y, z)], f, tol=1e-12)
    b = rng.standard_normal(A.n)
    assert np.linalg.norm(sum(apply(L, b) for L in Ls)) <= 1e-10 * np.linalg.norm(apply(Ls[0], b))
    y2, z2 = rng.standard_normal(A.n), rng.standard_normal(A.n)
    Ls = bench.sum_of_rank_ones(A, [RankOneDirection(1.0, y, z), RankOneDirection(2.0, y2, z2)], f, tol=1e-12)
    E = np.outer(y, z) + 2 * np.outer(y2, z2)
    R = reference_frechet_block(A.toarray(), E, f)
    assert rel(sum(L.materialize() for L in Ls), R) <= 1e-9
    d = RankOneDirection(1.0, y, z)
    single = bench.sum_of_rank_ones(A, [d], f, tol=1e-9)[0]
    ref, _ = run_to_tolerance(A, d, f, tol=1e-9)
    assert np.array_equal(single.materialize(), ref.materialize())
    with pytest.raises(ValueError):
        bench.sum_of_rank_ones(A, [], f)


def test_parsers():
    assert bench.parse_complex("2") == 2.0
    assert bench.parse_complex("1,-2") == complex(1, -2)
    with pytest.raises(ValueError):
        bench.parse_complex("1,2,3")
    assert bench.parse_matrix("builtin:convdiff2d:4:0.5:0.25").n == 16
    y, z = bench.make_vectors(10, "random", "random", seed=1, dist="uniform")
    assert (y > 0).all() and np.isclose(np.linalg.norm(z), 1)
