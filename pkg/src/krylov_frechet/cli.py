"""The ``frechet`` command line tool.

Exit status is 0 on success, 1 on a numerical failure (breakdown,
deflation, singular solves, no convergence) and 2 on usage or input errors.
"""

import argparse
import csv
import sys

import numpy as np

from . import bench
from .errors import FrechetError, NumericalError
from .frechet import (
    METHODS,
    RankOneDirection,
    apply,
    load_factors,
    run_to_tolerance,
    save_factors,
    singular_values,
)
from .oracle import sensitivity_topk
from .sparse import read_dense_matrix_market, read_matrix_market, read_vector, write_matrix_market, write_vector


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _core_flags(p, need_tol=True):
    p.add_argument("--matrix", required=True, help="builtin:laplace2d:K, builtin:convdiff2d:K:PE1:PE2 or a .mtx path")
    p.add_argument("--y", default="random", help="vector file or 'random'")
    p.add_argument("--z", default="same-as-y", help="vector file, 'random' or 'same-as-y'")
    p.add_argument("--eta", default="1", help="re[,im]")
    p.add_argument("--function", choices=("exp", "log", "invpow"), default="exp")
    p.add_argument("--scale", default="1", help="exp(scale*x); re[,im]")
    p.add_argument("--sigma", type=float, default=0.5, help="exponent of x^-sigma")
    p.add_argument("--method", choices=[m for m in METHODS if m != "rational"], default="arnoldi")
    p.add_argument("--pole", default=None, help="shift-and-invert pole re[,im]")
    p.add_argument("--tol", type=float, default=1e-8 if not need_tol else None, required=need_tol)
    p.add_argument("--gap", type=int, default=1, help="step d between compared iterates")
    p.add_argument("--max-dim", type=int, default=300)
    p.add_argument("--estimator", choices=("diff", "block"), default="diff")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dist", choices=("normal", "uniform"), default="normal",
                   help="entry distribution of random start vectors")


def build_parser():
    p = _Parser(prog="frechet", description="Low-rank Krylov approximation of Frechet derivatives.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    a = sub.add_parser("approx", help="approximate L_f(A, eta y z^H) and store the factors")
    _core_flags(a)
    a.add_argument("--out", required=True, help="output directory")

    b = sub.add_parser("apply", help="apply stored factors to vectors")
    b.add_argument("--factors", required=True)
    b.add_argument("--b", required=True, help="vector file, or .mtx array whose columns are vectors")
    b.add_argument("--out", required=True)

    c = sub.add_parser("convergence", help="CSV of errors and estimates against m")
    _core_flags(c, need_tol=False)
    c.add_argument("--reference", choices=("oracle", "self"), default="oracle")
    c.add_argument("--out", default="-")

    s = sub.add_parser("spectrum", help="CSV of leading singular values")
    _core_flags(s, need_tol=False)
    s.add_argument("--k", type=int, default=20)
    s.add_argument("--source", choices=("oracle", "krylov"), default="oracle")
    s.add_argument("--out", default="-")

    t = sub.add_parser("sensitivity", help="largest entries of L_exp(t A^T, f x0^T)")
    t.add_argument("--matrix", required=True)
    t.add_argument("--t", type=float, required=True)
    t.add_argument("--f", required=True, help="weight vector file")
    t.add_argument("--x0", required=True, help="initial state vector file")
    t.add_argument("--k", type=int, default=10)
    t.add_argument("--pattern-only", action="store_true")
    t.add_argument("--method", default="oracle", choices=["oracle"] + [m for m in METHODS if m != "rational"])
    t.add_argument("--out", default="-")
    return p


def _setup(args):
    A = bench.parse_matrix(args.matrix)
    y, z = bench.make_vectors(A.n, args.y, args.z, args.seed, args.dist)
    direction = RankOneDirection(bench.parse_complex(args.eta), y, z)
    f = bench.make_function(args.function, bench.parse_complex(args.scale), args.sigma)
    kw = {}
    if args.pole is not None:
        if args.method != "shift-invert":
            raise UsageError("--pole only applies to --method shift-invert")
        kw["pole"] = bench.parse_complex(args.pole)
    return A, direction, f, kw


class _Output:
    def __init__(self, path):
        self.path = path

    def __enter__(self):
        self.fh = sys.stdout if self.path == "-" else open(self.path, "w", newline="")
        return self.fh

    def __exit__(self, *exc):
        if self.fh is not sys.stdout:
            self.fh.close()


def cmd_approx(args):
    A, direction, f, kw = _setup(args)
    L, record = run_to_tolerance(A, direction, f, method=args.method, tol=args.tol, d=args.gap,
                                 max_dim=args.max_dim, estimator=args.estimator, **kw)
    save_factors(L, args.out, f)
    last = record.rows[-1]
    est = last["est_diff"] if args.estimator == "diff" else last["est_block"]
    print(f"method={L.method} m={L.m} rank<={L.rank_bound} estimate={est!r}")
    return 0


def cmd_apply(args):
    L = load_factors(args.factors)
    if args.b.endswith(".mtx"):
        B = read_dense_matrix_market(args.b)
        write_matrix_market(args.out, apply(L, B), fmt="array")
    else:
        write_vector(args.out, apply(L, read_vector(args.b)))
    return 0


def cmd_convergence(args):
    A, direction, f, kw = _setup(args)
    bound = bench.default_bound(A, direction, f, args.method)
    rec = bench.convergence_curve(A, direction, f, args.method, max_dim=args.max_dim, d=args.gap,
                                  reference=args.reference, bound=bound, **kw)
    if bound is not None and args.method == "extended" and rec.rows:
        # only the slope is known; anchor it to the first error
        first = rec.rows[0]
        anchor = first["error"] / bound(first["m"]) if bound(first["m"]) else 0.0
        for r in rec.rows:
            r["bound"] = r["bound"] * anchor
    with _Output(args.out) as fh:
        bench.write_csv(rec, fh)
    return 0


def cmd_spectrum(args):
    A, direction, f, kw = _setup(args)
    if args.source == "oracle":
        ref = bench.dense_reference(A, direction, f)
        sv = np.linalg.svd(ref, compute_uv=False)[: args.k]
    else:
        L, _ = run_to_tolerance(A, direction, f, method=args.method, tol=args.tol, d=args.gap,
                                max_dim=args.max_dim, estimator=args.estimator, **kw)
        sv = singular_values(L, args.k)
    with _Output(args.out) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", "sigma"])
        for i, s in enumerate(sv, 1):
            w.writerow([i, repr(float(s))])
    return 0


def cmd_sensitivity(args):
    A = read_matrix_market(args.matrix)
    res = sensitivity_topk(A, args.t, read_vector(args.f), read_vector(args.x0), args.k,
                           pattern_only=args.pattern_only, method=args.method)
    with _Output(args.out) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["i", "j", "value"])
        for i, j, v in res.entries:
            w.writerow([i + 1, j + 1, repr(v)])
    return 0


COMMANDS = {
    "approx": cmd_approx,
    "apply": cmd_apply,
    "convergence": cmd_convergence,
    "spectrum": cmd_spectrum,
    "sensitivity": cmd_sensitivity,
}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"frechet: numerical failure: {exc}", file=sys.stderr)
        return 1
    except (FrechetError, ValueError, OSError) as exc:
        print(f"frechet: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
