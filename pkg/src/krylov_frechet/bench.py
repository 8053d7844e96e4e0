"""Experiment helpers: input parsing, convergence curves and CSV output."""

import csv
import io
import math
import time

import numpy as np

from .bounds import (
    Inapplicable,
    SpectralData,
    apriori_exp_bound,
    apriori_extended_slope,
    apriori_log_bound,
    apriori_stieltjes_bound,
)
from .frechet import (
    CSV_COLUMNS,
    ConvergenceRecord,
    RankOneDirection,
    _block_estimate,
    from_dense,
    lowrank_diff_norm,
    make_builder,
    run_to_tolerance,
)
from .matfun import FunctionSpec
from .oracle import DENSE_LIMIT, reference_frechet_block, reference_frechet_dd_rank_one
from .sparse import convdiff2d, laplace2d, read_matrix_market, read_vector


def parse_matrix(text):
    """``builtin:laplace2d:K``, ``builtin:convdiff2d:K:PE1:PE2`` or a Matrix Market path."""
    if text.startswith("builtin:"):
        parts = text.split(":")[1:]
        try:
            if parts[0] == "laplace2d" and len(parts) == 2:
                return laplace2d(int(parts[1]))
            if parts[0] == "convdiff2d" and len(parts) == 4:
                return convdiff2d(int(parts[1]), float(parts[2]), float(parts[3]))
        except ValueError:
            pass
        raise ValueError(f"bad builtin matrix {text!r}")
    return read_matrix_market(text)


def parse_complex(text):
    """``re`` or ``re,im``."""
    parts = text.split(",")
    if len(parts) == 1:
        return float(parts[0])
    if len(parts) == 2:
        return complex(float(parts[0]), float(parts[1]))
    raise ValueError(f"cannot parse {text!r} as a number")


def unit_random(n, rng, dist="normal"):
    """Unit vector from standard normal or uniform [0, 1) entries."""
    if dist == "normal":
        v = rng.standard_normal(n)
    elif dist == "uniform":
        v = rng.random(n)
    else:
        raise ValueError(f"unknown distribution {dist!r}")
    return v / np.linalg.norm(v)


def make_vectors(n, y_spec="random", z_spec="same-as-y", seed=0, dist="normal"):
    """Vectors from files, unit-norm random draws, or z = y."""
    rng = np.random.default_rng(seed)
    y = unit_random(n, rng, dist) if y_spec == "random" else read_vector(y_spec)
    if z_spec == "same-as-y":
        z = y
    elif z_spec == "random":
        z = unit_random(n, rng, dist)
    else:
        z = read_vector(z_spec)
    return y, z


def make_function(kind, scale=1.0, sigma=0.5):
    if kind == "exp":
        return FunctionSpec.exp(scale)
    if kind == "log":
        return FunctionSpec.log()
    if kind == "invpow":
        return FunctionSpec.invpow(sigma)
    raise ValueError(f"unknown function {kind!r}")


def dense_reference(A, direction, f):
    """Oracle derivative for a rank-one direction (dense, n <= DENSE_LIMIT)."""
    if A.n > DENSE_LIMIT:
        raise ValueError(f"dense reference limited to n <= {DENSE_LIMIT}")
    if A.hermitian or A.check_hermitian():
        return reference_frechet_dd_rank_one(A.toarray(), direction.y, direction.z, f, direction.eta)
    return reference_frechet_block(A.toarray(), direction.dense(), f)


def default_bound(A, direction, f, method):
    """A priori bound as a function of m where one applies, else None.

    Bounds assume Hermitian A; they are scaled by |eta| ||y|| ||z||.
    Extended Krylov only has a known slope, returned unscaled.
    """
    if not (A.hermitian or A.check_hermitian()) or A.n > DENSE_LIMIT:
        return None
    s = SpectralData.from_matrix(A)
    w = abs(direction.eta) * np.linalg.norm(direction.y) * np.linalg.norm(direction.z)
    if method == "extended" and s.lmin > 0:
        return lambda m: apriori_extended_slope(s, m)
    if method not in ("lanczos", "arnoldi"):
        return None
    if f.kind == "exp" and np.isreal(f.scale) and f.scale > 0 and s.lmax <= 0:
        s = SpectralData(s.lmin, s.lmax, -s.lmin / 4.0, float(np.real(f.scale)))
        return lambda m: apriori_exp_bound(s, m, w, 1.0)
    if f.kind == "invpow" and s.lmin > 0:
        return lambda m: apriori_stieltjes_bound(s, m, 1.0, f) * w
    if f.kind == "log" and s.lmin > 0:
        return lambda m: apriori_log_bound(s, m, 1.0) * w
    return None


def convergence_curve(A, direction, f, method, max_dim=300, d=1, reference="oracle",
                      bound=None, floor=0.0, **kw):
    """Per-step errors and estimates for m = d, 2d, ... up to max_dim.

    `reference` is ``"oracle"``, ``"self"`` (the same method at 1.25 max_dim),
    a dense matrix or a LowRankFrechet. The loop also ends when the
    subspace is exhausted or the error falls below `floor`.

    ``est_diff`` in row m is |L_m - L_(m-d)|, which estimates the error of
    the older iterate L_(m-d); ``est_block`` in row m refers to L_m itself.
    """
    builder = make_builder(A, direction, f, method, **kw)
    if isinstance(reference, str):
        if reference == "oracle":
            reference = from_dense(dense_reference(builder.A, direction, f))
        elif reference == "self":
            reference = builder.at(int(math.ceil(1.25 * max_dim)))
        else:
            raise ValueError(f"unknown reference {reference!r}")
    elif isinstance(reference, np.ndarray):
        reference = from_dense(reference)
    record = ConvergenceRecord()
    prev = None
    m = d
    while m <= max_dim:
        t0 = time.perf_counter_ns()
        L = builder.at(m)
        est_diff = lowrank_diff_norm(L, prev) if prev is not None else None
        est_block = _block_estimate(L, f, builder)
        wall = time.perf_counter_ns() - t0
        err = lowrank_diff_norm(L, reference)
        b = bound(m) if bound else None
        record.add(m, err, est_diff, est_block, None if b is Inapplicable else b, wall)
        if builder.exhausted(m) or err < floor:
            break
        prev = L
        m += d
    return record


def _cell(v):
    return "" if v is None or (isinstance(v, float) and math.isnan(v)) else repr(v)


def write_csv(record, fh):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in record.rows:
        w.writerow([_cell(r[c]) for c in CSV_COLUMNS])


def record_to_csv(record):
    buf = io.StringIO()
    write_csv(record, buf)
    return buf.getvalue()


def read_csv(fh):
    """Inverse of write_csv."""
    reader = csv.reader(fh)
    header = next(reader)
    if tuple(header) != CSV_COLUMNS:
        raise ValueError(f"unexpected CSV header {header}")
    rec = ConvergenceRecord()
    for row in reader:
        vals = dict(zip(header, row))
        num = {k: (float(v) if v != "" else None) for k, v in vals.items() if k not in ("m", "wall_ns")}
        rec.add(int(vals["m"]), num["error"], num["est_diff"], num["est_block"], num["bound"],
                int(vals["wall_ns"]))
    return rec


def sum_of_rank_ones(A, directions, f, method="arnoldi", tol=1e-8, **kw):
    """One independent approximation per rank-one term; callers sum their actions."""
    directions = list(directions)
    if not directions:
        raise ValueError("need at least one direction")
    return [run_to_tolerance(A, d, f, method=method, tol=tol, **kw)[0] for d in directions]


__all__ = [
    "ConvergenceRecord", "RankOneDirection", "convergence_curve", "default_bound", "dense_reference",
    "make_function", "make_vectors", "parse_complex", "parse_matrix", "read_csv", "record_to_csv",
    "sum_of_rank_ones", "write_csv",
]
