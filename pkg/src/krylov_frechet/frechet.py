"""Low-rank Krylov approximations of L_f(A, eta y z^H).

All drivers return a :class:`LowRankFrechet` holding factors with
``L ~= eta * U @ X @ W^H``. ``X`` is computed for the unit-scaled
direction, so ``eta`` enters only as a scalar factor.

Drivers are built on resumable "builders" so that :func:`run_to_tolerance`
can grow the subspace without recomputing it.
"""

import os
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse.linalg as spla

from .errors import DimensionMismatch, MaxDimensionReached, NotHermitian, ParseError, ZeroStartVector
from .krylov import (
    ArnoldiProcess,
    BlockLanczosProcess,
    LanczosProcess,
    RationalArnoldiProcess,
    TwoSidedLanczosProcess,
    extended_pole,
    ritz_extremes,
)
from .matfun import FunctionSpec, block_frechet_kernel, frechet_small
from .sparse import as_sparse, make_solver, read_dense_matrix_market, write_matrix_market


@dataclass
class RankOneDirection:
    """The direction matrix E = eta * y * z^H."""

    eta: complex
    y: np.ndarray
    z: np.ndarray = None

    def __post_init__(self):
        self.y = np.asarray(self.y)
        if self.z is None:
            self.z = self.y
        self.z = np.asarray(self.z)
        if self.y.shape != self.z.shape or self.y.ndim != 1:
            raise DimensionMismatch("y and z must be vectors of equal length")
        if not np.any(self.y) or not np.any(self.z):
            raise ZeroStartVector("y and z must be nonzero")

    @property
    def symmetric(self):
        return self.z is self.y or np.array_equal(self.y, self.z)

    def dense(self):
        return self.eta * np.outer(self.y, self.z.conj())


@dataclass
class LowRankFrechet:
    """Factored approximation ``eta * U @ X @ W^H``."""

    U: np.ndarray
    X: np.ndarray
    W: np.ndarray
    eta: complex = 1.0
    method: str = ""
    m: int = 0
    info: dict = field(default_factory=dict)

    @property
    def n(self):
        return self.U.shape[0]

    @property
    def rank_bound(self):
        return min(self.U.shape[1], self.W.shape[1])

    def apply(self, b):
        return apply(self, b)

    def materialize(self):
        return materialize(self)

    def transpose(self):
        """Factors of the (non-conjugate) transpose."""
        return LowRankFrechet(self.W.conj(), self.X.T.copy(), self.U.conj(), self.eta,
                             self.method, self.m, dict(self.info))

    def scaled(self, alpha):
        return LowRankFrechet(self.U, self.X, self.W, alpha * self.eta, self.method, self.m, dict(self.info))


def apply(L, b):
    """``L @ b`` evaluated right to left at O(n r + r^2) cost."""
    b = np.asarray(b)
    if b.shape[0] != L.W.shape[0]:
        raise DimensionMismatch(f"vector has length {b.shape[0]}, expected {L.W.shape[0]}")
    return L.U @ (L.X @ (L.W.conj().T @ (L.eta * b)))


def materialize(L):
    return L.eta * (L.U @ L.X) @ L.W.conj().T


def _core(Us, Ws, blocks):
    Qu, Ru = np.linalg.qr(np.hstack(Us))
    Qw, Rw = np.linalg.qr(np.hstack(Ws))
    p = sum(u.shape[1] for u in Us)
    q = sum(w.shape[1] for w in Ws)
    D = np.zeros((p, q), dtype=np.result_type(*blocks))
    i = j = 0
    for B in blocks:
        D[i: i + B.shape[0], j: j + B.shape[1]] = B
        i += B.shape[0]
        j += B.shape[1]
    return Ru @ D @ Rw.conj().T


def _same(L1, L2):
    if L1 is L2:
        return True
    return (L1.eta == L2.eta and L1.U.shape == L2.U.shape and L1.X.shape == L2.X.shape
            and np.array_equal(L1.U, L2.U) and np.array_equal(L1.X, L2.X)
            and np.array_equal(L1.W, L2.W))


def lowrank_diff_norm(L1, L2=None):
    """Spectral norm of ``L1 - L2`` without forming n-by-n matrices."""
    if L2 is None:
        if L1.X.size == 0:
            return 0.0
        core = _core([L1.U], [L1.W], [L1.eta * L1.X])
    else:
        if L1.n != L2.n:
            raise DimensionMismatch("factors live in different dimensions")
        if _same(L1, L2):
            return 0.0
        core = _core([L1.U, L2.U], [L1.W, L2.W], [L1.eta * L1.X, -L2.eta * L2.X])
    if core.size == 0:
        return 0.0
    return float(np.linalg.svd(core, compute_uv=False)[0])


def singular_values(L, k=None):
    """Leading singular values of the factored matrix."""
    if L.X.size == 0:
        return np.zeros(0)
    s = np.linalg.svd(_core([L.U], [L.W], [L.eta * L.X]), compute_uv=False)
    return s if k is None else s[:k]


def from_dense(M, tol=1e-15, method="dense"):
    """Truncated-SVD factors of a dense matrix (drops sigma_i < tol*sigma_1)."""
    U, s, Vh = np.linalg.svd(M)
    r = int(np.sum(s > tol * s[0])) if s.size and s[0] > 0 else 0
    return LowRankFrechet(U[:, :r], np.diag(s[:r]), Vh[:r].conj().T, 1.0, method, r)


# -- builders ------------------------------------------------------------------

class _Builder:
    """Shared logic: produce the approximation for a given step count."""

    method = ""

    def __init__(self, A, direction, f):
        self.A = as_sparse(A)
        self.dir = direction
        self.f = f
        if direction.y.shape[0] != self.A.n:
            raise DimensionMismatch("direction vectors do not match the matrix dimension")
        self.ynorm = float(np.linalg.norm(direction.y))
        self.znorm = float(np.linalg.norm(direction.z))

    def exhausted(self, m):
        """True once the subspaces cannot grow any further."""
        return self._full(m) or self._broke_down(m)

    def _full(self, m):
        return m >= self.A.n

    def _broke_down(self, m):
        return False

    def _result(self, U, X, W, m, **info):
        return LowRankFrechet(U, X, W, self.dir.eta, self.method, m, info)


class LanczosBuilder(_Builder):
    """Hermitian A. With z = y one Lanczos run; otherwise one run per vector."""

    method = "lanczos"

    def __init__(self, A, direction, f):
        super().__init__(A, direction, f)
        self.py = LanczosProcess(self.A, direction.y)
        self.pz = None if direction.symmetric else LanczosProcess(self.A, direction.z)

    def _broke_down(self, m):
        procs = [self.py] if self.pz is None else [self.py, self.pz]
        return all(p.done and p.steps <= m for p in procs)

    def at(self, m):
        dy = self.py.decomposition(m)
        if self.pz is None:
            X = frechet_small(dy.projected, self.ynorm**2, self.f)
            return self._result(dy.basis, X, dy.basis, m, dim=dy.dim, G=dy.projected,
                                H=dy.projected, g=dy.trailing, h=dy.trailing)
        dz = self.pz.decomposition(m)
        X = block_frechet_kernel(dy.projected, dz.projected.conj().T, self.ynorm * self.znorm, self.f).X
        return self._result(dy.basis, X, dz.basis, m, dim=dy.dim + dz.dim, G=dy.projected,
                            H=dz.projected, g=dy.trailing, h=dz.trailing)


class ArnoldiBuilder(_Builder):
    """Arnoldi runs for A with y and for A^H with z."""

    method = "arnoldi"

    def __init__(self, A, direction, f):
        super().__init__(A, direction, f)
        self.py = ArnoldiProcess(self.A, direction.y)
        self.pz = ArnoldiProcess(self.A, direction.z, adjoint=True)

    def _broke_down(self, m):
        return all(p.done and p.steps <= m for p in (self.py, self.pz))

    def at(self, m):
        dy = self.py.decomposition(m)
        dz = self.pz.decomposition(m)
        X = block_frechet_kernel(dy.projected, dz.projected.conj().T, self.ynorm * self.znorm, self.f).X
        return self._result(dy.basis, X, dz.basis, m, dim=dy.dim + dz.dim, G=dy.projected,
                            H=dz.projected, g=dy.trailing, h=dz.trailing)


class TwoSidedBuilder(_Builder):
    method = "twosided"

    def __init__(self, A, direction, f):
        super().__init__(A, direction, f)
        self.proc = TwoSidedLanczosProcess(self.A, direction.y, direction.z)

    def _broke_down(self, m):
        return self.proc.done and self.proc.steps <= m

    def at(self, m):
        right, left = self.proc.decomposition(m)
        # y = |y| v_1 and z = conj(z^H v_1) w_1, so the projected direction
        # is (z^H y) e_1 e_1^H
        X = frechet_small(self.proc.oblique_projection(m), right.extra["yz"], self.f)
        return self._result(right.basis, X, left.basis, m, dim=right.dim)


class BlockBuilder(_Builder):
    method = "block"

    def __init__(self, A, direction, f):
        super().__init__(A, direction, f)
        if not (self.A.hermitian or self.A.check_hermitian()):
            raise NotHermitian("block Lanczos requires a Hermitian matrix")
        self.proc = BlockLanczosProcess(self.A, np.column_stack([direction.y, direction.z]))

    def _full(self, m):
        return 2 * m >= self.A.n

    def at(self, m):
        dec = self.proc.decomposition(m)
        ym, zm = dec.start_coeffs[:, 0], dec.start_coeffs[:, 1]
        C = np.outer(ym, zm.conj())
        X = block_frechet_kernel(dec.projected, dec.projected, C, self.f).X
        return self._result(dec.basis, X, dec.basis, m, dim=dec.dim)


class RationalBuilder(_Builder):
    """Rational Krylov; `m` is the subspace dimension.

    Hermitian A with z = y uses one space; otherwise a second space is built
    for A^H and z with conjugated poles and the block kernel is used.
    """

    method = "rational"

    def __init__(self, A, direction, f, poles, solver_factory=make_solver, method=None):
        super().__init__(A, direction, f)
        if method:
            self.method = method
        self.single = direction.symmetric and (self.A.hermitian or self.A.check_hermitian())
        pole_fn = poles if callable(poles) else list(poles).__getitem__
        self.py = RationalArnoldiProcess(self.A, direction.y, pole_fn, solver_factory)
        self.pz = None
        if not self.single:
            self.pz = RationalArnoldiProcess(self.A, direction.z, lambda k: np.conj(pole_fn(k)),
                                             solver_factory, adjoint=True)

    def _broke_down(self, m):
        procs = [self.py] if self.pz is None else [self.py, self.pz]
        return all(p.done and p.dim <= m for p in procs)

    def at(self, m):
        dy = self.py.decomposition(m)
        if self.single:
            X = frechet_small(dy.projected, self.ynorm**2, self.f)
            return self._result(dy.basis, X, dy.basis, m, dim=dy.dim, solves=dy.extra["solves"],
                                solves_per_space=dy.extra["solves"], poles=dy.poles)
        dz = self.pz.decomposition(m)
        X = block_frechet_kernel(dy.projected, dz.projected.conj().T, self.ynorm * self.znorm, self.f).X
        return self._result(dy.basis, X, dz.basis, m, dim=dy.dim + dz.dim,
                            solves=dy.extra["solves"] + dz.extra["solves"],
                            solves_per_space=dy.extra["solves"], poles=dy.poles)


def shift_invert_pole(A, seed=0):
    """Heuristic single pole -sqrt(lmin lmax) for a matrix with positive spectrum.

    Hermitian matrices use Lanczos Ritz values. Otherwise the extreme
    eigenvalues of A are computed densely for small n and with ARPACK
    (shift-invert at 0 for the smallest) beyond that; if ARPACK fails, the
    Hermitian part's Ritz values are used.
    """
    A = as_sparse(A)
    if A.hermitian:
        lo, hi = ritz_extremes(A, seed=seed)
    elif A.n <= 200:
        ev = np.linalg.eigvals(A.toarray())
        lo, hi = float(np.real(ev).min()), float(np.real(ev).max())
    else:
        v0 = np.random.default_rng(seed).standard_normal(A.n)
        try:
            lo = spla.eigs(A.csr.tocsc(), k=1, sigma=0, v0=v0, return_eigenvectors=False)
            hi = spla.eigs(A.csr, k=1, which="LM", v0=v0, return_eigenvectors=False)
            lo, hi = float(np.real(lo[0])), float(np.real(hi[0]))
        except (spla.ArpackNoConvergence, RuntimeError):
            lo, hi = ritz_extremes(A.symmetric_part(), seed=seed)
    if lo <= 0 or hi <= 0:
        raise ValueError("shift-and-invert pole heuristic needs a positive spectrum")
    return -float(np.sqrt(lo * hi))


METHODS = ("lanczos", "arnoldi", "twosided", "block", "extended", "shift-invert", "rational")


def make_builder(A, direction, f, method, poles=None, pole=None, solver_factory=make_solver):
    """Builder for a method tag (see ``METHODS``)."""
    if method == "lanczos":
        return LanczosBuilder(A, direction, f)
    if method == "arnoldi":
        return ArnoldiBuilder(A, direction, f)
    if method == "twosided":
        return TwoSidedBuilder(A, direction, f)
    if method == "block":
        return BlockBuilder(A, direction, f)
    if method == "extended":
        return RationalBuilder(A, direction, f, extended_pole, solver_factory, method="extended")
    if method == "shift-invert":
        xi = shift_invert_pole(A) if pole is None else pole
        return RationalBuilder(A, direction, f, lambda k: xi, solver_factory, method="shift-invert")
    if method == "rational":
        if poles is None:
            raise ValueError("rational method needs a pole sequence")
        return RationalBuilder(A, direction, f, poles, solver_factory)
    raise ValueError(f"unknown method {method!r}")


def lanczos_frechet(A, direction, f, m):
    """Lanczos approximation for Hermitian A (two runs when z != y)."""
    return LanczosBuilder(A, direction, f).at(m)


def arnoldi_frechet(A, direction, f, m):
    return ArnoldiBuilder(A, direction, f).at(m)


def twosided_frechet(A, direction, f, m):
    return TwoSidedBuilder(A, direction, f).at(m)


def block_lanczos_frechet(A, direction, f, m):
    """Block Lanczos approximation; `m` counts block steps (dimension 2m)."""
    return BlockBuilder(A, direction, f).at(m)


def rational_frechet(A, direction, f, poles, solver_factory=make_solver, m=None):
    """Rational Krylov approximation with `m` basis vectors (default len(poles)+1)."""
    if m is None:
        m = len(poles) + 1
    return RationalBuilder(A, direction, f, poles, solver_factory).at(m)


# -- convergence loop ------------------------------------------------------------

CSV_COLUMNS = ("m", "error", "est_diff", "est_block", "bound", "wall_ns")


@dataclass
class ConvergenceRecord:
    rows: list = field(default_factory=list)

    def add(self, m, error=None, est_diff=None, est_block=None, bound=None, wall_ns=0):
        if self.rows and m <= self.rows[-1]["m"]:
            raise ValueError("m must be strictly increasing")
        num = lambda v: None if v is None else float(v)
        self.rows.append(dict(m=int(m), error=num(error), est_diff=num(est_diff),
                              est_block=num(est_block), bound=num(bound), wall_ns=int(wall_ns)))

    def column(self, name):
        return np.array([np.nan if r[name] is None else r[name] for r in self.rows], dtype=float)

    def __len__(self):
        return len(self.rows)


def _block_estimate(L, f, builder):
    from .bounds import aposteriori_block_estimate

    info = L.info
    if f.kind != "exp" or "G" not in info:
        return None
    weight = abs(L.eta) * builder.ynorm * builder.znorm
    return aposteriori_block_estimate(info["G"], info["H"], info["g"], info["h"], f, weight=weight)


def run_to_tolerance(A, direction, f, method="arnoldi", tol=1e-8, d=1, max_dim=300,
                     estimator="diff", reference=None, bound=None, **kw):
    """Grow m in steps of `d` until the a posteriori estimate drops below tol*||L_m||.

    `estimator` is ``"diff"`` (difference of consecutive iterates) or
    ``"block"`` (exp with Arnoldi or Lanczos only). `reference`, if given, is
    a LowRankFrechet or dense matrix used to log the true error; `bound`
    is an optional callable ``m -> float``. Returns ``(L, record)``;
    raises MaxDimensionReached when `max_dim` is hit first.
    """
    if tol <= 0 or d < 1:
        raise ValueError("tol must be positive and d >= 1")
    if estimator not in ("diff", "block"):
        raise ValueError(f"unknown estimator {estimator!r}")
    builder = make_builder(A, direction, f, method, **kw)
    if isinstance(reference, np.ndarray):
        reference = from_dense(reference)
    record = ConvergenceRecord()
    prev = None
    m = d
    L = None
    while m <= max_dim:
        t0 = time.perf_counter_ns()
        L = builder.at(m)
        norm = lowrank_diff_norm(L)
        est_diff = lowrank_diff_norm(L, prev) if prev is not None else None
        est_block = _block_estimate(L, f, builder)
        wall = time.perf_counter_ns() - t0
        err = lowrank_diff_norm(L, reference) if reference is not None else None
        record.add(m, err, est_diff, est_block, bound(m) if bound else None, wall)
        est = est_diff if estimator == "diff" else est_block
        if est is not None and est <= tol * norm:
            return L, record
        if builder.exhausted(m):
            L.info["exact"] = True
            return L, record
        prev = L
        m += d
    raise MaxDimensionReached(f"no convergence to {tol} within m = {max_dim}", L, record)


# -- persistence ----------------------------------------------------------------

def save_factors(L, path, f=None):
    """Write U.mtx, X.mtx, W.mtx (array format) and meta.txt into `path`."""
    os.makedirs(path, exist_ok=True)
    for name, M in (("U", L.U), ("X", L.X), ("W", L.W)):
        write_matrix_market(os.path.join(path, f"{name}.mtx"), np.asarray(M), fmt="array")
    eta = complex(L.eta)
    lines = [f"eta {eta.real!r} {eta.imag!r}", f"method {L.method}", f"m {L.m}"]
    if f is not None:
        lines.append(f"function {f.describe()}")
    with open(os.path.join(path, "meta.txt"), "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_factors(path):
    U, X, W = (read_dense_matrix_market(os.path.join(path, f"{k}.mtx")) for k in "UXW")
    meta = {}
    with open(os.path.join(path, "meta.txt")) as fh:
        for line in fh:
            key, _, rest = line.strip().partition(" ")
            if key:
                meta[key] = rest
    try:
        re_, im_ = (float(t) for t in meta["eta"].split())
    except (KeyError, ValueError):
        raise ParseError("meta.txt lacks a valid 'eta re im' line") from None
    eta = complex(re_, im_) if im_ != 0 else re_
    if X.shape[0] != U.shape[1] or X.shape[1] != W.shape[1] or U.shape[0] != W.shape[0]:
        raise DimensionMismatch("factor shapes are inconsistent")
    return LowRankFrechet(U, X, W, eta, meta.get("method", ""), int(meta.get("m", 0)),
                          {"function": meta.get("function", "")})
