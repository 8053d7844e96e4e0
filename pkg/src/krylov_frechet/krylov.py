"""Krylov decompositions: Lanczos, Arnoldi, two-sided Lanczos, block Lanczos
and rational Arnoldi.

Each method is a resumable process object: ``extend(m)`` runs more steps and
``decomposition(m)`` returns the m-step decomposition, which is the leading
section of any longer run. The functional wrappers (:func:`lanczos`,
:func:`arnoldi`, ...) run a fresh process for a fixed number of steps.

Orthogonality is maintained by full reorthogonalization everywhere; the short
recurrence structure survives in the projected matrices only.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import (
    DeflationDetected,
    NotHermitian,
    SeriousBreakdown,
    StartVectorsBiorthogonal,
    ZeroStartVector,
)
from .sparse import as_sparse, make_solver

BREAKDOWN_TOL = 1e-12
DEFLATION_TOL = 1e-10
LUCKY_TOL = 1e-12


@dataclass
class KrylovDecomposition:
    """Basis, projected matrix and trailing coefficient of a Krylov run.

    ``basis`` holds the m (or 2m for block) basis columns, ``next_basis`` the
    continuation vector(s) v_{m+1} (None after a lucky breakdown).
    ``projected`` is the compression of the operator the basis was built
    for: A, or A^H for the left space of two-sided Lanczos.
    """

    kind: str
    basis: np.ndarray
    projected: np.ndarray
    trailing: object
    next_basis: Optional[np.ndarray]
    start_norm: float
    adjoint: bool = False
    poles: Optional[list] = None
    breakdown: bool = False
    start_coeffs: Optional[np.ndarray] = None
    extra: dict = field(default_factory=dict)

    @property
    def m(self):
        return self.projected.shape[0]

    @property
    def dim(self):
        return self.basis.shape[1]

    def full_basis(self):
        if self.next_basis is None:
            return self.basis
        nb = self.next_basis if self.next_basis.ndim == 2 else self.next_basis[:, None]
        return np.hstack([self.basis, nb])

    def residuals(self, A):
        """Measured orthogonality and relation residuals.

        Returns a dict with ``orth`` (or ``biorth`` for two-sided pairs,
        computed by the caller) and ``relation`` (relative to ||A||_F).
        """
        A = as_sparse(A)
        V = self.basis
        normA = max(A.fro_norm(), np.finfo(float).tiny)
        op = A.rmatvec if self.adjoint else A.matvec
        AV = op(V)
        out = {}
        if self.kind not in ("two_sided_left", "two_sided_right"):
            out["orth"] = float(np.linalg.norm(V.conj().T @ V - np.eye(V.shape[1])))
        if self.kind == "rational":
            out["relation"] = float(np.linalg.norm(V.conj().T @ AV - self.projected)) / normA
            return out
        R = AV - V @ self.projected
        if self.next_basis is not None and self.trailing is not None:
            k = 2 if self.kind == "block" else 1
            nb = self.next_basis if self.next_basis.ndim == 2 else self.next_basis[:, None]
            tr = np.atleast_2d(self.trailing)
            R[:, -k:] -= nb @ tr
        out["relation"] = float(np.linalg.norm(R)) / normA
        return out

    def validate(self, A, tol=1e-10):
        res = self.residuals(A)
        return all(v <= tol for v in res.values()), res


class _Columns:
    """Growable column store."""

    def __init__(self, n, dtype, width=1):
        self.data = np.zeros((n, 16 * width), dtype=dtype)
        self.k = 0

    def append(self, cols):
        cols = cols if cols.ndim == 2 else cols[:, None]
        w = cols.shape[1]
        if self.k + w > self.data.shape[1]:
            grown = np.zeros((self.data.shape[0], 2 * self.data.shape[1] + w), dtype=self.data.dtype)
            grown[:, : self.k] = self.data[:, : self.k]
            self.data = grown
        if np.iscomplexobj(cols) and not np.iscomplexobj(self.data):
            self.data = self.data.astype(complex)
        self.data[:, self.k: self.k + w] = cols
        self.k += w

    def view(self, k=None):
        return self.data[:, : self.k if k is None else k]


class _Square:
    """Growable square coefficient matrix."""

    def __init__(self, dtype):
        self.data = np.zeros((16, 16), dtype=dtype)

    def ensure(self, k):
        if k > self.data.shape[0]:
            size = max(k, 2 * self.data.shape[0])
            grown = np.zeros((size, size), dtype=self.data.dtype)
            old = self.data.shape[0]
            grown[:old, :old] = self.data
            self.data = grown

    def __setitem__(self, idx, val):
        if np.iscomplexobj(val) and not np.iscomplexobj(self.data):
            self.data = self.data.astype(complex)
        self.data[idx] = val

    def __getitem__(self, idx):
        return self.data[idx]


def _start(y, n):
    y = np.asarray(y)
    if y.ndim != 1 or y.shape[0] != n:
        raise ValueError(f"start vector must have length {n}")
    norm = float(np.linalg.norm(y))
    if norm == 0 or not np.isfinite(norm):
        raise ZeroStartVector("start vector is zero")
    return y / norm, norm


def _require_hermitian(A):
    if not (A.hermitian or A.check_hermitian()):
        raise NotHermitian("operation requires a Hermitian matrix")


class ArnoldiProcess:
    """Arnoldi with classical Gram-Schmidt and one reorthogonalization pass.

    With ``hermitian=True`` the projected matrix is stored tridiagonal
    (Lanczos); with ``adjoint=True`` the process runs on A^H.
    """

    kind = "arnoldi"

    def __init__(self, A, y, adjoint=False, hermitian=False):
        self.A = as_sparse(A)
        self.adjoint = adjoint
        self.hermitian = hermitian
        self.op = self.A.rmatvec if adjoint else self.A.matvec
        v, self.start_norm = _start(y, self.A.n)
        dtype = np.result_type(self.A.dtype, v.dtype)
        self.V = _Columns(self.A.n, dtype)
        self.V.append(v)
        self.H = _Square(dtype)
        self.steps = 0
        self.done = False
        self.tol = LUCKY_TOL * self.A.fro_norm()

    def extend(self, m):
        while self.steps < m and not self.done:
            self._step()
        return self

    def _step(self):
        j = self.steps
        self.H.ensure(j + 2)
        V = self.V.view()
        w = self.op(V[:, j])
        if self.hermitian:
            alpha = np.vdot(V[:, j], w).real
            w = w - alpha * V[:, j]
            if j > 0:
                w = w - self.H[j, j - 1] * V[:, j - 1]
            w = w - V @ (V.conj().T @ w)
            self.H[j, j] = alpha
        else:
            h = V.conj().T @ w
            w = w - V @ h
            h2 = V.conj().T @ w
            w = w - V @ h2
            self.H[: j + 1, j] = h + h2
        beta = np.linalg.norm(w)
        self.steps += 1
        if beta <= self.tol:
            self.done = True
            self.H[j + 1, j] = 0.0
            return
        self.H[j + 1, j] = beta
        if self.hermitian:
            self.H[j, j + 1] = beta
        self.V.append(w / beta)

    def decomposition(self, m=None):
        m = self.steps if m is None else m
        self.extend(m)
        m = min(m, self.steps)
        P = self.H[:m, :m].copy()
        breakdown = self.done and m == self.steps
        trailing = 0.0 if breakdown else self.H[m, m - 1]
        V = self.V.view()
        nxt = None if breakdown else V[:, m].copy()
        kind = "lanczos" if self.hermitian else "arnoldi"
        return KrylovDecomposition(kind, V[:, :m].copy(), P, trailing, nxt, self.start_norm,
                                   adjoint=self.adjoint, breakdown=breakdown)


def LanczosProcess(A, y, adjoint=False):
    A = as_sparse(A)
    _require_hermitian(A)
    return ArnoldiProcess(A, y, adjoint=adjoint, hermitian=True)


def lanczos(A, y, m):
    """m steps of Lanczos (full reorthogonalization) for Hermitian A."""
    return LanczosProcess(A, y).decomposition(m)


def arnoldi(A, y, m, adjoint=False):
    """m steps of Arnoldi for A (or A^H when ``adjoint``)."""
    return ArnoldiProcess(A, y, adjoint=adjoint).decomposition(m)


class TwoSidedLanczosProcess:
    """Bi-orthonormal bases of K_m(A, y) and K_m(A^H, z).

    Right vectors have unit norm, left vectors are scaled so that
    ``w_j^H v_j = 1``. Each step costs one product with A and one with A^H;
    bi-orthogonality is restored by a Gram-Schmidt pass against all stored
    vectors. No look-ahead: a vanishing ``w^H v`` raises SeriousBreakdown.
    """

    def __init__(self, A, y, z, breakdown_tol=BREAKDOWN_TOL):
        self.A = as_sparse(A)
        n = self.A.n
        y, z = np.asarray(y), np.asarray(z)
        v, self.ynorm = _start(y, n)
        _, self.znorm = _start(z, n)
        yz = np.vdot(z, y)
        if abs(yz) < breakdown_tol * self.ynorm * self.znorm:
            raise StartVectorsBiorthogonal("start vectors are (numerically) orthogonal")
        self.yz = yz
        w = z / np.conj(np.vdot(z, v))
        dtype = np.result_type(self.A.dtype, v.dtype, w.dtype)
        self.V = _Columns(n, dtype)
        self.W = _Columns(n, dtype)
        self.AV = _Columns(n, dtype)
        self.V.append(v)
        self.W.append(w)
        self.T = _Square(dtype)
        self.steps = 0
        self.done = False
        self.tol = LUCKY_TOL * self.A.fro_norm()
        self.breakdown_tol = breakdown_tol

    def extend(self, m):
        while self.steps < m and not self.done:
            self._step()
        return self

    def _step(self):
        j = self.steps
        self.T.ensure(j + 2)
        V, W = self.V.view(), self.W.view()
        av = self.A.matvec(V[:, j])
        self.AV.append(av)
        aw = self.A.rmatvec(W[:, j])
        alpha = np.vdot(W[:, j], av)
        av = av - alpha * V[:, j]
        aw = aw - np.conj(alpha) * W[:, j]
        if j > 0:
            av = av - self.T[j - 1, j] * V[:, j - 1]
            aw = aw - np.conj(self.T[j, j - 1]) * W[:, j - 1]
        for _ in range(2):
            av = av - V @ (W.conj().T @ av)
            aw = aw - W @ (V.conj().T @ aw)
        self.T[j, j] = alpha
        self.steps += 1
        delta = np.linalg.norm(av)
        wnorm = np.linalg.norm(aw)
        if delta <= self.tol or wnorm <= self.tol:
            self.done = True
            return
        v = av / delta
        omega = np.vdot(aw, v)
        if abs(omega) < self.breakdown_tol * wnorm:
            raise SeriousBreakdown(j + 1)
        self.T[j + 1, j] = delta
        self.T[j, j + 1] = omega
        self.V.append(v)
        self.W.append(aw / np.conj(omega))

    def decomposition(self, m=None):
        m = self.steps if m is None else m
        self.extend(m)
        m = min(m, self.steps)
        T = self.T[:m, :m].copy()
        breakdown = self.done and m == self.steps
        V, W = self.V.view(), self.W.view()
        right = KrylovDecomposition(
            "two_sided_right", V[:, :m].copy(), T, 0.0 if breakdown else self.T[m, m - 1],
            None if breakdown else V[:, m].copy(), self.ynorm, breakdown=breakdown)
        left = KrylovDecomposition(
            "two_sided_left", W[:, :m].copy(), T.conj().T.copy(),
            0.0 if breakdown else np.conj(self.T[m - 1, m]),
            None if breakdown else W[:, m].copy(), self.znorm, adjoint=True, breakdown=breakdown)
        right.extra["yz"] = left.extra["yz"] = self.yz
        return right, left

    def oblique_projection(self, m):
        """W_m^H A V_m from the stored products.

        Equal to the tridiagonal T_m in exact arithmetic. In floating point
        it also carries the re-biorthogonalization corrections that T_m
        drops, which matters when w^H v comes close to breaking down.
        """
        self.extend(m)
        m = min(m, self.steps)
        return self.W.view()[:, :m].conj().T @ self.AV.view()[:, :m]


def two_sided_lanczos(A, y, z, m):
    return TwoSidedLanczosProcess(A, y, z).decomposition(m)


class BlockLanczosProcess:
    """Block Lanczos with block size 2 and full reorthogonalization.

    Deflation is not handled: if a QR factor needed to continue the
    iteration has a diagonal entry below ``DEFLATION_TOL`` (relative to
    ||Y|| for the start block, ||A||_F afterwards) DeflationDetected is
    raised. The QR of the final residual, which only feeds the trailing
    block, is not checked.
    """

    def __init__(self, A, Y):
        self.A = as_sparse(A)
        _require_hermitian(self.A)
        Y = np.asarray(Y)
        if Y.ndim != 2 or Y.shape != (self.A.n, 2):
            raise ValueError(f"block start must have shape ({self.A.n}, 2)")
        if np.linalg.norm(Y) == 0:
            raise ZeroStartVector("start block is zero")
        V1, R0 = np.linalg.qr(Y)
        if np.min(np.abs(np.diag(R0))) < DEFLATION_TOL * np.linalg.norm(Y):
            raise DeflationDetected(1)
        self.R0 = R0
        dtype = np.result_type(self.A.dtype, Y.dtype)
        self.V = _Columns(self.A.n, dtype, width=2)
        self.V.append(V1)
        self.T = _Square(dtype)
        self.blocks = 0
        self.pending = None
        self.tol = DEFLATION_TOL * self.A.fro_norm()
        self.start_norm = float(np.linalg.norm(Y))

    def extend(self, m):
        while self.blocks < m:
            self._step()
        return self

    def _step(self):
        j = self.blocks
        if self.pending is not None:
            Q, R = np.linalg.qr(self.pending)
            if np.min(np.abs(np.diag(R))) < self.tol:
                raise DeflationDetected(j + 1)
            self.T.ensure(2 * j + 2)
            self.T[2 * j: 2 * j + 2, 2 * j - 2: 2 * j] = R
            self.V.append(Q)
        self.T.ensure(2 * j + 4)
        V = self.V.view()
        Vj = V[:, 2 * j: 2 * j + 2]
        AVj = self.A.matvec(Vj)
        i0 = max(0, j - 2)
        Wj = AVj.copy()
        for i in range(i0, j + 1):
            Vi = V[:, 2 * i: 2 * i + 2]
            Tij = Vi.conj().T @ AVj
            if i >= j - 1:
                self.T[2 * i: 2 * i + 2, 2 * j: 2 * j + 2] = Tij
            Wj -= Vi @ Tij
        Wj -= V @ (V.conj().T @ Wj)
        self.pending = Wj
        self.blocks += 1

    def decomposition(self, m=None):
        m = self.blocks if m is None else m
        self.extend(m)
        P = self.T[: 2 * m, : 2 * m].copy()
        V = self.V.view()
        if m < self.blocks:
            trailing = self.T[2 * m: 2 * m + 2, 2 * m - 2: 2 * m].copy()
            nxt = V[:, 2 * m: 2 * m + 2].copy()
        else:
            nxt, trailing = np.linalg.qr(self.pending)
        coeffs = np.zeros((2 * m, 2), dtype=np.result_type(P, self.R0))
        coeffs[:2] = self.R0
        return KrylovDecomposition("block", V[:, : 2 * m].copy(), P, trailing, nxt,
                                   self.start_norm, start_coeffs=coeffs)


def block_lanczos(A, Y, m):
    return BlockLanczosProcess(A, Y).decomposition(m)


def extended_pole(k, zero_first=True):
    """Pole k (0-based) of the extended Krylov sequence alternating 0 and inf.

    Starting with 0 makes a space of dimension 2j hold j powers of A and j
    of its inverse, so it costs j solves.
    """
    return (0.0 if k % 2 == 0 else np.inf) if zero_first else (np.inf if k % 2 == 0 else 0.0)


def extended_poles(count, zero_first=True):
    return [extended_pole(k, zero_first) for k in range(count)]


class RationalArnoldiProcess:
    """Rational Arnoldi with a prescribed pole sequence.

    ``poles`` is a sequence or a callable ``k -> pole`` (0-based); the k-th
    pole produces basis vector k+2. An infinite pole is a product with the
    operator, a finite pole ``xi`` a solve with ``op - xi I``. Solvers are
    built once per distinct pole through ``solver_factory(A, xi)``. The
    compression is formed explicitly as ``V^H (op V)``.
    """

    def __init__(self, A, y, poles, solver_factory=make_solver, adjoint=False):
        self.A = as_sparse(A)
        self.adjoint = adjoint
        self.op = self.A.rmatvec if adjoint else self.A.matvec
        self._opmat = self.A.adjoint() if adjoint else self.A
        self.poles = poles if callable(poles) else list(poles).__getitem__
        self.factory = solver_factory
        self.solvers = {}
        v, self.start_norm = _start(y, self.A.n)
        dtype = np.result_type(self.A.dtype, v.dtype)
        self.V = _Columns(self.A.n, dtype)
        self.AV = _Columns(self.A.n, dtype)
        self.P = _Square(dtype)
        self.used = []
        self.done = False
        self.nsolves = 0
        self._add(v)

    @property
    def dim(self):
        return self.V.k

    def _add(self, v):
        k = self.V.k
        self.V.append(v)
        av = self.op(v)
        self.AV.append(av)
        self.P.ensure(k + 1)
        V, AV = self.V.view(), self.AV.view()
        self.P[: k + 1, k] = V.conj().T @ av
        self.P[k, :k] = np.conj(v) @ AV[:, :k]

    def _solver(self, xi):
        if xi not in self.solvers:
            self.solvers[xi] = self.factory(self._opmat, xi)
        return self.solvers[xi]

    def extend(self, dim):
        while self.V.k < dim and not self.done:
            k = self.V.k
            xi = self.poles(k - 1)
            last = self.V.view()[:, k - 1]
            if np.isinf(xi):
                w = self.AV.view()[:, k - 1].copy()
            else:
                w = self._solver(xi).solve(last)
                self.nsolves += 1
            self.used.append(xi)
            wnorm = np.linalg.norm(w)
            V = self.V.view()
            for _ in range(2):
                w = w - V @ (V.conj().T @ w)
            beta = np.linalg.norm(w)
            if beta <= LUCKY_TOL * wnorm:
                self.done = True
                break
            self._add(w / beta)
        return self

    def decomposition(self, dim=None):
        dim = self.V.k if dim is None else dim
        self.extend(dim)
        dim = min(dim, self.V.k)
        V = self.V.view()
        return KrylovDecomposition(
            "rational", V[:, :dim].copy(), self.P[:dim, :dim].copy(), None,
            V[:, dim].copy() if dim < self.V.k else None, self.start_norm,
            adjoint=self.adjoint, poles=list(self.used[: dim - 1]),
            breakdown=self.done and dim == self.V.k,
            extra={"solves": sum(1 for p in self.used[: dim - 1] if not np.isinf(p))})


def rational_arnoldi(A, y, poles, solver_factory=make_solver, adjoint=False):
    """Rational Arnoldi basis of dimension ``len(poles) + 1``."""
    poles = list(poles)
    return RationalArnoldiProcess(A, y, poles, solver_factory, adjoint).decomposition(len(poles) + 1)


def ritz_extremes(A, probes=1, steps=30, seed=0, widen=0.01):
    """Extreme Ritz values of Hermitian A, widened outward by `widen` (relative)."""
    A = as_sparse(A)
    _require_hermitian(A)
    rng = np.random.default_rng(seed)
    lo, hi = np.inf, -np.inf
    for _ in range(max(1, probes)):
        y = rng.standard_normal(A.n)
        T = lanczos(A, y, min(steps, A.n)).projected
        ev = np.linalg.eigvalsh(T)
        lo, hi = min(lo, ev[0]), max(hi, ev[-1])
    return lo - widen * abs(lo), hi + widen * abs(hi)
