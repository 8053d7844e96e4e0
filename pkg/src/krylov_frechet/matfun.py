"""Functions of small dense matrices and the block Frechet kernel.

The Frechet derivative of ``f`` at ``G``/``H`` in a rank-one direction is read
off the (1,2) block of ``f`` evaluated on a 2x2 block upper triangular matrix.
That matrix is non-normal by construction, so every kernel here avoids
diagonalization: exp by scaling and squaring with a degree 13 Pade
approximant, log by inverse scaling and squaring, and Stieltjes functions
by Gauss-Jacobi quadrature over resolvents of a Schur form.
"""

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional

import numpy as np
import scipy.linalg
import scipy.special

from .dense import EPS, as_dense
from .errors import (
    QuadratureNotConverged,
    Singular,
    SpectrumOnClosedNegativeAxis,
    UnsupportedFunction,
)


@dataclass(frozen=True)
class FunctionSpec:
    """Tagged description of the scalar function f.

    kind is one of ``"exp"`` (z -> exp(scale*z)), ``"log"``, ``"invpow"``
    (z -> z**-sigma, 0 < sigma < 1) or ``"stieltjes"`` (quadrature nodes
    supplied by ``nodes(N) -> (t, w)``, giving f(z) = sum w/(z + t)).
    """

    kind: str
    scale: complex = 1.0
    sigma: float = 0.5
    nodes: Optional[Callable] = field(default=None, compare=False)
    label: str = ""

    def __post_init__(self):
        if self.kind not in ("exp", "log", "invpow", "stieltjes"):
            raise UnsupportedFunction(f"unknown function kind {self.kind!r}")
        if self.kind == "invpow" and not 0 < self.sigma < 1:
            raise ValueError("sigma must lie in (0, 1)")
        if self.kind == "stieltjes" and self.nodes is None:
            raise ValueError("a Stieltjes function needs a node generator")

    @classmethod
    def exp(cls, scale=1.0):
        return cls("exp", scale=scale)

    @classmethod
    def log(cls):
        return cls("log")

    @classmethod
    def invpow(cls, sigma=0.5):
        return cls("invpow", sigma=sigma)

    @classmethod
    def stieltjes(cls, nodes, label="stieltjes"):
        return cls("stieltjes", nodes=nodes, label=label)

    def conj(self):
        if self.kind == "exp":
            return FunctionSpec.exp(np.conj(self.scale))
        return self

    def describe(self):
        if self.kind == "exp":
            s = complex(self.scale)
            return f"exp scale={s.real!r} {s.imag!r}"
        if self.kind == "invpow":
            return f"invpow sigma={self.sigma!r}"
        if self.kind == "log":
            return "log"
        return f"stieltjes {self.label}"

    # scalar evaluations, used by the divided-difference oracle and the bounds

    def _stieltjes_nodes(self):
        return self.nodes(4096)

    def __call__(self, z):
        z = np.asarray(z)
        if self.kind == "exp":
            return np.exp(self.scale * z)
        if self.kind == "log":
            return np.log(z)
        if self.kind == "invpow":
            return z ** (-self.sigma)
        t, w = self._stieltjes_nodes()
        return np.sum(w / (z[..., None] + t), axis=-1)

    def derivative(self, z):
        z = np.asarray(z)
        if self.kind == "exp":
            return self.scale * np.exp(self.scale * z)
        if self.kind == "log":
            return 1.0 / z
        if self.kind == "invpow":
            return -self.sigma * z ** (-self.sigma - 1)
        t, w = self._stieltjes_nodes()
        return -np.sum(w / (z[..., None] + t) ** 2, axis=-1)

    def divided_difference(self, a, b):
        """f[a, b], falling back to f'(b) when a == b, free of cancellation."""
        a, b = np.broadcast_arrays(np.asarray(a), np.asarray(b))
        d = a - b
        same = d == 0
        dsafe = np.where(same, 1.0, d)
        if self.kind == "stieltjes":
            t, w = self._stieltjes_nodes()
            return -np.sum(w / ((a[..., None] + t) * (b[..., None] + t)), axis=-1)
        if self.kind == "exp":
            # expand around the larger exponent so expm1 never overflows
            flip = np.real(self.scale * dsafe) > 0
            base = np.where(flip, a, b)
            x = self.scale * np.where(flip, -dsafe, dsafe)
            tiny = x == 0
            xs = np.where(tiny, 1.0, x)
            ratio = np.where(tiny, 1.0, np.expm1(xs) / xs)
            dd = self.scale * np.exp(self.scale * base) * ratio
        elif self.kind == "log":
            dd = np.log1p(dsafe / b) / dsafe
        else:
            s = self.sigma
            dd = b ** (-s) * np.expm1(-s * np.log1p(dsafe / b)) / dsafe
        return np.where(same, self.derivative(b), dd)


# -- exponential ------------------------------------------------------------

_PADE13 = np.array([
    64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
    1187353796428800.0, 129060195264000.0, 10559470521600.0,
    670442572800.0, 33522128640.0, 1323241920.0, 40840800.0,
    960960.0, 16380.0, 182.0, 1.0,
])
_THETA13 = 5.371920351148152


def expm(M):
    """Matrix exponential by scaling and squaring with the [13/13] Pade approximant."""
    M = as_dense(M)
    n = M.shape[0]
    if n == 0:
        return M.copy()
    norm = np.linalg.norm(M, 1)
    s = 0
    if norm > _THETA13:
        s = int(np.ceil(np.log2(norm / _THETA13)))
    A = M / 2.0**s
    b = _PADE13
    I = np.eye(n, dtype=A.dtype)
    A2 = A @ A
    A4 = A2 @ A2
    A6 = A2 @ A4
    U = A @ (A6 @ (b[13] * A6 + b[11] * A4 + b[9] * A2)
             + b[7] * A6 + b[5] * A4 + b[3] * A2 + b[1] * I)
    V = A6 @ (b[12] * A6 + b[10] * A4 + b[8] * A2) + b[6] * A6 + b[4] * A4 + b[2] * A2 + b[0] * I
    R = np.linalg.solve(V - U, V + U)
    for _ in range(s):
        R = R @ R
    return R


# -- logarithm --------------------------------------------------------------

def _sqrtm_db(M, maxiter=100):
    """Principal square root by the product form of the Denman-Beavers iteration."""
    n = M.shape[0]
    I = np.eye(n, dtype=M.dtype)
    Mk = M.copy()
    Y = M.copy()
    tol = 10 * n * EPS
    prev = np.inf
    stalled = 0
    for _ in range(maxiter):
        try:
            Minv = np.linalg.inv(Mk)
        except np.linalg.LinAlgError:
            raise SpectrumOnClosedNegativeAxis("square root iteration hit a singular iterate") from None
        Y = 0.5 * Y @ (I + Minv)
        Mk = 0.5 * (I + 0.5 * (Mk + Minv))
        if not np.all(np.isfinite(Mk)):
            break
        err = np.linalg.norm(Mk - I, 1)
        if err <= tol:
            return Y
        if err >= prev:
            stalled += 1
            if stalled > 3:
                if err < 1e-10:
                    return Y
                break
        prev = err
    raise SpectrumOnClosedNegativeAxis(
        "square root iteration did not converge; spectrum may touch the closed negative real axis")


@lru_cache(maxsize=None)
def _gauss_legendre01(k):
    x, w = np.polynomial.legendre.leggauss(k)
    return (x + 1) / 2, w / 2


def logm(M, pade_degree=7):
    """Principal logarithm by inverse scaling and squaring.

    Square roots are taken until ``||M^(1/2^s) - I||_1 <= 0.25``; then
    ``log(I + X)`` is evaluated with the diagonal Pade approximant in its
    partial fraction (Gauss-Legendre) form.
    """
    M = as_dense(M)
    n = M.shape[0]
    if n == 0:
        return M.copy()
    I = np.eye(n, dtype=M.dtype)
    X = M
    s = 0
    while np.linalg.norm(X - I, 1) > 0.25:
        X = _sqrtm_db(X)
        s += 1
        if s > 64:
            raise SpectrumOnClosedNegativeAxis("too many square roots")
    X = X - I
    nodes, weights = _gauss_legendre01(pade_degree)
    L = np.zeros_like(X)
    for x, w in zip(nodes, weights):
        L += w * np.linalg.solve(I + x * X, X)
    return 2.0**s * L


# -- Stieltjes functions ------------------------------------------------------

@lru_cache(maxsize=64)
def _invpow_rule(N, sigma):
    # t = (1-s)/(1+s) maps (0, inf) to (-1, 1); the Jacobi weight absorbs t^-sigma
    return _jacobi(N, -sigma, sigma - 1)


def _jacobi(N, a, b):
    # scipy divides by a + b + 1 = 0 in a term it discards for these exponents
    with np.errstate(invalid="ignore", divide="ignore"):
        return scipy.special.roots_jacobi(N, a, b)


def _triangular_resolvent_sum(S, shifts_diag, shifts_id, weights):
    """Sum of w_k * (a_k S + b_k I)^{-1} for upper triangular S."""
    trtri, = scipy.linalg.lapack.get_lapack_funcs(("trtri",), (S,))
    n = S.shape[0]
    idx = np.arange(n)
    out = np.zeros_like(S)
    d = np.diag(S)
    for a, b, w in zip(shifts_diag, shifts_id, weights):
        T = a * S
        T[idx, idx] = a * d + b
        if np.min(np.abs(T[idx, idx])) == 0:
            raise Singular("resolvent of a singular shifted matrix")
        inv, info = trtri(T, lower=0)
        if info != 0:
            raise Singular("resolvent of a singular shifted matrix")
        out += w * np.triu(inv)
    return out


def stieltjes_eval(M, f, tol=1e-12, n0=32, nmax=4096):
    """Evaluate a Stieltjes function of `M` by quadrature over resolvents.

    The node count doubles from `n0` until consecutive results agree to `tol`
    in the relative Frobenius norm, or until their differences start to grow
    while already within 1000 tol (the rounding floor of the rule). For ``z**-sigma`` a Gauss-Jacobi rule in
    the variable s, t = c(1-s)/(1+s), is used; c is the geometric mean of the
    extreme eigenvalue moduli, which balances the rule for ill-conditioned M.
    """
    M = as_dense(M)
    if f.kind not in ("invpow", "stieltjes"):
        raise UnsupportedFunction("stieltjes_eval handles invpow and stieltjes functions")
    n = M.shape[0]
    real = not np.iscomplexobj(M)
    if n == 0:
        return M.copy()
    S, Z = scipy.linalg.schur(M.astype(complex), output="complex")
    lam = np.diag(S)
    on_axis = (np.abs(lam.imag) <= 10 * EPS * np.abs(lam)) & (lam.real <= 0)
    if np.any(on_axis) or np.any(lam == 0):
        raise Singular("eigenvalue on the closed negative real axis")

    if f.kind == "invpow":
        sigma = f.sigma
        mods = np.abs(lam)
        c = float(np.sqrt(mods.max() * mods.min()))
        S = S / c
        const = 2.0 * np.sin(sigma * np.pi) / np.pi * c ** (-sigma)

        def rule(N):
            s, w = _invpow_rule(N, sigma)
            return 1 + s, 1 - s, const * w
    else:
        def rule(N):
            t, w = f.nodes(N)
            return np.ones_like(t), t, w

    def finish(F):
        R = Z @ F @ Z.conj().T
        return R.real if real else R

    prev = None
    last_diff = np.inf
    N = n0
    while N <= nmax:
        F = _triangular_resolvent_sum(S, *rule(N))
        if prev is not None:
            diff = np.linalg.norm(F - prev) / np.linalg.norm(F)
            if diff <= tol:
                return finish(F)
            # rounding in the rule itself sets a floor slightly above tol
            # for some sigma; once differences grow again, stop there
            if diff > last_diff and last_diff <= 1e3 * tol:
                return finish(prev)
            last_diff = diff
        prev = F
        N *= 2
    raise QuadratureNotConverged(f"quadrature did not reach {tol} with {nmax} nodes")


def invpow_stieltjes_nodes(sigma):
    """Node generator representing z**-sigma as a generic Stieltjes function.

    Uses the same Gauss-Jacobi substitution with c = 1; intended for
    moderately conditioned arguments and for tests of the generic path.
    """
    def nodes(N):
        s, w = _jacobi(N, -sigma, sigma - 1)
        t = (1 - s) / (1 + s)
        # (z + t)^-1 = (1+s) / ((1+s) z + (1-s)); fold (1+s) into the weight
        return t, 2.0 * np.sin(sigma * np.pi) / np.pi * w / (1 + s)
    return nodes


def funm(M, f):
    """Dispatch ``f(M)`` to the matching dense kernel."""
    if f.kind == "exp":
        return expm(f.scale * as_dense(M))
    if f.kind == "log":
        return logm(M)
    return stieltjes_eval(M, f)


# -- block kernel --------------------------------------------------------------

@dataclass
class BlockFrechetResult:
    f_G: np.ndarray
    f_H: np.ndarray
    X: np.ndarray


def block_frechet_kernel(G, H_adj, c, f):
    """Blocks of ``f([[G, C], [0, H_adj]])``.

    `c` is either a scalar, meaning ``C = c e1 e1^H``, or the full (1,2)
    block. The direction is rescaled to the size of G and H before the
    evaluation and the result scaled back, which keeps scaling and squaring
    from being driven by a large direction term.
    """
    G = as_dense(G)
    H_adj = as_dense(H_adj)
    p, q = G.shape[0], H_adj.shape[0]
    if np.ndim(c) == 0:
        C = np.zeros((p, q), dtype=np.result_type(G, H_adj, np.asarray(c)))
        if p and q:
            C[0, 0] = c
    else:
        C = as_dense(c)
        if C.shape != (p, q):
            raise ValueError(f"direction block has shape {C.shape}, expected {(p, q)}")
    cnorm = np.linalg.norm(C, 1) if C.size else 0.0
    if cnorm == 0:
        return BlockFrechetResult(funm(G, f), funm(H_adj, f), np.zeros_like(C))
    target = max(np.linalg.norm(G, 1), np.linalg.norm(H_adj, 1))
    if target == 0:
        target = 1.0
    alpha = target / cnorm
    dtype = np.result_type(G, H_adj, C)
    B = np.zeros((p + q, p + q), dtype=dtype)
    B[:p, :p] = G
    B[p:, p:] = H_adj
    B[:p, p:] = alpha * C
    FB = funm(B, f)
    return BlockFrechetResult(FB[:p, :p], FB[p:, p:], FB[:p, p:] / alpha)


def frechet_small(T, c, f):
    """``L_f(T, c e1 e1^H)`` for a small dense matrix T."""
    return block_frechet_kernel(T, T, c, f).X
