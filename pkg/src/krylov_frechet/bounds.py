"""A priori error bounds and a posteriori error estimates."""

import math
from dataclasses import dataclass

import numpy as np

from .errors import UnsupportedFunction
from .frechet import lowrank_diff_norm
from .krylov import ritz_extremes
from .matfun import expm
from .sparse import as_sparse


class _InapplicableType:
    """Marker for a bound evaluated outside its range of validity."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "Inapplicable"

    def __bool__(self):
        return False


Inapplicable = _InapplicableType()


@dataclass(frozen=True)
class SpectralData:
    """Spectral enclosure of a Hermitian matrix.

    ``quarter_width`` and ``time_scale`` serve the exponential bound, which
    assumes the spectrum lies in [-4 quarter_width, 0] and
    f(x) = exp(time_scale x).
    """

    lmin: float
    lmax: float
    quarter_width: float = 0.0
    time_scale: float = 1.0
    estimated: bool = False

    def __post_init__(self):
        if self.lmin > self.lmax:
            raise ValueError("lmin must not exceed lmax")
        if self.quarter_width < 0:
            raise ValueError("quarter_width must be nonnegative")

    @property
    def kappa(self):
        return self.lmax / self.lmin if self.lmin > 0 else math.inf

    @classmethod
    def from_eigenvalues(cls, lmin, lmax, time_scale=1.0):
        return cls(lmin, lmax, max(0.0, -lmin / 4.0), time_scale)

    @classmethod
    def from_matrix(cls, A, time_scale=1.0, exact=None, steps=60, seed=0):
        """Eigenvalue bounds of Hermitian A, exact for small n, Ritz-based otherwise."""
        A = as_sparse(A)
        if exact is None:
            exact = A.n <= 2000
        if exact:
            ev = np.linalg.eigvalsh(A.toarray())
            lo, hi = float(ev[0]), float(ev[-1])
        else:
            lo, hi = ritz_extremes(A, steps=steps, seed=seed)
        return cls(lo, hi, max(0.0, -lo / 4.0), time_scale, estimated=not exact)


def apriori_exp_bound(s, m, ynorm=1.0, znorm=1.0):
    """Bound for exp(t A), A Hermitian with spectrum in [-4 w, 0].

    Here w is ``quarter_width`` and t is ``time_scale``. Returns
    ``Inapplicable`` for m < sqrt(4 w t). The second branch is used from
    m = 2 w t on.
    """
    rt = s.quarter_width * s.time_scale
    if rt <= 0:
        return 0.0 if m >= 1 else Inapplicable
    if m < math.sqrt(4 * rt):
        return Inapplicable
    scale = ynorm * znorm
    if m < 2 * rt:
        return 10.0 * (4 * rt) ** 2 / m**2 * math.exp(-(m**2) / (5 * rt)) * scale
    return 40.0 / rt * math.exp(-rt + m * math.log(math.e * rt / m)) * scale


def _cg_factor(kappa, m):
    if kappa <= 1:
        return 0.0
    q = (math.sqrt(kappa) - 1) / (math.sqrt(kappa) + 1)
    return q**m


def apriori_stieltjes_bound(s, m, eta, f):
    """Bound 4 |eta f'(lmin)| q^m with q the CG contraction factor; unit y, z."""
    if f.kind != "invpow" and f.kind != "stieltjes":
        raise UnsupportedFunction("Stieltjes bound needs an inverse power or Stieltjes function")
    fp = f.derivative(s.lmin)
    return 4.0 * abs(eta * fp) * _cg_factor(s.kappa, m)


def apriori_extended_slope(s, m):
    """Geometric slope ((k^1/4 - 1)/(k^1/4 + 1))^m of extended Krylov convergence."""
    if s.kappa <= 1:
        return 0.0
    r = s.kappa**0.25
    return ((r - 1) / (r + 1)) ** m


def apriori_log_bound(s, m, eta):
    """Bound 4 |eta| / lmin * q^m for the logarithm; unit y, z."""
    return 4.0 * abs(eta) / s.lmin * _cg_factor(s.kappa, m)


def block_estimate_matrix(G, H):
    """The 4m-by-4m upper block triangular matrix whose exponential yields the estimate."""
    G = np.asarray(G)
    H = np.asarray(H)
    m = G.shape[0]
    if H.shape != (m, m):
        raise ValueError("G and H must be square of equal size")
    dtype = np.result_type(G, H, float)
    M = np.zeros((4 * m, 4 * m), dtype=dtype)
    I = np.eye(m)
    M[:m, :m] = G
    M[0, m] = -1.0
    M[m: 2 * m, m: 2 * m] = H.conj().T
    M[m: 2 * m, 2 * m: 3 * m] = I
    M[2 * m: 3 * m, 3 * m:] = I
    return M


def aposteriori_block_estimate(G, H, g_sub, h_sub, f, weight=1.0):
    """A posteriori estimate for exp from the two Arnoldi runs.

    `G` and `H` are the Hessenberg matrices for A (start y) and A^H
    (start z), `g_sub` and `h_sub` their trailing subdiagonal entries, and
    `weight` is |eta| ||y|| ||z||. The exponential is taken of the scaled
    matrix, so the estimate refers to f(x) = exp(scale * x).
    """
    if f.kind != "exp":
        raise UnsupportedFunction("the block estimate is only available for the exponential")
    if g_sub == 0 or h_sub == 0:
        return 0.0
    m = np.asarray(G).shape[0]
    F = expm(f.scale * block_estimate_matrix(G, H))
    return float(abs(g_sub * h_sub * F[m - 1, 3 * m]) * weight)


def aposteriori_diff_estimate(L_m, L_next):
    """Norm of the difference of consecutive iterates.

    Cheap and usually sharp once convergence is fast; it can underestimate
    the error badly while convergence is still slow.
    """
    return lowrank_diff_norm(L_next, L_m)
