"""Small dense linear algebra used on projected matrices.

Dense matrices and vectors are plain :class:`numpy.ndarray` objects. The
helpers here add the input validation and error semantics the rest of the
package relies on; the factorizations themselves are LAPACK's.
"""

import warnings

import numpy as np
import scipy.linalg

from .errors import DimensionMismatch, NotHermitian, Singular

EPS = np.finfo(float).eps


def as_dense(M, ndim=2):
    """Return `M` as a finite float or complex array with `ndim` dimensions."""
    M = np.asarray(M)
    if M.dtype.kind in "biu":
        M = M.astype(float)
    elif M.dtype.kind not in "fc":
        raise TypeError(f"unsupported dtype {M.dtype}")
    if M.ndim != ndim:
        raise DimensionMismatch(f"expected {ndim}-d array, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError("non-finite entries")
    return M


def householder_qr(M):
    """Thin QR factorization ``M = Q R`` of a tall matrix.

    Rank deficiency is not an error; it shows up as tiny diagonal entries
    of ``R`` which the callers inspect.
    """
    M = as_dense(M)
    if M.shape[0] < M.shape[1]:
        raise DimensionMismatch("householder_qr needs rows >= cols")
    return np.linalg.qr(M, mode="reduced")


def is_hermitian(M, tol=1e-12):
    M = np.asarray(M)
    if M.shape[0] != M.shape[1]:
        return False
    scale = np.linalg.norm(M)
    return np.linalg.norm(M - M.conj().T) <= tol * max(scale, np.finfo(float).tiny)


def hermitian_eig(M):
    """Eigenvalues (ascending) and orthonormal eigenvectors of Hermitian `M`."""
    M = as_dense(M)
    if not is_hermitian(M):
        raise NotHermitian("matrix is not Hermitian to 1e-12 relative")
    w, V = np.linalg.eigh(M)
    return w, V


def lu_solve(M, rhs):
    """Solve ``M x = rhs`` by LU with partial pivoting."""
    M = as_dense(M)
    rhs = np.asarray(rhs)
    n = M.shape[0]
    if M.shape[1] != n:
        raise DimensionMismatch("lu_solve needs a square matrix")
    if rhs.shape[0] != n:
        raise DimensionMismatch(f"rhs has length {rhs.shape[0]}, expected {n}")
    with warnings.catch_warnings():
        # exact zero pivots are reported below as Singular
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(M, check_finite=False)
    if np.min(np.abs(np.diag(lu)), initial=np.inf) < EPS * np.linalg.norm(M, 1):
        raise Singular("pivot below unit roundoff times norm")
    return scipy.linalg.lu_solve((lu, piv), rhs, check_finite=False)


def small_svd_values(M):
    """Singular values of `M` in descending order."""
    M = as_dense(M)
    if M.size == 0:
        return np.zeros(0)
    return np.linalg.svd(M, compute_uv=False)
