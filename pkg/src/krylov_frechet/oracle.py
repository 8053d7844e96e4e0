"""Dense reference derivatives and the sensitivity ranking application."""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .dense import as_dense, hermitian_eig
from .frechet import RankOneDirection, run_to_tolerance
from .matfun import FunctionSpec, funm
from .sparse import SparseMatrix, as_sparse

DENSE_LIMIT = 1500


def reference_frechet_block(A, E, f):
    """L_f(A, E) as the (1,2) block of f([[A, E], [0, A]])."""
    A = as_dense(A.toarray() if isinstance(A, SparseMatrix) else A)
    E = as_dense(E)
    n = A.shape[0]
    if E.shape != A.shape:
        raise ValueError("A and E must have the same shape")
    if n > DENSE_LIMIT:
        raise ValueError(f"dense oracle limited to n <= {DENSE_LIMIT}")
    enorm = np.linalg.norm(E, 1)
    if enorm == 0:
        return np.zeros(A.shape, dtype=np.result_type(A, E))
    # keep the direction block at the size of A, as in the small kernel
    alpha = max(np.linalg.norm(A, 1), 1.0) / enorm
    B = np.zeros((2 * n, 2 * n), dtype=np.result_type(A, E))
    B[:n, :n] = A
    B[n:, n:] = A
    B[:n, n:] = alpha * E
    return funm(B, f)[:n, n:] / alpha


def divided_difference_matrix(eigs, f):
    return f.divided_difference(eigs[:, None], eigs[None, :])


def reference_frechet_dd(A, E, f):
    """L_f(A, E) for Hermitian A from its eigendecomposition.

    With A = Q diag(lam) Q^H, L = Q (D o (Q^H E Q)) Q^H where
    D[i, j] = f[lam_i, lam_j].
    """
    A = as_dense(A.toarray() if isinstance(A, SparseMatrix) else A)
    lam, Q = hermitian_eig(A)
    D = divided_difference_matrix(lam, f)
    return Q @ (D * (Q.conj().T @ as_dense(E) @ Q)) @ Q.conj().T


def reference_frechet_dd_rank_one(A, y, z, f, eta=1.0):
    """Same as reference_frechet_dd for E = eta y z^H, at O(n^3) without forming E."""
    A = as_dense(A.toarray() if isinstance(A, SparseMatrix) else A)
    lam, Q = hermitian_eig(A)
    D = divided_difference_matrix(lam, f)
    a = Q.conj().T @ np.asarray(y)
    b = Q.conj().T @ np.asarray(z)
    return eta * (Q @ (D * np.outer(a, b.conj())) @ Q.conj().T)


@dataclass
class SensitivityResult:
    entries: list = field(default_factory=list)

    @property
    def k(self):
        return len(self.entries)

    def positions(self):
        return {(i, j) for i, j, _ in self.entries}


def _rank(L_entries, k):
    i, j, v = L_entries
    order = np.lexsort((j, i, -np.abs(v)))[:k]
    return SensitivityResult([(int(i[o]), int(j[o]), v[o].item()) for o in order])


def sensitivity_topk(A, t, f_vec, x0, k=10, pattern_only=True, method="oracle", tol=1e-12,
                     max_dim=None):
    """The k largest entries of L_exp(t A^T, f_vec x0^T).

    Uses L_exp(t A^T, E) = L_exp(t A, E^T)^T, so only products with A are
    needed. `method` is ``"oracle"`` (dense block formula) or any Krylov
    method tag accepted by run_to_tolerance. With `pattern_only`, only
    positions in the sparsity pattern of A are ranked.
    """
    if k < 1:
        raise ValueError("k must be positive")
    A = as_sparse(A)
    f_vec = np.asarray(f_vec)
    x0 = np.asarray(x0)
    if method == "oracle":
        L = reference_frechet_block(A.toarray() * t, np.outer(x0, f_vec), FunctionSpec.exp()).T
        get = lambda i, j: L[i, j]
    else:
        direction = RankOneDirection(1.0, x0, f_vec.conj())
        Lk, _ = run_to_tolerance(A, direction, FunctionSpec.exp(t), method=method, tol=tol,
                                 max_dim=max_dim or A.n)
        # entry (i, j) of the transpose is entry (j, i) of eta U X W^H
        UX = Lk.eta * (Lk.U @ Lk.X)
        Wc = Lk.W.conj()
        get = lambda i, j: np.einsum("kr,kr->k", UX[np.atleast_1d(j)], Wc[np.atleast_1d(i)])
    if pattern_only:
        coo = A.csr.tocoo()
        # pattern of A^T is the transpose of the pattern of A
        ii, jj = coo.col.astype(int), coo.row.astype(int)
    else:
        ii, jj = (a.ravel() for a in np.indices((A.n, A.n)))
    vals = np.asarray(get(ii, jj)).ravel()
    return _rank((ii, jj, vals), k)


def synthetic_decay_matrix(n=69, orders=10, seed=0, branching=0.3):
    """Sparse lower-triangular decay-chain matrix with rates spanning `orders` decades.

    Species i decays at rate lam_i into i+1, and with probability
    `branching` partly into i+2. Eigenvalues are -lam_i.
    """
    rng = np.random.default_rng(seed)
    lam = np.logspace(-orders / 2, orders / 2, n)
    rng.shuffle(lam)
    rows, cols, vals = list(range(n)), list(range(n)), list(-lam)
    for i in range(n - 1):
        if i + 2 < n and rng.random() < branching:
            p = rng.uniform(0.2, 0.8)
            rows += [i + 1, i + 2]
            cols += [i, i]
            vals += [p * lam[i], (1 - p) * lam[i]]
        else:
            rows.append(i + 1)
            cols.append(i)
            vals.append(lam[i])
    return SparseMatrix(sp.csr_array((vals, (rows, cols)), shape=(n, n)))
