"""Sparse matrices, Matrix Market files, PDE test matrices and shifted solvers."""

import threading

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .dense import EPS
from .errors import DimensionMismatch, ParseError, Singular, UnsupportedField


class SparseMatrix:
    """Square CSR matrix with a Hermitian hint and a lazily built adjoint.

    The adjoint cache is filled at most once, under a lock, so concurrent
    readers see either no cache or the complete one.
    """

    def __init__(self, data, hermitian=False):
        csr = sp.csr_array(data)
        if csr.shape[0] != csr.shape[1]:
            raise DimensionMismatch(f"matrix must be square, got {csr.shape}")
        if csr.dtype.kind in "biu":
            csr = csr.astype(float)
        csr.sum_duplicates()
        csr.sort_indices()
        if not np.all(np.isfinite(csr.data)):
            raise ValueError("non-finite entries")
        self.csr = csr
        self.hermitian = bool(hermitian)
        self._adj = None
        self._lock = threading.Lock()
        self._fro = None

    @property
    def n(self):
        return self.csr.shape[0]

    @property
    def shape(self):
        return self.csr.shape

    @property
    def dtype(self):
        return self.csr.dtype

    @property
    def nnz(self):
        return self.csr.nnz

    @property
    def indptr(self):
        return self.csr.indptr

    @property
    def indices(self):
        return self.csr.indices

    @property
    def data(self):
        return self.csr.data

    def fro_norm(self):
        if self._fro is None:
            self._fro = float(np.linalg.norm(self.csr.data))
        return self._fro

    def _adjoint_csr(self):
        if self._adj is None:
            with self._lock:
                if self._adj is None:
                    self._adj = self.csr.conj().T.tocsr()
        return self._adj

    def matvec(self, v):
        v = np.asarray(v)
        if v.shape[0] != self.n:
            raise DimensionMismatch(f"vector has length {v.shape[0]}, expected {self.n}")
        return self.csr @ v

    def rmatvec(self, v):
        """Product with the conjugate transpose."""
        v = np.asarray(v)
        if v.shape[0] != self.n:
            raise DimensionMismatch(f"vector has length {v.shape[0]}, expected {self.n}")
        if self.hermitian:
            return self.csr @ v
        return self._adjoint_csr() @ v

    def __matmul__(self, v):
        return self.matvec(v)

    def adjoint(self):
        return SparseMatrix(self._adjoint_csr(), hermitian=self.hermitian)

    def transpose(self):
        return SparseMatrix(self.csr.T.tocsr(), hermitian=self.hermitian and self.dtype.kind == "f")

    def scaled(self, alpha):
        herm = self.hermitian and np.imag(alpha) == 0
        return SparseMatrix(self.csr * alpha, hermitian=herm)

    def symmetric_part(self):
        return SparseMatrix((self.csr + self._adjoint_csr()) / 2, hermitian=True)

    def check_hermitian(self, tol=1e-12):
        diff = self.csr - self._adjoint_csr()
        return np.linalg.norm(diff.data) <= tol * max(self.fro_norm(), np.finfo(float).tiny)

    def toarray(self):
        return self.csr.toarray()

    def __repr__(self):
        return f"SparseMatrix(n={self.n}, nnz={self.nnz}, dtype={self.dtype}, hermitian={self.hermitian})"


def as_sparse(A, hermitian=None):
    """Coerce dense arrays and scipy sparse matrices to :class:`SparseMatrix`.

    When `hermitian` is None the flag is detected numerically.
    """
    if isinstance(A, SparseMatrix):
        return A
    M = SparseMatrix(A)
    M.hermitian = M.check_hermitian() if hermitian is None else bool(hermitian)
    return M


def matvec(A, v):
    return as_sparse(A).matvec(v)


def matvec_adjoint(A, v):
    return as_sparse(A).rmatvec(v)


# -- Matrix Market ---------------------------------------------------------

_FIELDS = {"real", "complex", "double"}
_SYMMETRIES = {"general", "symmetric", "hermitian", "skew-symmetric"}


def _parse_header(line):
    parts = line.strip().lower().split()
    if len(parts) != 5 or parts[0] != "%%matrixmarket" or parts[1] != "matrix":
        raise ParseError("missing or malformed %%MatrixMarket banner", 1)
    fmt, field, symmetry = parts[2:]
    if fmt not in ("coordinate", "array"):
        raise ParseError(f"unknown format {fmt!r}", 1)
    if field in ("pattern", "integer"):
        raise UnsupportedField(f"field {field!r} is not supported")
    if field not in _FIELDS:
        raise ParseError(f"unknown field {field!r}", 1)
    if symmetry not in _SYMMETRIES:
        raise ParseError(f"unknown symmetry {symmetry!r}", 1)
    return fmt, "complex" if field == "complex" else "real", symmetry


def _data_lines(lines):
    for lineno, line in enumerate(lines, start=2):
        s = line.strip()
        if s and not s.startswith("%"):
            yield lineno, s.split()


def _parse_value(tok, field, lineno):
    try:
        if field == "complex":
            return complex(float(tok[0]), float(tok[1]))
        return float(tok[0])
    except (ValueError, IndexError):
        raise ParseError(f"bad numeric value {' '.join(tok)!r}", lineno) from None


def _mirror(symmetry, v):
    if symmetry == "symmetric":
        return v
    if symmetry == "hermitian":
        return np.conj(v)
    return -v


def _read_mm(path):
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise ParseError("empty file", 1)
    fmt, field, symmetry = _parse_header(lines[0])
    body = _data_lines(lines[1:])
    try:
        lineno, size = next(body)
    except StopIteration:
        raise ParseError("missing size line", len(lines)) from None
    width = 2 if field == "complex" else 1
    try:
        dims = [int(t) for t in size]
    except ValueError:
        raise ParseError("bad size line", lineno) from None
    dtype = complex if field == "complex" else float

    if fmt == "array":
        if len(dims) != 2:
            raise ParseError("array size line needs 2 integers", lineno)
        nr, nc = dims
        M = np.zeros((nr, nc), dtype=dtype)
        if symmetry == "general":
            slots = [(i, j) for j in range(nc) for i in range(nr)]
        else:
            lo = 1 if symmetry == "skew-symmetric" else 0
            slots = [(i, j) for j in range(nc) for i in range(j + lo, nr)]
        k = 0
        for lineno, tok in body:
            if k >= len(slots):
                raise ParseError("too many entries", lineno)
            if len(tok) != width:
                raise ParseError(f"expected {width} tokens", lineno)
            i, j = slots[k]
            M[i, j] = _parse_value(tok, field, lineno)
            if symmetry != "general" and i != j:
                M[j, i] = _mirror(symmetry, M[i, j])
            k += 1
        if k != len(slots):
            raise ParseError(f"expected {len(slots)} entries, found {k}", len(lines))
        return fmt, symmetry, M

    if len(dims) != 3:
        raise ParseError("coordinate size line needs 3 integers", lineno)
    nr, nc, nnz = dims
    rows, cols, vals = [], [], []
    count = 0
    for lineno, tok in body:
        if len(tok) != 2 + width:
            raise ParseError(f"expected {2 + width} tokens", lineno)
        try:
            i, j = int(tok[0]) - 1, int(tok[1]) - 1
        except ValueError:
            raise ParseError("bad index", lineno) from None
        if not (0 <= i < nr and 0 <= j < nc):
            raise ParseError(f"index ({i + 1}, {j + 1}) out of range", lineno)
        v = _parse_value(tok[2:], field, lineno)
        rows.append(i)
        cols.append(j)
        vals.append(v)
        if symmetry != "general" and i != j:
            rows.append(j)
            cols.append(i)
            vals.append(_mirror(symmetry, v))
        count += 1
    if count != nnz:
        raise ParseError(f"header announces {nnz} entries, found {count}", len(lines))
    M = sp.coo_array((np.array(vals, dtype=dtype), (rows, cols)), shape=(nr, nc))
    return fmt, symmetry, M


def read_matrix_market(path):
    """Read a square matrix; symmetric storage is expanded to full storage."""
    _, symmetry, M = _read_mm(path)
    real_symmetric = symmetry == "symmetric" and np.dtype(M.dtype).kind == "f"
    return SparseMatrix(M, hermitian=symmetry == "hermitian" or real_symmetric)


def read_dense_matrix_market(path):
    """Read any Matrix Market file into a dense array (rectangular allowed)."""
    _, _, M = _read_mm(path)
    return M.toarray() if sp.issparse(M) else M


def _fmt(v, complex_field):
    if complex_field:
        return f"{float(v.real)!r} {float(v.imag)!r}"
    return repr(float(v))


def write_matrix_market(path, M, fmt=None, symmetry="general"):
    """Write `M` in coordinate (sparse input) or array (dense input) format.

    Values are written with ``repr`` so doubles survive a round trip exactly.
    """
    if isinstance(M, SparseMatrix):
        M = M.csr
    if fmt is None:
        fmt = "coordinate" if sp.issparse(M) else "array"
    cplx = np.iscomplexobj(M.data if sp.issparse(M) else M)
    field = "complex" if cplx else "real"
    lines = [f"%%MatrixMarket matrix {fmt} {field} {symmetry}"]
    if fmt == "coordinate":
        coo = sp.coo_array(M)
        coo.sum_duplicates()
        r, c, v = coo.row, coo.col, coo.data
        if symmetry != "general":
            keep = r >= c if symmetry != "skew-symmetric" else r > c
            r, c, v = r[keep], c[keep], v[keep]
        order = np.lexsort((r, c))
        lines.append(f"{coo.shape[0]} {coo.shape[1]} {len(v)}")
        for k in order:
            lines.append(f"{r[k] + 1} {c[k] + 1} {_fmt(v[k], cplx)}")
    else:
        A = M.toarray() if sp.issparse(M) else np.asarray(M)
        if A.ndim == 1:
            A = A[:, None]
        lines.append(f"{A.shape[0]} {A.shape[1]}")
        for j in range(A.shape[1]):
            lo = 0 if symmetry == "general" else j + (symmetry == "skew-symmetric")
            for i in range(lo, A.shape[0]):
                lines.append(_fmt(A[i, j], cplx))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_vector(path):
    """Plain text vector: one entry per line, complex entries as ``re im``."""
    vals = []
    cplx = False
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            tok = line.split()
            if not tok or tok[0].startswith("#"):
                continue
            try:
                if len(tok) == 1:
                    vals.append(complex(float(tok[0]), 0.0))
                elif len(tok) == 2:
                    vals.append(complex(float(tok[0]), float(tok[1])))
                    cplx = True
                else:
                    raise ValueError
            except ValueError:
                raise ParseError(f"bad vector entry {line.strip()!r}", lineno) from None
    v = np.array(vals, dtype=complex)
    return v if cplx else v.real.copy()


def write_vector(path, v):
    v = np.asarray(v)
    cplx = np.iscomplexobj(v)
    with open(path, "w") as fh:
        for x in v:
            fh.write(_fmt(x, cplx) + "\n")


# -- test matrices -----------------------------------------------------------

def _tridiag(k, sub, diag, sup):
    return sp.diags_array([np.full(k - 1, sub), np.full(k, diag), np.full(k - 1, sup)],
                          offsets=[-1, 0, 1], shape=(k, k))


def laplace2d(k):
    """Five-point Dirichlet Laplacian on a k-by-k interior grid, h = 1/(k+1)."""
    if k < 1:
        raise ValueError("grid size must be >= 1")
    h = 1.0 / (k + 1)
    T = _tridiag(k, -1.0, 2.0, -1.0)
    I = sp.identity(k)
    A = (sp.kron(I, T) + sp.kron(T, I)) / h**2
    return SparseMatrix(A, hermitian=True)


def convdiff2d(k, pe1, pe2):
    """Central-difference convection-diffusion operator with Peclet numbers pe1, pe2.

    ``A = -(I kron C1 + C2 kron I) / h^2`` with ``C_i = tridiag(1 + pe_i, -2, 1 - pe_i)``;
    its eigenvalues are real and positive for ``|pe_i| < 1``.
    """
    if k < 1:
        raise ValueError("grid size must be >= 1")
    h = 1.0 / (k + 1)
    C1 = _tridiag(k, 1.0 + pe1, -2.0, 1.0 - pe1)
    C2 = _tridiag(k, 1.0 + pe2, -2.0, 1.0 - pe2)
    I = sp.identity(k)
    A = -(sp.kron(I, C1) + sp.kron(C2, I)) / h**2
    return SparseMatrix(A, hermitian=(pe1 == 0 and pe2 == 0))


# -- shifted solves ----------------------------------------------------------

class LinearSolver:
    """Factorization of ``A - shift*I``, reusable for any number of solves."""

    def __init__(self, A, shift=0.0):
        A = as_sparse(A)
        self.n = A.n
        self.shift = shift
        M = A.csr.tocsc()
        if shift != 0:
            M = M - shift * sp.identity(A.n, dtype=np.result_type(M.dtype, type(shift)), format="csc")
        self._norm = spla.norm(M, 1) if M.nnz else 0.0
        try:
            self._lu = spla.splu(M.tocsc())
        except RuntimeError as exc:
            raise Singular(f"A - ({shift})I is singular: {exc}") from None
        udiag = np.abs(self._lu.U.diagonal())
        if self.n and udiag.min() < EPS * self._norm:
            raise Singular(f"A - ({shift})I is numerically singular")

    def solve(self, rhs):
        rhs = np.asarray(rhs)
        if rhs.shape[0] != self.n:
            raise DimensionMismatch(f"rhs has length {rhs.shape[0]}, expected {self.n}")
        if np.iscomplexobj(rhs) and self._lu.U.dtype.kind != "c":
            return self._lu.solve(rhs.real) + 1j * self._lu.solve(rhs.imag)
        return self._lu.solve(rhs)


def make_solver(A, shift=0.0):
    return LinearSolver(A, shift)
