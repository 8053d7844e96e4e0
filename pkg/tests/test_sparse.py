import threading

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, strategies as st

from krylov_frechet.errors import DimensionMismatch, ParseError, Singular, UnsupportedField
from krylov_frechet.sparse import (
    SparseMatrix,
    as_sparse,
    convdiff2d,
    laplace2d,
    make_solver,
    matvec,
    matvec_adjoint,
    read_dense_matrix_market,
    read_matrix_market,
    read_vector,
    write_matrix_market,
    write_vector,
)


def random_sparse(rng, n, density=0.2, complex_=False):
    M = sp.random_array((n, n), density=density, rng=rng, format="csr")
    if complex_:
        M = M + 1j * sp.random_array((n, n), density=density, rng=rng, format="csr")
    return M


def test_csr_invariants(rng):
    A = as_sparse(random_sparse(rng, 30))
    assert np.all(np.diff(A.indptr) >= 0) and A.indptr[-1] == A.nnz
    for i in range(A.n):
        cols = A.indices[A.indptr[i]: A.indptr[i + 1]]
        assert np.all(np.diff(cols) > 0)


def test_matvec_examples(rng):
    v = rng.standard_normal(7)
    assert np.array_equal(matvec(as_sparse(np.eye(7)), v), v)
    assert np.array_equal(matvec(as_sparse(np.zeros((7, 7))), v), np.zeros(7))
    M = random_sparse(rng, 50)
    w = rng.standard_normal(50)
    assert np.allclose(matvec(as_sparse(M), w), M.toarray() @ w, rtol=1e-14)


def test_matvec_dimension():
    with pytest.raises(DimensionMismatch):
        matvec(as_sparse(np.eye(3)), np.ones(4))


def test_adjoint_examples(rng):
    H = rng.standard_normal((6, 6))
    H = as_sparse(H + H.T)
    v = rng.standard_normal(6)
    assert np.allclose(matvec_adjoint(H, v), matvec(H, v))
    N = as_sparse(np.eye(4, k=1))
    assert np.array_equal(matvec_adjoint(N, np.eye(4)[0]), np.eye(4)[1])
    M = random_sparse(rng, 40, complex_=True)
    w = rng.standard_normal(40) + 1j * rng.standard_normal(40)
    assert np.allclose(matvec_adjoint(as_sparse(M), w), M.toarray().conj().T @ w)


def test_adjoint_matches_explicit_exactly(rng):
    M = random_sparse(rng, 25, complex_=True)
    A = as_sparse(M)
    w = rng.standard_normal(25) + 1j * rng.standard_normal(25)
    explicit = as_sparse(M.conj().T.tocsr())
    assert np.array_equal(matvec_adjoint(A, w), matvec(explicit, w))


def test_adjoint_cache_concurrent(rng):
    A = as_sparse(random_sparse(rng, 60))
    v = rng.standard_normal(60)
    out = []
    threads = [threading.Thread(target=lambda: out.append(A.rmatvec(v))) for _ in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert all(np.array_equal(o, out[0]) for o in out)


def test_nonfinite_rejected():
    with pytest.raises(ValueError):
        as_sparse(np.array([[np.nan, 0.0], [0.0, 1.0]]))


def write(tmp_path, text, name="m.mtx"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_read_identity(tmp_path):
    p = write(tmp_path, "%%MatrixMarket matrix coordinate real general\n% c\n2 2 2\n1 1 1\n2 2 1\n")
    assert np.array_equal(read_matrix_market(p).toarray(), np.eye(2))


def test_read_symmetric_expansion(tmp_path):
    p = write(tmp_path, "%%MatrixMarket matrix coordinate real symmetric\n3 3 4\n1 1 2\n2 1 -1\n3 2 -1\n3 3 2\n")
    A = read_matrix_market(p)
    assert A.hermitian
    assert np.array_equal(A.toarray(), [[2, -1, 0], [-1, 0, -1], [0, -1, 2]])


def test_read_hermitian_complex(tmp_path):
    p = write(tmp_path, "%%MatrixMarket matrix coordinate complex hermitian\n2 2 2\n1 1 1 0\n2 1 0 1\n")
    A = read_matrix_market(p).toarray()
    assert np.array_equal(A, [[1, -1j], [1j, 0]])


def test_read_array_format(tmp_path):
    p = write(tmp_path, "%%MatrixMarket matrix array real general\n2 2\n1\n2\n3\n4\n")
    assert np.array_equal(read_matrix_market(p).toarray(), [[1, 3], [2, 4]])


def test_read_errors(tmp_path):
    p = write(tmp_path, "%%MatrixMarket matrix coordinate pattern general\n2 2 1\n1 1\n")
    with pytest.raises(UnsupportedField):
        read_matrix_market(p)
    p = write(tmp_path, "%%MatrixMarket matrix coordinate real general\n2 2 1\n1 x 1\n")
    with pytest.raises(ParseError, match="line 3"):
        read_matrix_market(p)
    p = write(tmp_path, "%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1\n")
    with pytest.raises(ParseError):
        read_matrix_market(p)


@given(st.integers(0, 2**32 - 1), st.booleans())
def test_matrix_market_round_trip(tmp_path_factory, seed, cplx):
    rng = np.random.default_rng(seed)
    M = random_sparse(rng, 12, complex_=cplx)
    p = str(tmp_path_factory.mktemp("mm") / "r.mtx")
    write_matrix_market(p, M)
    B = read_matrix_market(p)
    A = as_sparse(M)
    assert np.array_equal(B.indptr, A.indptr) and np.array_equal(B.indices, A.indices)
    assert np.array_equal(B.data, A.data)


def test_dense_round_trip_bit_exact(tmp_path, rng):
    M = rng.standard_normal((5, 3)) * 10.0 ** rng.integers(-300, 300, (5, 3))
    p = str(tmp_path / "d.mtx")
    write_matrix_market(p, M)
    assert np.array_equal(read_dense_matrix_market(p), M)


def test_vector_round_trip(tmp_path, rng):
    for v in (rng.standard_normal(9), rng.standard_normal(9) + 1j * rng.standard_normal(9)):
        p = str(tmp_path / "v.txt")
        write_vector(p, v)
        assert np.array_equal(read_vector(p), v)


def test_vector_parse_error(tmp_path):
    p = write(tmp_path, "1.0\n2 3 4\n", "v.txt")
    with pytest.raises(ParseError, match="line 2"):
        read_vector(p)


def test_laplace_small():
    assert np.array_equal(laplace2d(1).toarray(), [[16.0]])
    k, h = 2, 1 / 3
    ev = np.sort(np.linalg.eigvalsh(laplace2d(k).toarray()))
    i, j = np.meshgrid(np.arange(1, k + 1), np.arange(1, k + 1))
    exact = np.sort(((2 / h**2) * (2 - np.cos(i * np.pi * h) - np.cos(j * np.pi * h))).ravel())
    assert np.allclose(ev, exact, rtol=1e-13)


def test_laplace_symmetric_and_pd():
    A = laplace2d(32)
    assert A.n == 1024 and A.hermitian
    M = A.csr
    assert (M - M.T).nnz == 0
    from krylov_frechet.krylov import ritz_extremes

    assert ritz_extremes(A, steps=40)[0] > 0


def test_convdiff():
    for k in (3, 5):
        assert np.array_equal(convdiff2d(k, 0, 0).toarray(), laplace2d(k).toarray())
    A = convdiff2d(2, 0.5, 0.5).toarray() / 9.0
    assert np.allclose(np.diag(A), 4.0)
    assert np.isclose(A[0, 1], -0.5) and np.isclose(A[1, 0], -1.5)
    ev = np.linalg.eigvals(convdiff2d(16, 0.5, 0.25).toarray())
    assert np.all(ev.real > 0)


def test_solver(rng):
    b = rng.standard_normal(5)
    assert np.allclose(make_solver(as_sparse(np.eye(5))).solve(b), b)
    d = rng.uniform(1, 2, 5)
    assert np.allclose(make_solver(as_sparse(np.diag(d))).solve(b), b / d)
    A = laplace2d(8)
    rhs = rng.standard_normal(A.n)
    x = make_solver(A).solve(rhs)
    assert np.linalg.norm(A @ x - rhs) <= 1e-10 * np.linalg.norm(rhs)
    xs = make_solver(A, -3.0).solve(rhs + 1j * rhs)
    assert np.allclose(A @ xs + 3 * xs, rhs + 1j * rhs)


def test_solver_singular():
    with pytest.raises(Singular):
        make_solver(as_sparse(np.diag([1.0, 2.0])), 2.0)
