"""Low-rank structure, and keeping the result around.

The derivative of A^(-1/2) in a rank-one direction is, to eight digits,
a matrix of rank about nine. The singular values of the factored form
come from small QR and SVD computations. Factors can be written to a
directory of Matrix Market files and read back exactly.
"""

import tempfile

import numpy as np

import krylov_frechet as kf
from krylov_frechet.bench import make_vectors

A = kf.laplace2d(24)
f = kf.FunctionSpec.invpow(0.5)
y, z = make_vectors(A.n, "random", "random", seed=2, dist="uniform")
direction = kf.RankOneDirection(1.0, y, z)

L, _ = kf.run_to_tolerance(A, direction, f, method="extended", tol=1e-12)
s = kf.singular_values(L, 12)
print("sigma_i / sigma_1:", " ".join(f"{v:.0e}" for v in s / s[0]))

dense = np.linalg.svd(kf.reference_frechet_dd_rank_one(A.toarray(), y, z, f), compute_uv=False)[:12]
print("max deviation from dense SVD:", np.max(np.abs(s - dense)) / dense[0])

with tempfile.TemporaryDirectory() as path:
    kf.save_factors(L, path, f)
    back = kf.load_factors(path)
    b = np.ones(A.n)
    print("reloaded factors give identical products:", np.array_equal(kf.apply(back, b), kf.apply(L, b)))
