"""Knowing when to stop.

A priori bounds depend only on the spectrum. Here we check the bounds
for x^(-1/2) and log(x), which follow the conjugate gradient rate.
A posteriori estimates use quantities available during the iteration.
The second half compares both estimators with the true error on a
non-normal tridiagonal matrix and exp(5 x).
"""

import numpy as np

import krylov_frechet as kf
from krylov_frechet.bench import convergence_curve

rng = np.random.default_rng(1)

# --- a priori -------------------------------------------------------------
A = kf.laplace2d(12)
spectrum = kf.SpectralData.from_matrix(A)
print(f"kappa = {spectrum.kappa:.1f}")
y = rng.standard_normal(A.n)
z = rng.standard_normal(A.n)
y, z = y / np.linalg.norm(y), z / np.linalg.norm(z)
direction = kf.RankOneDirection(1.0, y, z)

for name, f, bound in (
    ("x^-1/2", kf.FunctionSpec.invpow(0.5), lambda m, f: kf.apriori_stieltjes_bound(spectrum, m, 1.0, f)),
    ("log", kf.FunctionSpec.log(), lambda m, f: kf.apriori_log_bound(spectrum, m, 1.0)),
):
    exact = kf.reference_frechet_dd(A.toarray(), np.outer(y, z), f)
    builder = kf.make_builder(A, direction, f, "arnoldi")
    print(name)
    for m in (5, 10, 20, 30):
        err = np.linalg.norm(kf.materialize(builder.at(m)) - exact, 2)
        print(f"  m = {m:2d}  error {err:.2e}  bound {bound(m, f):.2e}")

# --- a posteriori -----------------------------------------------------------
n = 100
T = np.diag(np.full(n - 1, -0.5), -1) + np.diag(np.full(n, -2.0)) + np.diag(np.full(n - 1, 2.5), 1)
f = kf.FunctionSpec.exp(5.0)
y, z = rng.standard_normal(n), rng.standard_normal(n)
direction = kf.RankOneDirection(1.0, y, z)
exact = kf.reference_frechet_block(T, direction.dense(), f)

curve = convergence_curve(kf.as_sparse(T), direction, f, "arnoldi", max_dim=60, d=1,
                          reference=exact, floor=1e-13)
print("\n  m     error      diff est   block est")
for row in curve.rows[9::5]:
    print(f"{row['m']:3d}  {row['error']:.2e}  {row['est_diff']:.2e}  {row['est_block']:.2e}")
