"""A first low-rank derivative.

We take the 2D Laplacian on a 20 x 20 grid, pick a random direction
y y^T and ask how exp(-0.01 A) reacts to it. The answer is an n x n
matrix, but it is numerically low rank, so we keep it as three small
factors and only ever multiply with them.
"""

import numpy as np

import krylov_frechet as kf

A = kf.laplace2d(20)
rng = np.random.default_rng(0)
y = rng.standard_normal(A.n)
y /= np.linalg.norm(y)

f = kf.FunctionSpec.exp(-0.01)
direction = kf.RankOneDirection(1.0, y)          # z defaults to y

# Grow the Krylov space until consecutive iterates agree to 1e-10.
L, record = kf.run_to_tolerance(A, direction, f, method="lanczos", tol=1e-10)
print(f"n = {A.n}, stopped at m = {L.m}, factor shapes U {L.U.shape}, X {L.X.shape}")

# The factors act on vectors without forming the n x n matrix.
b = rng.standard_normal(A.n)
Lb = kf.apply(L, b)

# For a problem this small a dense reference is cheap, so check it.
exact = kf.reference_frechet_block(A.toarray(), np.outer(y, y), f)
print("relative error of L b:", np.linalg.norm(Lb - exact @ b) / np.linalg.norm(exact @ b))

# How fast did it converge? The record keeps one row per step.
for row in record.rows[::3]:
    print(f"  m = {row['m']:3d}   |L_m - L_(m-1)| = {row['est_diff']}")
