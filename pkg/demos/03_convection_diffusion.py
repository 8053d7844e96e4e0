"""A non-symmetric matrix: convection-diffusion.

With convection the matrix is no longer symmetric, so Lanczos is out.
Arnoldi builds orthonormal bases for A and A^H, two-sided Lanczos
builds bi-orthogonal ones with short recurrences, and a shift-and-invert
space uses a single pole placed at -sqrt(lambda_min lambda_max).
"""

import numpy as np

import krylov_frechet as kf
from krylov_frechet.bench import make_vectors

A = kf.convdiff2d(32, 0.5, 0.25)
f = kf.FunctionSpec.exp(-0.005)
y, z = make_vectors(A.n, "random", "random", seed=0, dist="uniform")
direction = kf.RankOneDirection(1.0, y, z)

print("building dense reference (a 2048 x 2048 exponential) ...")
reference = kf.from_dense(kf.reference_frechet_block(A.toarray(), direction.dense(), f))
scale = kf.lowrank_diff_norm(reference)

pole = kf.shift_invert_pole(A)
print(f"shift-and-invert pole: {pole:.1f}")

for method, kw in (("arnoldi", {}), ("twosided", {}), ("shift-invert", {"pole": pole})):
    builder = kf.make_builder(A, direction, f, method, **kw)
    errors = []
    for m in range(5, 61, 5):
        errors.append(kf.lowrank_diff_norm(builder.at(m), reference) / scale)
    hit = next((5 * (i + 1) for i, e in enumerate(errors) if e <= 1e-8), None)
    curve = " ".join(f"{e:.0e}" for e in errors[:8])
    print(f"{method:13s} first m (multiple of 5) below 1e-8: {hit}   errors: {curve}")
