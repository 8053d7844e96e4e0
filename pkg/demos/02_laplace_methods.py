"""Three Krylov methods on A^(-1/2), Laplacian with n = 1024.

For f(x) = x^(-1/2) and two random directions y, z we count how many
steps each method needs to reach a relative error of 1e-8.

* Lanczos builds one space for y and one for z.
* Block Lanczos builds a single space from the block [y, z].
* Extended Krylov alternates multiplications with A and solves with A.
  It converges in far fewer steps, but each solve costs a sparse LU solve.
"""

import numpy as np

import krylov_frechet as kf
from krylov_frechet.bench import make_vectors

A = kf.laplace2d(32)
f = kf.FunctionSpec.invpow(0.5)
y, z = make_vectors(A.n, "random", "random", seed=0, dist="uniform")
direction = kf.RankOneDirection(1.0, y, z)

# Dense reference through the eigendecomposition of A.
reference = kf.from_dense(kf.reference_frechet_dd_rank_one(A.toarray(), y, z, f))
scale = kf.lowrank_diff_norm(reference)


def steps_to(builder, start, stop, step=1):
    for m in range(start, stop, step):
        L = builder.at(m)
        if kf.lowrank_diff_norm(L, reference) <= 1e-8 * scale:
            return L
    raise RuntimeError("did not converge")


L = steps_to(kf.make_builder(A, direction, f, "lanczos"), 60, 200)
print(f"lanczos:  {L.m} steps")
L = steps_to(kf.make_builder(A, direction, f, "block"), 50, 200)
print(f"block:    {L.m} block steps")
L = steps_to(kf.make_builder(A, direction, f, "extended"), 2, 80)
print(f"extended: dimension {L.m}, {L.info['solves_per_space']} solves per space")
