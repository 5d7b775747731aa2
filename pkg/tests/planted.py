"""Planted block-orthogonal matrix families: the oracle for invariant_split."""

import numpy as np
from scipy.stats import special_ortho_group

# (fixed dim, irreducible block dims)
FAMILIES = {"1+2": (1, (2,)), "2+2": (0, (2, 2)), "1+3": (1, (3,))}


def _block_rotation(dim, rng):
    if dim == 2:
        t = rng.uniform(0.3, 2.8)
        return np.array([[np.cos(t), -np.sin(t)], [np.sin(t), np.cos(t)]])
    return special_ortho_group.rvs(dim, random_state=rng)


def planted_family(name, seed, n_matrices=3):
    """Matrices Q diag(I, R_1, R_2, ...) Q^T and the planted block bases (columns of Q)."""
    fixed, dims = FAMILIES[name]
    rng = np.random.default_rng(seed)
    n = fixed + sum(dims)
    Q = special_ortho_group.rvs(n, random_state=rng)
    mats = []
    for _ in range(n_matrices):
        D = np.eye(n)
        k = fixed
        for d in dims:
            D[k : k + d, k : k + d] = _block_rotation(d, rng)
            k += d
        mats.append(Q @ D @ Q.T)
    bases, k = [Q[:, :fixed]] if fixed else [], fixed
    blocks = []
    for d in dims:
        blocks.append(Q[:, k : k + d])
        k += d
    return mats, (bases[0] if bases else np.zeros((n, 0))), blocks
