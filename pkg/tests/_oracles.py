"""Independent reference computations used by the test suite.

Everything here is deliberately primitive: plain breadth-first search over
matrix products, extended-precision singular values through mpmath, and a
hand-built middle-thirds Cantor set.  None of it shares code paths with the
package, which is the point.
"""

import itertools

import numpy as np
from mpmath import mp

# Grid for the BFS duplicate table.  Distinct elements of the groups under
# test are separated by ~1e-2 at these depths while repeated products of the
# same element differ by ~1e-12, so the 27-cell neighborhood scan below can
# never confuse the two.
BFS_QUANTUM = 1e-6
_NEIGHBOR_OFFSETS = list(itertools.product((-1, 0, 1), repeat=4))


def _bfs_key(m):
    return tuple(int(round(v / BFS_QUANTUM)) for v in m.ravel())


def bfs_spheres(gen_mats, n_max):
    """Sphere levels of the group generated by gen_mats, by brute force.

    Returns a list of lists of matrices, one list per word length.  A
    candidate counts as already seen when some stored element lies within
    1e-8 of it; the hash lookup scans the neighboring grid cells so a
    duplicate straddling a cell boundary is still found.
    """
    gen_mats = np.asarray(gen_mats, dtype=float)
    table = {_bfs_key(np.eye(2)): np.eye(2)}
    frontier = [np.eye(2)]
    levels = []
    for _ in range(n_max):
        fresh = []
        for m in frontier:
            for g in gen_mats:
                cand = m @ g
                key = _bfs_key(cand)
                hit = table.get(key)
                if hit is None:
                    for off in _NEIGHBOR_OFFSETS:
                        hit = table.get(tuple(a + b for a, b in zip(key, off)))
                        if hit is not None:
                            break
                if hit is not None:
                    if np.abs(cand - hit).max() >= 1e-8:
                        raise AssertionError("ambiguous duplicate in BFS oracle")
                else:
                    table[key] = cand
                    fresh.append(cand)
        levels.append(fresh)
        frontier = fresh
    return levels


def free_sphere_size(rank, n):
    """Number of reduced words of length n in the free group of given rank."""
    if n == 0:
        return 1
    return 2 * rank * (2 * rank - 1) ** (n - 1)


def mp_log_singular_values(m, dps=40):
    """log singular values of one matrix at dps decimal digits."""
    m = np.asarray(m, dtype=float)
    with mp.workdps(dps):
        sv = mp.svd_r(mp.matrix(m.tolist()), compute_uv=False)
        return np.array([float(mp.log(sv[i])) for i in range(m.shape[0])])


def mp_word_log_singular_values(gen_mats, word, dps):
    """Exact-product oracle: multiply letters at full precision, then svd."""
    gen_mats = np.asarray(gen_mats, dtype=float)
    with mp.workdps(dps):
        acc = mp.eye(gen_mats.shape[1])
        for letter in word:
            acc = acc * mp.matrix(gen_mats[letter].tolist())
        sv = mp.svd_r(acc, compute_uv=False)
        return np.array([float(mp.log(sv[i])) for i in range(gen_mats.shape[1])])


def cantor_points(depth=14):
    """All 2^depth left endpoints of the middle-thirds construction."""
    digits = ((np.arange(2**depth)[:, None] >> np.arange(depth)) & 1) * 2
    pts = (digits * (3.0 ** -(np.arange(depth) + 1))).sum(axis=1)
    return pts[:, None]


def well_conditioned(rng, d, spread=4.0):
    """Random matrix with log singular values uniform in +-spread/2."""
    q1, _ = np.linalg.qr(rng.standard_normal((d, d)))
    q2, _ = np.linalg.qr(rng.standard_normal((d, d)))
    logs = rng.uniform(-spread / 2, spread / 2, d)
    logs -= logs.mean()
    return q1 @ np.diag(np.exp(logs)) @ q2
