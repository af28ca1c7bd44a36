"""Sphere sizes against the brute-force matrix BFS oracle.

The engine enumerates canonical words; the oracle walks the matrix group
directly and knows nothing about the word combinatorics.  Counts are frozen
here so a regression in either side is loud.
"""

import numpy as np

from anosovlab import groups, reps

from _oracles import bfs_spheres, free_sphere_size

SURFACE_SPHERES = [8, 56, 392, 2736, 19096]
# past BFS reach; engine self-consistency pins, not oracle values
SURFACE_SPHERES_DEEP = {6: 133288, 7: 930328}


def test_bfs_oracle_matches_frozen_counts(fuchsian):
    levels = bfs_spheres(fuchsian.gen_mats, 5)
    assert [len(level) for level in levels] == SURFACE_SPHERES


def test_engine_matches_bfs_level_sets(fuchsian):
    """Count equality and an element-by-element bijection through n = 4."""
    levels = bfs_spheres(fuchsian.gen_mats, 4)
    scan = groups.BallScan(fuchsian.spec, fuchsian.gen_mats, max_len=4)
    scan.run()
    for n in (1, 2, 3, 4):
        engine = scan.matrices_for(fuchsian.gen_mats, n).reshape(-1, 4)
        oracle = np.asarray(levels[n - 1]).reshape(-1, 4)
        assert len(engine) == len(oracle)
        used = np.zeros(len(oracle), dtype=bool)
        for i in range(0, len(engine), 512):
            chunk = engine[i : i + 512]
            dist = np.abs(chunk[:, None, :] - oracle[None, :, :]).max(axis=2)
            j = dist.argmin(axis=1)
            assert (dist[np.arange(len(chunk)), j] < 1e-8).all()
            assert not used[j].any()
            used[j] = True
        assert used.all()


def test_engine_sphere_counts_through_five(fuchsian):
    scan = groups.BallScan(fuchsian.spec, fuchsian.gen_mats, max_len=5)
    result = scan.run()
    assert [scan.level_size(n) for n in range(1, 6)] == SURFACE_SPHERES
    assert result.total_elements == 1 + sum(SURFACE_SPHERES)
    assert sum(result.counts) == result.total_elements


def test_deep_surface_counts_are_stable(fuchsian):
    scan = groups.BallScan(fuchsian.spec, fuchsian.gen_mats, max_len=7)
    scan.run()
    for n, count in SURFACE_SPHERES_DEEP.items():
        assert scan.level_size(n) == count


def test_free_group_counts_match_formula():
    for rank, depth in ((2, 6), (3, 4)):
        spec = groups.free_group(rank)
        scan = groups.BallScan(spec, max_len=depth)
        scan.run()
        for n in range(1, depth + 1):
            assert scan.level_size(n) == free_sphere_size(rank, n)


def test_sphere_function_agrees_with_scan(fuchsian):
    words = groups.sphere(fuchsian.spec, 3)
    assert len(words) == 392
    assert all(len(w.letters) == 3 for w in words)
    assert groups.sphere_count(fuchsian.spec, 4) == 2736
