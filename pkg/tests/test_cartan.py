"""Cartan/Iwasawa kernel: projections, attractors, basins, covers."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from anosovlab import cartan
from anosovlab.errors import ConfigError, NoGapError, NonTransverseError

from _oracles import well_conditioned

ROT = np.array([[0.0, -1.0], [1.0, 0.0]])


def test_projection_is_sorted_and_sums_to_logdet():
    rng = np.random.default_rng(2)
    for d in (2, 3, 5):
        g = well_conditioned(rng, d)
        a = cartan.cartan_project(g)
        assert (np.diff(a) <= 1e-12).all()
        sign, logdet = np.linalg.slogdet(g)
        assert abs(a.sum() - logdet) < 1e-10


def test_compound_route_agrees_with_svd_route():
    rng = np.random.default_rng(3)
    for d in (2, 4, 6):
        g = well_conditioned(rng, d, spread=6.0)
        diff = cartan.cartan_project(g, method="compound") - cartan.cartan_project(g, method="svd")
        assert np.abs(diff).max() < 1e-10


def test_batch_equals_loop():
    rng = np.random.default_rng(4)
    mats = np.stack([well_conditioned(rng, 4) for _ in range(17)])
    batch = cartan.cartan_project_batch(mats)
    for i, g in enumerate(mats):
        assert np.abs(batch[i] - cartan.cartan_project(g)).max() < 1e-12


def test_word_route_matches_assembled_product(fuchsian, sym2):
    words = np.array([[0, 2, 4], [5, 0, 2], [2, 2, 0]])
    for rep in (fuchsian, sym2):
        via_words = cartan.cartan_project_words(rep.gen_mats, words)
        for i, w in enumerate(words):
            assembled = cartan.cartan_project(rep.of_word(list(w)))
            assert np.abs(via_words[i] - assembled).max() < 1e-9


def test_attractor_of_diagonal():
    axes, gap = cartan.attractor(np.diag([3.0, 1.0, 0.2]), 1)
    assert abs(abs(axes[0]) - 1.0) < 1e-12 and np.abs(axes[1:]).max() < 1e-12
    assert abs(gap - 1.0 / 3.0) < 1e-12
    plane, gap2 = cartan.attractor(np.diag([3.0, 1.5, 0.2]), 2)
    assert plane.shape == (3, 2)
    assert abs(gap2 - 0.2 / 1.5) < 1e-12


def test_attractor_refuses_without_gap():
    with pytest.raises(NoGapError):
        cartan.attractor(np.eye(3), 1)
    with pytest.raises(NoGapError):
        cartan.attractor(ROT, 1)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000))
def test_proj_distance_symmetry_and_scale_invariance(seed):
    rng = np.random.default_rng(seed)
    v, w = rng.standard_normal((2, 4))
    d = cartan.proj_distance(v, w)
    assert abs(d - cartan.proj_distance(w, v)) < 1e-12
    assert abs(d - cartan.proj_distance(-2.5 * v, w)) < 1e-12
    assert -1e-12 <= d <= 1.0 + 1e-12
    assert cartan.proj_distance(v, v) < 1e-12


def test_proj_distance_of_perpendicular_lines_is_one():
    assert abs(cartan.proj_distance(np.array([1.0, 0.0]), np.array([0.0, 3.0])) - 1.0) < 1e-14


def test_gromov_product_values():
    v = np.array([1.0, 0.0, 0.0])
    assert abs(cartan.gromov_product(v, v)) < 1e-14
    assert abs(cartan.gromov_product(v, np.array([1.0, 1.0, 0.0])) - 0.5 * np.log(2)) < 1e-12
    with pytest.raises(NonTransverseError):
        cartan.gromov_product(v, np.array([0.0, 1.0, 0.0]))


def test_basin_contraction_has_no_negative_slack(fuchsian):
    g3 = np.kron(fuchsian.of_word([0, 2]), fuchsian.of_word([0]))  # well inside GL4
    report = cartan.basin_contraction_check(g3, 0.6, n_samples=400, seed=8)
    assert report["min_slack"] >= -1e-10
    assert report["max_distance"] <= report["bound"] + 1e-10
    assert report["n_samples"] == 400


def test_basin_refuses_rotation():
    with pytest.raises(NoGapError):
        cartan.basin_contraction_check(ROT, 0.5, n_samples=10)


def test_cover_counts_stay_under_the_stated_bound():
    rng = np.random.default_rng(9)
    for d, p in ((4, 2), (5, 3)):
        g = well_conditioned(rng, d, spread=5.0)
        cover = cartan.ellipsoid_cover(g, p, 0.7)
        assert 1 <= cover.count <= cover.count_bound


def test_cover_audit_passes():
    rng = np.random.default_rng(10)
    g = well_conditioned(rng, 4, spread=5.0)
    report = cartan.cover_audit(g, 2, 0.7, n_points=20_000, seed=1)
    assert report["n_points"] == 20_000
    assert report["max_center_distance"] <= report["ball_radius"]


def test_cover_parameter_guards():
    g = np.diag([2.0, 1.0, 0.5])
    with pytest.raises(ConfigError):
        cartan.ellipsoid_cover(g, 1, 0.7)
    with pytest.raises(ConfigError):
        cartan.ellipsoid_cover(g, 2, 2.0)  # alpha is an angle, capped at pi/2
