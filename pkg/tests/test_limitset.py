"""Boundary clouds, dimension, chart diagnostics, triple checks."""

import numpy as np
import pytest

from anosovlab import limitset, reps
from anosovlab.errors import ChartDegeneracyError, ConfigError

SYM2_T6_DIM = 1.0015  # frozen: single-thread run, seed-free construction
SYM2_HC_MIN_MARGIN = 6.266e-4  # hyperconvex_check(sym2, 2, 300, T=7, seed=3)


def test_cloud_shape_and_decay(fuchsian):
    cloud = limitset.boundary_sample(fuchsian, 5)
    assert len(cloud) == 19096
    assert cloud.points.shape == (19096, 2)
    assert np.allclose(np.linalg.norm(cloud.points, axis=1), 1.0)
    assert cloud.decay_ok()
    assert cloud.skipped_no_gap == 0
    medians = cloud.median_residual_by_level
    levels = sorted(medians)
    assert all(medians[a] > medians[b] for a, b in zip(levels, levels[1:]))


def test_cloud_lookup_and_csv_rows(fuchsian):
    cloud = limitset.boundary_sample(fuchsian, 4)
    rows = list(cloud.csv_rows([0, 7]))
    assert len(rows) == 2
    word, *coords, residual = rows[0]
    assert isinstance(word, str) and len(word) == 4
    assert np.allclose(coords, cloud.points[0])
    assert residual == cloud.residuals[0]


def test_hitchin_box_dimension(sym2):
    cloud = limitset.boundary_sample(sym2, 6)
    est = limitset.box_dimension(cloud.points)
    assert abs(est.value - SYM2_T6_DIM) < 2e-3
    assert abs(est.value - 1.0) < 0.1
    payload = est.as_dict()
    assert payload["box_dimension"] == est.value
    assert payload["n_points"] == len(cloud)


def test_lipschitz_verdicts_on_synthetic_graphs():
    rng = np.random.default_rng(7)
    t = np.sort(rng.uniform(-0.25, 0.25, 20_001))

    def sphere_graph(f):
        raw = np.stack([np.ones_like(t), t, f(t)], axis=1)
        return raw / np.linalg.norm(raw, axis=1, keepdims=True)

    flat = limitset.lipschitz_diagnostic(sphere_graph(lambda s: 0.8 * np.abs(s)))
    assert flat["verdict"] == "bounded"
    assert flat["ratio_growth_per_decade"] < 1.5

    root = limitset.lipschitz_diagnostic(sphere_graph(lambda s: 0.8 * np.sqrt(np.abs(s))))
    assert root["verdict"] == "exploding"
    assert root["ratio_growth_per_decade"] > 2.5


def test_lipschitz_bounded_on_hitchin_cloud(hitchin_cloud):
    report = limitset.lipschitz_diagnostic(hitchin_cloud.points)
    assert report["verdict"] == "bounded"
    assert len(report["curve"]) >= 3


def test_lipschitz_refuses_degenerate_cloud():
    point = np.array([1.0, 0.3, -0.2])
    cloud = np.tile(point / np.linalg.norm(point), (5000, 1))
    with pytest.raises(ChartDegeneracyError):
        limitset.lipschitz_diagnostic(cloud)
    with pytest.raises(ConfigError):
        limitset.lipschitz_diagnostic(cloud[:100])


def test_weak_irreducibility_ranks(hitchin_cloud, barbot_cloud):
    assert limitset.weak_irreducibility_rank(hitchin_cloud.points) == 3
    # the trivial summand never enters the attracting line
    assert limitset.weak_irreducibility_rank(barbot_cloud.points) == 2


def test_jacobian_identity_over_all_small_ranks():
    worst = max(
        limitset.ps_jacobian_identity(d, p, trials=150, seed=11)
        for d in range(2, 7)
        for p in range(1, d)
    )
    assert worst < 1e-9


def test_hyperconvex_margins_separate_the_families(sym2, barbot):
    flexible = limitset.hyperconvex_check(sym2, 2, 300, T=7, seed=3)
    assert abs(flexible["min_margin"] - SYM2_HC_MIN_MARGIN) < 1e-7
    assert flexible["min_margin"] > 1e-4
    assert flexible["collisions_skipped"] == 0

    rigid = limitset.hyperconvex_check(barbot, 2, 300, T=7, seed=3)
    assert rigid["min_margin"] < 1e-12
    assert rigid["median_margin"] < 1e-12


def test_signature_census_on_the_so23_locus(locus3):
    report = limitset.hpq_signature_check(locus3, 120, T=6, seed=2)
    assert report["fraction_2_1"] == 1.0
    assert set(report["counts"]) == {"2,1"}
    assert report["worst_isotropy"] <= 1e-6
    assert report["n_triples"] + report["degenerate_skipped"] == 120


def test_signature_census_needs_a_form(sym2):
    import dataclasses

    formless = dataclasses.replace(sym2, form=None)
    with pytest.raises(ConfigError):
        limitset.hpq_signature_check(formless, 10, T=4)
