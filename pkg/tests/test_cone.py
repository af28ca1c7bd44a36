"""Dual-norm bound solver, presets, and the norm-growth estimator."""

import numpy as np
import pytest

from anosovlab import cone, entropy
from anosovlab.errors import ConfigError


def test_so_pq_presets():
    assert np.allclose(cone.so_pq_norm(2), np.eye(2))
    assert np.allclose(cone.so_pq_norm(3), np.eye(3) / 5.0)
    assert np.allclose(cone.so_pq_norm(4), np.eye(4) / 14.0)
    assert np.allclose(cone.fuchsian_locus_direction(3), [2.0, 1.0, 0.0])
    assert np.allclose(cone.sl2_norm(), 2.0 * np.eye(2))


def test_solver_matches_closed_forms():
    """Certified generators all evaluate to 1 on the locus direction, so the
    optimum is the dual norm of the supporting functional there."""
    for p in (2, 3, 4):
        problem = cone.so_pq_problem(p)
        bound = cone.hx_upper_bound(problem, seed=1)
        v0 = cone.fuchsian_locus_direction(p)
        closed = 1.0 / np.sqrt(v0 @ cone.so_pq_norm(p) @ v0)
        assert bound.converged
        assert abs(bound.value - closed) < 1e-8
        assert abs(closed - 1.0) < 1e-12

    sl2 = cone.sl2_problem()
    bound = cone.hx_upper_bound(sl2, seed=1)
    phi = np.asarray(sl2.functionals[0], dtype=float)
    ginv = np.linalg.inv(sl2.norm_matrix)
    assert abs(bound.value - np.sqrt(phi @ ginv @ phi)) < 1e-8


def test_minimizer_certificate_reconstructs():
    problem = cone.so_pq_problem(3)
    bound = cone.hx_upper_bound(problem, seed=5)
    weights = np.asarray(bound.hull_weights)
    coeffs = np.asarray(bound.cone_coeffs)
    assert abs(weights.sum() - 1.0) < 1e-9
    assert (weights >= -1e-12).all()
    assert (coeffs >= -1e-10).all()
    rebuilt = weights @ np.asarray(problem.functionals) + coeffs @ np.asarray(
        problem.cone_generators
    )
    assert np.abs(rebuilt - np.asarray(bound.minimizer)).max() < 1e-8


def test_bound_scales_with_the_norm():
    base = cone.so_pq_problem(3)
    scaled = cone.DualNormProblem(
        functionals=base.functionals,
        norm_matrix=4.0 * np.asarray(base.norm_matrix),
        cone_generators=base.cone_generators,
        description="scaled",
    )
    b0 = cone.hx_upper_bound(base, seed=2).value
    b1 = cone.hx_upper_bound(scaled, seed=2).value
    assert abs(b1 - b0 / 2.0) < 1e-9


def test_norm_matrix_must_be_spd():
    bad = cone.DualNormProblem(
        functionals=((1.0, 0.0),),
        norm_matrix=np.array([[1.0, 0.0], [0.0, -1.0]]),
        cone_generators=((1.0, 0.0),),
        description="indefinite",
    )
    with pytest.raises(ConfigError):
        cone.hx_upper_bound(bad)


def test_limit_cone_of_fuchsian_is_a_ray(fuchsian):
    report = cone.limit_cone_sample(fuchsian, 5, per_level=80, seed=0)
    dirs = np.array([s.direction for s in report.samples])
    ray = np.array([1.0, -1.0]) / np.sqrt(2.0)
    assert np.abs(dirs - ray).max() < 1e-8
    lengths = np.array([s.length for s in report.samples])
    assert (lengths > 0).all()


def test_growth_estimate_agrees_with_the_entropy_route(fuchsian, relaxed):
    """The sl2 preset norm gives ||a(w)||_G = tau(w) = alpha_1(a(w)),
    so the two public estimators must coincide to the bin width."""
    via_norm = cone.hx_estimate(fuchsian, cone.sl2_norm(), 7, policy=relaxed)
    via_functional = entropy.critical_exponent(fuchsian, entropy.alpha(1, 2), 7, policy=relaxed)
    assert abs(via_norm.h_hat - via_functional.h_hat) < 1e-9
    assert abs(via_norm.h_shell - via_functional.h_shell) < 1e-9
