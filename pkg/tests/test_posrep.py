"""Positivity apparatus: forms, unipotents, triples, the determinant route."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from anosovlab import posrep
from anosovlab.errors import ConeViolationError, ConfigError

PARITIES = [(3, 4), (4, 5), (2, 5), (3, 6)]


def test_form_assembly_for_so34():
    # hand transcription: antidiagonal corner blocks with alternating signs
    # around a middle Lorentz block
    ctx = posrep.so_pq_context(3, 4)
    expected = np.zeros((7, 7))
    expected[0, 6] = expected[6, 0] = 1.0
    expected[1, 5] = expected[5, 1] = -1.0
    expected[2, 4] = expected[4, 2] = 1.0
    expected[3, 3] = -1.0
    assert np.array_equal(ctx.Q, expected)


def test_signatures_across_parities():
    for p, q in PARITIES:
        ctx = posrep.so_pq_context(p, q)
        eig = np.linalg.eigvalsh(ctx.Q)
        assert ((eig > 0).sum(), (eig < 0).sum()) == (p, q)
        assert ctx.d == p + q
        assert ctx.cone_dim == q - p + 2


def test_context_guards():
    with pytest.raises(ConfigError):
        posrep.so_pq_context(1, 4)
    with pytest.raises(ConfigError):
        posrep.so_pq_context(4, 4)


def test_longest_element_expression():
    assert posrep.w0_reduced_expression(3) == (1, 2, 1, 2)
    assert len(posrep.w0_reduced_expression(5)) == 16
    with pytest.raises(ConfigError):
        posrep.w0_reduced_expression(1)


def test_unipotents_preserve_the_form_in_all_parities():
    rng = np.random.default_rng(6)
    for p, q in PARITIES:
        ctx = posrep.so_pq_context(p, q)
        params = posrep.random_positive_params(ctx, rng)
        worst = 0.0
        for i, v in zip(posrep.w0_reduced_expression(p), params):
            u = posrep.positive_unipotent(ctx, i, v)
            worst = max(worst, np.abs(u.T @ ctx.Q @ u - ctx.Q).max())
        assert worst < 1e-12


def test_unipotents_are_unipotent():
    ctx = posrep.so_pq_context(3, 4)
    u_scalar = posrep.positive_unipotent(ctx, 1, 0.7)
    u_vector = posrep.positive_unipotent(ctx, 2, ctx.default_cone_vector())
    for u in (u_scalar, u_vector):
        nil = u - np.eye(ctx.d)
        assert np.abs(np.linalg.matrix_power(nil, 3)).max() == 0.0


def test_one_parameter_subgroup_law():
    """u_i(v) u_i(w) = u_i(v + w) exactly, for scalar and vector roots."""
    ctx = posrep.so_pq_context(3, 4)
    # parameters exactly representable in binary, so the law holds bit for bit
    a = posrep.positive_unipotent(ctx, 1, 0.5)
    b = posrep.positive_unipotent(ctx, 1, 1.25)
    assert np.array_equal(a @ b, posrep.positive_unipotent(ctx, 1, 1.75))

    rng = np.random.default_rng(12)
    v = posrep.random_positive_params(ctx, rng)[1]
    w = posrep.random_positive_params(ctx, rng)[1]
    assert ctx.in_cone(v + w)
    lhs = posrep.positive_unipotent(ctx, 2, v) @ posrep.positive_unipotent(ctx, 2, w)
    rhs = posrep.positive_unipotent(ctx, 2, v + w)
    assert np.abs(lhs - rhs).max() < 1e-14


def test_cone_violations_raise():
    ctx = posrep.so_pq_context(3, 4)
    with pytest.raises(ConeViolationError):
        posrep.positive_unipotent(ctx, 1, -0.2)
    with pytest.raises(ConeViolationError):
        posrep.positive_unipotent(ctx, 1, 0.0)
    bad = ctx.default_cone_vector()
    bad[0] = -1.0
    with pytest.raises(ConeViolationError):
        posrep.positive_unipotent(ctx, 2, bad)
    null = np.zeros(ctx.cone_dim)
    null[0] = 1.0  # first entry positive but q_J = 0
    with pytest.raises(ConeViolationError):
        posrep.positive_unipotent(ctx, 2, null)
    outside = posrep.positive_unipotent(ctx, 2, null, enforce_cone=False)
    assert np.abs(outside.T @ ctx.Q @ outside - ctx.Q).max() < 1e-12


def test_vector_guard():
    ctx = posrep.so_pq_context(3, 4)
    with pytest.raises(ConfigError):
        posrep.positive_unipotent(ctx, 2, np.ones(2))
    with pytest.raises(ConfigError):
        posrep.positive_unipotent(ctx, 3, 1.0)


def test_unit_triple_coefficients_are_p_minus_one():
    for p, q in PARITIES:
        triple = posrep.positive_triple(posrep.so_pq_context(p, q))
        for k in range(1, p - 1):
            assert abs(triple.coefficients[k] - (p - 1)) < 1e-12
            assert abs(triple.determinants[k] - (p - 1)) < 1e-10
            assert triple.margins[k] > 0


def test_random_triples_tie_the_two_routes_together():
    rng = np.random.default_rng(21)
    for p, q in ((3, 4), (4, 5)):
        ctx = posrep.so_pq_context(p, q)
        for _ in range(40):
            triple = posrep.positive_triple(ctx, posrep.random_positive_params(ctx, rng))
            for k in range(1, p - 1):
                coeff = triple.coefficients[k]
                assert abs(coeff - triple.coefficient_predictions[k]) < 1e-10
                assert abs(abs(coeff) - triple.determinants[k]) < 1e-10 * max(1.0, abs(coeff))
                assert triple.margins[k] > 0


def test_coefficients_scale_linearly_in_the_scalar_params():
    ctx = posrep.so_pq_context(4, 5)
    rng = np.random.default_rng(3)
    params = posrep.random_positive_params(ctx, rng)
    scaled = [2.0 * x if np.isscalar(x) or np.ndim(x) == 0 else x for x in params]
    t1 = posrep.positive_triple(ctx, params)
    t2 = posrep.positive_triple(ctx, scaled)
    for k in t1.coefficients:
        assert abs(t2.coefficients[k] - 2.0 * t1.coefficients[k]) < 1e-12


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000))
def test_triple_identity_property(seed):
    rng = np.random.default_rng(seed)
    ctx = posrep.so_pq_context(3, 4)
    triple = posrep.positive_triple(ctx, posrep.random_positive_params(ctx, rng))
    assert abs(triple.coefficients[1] - triple.coefficient_predictions[1]) < 1e-10
    assert triple.margins[1] > 0


def test_export_text_layout():
    ctx = posrep.so_pq_context(3, 4)
    u = posrep.positive_unipotent(ctx, 1, 1.0)
    text = ctx.export_text({"u1": u})
    lines = text.splitlines()
    assert lines[0] == "positivity v1"
    assert lines[1] == "signature 3 4"
    assert "matrix u1" in lines
    assert lines[-1] == "end"
