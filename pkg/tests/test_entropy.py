"""Exponent estimators: routes, lemma checks, refusals, frozen pins."""

import dataclasses

import numpy as np
import pytest

from anosovlab import entropy
from anosovlab.entropy import Functional, WindowPolicy, alpha, epsilon, min_of, omega, unstable_jacobian
from anosovlab.errors import ConfigError, InsufficientRangeError, NonpositiveFunctionalError

# deterministic single-thread pins at unit-test scale (relaxed window)
FU_ALPHA1_ML7 = 0.993389619601
FU_ALPHA1_ML7_SHELL = 0.996523323689


def test_functional_constructors():
    assert alpha(1, 3).coeffs == (1.0, -1.0, 0.0)
    assert epsilon(2, 4).coeffs == (0.0, 1.0, 0.0, 0.0)
    assert omega(2, 4).coeffs == (1.0, 1.0, 0.0, 0.0)
    assert unstable_jacobian(1, 3).coeffs == (1.0, -1.0, 0.0)
    combined = alpha(1, 3) + epsilon(1, 3)
    assert combined.coeffs == (2.0, -1.0, 0.0)
    assert combined.label == "alpha1+eps1"


def test_fuchsian_exponent_regression(fuchsian, relaxed):
    est = entropy.critical_exponent(fuchsian, alpha(1, 2), 7, policy=relaxed)
    assert abs(est.h_hat - FU_ALPHA1_ML7) < 1e-9
    assert abs(est.h_shell - FU_ALPHA1_ML7_SHELL) < 1e-9
    assert est.agree
    assert est.uncertainty > 0
    assert est.window[0] < est.window[1]
    assert any("upper limit" in note for note in est.assumptions)


def test_general_route_equals_ladder_route(sym2, relaxed):
    """Dropping the ladder metadata forces the per-word histogram route,
    which must land in the same bins and produce the same estimate."""
    direct = entropy.critical_exponent(sym2, alpha(1, 3), 6, policy=relaxed)
    meta = {k: v for k, v in sym2.meta.items() if k != "tau_ladder"}
    stripped = dataclasses.replace(sym2, meta=meta)
    generic = entropy.critical_exponent(stripped, alpha(1, 3), 6, policy=relaxed)
    assert abs(direct.h_hat - generic.h_hat) < 1e-9
    assert abs(direct.h_shell - generic.h_shell) < 1e-9


def test_exponent_scales_inversely_with_the_functional(sym2, relaxed):
    one = entropy.critical_exponent(sym2, alpha(1, 3), 6, policy=relaxed)
    double = entropy.critical_exponent(
        sym2, Functional((2.0, -2.0, 0.0), "2alpha1"), 6, policy=relaxed
    )
    assert abs(double.h_hat - one.h_hat / 2) < 1e-12


def test_min_check_and_sum_check(sym2, relaxed):
    mc = entropy.entropy_min_check(
        sym2, [alpha(1, 3), Functional((2.0, 0.0, -2.0), "2eps-spread")], 6, policy=relaxed
    )
    assert mc["ok"]
    assert mc["difference"] <= mc["combined_tolerance"]

    sc = entropy.entropy_sum_check(sym2, alpha(1, 3), epsilon(1, 3), 6, policy=relaxed)
    assert sc["ok"]
    # ladder functionals share one growth profile, so the harmonic-mean
    # bound is attained exactly
    assert abs(sc["slack"]) < 1e-9


def test_min_of_goes_through_the_general_route(sym2, relaxed):
    pointwise_min = min_of(alpha(1, 3), Functional((2.0, -2.0, 0.0), "2alpha1"))
    est = entropy.critical_exponent(sym2, pointwise_min, 6, policy=relaxed)
    single = entropy.critical_exponent(sym2, alpha(1, 3), 6, policy=relaxed)
    assert abs(est.h_hat - single.h_hat) < 1e-9


def test_nonpositive_functional_is_refused(sym2, relaxed):
    with pytest.raises(NonpositiveFunctionalError):
        entropy.critical_exponent(sym2, epsilon(3, 3), 6, policy=relaxed)


def test_dimension_mismatch_is_refused(sym2, relaxed):
    with pytest.raises(ConfigError):
        entropy.critical_exponent(sym2, alpha(1, 2), 6, policy=relaxed)


def test_default_window_refuses_short_enumerations(fuchsian):
    with pytest.raises(InsufficientRangeError) as err:
        entropy.critical_exponent(fuchsian, alpha(1, 2), 4)
    assert "e-folds" in str(err.value)
    assert "increase max_len" in str(err.value)


def test_affinity_closed_forms(fuchsian, barbot, relaxed):
    est_fu = entropy.affinity_exponent(fuchsian, 8, policy=relaxed)
    assert abs(est_fu.value - 1.0) < 0.05
    assert est_fu.piece == 2
    est_bar = entropy.affinity_exponent(barbot, 8, policy=relaxed)
    assert abs(est_bar.value - 1.5) < 0.05
    assert est_bar.piece == 3
    assert est_bar.as_dict()["h_aff"] == est_bar.value
    pieces = {row["piece"] for row in est_bar.per_piece}
    assert est_bar.piece in pieces


def test_affinity_log_term_matches_hand_formula():
    a = np.array([[1.0, 0.2, -1.2], [0.8, 0.0, -0.8]])
    s = 1.4
    term = entropy.affinity_log_term(a, 3, s)
    # piece 3 on s in [1, 2]: the full first gap plus the fractional part
    # (s - 1) of the top-to-third gap
    expected = -((a[:, 0] - a[:, 1]) + (s - 1.0) * (a[:, 0] - a[:, 2]))
    assert np.allclose(term, expected)
    with pytest.raises(ConfigError):
        entropy.affinity_log_term(a, 4, s)


def test_estimate_serialization_round_trip(fuchsian, relaxed):
    est = entropy.critical_exponent(fuchsian, alpha(1, 2), 6, policy=relaxed)
    payload = est.as_dict()
    assert payload["h_hat"] == est.h_hat
    assert payload["functional"] == "alpha1"
    rows = est.counting_rows()
    assert len(rows) == len(est.regression)
    assert all(len(r) == 3 for r in rows)
    assert len(est.shell_rows()) == len(est.shell_curve)
