"""Representation families: exact ladders, functors, export, gap reports."""

import numpy as np
import pytest

from anosovlab import cartan, groups, reps
from anosovlab.errors import ConfigError

LADDERS = {
    "fuchsian": (0.5, -0.5),
    "sym2": (1.0, 0.0, -1.0),
    "sym4": (2.0, 1.0, 0.0, -1.0, -2.0),
    "barbot": (0.5, 0.0, -0.5),
}


def test_documented_ladders(fuchsian, sym2, sym4, barbot):
    for rep, key in ((fuchsian, "fuchsian"), (sym2, "sym2"), (sym4, "sym4"), (barbot, "barbot")):
        assert tuple(rep.meta["tau_ladder"]) == LADDERS[key]


def test_cartan_image_sits_on_the_ladder(fuchsian, sym2, sym4, barbot, locus3):
    """a(rho(w)) = ladder * tau(w) entrywise on every ball word."""
    words = [w.letters for n in (1, 2, 3) for w in groups.sphere(fuchsian.spec, n)]
    for rep in (fuchsian, sym2, sym4, barbot, locus3):
        ladder = np.array(rep.meta["tau_ladder"])
        worst = 0.0
        for letters in words[:: max(1, len(words) // 150)]:
            tau = 2.0 * cartan.cartan_project(fuchsian.of_word(letters))[0]
            a = cartan.cartan_project(rep.of_word(letters))
            worst = max(worst, np.abs(a - ladder * tau).max())
        assert worst < 1e-8


def test_tensor_and_exterior_ladder_arithmetic(fuchsian, sym4):
    prod = reps.tensor(fuchsian, fuchsian)
    assert tuple(prod.meta["tau_ladder"]) == (1.0, 0.0, 0.0, -1.0)
    wedge = reps.exterior_power(sym4, 2)
    ladder4 = np.array(sym4.meta["tau_ladder"])
    pair_sums = sorted(
        (ladder4[i] + ladder4[j] for i in range(5) for j in range(i + 1, 5)),
        reverse=True,
    )
    assert np.allclose(wedge.meta["tau_ladder"], pair_sums)


def test_dual_negates_and_reverses(fuchsian):
    rep = reps.direct_sum(reps.sym_power(fuchsian, 2), reps.trivial(fuchsian.spec, 1))
    ladder = np.array(rep.meta["tau_ladder"])
    co = reps.dual(rep)
    assert np.allclose(co.meta["tau_ladder"], sorted(-ladder, reverse=True))
    for letters in ([0], [4, 2], [1, 6, 0]):
        expected = np.linalg.inv(rep.of_word(letters)).T
        assert np.abs(co.of_word(letters) - expected).max() < 1e-9


def test_direct_sum_rejects_mismatched_anchors():
    regular = reps.fuchsian_genus2("regular")
    alternate = reps.fuchsian_genus2("alternate")
    with pytest.raises(ConfigError):
        reps.direct_sum(regular, alternate)


def test_two_hyperbolizations_are_marked_distinct():
    regular = reps.fuchsian_genus2("regular")
    alternate = reps.fuchsian_genus2("alternate")
    # relator closes in both
    rel = regular.spec.relator
    for rep in (regular, alternate):
        assert np.abs(groups.evaluate_word(rep.gen_mats, rel) - np.eye(2)).max() < 1e-10
    # but the marked traces differ, so these are different points of the
    # character variety
    diffs = [
        abs(np.trace(regular.of_word(w)) - np.trace(alternate.of_word(w)))
        for w in ([0], [2], [0, 2], [0, 4, 2])
    ]
    assert max(diffs) > 1e-3


def test_so_locus_preserves_its_form(locus3):
    form = locus3.form
    assert form is not None
    eig = np.linalg.eigvalsh(form)
    assert ((eig > 0).sum(), (eig < 0).sum()) in {(2, 3), (3, 2)}
    for letters in ([0], [2, 4], [1, 0, 6]):
        m = locus3.of_word(letters)
        assert np.abs(m.T @ form @ m - form).max() < 1e-9


def test_export_import_round_trip(sym2, tmp_path):
    text = sym2.export_text()
    back = reps.Representation.import_text(text)
    assert back.name == sym2.name
    assert np.array_equal(back.gen_mats, sym2.gen_mats)
    assert np.allclose(back.meta["tau_ladder"], sym2.meta["tau_ladder"])
    if sym2.form is not None:
        assert np.array_equal(back.form, sym2.form)
    assert back.export_text() == text


def test_gap_report_verdicts(fuchsian, sym2):
    report = reps.anosov_gap_report(sym2, max_len=4)
    assert report.verdicts == ["uniform", "uniform"]
    assert report.min_gap.shape == (4, 2)
    assert (report.min_gap[-1] > 0.1).all()

    # the tensor square has an exactly repeated middle singular value, so
    # the middle gap must be flagged as absent
    prod = reps.tensor(fuchsian, fuchsian)
    report = reps.anosov_gap_report(prod, max_len=4)
    assert report.verdicts[0] == "uniform"
    assert report.verdicts[1] == "none"
    assert report.verdicts[2] == "uniform"
    assert list(report.uniform_indices) == [1, 3]


def test_sym_power_dimension_guard(fuchsian):
    with pytest.raises(ConfigError):
        reps.sym_power(fuchsian, 0)
    with pytest.raises(ConfigError):
        reps.so_p_pminus1_fuchsian(1)
