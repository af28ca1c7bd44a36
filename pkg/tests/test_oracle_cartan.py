"""Cartan projection against extended-precision singular values.

Two scopes.  Assembled matrices within double-precision conditioning get a
strict 1e-8 comparison.  Factored word products additionally get checked
against an exact mpmath product oracle, with the tolerance opened up to the
intrinsic forward-error envelope on entries where a word pinches (partial
products overshooting the final size lose that many digits in any fixed
precision route).
"""

import numpy as np

from anosovlab import cartan, groups

from _oracles import mp_log_singular_values, mp_word_log_singular_values, well_conditioned

EPS = np.finfo(float).eps


def test_assembled_matrices_match_mp_svd():
    rng = np.random.default_rng(5)
    worst = 0.0
    for d in range(2, 7):
        for _ in range(6):
            g = well_conditioned(rng, d, spread=8.0)
            diff = np.abs(cartan.cartan_project(g) - mp_log_singular_values(g))
            worst = max(worst, float(diff.max()))
    assert worst < 1e-8


def _reduced_word(spec, rng, length):
    for _ in range(500):
        raw = rng.integers(0, spec.n_letters, length)
        word = groups.reduce_word(spec, raw)
        if len(word.letters) == length:
            return np.array(word.letters)
    raise AssertionError("could not sample a reduced word")


def test_factored_words_match_mp_product_oracle(fuchsian, sym2):
    rng = np.random.default_rng(17)
    for rep in (fuchsian, sym2):
        letter_sv = np.linalg.svd(rep.gen_mats, compute_uv=False)
        letter_omega = np.cumsum(np.log(letter_sv), axis=1)
        spread = float(np.max(np.log(letter_sv[:, 0] / letter_sv[:, -1])))
        for length in (3, 6, 9):
            for _ in range(3):
                word = _reduced_word(rep.spec, rng, length)
                ours = cartan.cartan_project_words(rep.gen_mats, word[None, :])[0]
                dps = 40 + int(length * spread / np.log(10.0))
                ref = mp_word_log_singular_values(rep.gen_mats, word, dps)
                # overshoot of each partial sum of log singular values above
                # the final value bounds the unavoidable cancellation
                overshoot = letter_omega[word].sum(axis=0) - np.cumsum(ours)
                env = 1e-8 + 64 * EPS * np.exp(np.minimum(overshoot, 700.0))
                env_entry = env + np.concatenate(([1e-8], env[:-1]))
                diff = np.abs(ours - ref)
                assert (diff / env_entry).max() < 1.0
                tight = env_entry <= 2.1e-8
                if tight.any():
                    assert diff[tight].max() < 1e-8


def test_iwasawa_cocycle_additivity():
    rng = np.random.default_rng(23)
    worst = 0.0
    for _ in range(300):
        d = int(rng.integers(2, 6))
        k = int(rng.integers(1, d + 1))
        g = well_conditioned(rng, d)
        h = well_conditioned(rng, d)
        basis, _ = np.linalg.qr(rng.standard_normal((d, k)))
        lhs = cartan.iwasawa(g @ h, basis)
        rhs = cartan.iwasawa(g, h @ basis) + cartan.iwasawa(h, basis)
        worst = max(worst, abs(lhs - rhs))
    assert worst < 1e-8


def test_iwasawa_on_diagonal_matrix():
    g = np.diag([4.0, 1.0, 0.25])
    basis = np.eye(3)[:, :2]
    assert abs(cartan.iwasawa(g, basis) - np.log(4.0)) < 1e-12
    assert abs(cartan.iwasawa(np.eye(3), basis)) < 1e-14
