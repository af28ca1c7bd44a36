"""Box-counting estimator against sets of known dimension."""

import numpy as np
import pytest

from anosovlab import limitset
from anosovlab.errors import InsufficientRangeError

from _oracles import cantor_points

CANTOR_DIM = np.log(2) / np.log(3)


def test_cantor_set_dimension():
    est = limitset.box_dimension(cantor_points(14))
    assert abs(est.value - CANTOR_DIM) < 0.05


def test_circle_dimension():
    theta = np.sort(np.random.default_rng(0).uniform(0, 2 * np.pi, 40_000))
    pts = np.stack([np.cos(theta), np.sin(theta)], axis=1)
    est = limitset.box_dimension(pts)
    assert abs(est.value - 1.0) < 0.05
    assert est.stderr < 0.05
    assert est.n_points == 40_000


def test_too_few_points_refused():
    pts = np.random.default_rng(1).uniform(size=(80, 2))
    with pytest.raises(InsufficientRangeError):
        limitset.box_dimension(pts)
