"""Session fixtures: representation families and a relaxed window policy."""

import pytest

from anosovlab import entropy, limitset, reps


@pytest.fixture(scope="session")
def fuchsian():
    return reps.fuchsian_genus2()


@pytest.fixture(scope="session")
def sym2(fuchsian):
    return reps.sym_power(fuchsian, 2)


@pytest.fixture(scope="session")
def sym4(fuchsian):
    return reps.sym_power(fuchsian, 4)


@pytest.fixture(scope="session")
def barbot(fuchsian):
    """SL2 block plus a trivial line: the weakly irreducible test family."""
    return reps.direct_sum(fuchsian, reps.trivial(fuchsian.spec, 1))


@pytest.fixture(scope="session")
def locus3():
    return reps.so_p_pminus1_fuchsian(3)


@pytest.fixture(scope="session")
def relaxed():
    # unit tests enumerate short balls; the production window would refuse
    return entropy.WindowPolicy(min_window=2.0, min_shells=2)


@pytest.fixture(scope="session")
def hitchin_cloud(sym2):
    return limitset.boundary_sample(sym2, 7)


@pytest.fixture(scope="session")
def barbot_cloud(barbot):
    return limitset.boundary_sample(barbot, 7)
