import numpy as np
import pytest

import bihlab as bl


@pytest.fixture(scope="session")
def cube5():
    g = bl.GridSpec((5, 5, 5), 1.0)
    return bl.build_domain(g, "full-box")


@pytest.fixture(scope="session")
def cube6():
    g = bl.GridSpec((6, 6, 6), 1.0)
    return bl.build_domain(g, "full-box")


@pytest.fixture(scope="session")
def cavity7():
    g = bl.GridSpec((7, 7, 7), 1.0)
    return bl.build_domain(g, "box-minus-box:3")


@pytest.fixture(scope="session")
def first_natural(cube5):
    part = bl.partition_boundary(cube5, "all-n")
    return bl.build_complex("first", cube5, part)


@pytest.fixture(scope="session")
def second_natural(cube5):
    part = bl.partition_boundary(cube5, "all-n")
    return bl.build_complex("second", cube5, part)


@pytest.fixture(scope="session")
def first_essential(cube5):
    part = bl.partition_boundary(cube5, "all-t")
    return bl.build_complex("first", cube5, part)


def rand(seed, n):
    return np.random.default_rng(seed).standard_normal(n)
