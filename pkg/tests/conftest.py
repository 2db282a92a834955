"""Shared fixtures: model instances and the cached contour families.

The shape enumeration behind the size-25 contour family is the one
expensive step (~20 s); session scope amortizes it across every test that
needs contours.
"""

import pytest

from quenchlab.contours import enumerate_contours_up_to
from quenchlab.models import make_ea, make_fa1b, make_rfim, make_rfpm


@pytest.fixture(scope="session")
def rfim2():
    return make_rfim(2)


@pytest.fixture(scope="session")
def rfim3():
    return make_rfim(3)


@pytest.fixture(scope="session")
def rfpm2():
    return make_rfpm(2, Q=3)


@pytest.fixture(scope="session")
def ea2():
    return make_ea(2, Jbar=1.0)


@pytest.fixture(scope="session")
def ea_af2():
    return make_ea(2, Jbar=-1.0)


@pytest.fixture(scope="session")
def fa1b2():
    return make_fa1b(2)


@pytest.fixture(scope="session")
def rfim_classes(rfim2):
    """One representative per translation class, support size <= 25."""
    return enumerate_contours_up_to(rfim2, 25, anchored=False)


@pytest.fixture(scope="session")
def rfim_anchored(rfim2):
    """All anchored contours with support size <= 25."""
    return enumerate_contours_up_to(rfim2, 25, anchored=True)


@pytest.fixture(scope="session")
def single_flip(rfim_classes):
    """The minimal contour: one flipped spin, 5x5 support, no holes."""
    return [c for c in rfim_classes[25] if c.label == 0 and not c.interiors][0]
