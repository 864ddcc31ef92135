"""Integration test fixtures.

Integration tests run the acceptance-scale numerics and simulations and are
deselected by default (``-m 'not integration'``).
"""

import pytest

from tests.factories import LL_D_POLICIES, LL_DK_POLICIES, MIX_POLICIES


@pytest.fixture(params=LL_D_POLICIES + LL_DK_POLICIES + MIX_POLICIES, ids=lambda p: p.label)
def proved_policy(request):
    """Policies for which every assumption is known to hold."""
    return request.param
