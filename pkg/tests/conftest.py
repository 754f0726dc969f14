from __future__ import annotations

import pytest

from mdauction.lpmodel import AuctionSetting
from mdauction.typespace import Box, Uniform, build_grid, discretize_density


def make_setting(lower, upper, T, N=1, costs=None, spec=None) -> AuctionSetting:
    grid = build_grid(Box(tuple(lower), tuple(upper)), T)
    density = discretize_density(spec or Uniform(), grid)
    costs = tuple(costs) if costs is not None else (0.0,) * len(lower)
    return AuctionSetting(N, costs, grid, density)


@pytest.fixture
def setting1():
    return make_setting((2, 2), (3, 3), 20, N=2)
