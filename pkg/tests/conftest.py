import pytest

from lmeec_sim.core import Node, Position, SimConfig


def make_nodes(coords, energy=2.0):
    return [Node(id=i, pos=Position(x, y), residual_energy=energy, initial_energy=energy) for i, (x, y) in enumerate(coords)]


@pytest.fixture
def cfg():
    return SimConfig()
