"""Neighbor discovery and hop-count layering from the base station.

The Hello flood is computed directly as a breadth-first search: a node's
layer is its hop distance to the base station, where any node within radio
range of the base station is one hop away.
"""

from __future__ import annotations

from collections import deque

import numpy as np

from .core import EnergyLedger, Node, Position, RadioEnergyModel, drain, rx_cost, tx_cost

UNREACHABLE = None


def build_adjacency(nodes: list[Node], radio_range: float) -> dict[int, list[int]]:
    """Disk graph over the alive nodes; neighbor lists are sorted by id."""
    alive = sorted((n for n in nodes if n.alive), key=lambda n: n.id)
    if not alive:
        return {}
    ids = np.array([n.id for n in alive])
    xy = np.array([(n.pos.x, n.pos.y) for n in alive])
    diff = xy[:, None, :] - xy[None, :, :]
    d2 = np.einsum("ijk,ijk->ij", diff, diff)
    close = d2 <= radio_range * radio_range
    np.fill_diagonal(close, False)
    return {int(i): ids[row].tolist() for i, row in zip(ids, close)}


def assign_layers(
    adj: dict[int, list[int]],
    nodes: list[Node],
    bs_pos: Position,
    radio_range: float,
) -> dict[int, int | None]:
    """Hop count from the base station for every node in ``adj``.

    Nodes without a path get ``UNREACHABLE`` (None).
    """
    by_id = {n.id: n for n in nodes}
    r2 = radio_range * radio_range
    layers: dict[int, int | None] = {i: UNREACHABLE for i in adj}
    frontier = deque()
    for i in sorted(adj):
        p = by_id[i].pos
        if (p.x - bs_pos.x) ** 2 + (p.y - bs_pos.y) ** 2 <= r2:
            layers[i] = 1
            frontier.append(i)
    while frontier:
        i = frontier.popleft()
        nxt = layers[i] + 1
        for j in adj[i]:
            if layers[j] is UNREACHABLE:
                layers[j] = nxt
                frontier.append(j)
    return layers


def charge_configuration_energy(
    nodes: list[Node],
    adj: dict[int, list[int]],
    layers: dict[int, int | None],
    radio: RadioEnergyModel,
    ctrl_bits: int,
    radio_range: float,
    ledger: EnergyLedger,
) -> list[Node]:
    """Every reachable node rebroadcasts one Hello and hears each neighbor's."""
    broadcast = tx_cost(ctrl_bits, radio_range, radio)
    hear = rx_cost(ctrl_bits, radio)
    for n in nodes:
        if n.alive and layers.get(n.id) is not UNREACHABLE:
            drain(n, broadcast + len(adj[n.id]) * hear, ledger)
    return nodes
