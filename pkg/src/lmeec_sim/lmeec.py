"""Cluster-head self-election, cluster formation and relay selection."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

from .core import (
    EnergyLedger,
    Node,
    RadioEnergyModel,
    WeightParams,
    WeightVariant,
    distance,
    drain,
    rx_cost,
    tx_cost,
)
from .topology import UNREACHABLE

DIRECT_TO_BS = -1


class ChAnnouncement(NamedTuple):
    ch_id: int
    p_ch: float
    layer: int


@dataclass
class ClusterSet:
    """One round's clusters.

    ``members`` maps every cluster head to its sorted member ids, ``relay``
    maps it to the next-hop cluster head or ``DIRECT_TO_BS``. ``direct``
    lists unclustered nodes that send straight to the base station (LEACH
    rounds with no elected head). ``promoted`` lists orphans that made
    themselves heads.
    """

    members: dict[int, list[int]] = field(default_factory=dict)
    relay: dict[int, int] = field(default_factory=dict)
    direct: list[int] = field(default_factory=list)
    promoted: list[int] = field(default_factory=list)

    @property
    def heads(self) -> list[int]:
        return sorted(self.members)

    def head_of(self) -> dict[int, int]:
        return {m: ch for ch, ms in self.members.items() for m in ms}


def node_weight(layer, deg, n_total, e_res, e_total, num_ch, params: WeightParams) -> float:
    if layer < 1:
        raise ValueError("layer must be >= 1")
    if e_total <= 0:
        raise ValueError("e_total must be > 0")
    if params.variant is WeightVariant.LITERAL:
        degree_factor = 1.0 / (params.alpha - layer)
    else:
        degree_factor = 1.0 / (layer - params.alpha)
    energy_factor = 1.0 / (params.beta + layer)
    penalty = params.gamma * (1.0 - 1.0 / (1.0 + num_ch))
    return degree_factor * (deg / n_total) + energy_factor * (e_res / e_total) - penalty


def election_threshold(layer, params: WeightParams) -> float:
    return params.t0 / layer


def elect_cluster_heads(
    nodes: list[Node],
    layers: dict[int, int | None],
    adj: dict[int, list[int]],
    params: WeightParams,
    n_total: int,
    e_total: float,
) -> set[int]:
    """Self-election of every reachable node against its layer threshold.

    Weights are evaluated on the energy snapshot taken before anyone's
    ``num_ch`` is bumped; elected nodes get ``num_ch += 1``.
    """
    elected = set()
    for n in nodes:
        layer = layers.get(n.id)
        if not n.alive or layer is UNREACHABLE:
            continue
        w = node_weight(layer, len(adj[n.id]), n_total, n.residual_energy, e_total, n.num_ch, params)
        if w >= election_threshold(layer, params):
            elected.add(n.id)
    for n in nodes:
        if n.id in elected:
            n.num_ch += 1
    return elected


def ch_announcement_weight(e_res: float, deg: int, layer: int) -> float:
    if deg < 1:
        raise ValueError("an isolated node never announces")
    if layer < 1:
        raise ValueError("layer must be >= 1")
    return e_res / deg * layer


def make_announcements(ch_set, nodes, adj, layers) -> dict[int, ChAnnouncement]:
    """Announcements of heads that have at least one neighbor to hear them."""
    by_id = {n.id: n for n in nodes}
    out = {}
    for ch in sorted(ch_set):
        deg = len(adj[ch])
        if deg:
            out[ch] = ChAnnouncement(ch, ch_announcement_weight(by_id[ch].residual_energy, deg, layers[ch]), layers[ch])
    return out


def _preference(a: ChAnnouncement):
    # larger weight, then farther layer, then lower id
    return (a.p_ch, a.layer, -a.ch_id)


def form_clusters(
    ch_set: set[int],
    announcements: dict[int, ChAnnouncement],
    adj: dict[int, list[int]],
    layers: dict[int, int | None],
) -> ClusterSet:
    """Join the best heard head; nodes hearing none promote themselves."""
    members: dict[int, list[int]] = {ch: [] for ch in ch_set}
    promoted = []
    for i in sorted(adj):
        if i in ch_set or layers.get(i) is UNREACHABLE:
            continue
        heard = [announcements[j] for j in adj[i] if j in announcements]
        if heard:
            members[max(heard, key=_preference).ch_id].append(i)
        else:
            promoted.append(i)
            members[i] = []
    for ms in members.values():
        ms.sort()
    return ClusterSet(members=dict(sorted(members.items())), promoted=promoted)


def select_relay(ch_id: int, cluster_set: ClusterSet, adj, layers, nodes, energy=None) -> int:
    """Adjacent head with a strictly lower layer and the most energy left.

    ``energy`` optionally maps ids to residual energy, saving a rebuild
    from ``nodes`` on every call.
    """
    if layers[ch_id] == 1:
        return DIRECT_TO_BS
    if energy is None:
        energy = {n.id: n.residual_energy for n in nodes}
    best = DIRECT_TO_BS
    for j in adj[ch_id]:
        if j in cluster_set.members and layers[j] < layers[ch_id]:
            if best == DIRECT_TO_BS or energy[j] > energy[best] or (energy[j] == energy[best] and j < best):
                best = j
    return best


def charge_control_traffic(
    cluster_set: ClusterSet,
    nodes: list[Node],
    heard: dict[int, int],
    radio: RadioEnergyModel,
    ctrl_bits: int,
    radio_range: float,
    ledger: EnergyLedger,
) -> list[Node]:
    """Announcement, join and schedule messages of the formation phase.

    ``heard`` gives, per member, how many announcements it received.
    Promoted orphans spoke after everyone had chosen and pay nothing here.
    """
    by_id = {n.id: n for n in nodes}
    broadcast = tx_cost(ctrl_bits, radio_range, radio)
    hear = rx_cost(ctrl_bits, radio)
    promoted = set(cluster_set.promoted)
    for ch, ms in cluster_set.members.items():
        if ch in promoted:
            continue
        head = by_id[ch]
        drain(head, 2 * broadcast + len(ms) * hear, ledger)
        for m in ms:
            node = by_id[m]
            cost = heard[m] * hear + tx_cost(ctrl_bits, distance(node.pos, head.pos), radio) + hear
            drain(node, cost, ledger)
    return nodes


def setup_round(nodes, adj, layers, params: WeightParams, n_total: int, e_total: float) -> tuple[ClusterSet, dict[int, int]]:
    """Election, formation and relay choice for one round.

    Returns the clusters and the per-member count of announcements heard.
    """
    ch_set = elect_cluster_heads(nodes, layers, adj, params, n_total, e_total)
    ann = make_announcements(ch_set, nodes, adj, layers)
    clusters = form_clusters(ch_set, ann, adj, layers)
    by_id = {n.id: n for n in nodes}
    for i in clusters.promoted:
        by_id[i].num_ch += 1
    energy = {n.id: n.residual_energy for n in nodes}
    for ch in clusters.members:
        clusters.relay[ch] = select_relay(ch, clusters, adj, layers, nodes, energy)
    heard = {
        m: sum(1 for j in adj[m] if j in ann)
        for ms in clusters.members.values()
        for m in ms
    }
    return clusters, heard
