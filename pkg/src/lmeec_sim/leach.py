"""LEACH baseline: rotating random election, nearest-head clusters, one hop to the sink."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import Node, distance
from .lmeec import DIRECT_TO_BS, ClusterSet


@dataclass
class LeachParams:
    p: float = 0.05
    # node id -> epoch in which it last served
    served_epoch: dict[int, int] = field(default_factory=dict)

    def __post_init__(self):
        if not 0 < self.p < 1:
            raise ValueError("p must lie in (0, 1)")

    @property
    def epoch_length(self) -> int:
        return math.ceil(1 / self.p)

    def eligible(self, node_id: int, round_index: int) -> bool:
        return self.served_epoch.get(node_id) != round_index // self.epoch_length


def election_rng(seed: int, round_index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, round_index, 0x1EAC4]))


def leach_threshold(p: float, round_index: int) -> float:
    return p / (1 - p * (round_index % math.ceil(1 / p)))


def leach_elect(nodes: list[Node], params: LeachParams, round_index: int, rng: np.random.Generator) -> set[int]:
    """One uniform draw per alive node in id order; eligible nodes below the threshold serve."""
    threshold = leach_threshold(params.p, round_index)
    epoch = round_index // params.epoch_length
    elected = set()
    for n in sorted((n for n in nodes if n.alive), key=lambda n: n.id):
        u = rng.random()
        if params.eligible(n.id, round_index) and u < threshold:
            elected.add(n.id)
            params.served_epoch[n.id] = epoch
            n.num_ch += 1
    return elected


def leach_form_clusters(ch_set: set[int], nodes: list[Node]) -> ClusterSet:
    """Every alive non-head joins its geometrically nearest head (ties to lower id)."""
    alive = sorted((n for n in nodes if n.alive), key=lambda n: n.id)
    if not ch_set:
        return ClusterSet(direct=[n.id for n in alive])
    heads = [n for n in alive if n.id in ch_set]
    members: dict[int, list[int]] = {h.id: [] for h in heads}
    for n in alive:
        if n.id in ch_set:
            continue
        best = min(heads, key=lambda h: (distance(n.pos, h.pos), h.id))
        members[best.id].append(n.id)
    return ClusterSet(members=members, relay={h: DIRECT_TO_BS for h in members})


def setup_round(nodes, params: LeachParams, round_index: int, seed: int) -> tuple[ClusterSet, dict[int, int]]:
    """Election and formation. LEACH advertisements reach every node."""
    ch_set = leach_elect(nodes, params, round_index, election_rng(seed, round_index))
    clusters = leach_form_clusters(ch_set, nodes)
    heard = {m: len(ch_set) for ms in clusters.members.values() for m in ms}
    return clusters, heard
