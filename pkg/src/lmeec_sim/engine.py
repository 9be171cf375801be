"""Round loop: configuration, cluster setup and data phases over a shared energy ledger."""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Callable

from . import leach, lmeec
from .core import (
    EnergyLedger,
    Node,
    Protocol,
    Role,
    RunUntil,
    SimConfig,
    aggregation_cost,
    deploy,
    deployment_hash,
    distance,
    drain,
    rx_cost,
    tx_cost,
)
from .lmeec import DIRECT_TO_BS, ClusterSet
from .topology import UNREACHABLE, assign_layers, build_adjacency, charge_configuration_energy


@dataclass
class RoundReport:
    round_index: int
    time_start: float
    alive_count: int
    unreachable_count: int
    ch_count: int
    energy_dissipated_this_round: float
    total_residual: float
    # head layer -> member count of each head at that layer
    cluster_sizes: dict[int, list[int]] = field(default_factory=dict)


@dataclass
class SimResult:
    config: SimConfig
    rounds: list[RoundReport]
    avg_dissipated_energy: float
    # per-node dissipation once sim_time is reached (or at the end, if earlier)
    avg_dissipated_at_cap: float
    total_dissipated: float
    n_reachable: int
    unreachable_at_start: int
    deployment_hash: str
    final_residuals: list[float] = field(default_factory=list)
    fnd: float | None = None
    hnd: float | None = None
    lnd: float | None = None


@dataclass
class SimState:
    nodes: list[Node]
    ledger: EnergyLedger = field(default_factory=EnergyLedger)
    leach_params: leach.LeachParams | None = None
    round_index: int = 0
    adj: dict[int, list[int]] | None = None
    layers: dict[int, int | None] | None = None
    # nodes that were reachable at start, mapped to the time they were lost
    tracked: set[int] = field(default_factory=set)
    lost_at: dict[int, float] = field(default_factory=dict)
    # last round's clusters and layers, for inspection
    clusters: ClusterSet | None = None


def initial_state(config: SimConfig) -> SimState:
    nodes = deploy(config)
    state = SimState(nodes=nodes)
    if config.protocol is Protocol.LEACH:
        state.leach_params = leach.LeachParams(p=config.leach_p)
    adj = build_adjacency(nodes, config.radio_range)
    layers = assign_layers(adj, nodes, config.bs_pos, config.radio_range)
    state.tracked = {i for i, layer in layers.items() if layer is not UNREACHABLE}
    return state


def _configure(state: SimState, config: SimConfig):
    alive = [n for n in state.nodes if n.alive]
    if state.adj is None or state.round_index % config.reconfigure_every == 0:
        adj = build_adjacency(alive, config.radio_range)
        layers = assign_layers(adj, alive, config.bs_pos, config.radio_range)
        charge_configuration_energy(
            alive, adj, layers, config.radio, config.ctrl_bits, config.radio_range, state.ledger
        )
    else:
        ids = {n.id for n in alive}
        adj = {i: [j for j in nb if j in ids] for i, nb in state.adj.items() if i in ids}
        layers = {i: layer for i, layer in state.layers.items() if i in ids}
    state.adj, state.layers = adj, layers
    return adj, layers


def per_frame_costs(clusters: ClusterSet, nodes: list[Node], config: SimConfig) -> dict[int, float]:
    """Energy each node spends in one TDMA frame."""
    radio, bits, bs = config.radio, config.data_bits, config.bs_pos
    by_id = {n.id: n for n in nodes}
    cost: dict[int, float] = defaultdict(float)
    rx = rx_cost(bits, radio)
    for ch, ms in clusters.members.items():
        head = by_id[ch]
        for m in ms:
            cost[m] += tx_cost(bits, distance(by_id[m].pos, head.pos), radio)
        cost[ch] += rx * len(ms) + aggregation_cost(bits, len(ms) + 1, radio)
        # the aggregate is forwarded hop by hop, never merged with others
        cur = ch
        while clusters.relay[cur] != DIRECT_TO_BS:
            nxt = clusters.relay[cur]
            cost[cur] += tx_cost(bits, distance(by_id[cur].pos, by_id[nxt].pos), radio)
            cost[nxt] += rx
            cur = nxt
        cost[cur] += tx_cost(bits, distance(by_id[cur].pos, bs), radio)
    for i in clusters.direct:
        cost[i] += tx_cost(bits, distance(by_id[i].pos, bs), radio)
    return cost


def data_phase(clusters: ClusterSet, nodes: list[Node], config: SimConfig, ledger: EnergyLedger) -> list[Node]:
    by_id = {n.id: n for n in nodes}
    frames = config.frames_per_round
    for i, c in sorted(per_frame_costs(clusters, nodes, config).items()):
        drain(by_id[i], frames * c, ledger)
    return nodes


def run_round(state: SimState, config: SimConfig) -> tuple[SimState, RoundReport]:
    ledger = state.ledger
    ledger.start_round()
    r = state.round_index
    for n in state.nodes:
        if n.alive:
            n.role = Role.MEMBER

    adj, layers = _configure(state, config)
    active = [n for n in state.nodes if n.alive and layers.get(n.id) is not UNREACHABLE]

    if config.protocol is Protocol.LMEEC:
        clusters, heard = lmeec.setup_round(
            active, adj, layers, config.weights, config.n_nodes, config.e_total
        )
    else:
        clusters, heard = leach.setup_round(active, state.leach_params, r, config.seed)
    for ch in clusters.members:
        state.nodes[ch].role = Role.CLUSTER_HEAD
    lmeec.charge_control_traffic(
        clusters, active, heard, config.radio, config.ctrl_bits, config.radio_range, ledger
    )
    data_phase(clusters, active, config, ledger)

    t_end = (r + 1) * config.round_duration
    for n in state.nodes:
        if n.alive and n.residual_energy <= 0:
            n.role = Role.DEAD
    # a tracked node is lost once it is dead or cut off from the base station
    alive_ids = {n.id for n in state.nodes if n.alive}
    still_linked = {
        i for i, layer in assign_layers(
            build_adjacency([state.nodes[i] for i in alive_ids], config.radio_range),
            state.nodes, config.bs_pos, config.radio_range,
        ).items() if layer is not UNREACHABLE
    } if alive_ids else set()
    for i in state.tracked:
        if i not in state.lost_at and i not in still_linked:
            state.lost_at[i] = t_end

    sizes: dict[int, list[int]] = defaultdict(list)
    for ch, ms in clusters.members.items():
        sizes[layers[ch]].append(len(ms))
    report = RoundReport(
        round_index=r,
        time_start=r * config.round_duration,
        alive_count=len(alive_ids),
        unreachable_count=sum(1 for n in state.nodes if n.alive and layers.get(n.id) is UNREACHABLE),
        ch_count=len(clusters.members),
        energy_dissipated_this_round=ledger.round_total,
        total_residual=sum(n.residual_energy for n in state.nodes if n.alive),
        cluster_sizes=dict(sorted(sizes.items())),
    )
    state.clusters = clusters
    state.round_index += 1
    return state, report


def _has_active(state: SimState) -> bool:
    return any(i not in state.lost_at for i in state.tracked)


def run_simulation(
    config: SimConfig,
    on_round: Callable[[SimState, RoundReport], None] | None = None,
) -> SimResult:
    state = initial_state(config)
    dep_hash = deployment_hash(state.nodes)
    cap_rounds = math.floor(config.sim_time / config.round_duration + 1e-9)
    max_rounds = config.max_rounds
    if config.run_until is RunUntil.TIME_CAP:
        max_rounds = min(max_rounds, cap_rounds)
    reports = []
    at_cap = None
    while state.round_index < max_rounds and _has_active(state):
        state, report = run_round(state, config)
        reports.append(report)
        if state.round_index == cap_rounds:
            at_cap = state.ledger.total
        if on_round is not None:
            on_round(state, report)

    n_reach = len(state.tracked)
    if at_cap is None:
        at_cap = state.ledger.total
    result = SimResult(
        config=config,
        rounds=reports,
        avg_dissipated_energy=state.ledger.total / n_reach if n_reach else 0.0,
        avg_dissipated_at_cap=at_cap / n_reach if n_reach else 0.0,
        total_dissipated=state.ledger.total,
        n_reachable=n_reach,
        unreachable_at_start=config.n_nodes - n_reach,
        deployment_hash=dep_hash,
        final_residuals=[n.residual_energy for n in state.nodes],
    )
    times = sorted(state.lost_at.values())
    if times:
        result.fnd = times[0]
        half = math.ceil(n_reach / 2)
        if len(times) >= half:
            result.hnd = times[half - 1]
        if len(times) == n_reach:
            result.lnd = times[-1]
    return result
