import math
import random

import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from lmeec_sim.core import EnergyLedger, RadioEnergyModel, SimConfig, WeightParams, deploy, distance, rx_cost, tx_cost
from lmeec_sim.lmeec import (
    DIRECT_TO_BS,
    ChAnnouncement,
    ClusterSet,
    ch_announcement_weight,
    charge_control_traffic,
    elect_cluster_heads,
    election_threshold,
    form_clusters,
    make_announcements,
    node_weight,
    select_relay,
    setup_round,
)
from lmeec_sim.topology import UNREACHABLE, assign_layers, build_adjacency

from .conftest import make_nodes

HALF = WeightParams(alpha=0.5, beta=0.5, gamma=0.5, t0=0.5)
LITERAL = WeightParams(alpha=0.5, beta=0.5, gamma=0.5, t0=0.5, variant="literal")
RADIO = RadioEnergyModel()


def direct_weight(layer, deg, n, e_res, e_total, num_ch, a, b, g, literal):
    first = 1 / (a - layer) if literal else 1 / (layer - a)
    return first * deg / n + 1 / (b + layer) * e_res / e_total - g * (1 - 1 / (1 + num_ch))


def test_weight_examples():
    assert node_weight(1, 10, 100, 2.0, 2.0, 0, HALF) == pytest.approx(0.8667, abs=1e-4)
    assert node_weight(1, 10, 100, 2.0, 2.0, 0, LITERAL) == pytest.approx(0.4667, abs=1e-4)


@given(st.floats(0, 1), st.integers(1, 6), st.integers(0, 50))
def test_fresh_node_has_no_penalty(gamma, layer, deg):
    a = WeightParams(gamma=gamma)
    b = WeightParams(gamma=0.0)
    assert node_weight(layer, deg, 60, 1.3, 2.0, 0, a) == node_weight(layer, deg, 60, 1.3, 2.0, 0, b)


def test_weight_rejects_bad_inputs():
    with pytest.raises(ValueError):
        node_weight(0, 3, 10, 1, 2, 0, HALF)
    with pytest.raises(ValueError):
        node_weight(1, 3, 10, 1, 0, 0, HALF)


@given(st.floats(0.01, 0.99), st.integers(0, 100))
def test_penalty_increasing_and_bounded(gamma, k):
    p = WeightParams(gamma=gamma)
    penalty = [-(node_weight(1, 0, 10, 0, 2, c, p)) for c in (k, k + 1)]
    assert penalty[0] < penalty[1] <= gamma


@settings(max_examples=200)
@given(
    st.integers(1, 8), st.integers(0, 200), st.floats(0.01, 2), st.integers(0, 30),
    st.floats(0, 0.99), st.floats(0, 1), st.floats(0, 1),
)
def test_magnitude_monotone(layer, deg, e_res, num_ch, a, b, g):
    p = WeightParams(alpha=a, beta=b, gamma=max(g, 1e-3))
    w = node_weight(layer, deg, 300, e_res, 2.0, num_ch, p)
    assert node_weight(layer, deg + 1, 300, e_res, 2.0, num_ch, p) > w
    assert node_weight(layer, deg, 300, e_res * 1.01, 2.0, num_ch, p) > w
    assert node_weight(layer, deg, 300, e_res, 2.0, num_ch + 1, p) < w


def test_threshold():
    p = WeightParams(t0=0.5)
    assert election_threshold(1, p) == 0.5
    assert election_threshold(2, p) == 0.25
    assert all(election_threshold(k, p) > election_threshold(k + 1, p) for k in range(1, 20))


def test_announcement_weight():
    assert ch_announcement_weight(1.0, 5, 2) == pytest.approx(0.4)
    assert ch_announcement_weight(2.0, 1, 1) == 2.0
    assert ch_announcement_weight(1.3, 4, 6) == pytest.approx(2 * ch_announcement_weight(1.3, 4, 3))
    with pytest.raises(ValueError):
        ch_announcement_weight(1.0, 0, 1)


@given(st.floats(0.01, 2), st.floats(0.01, 2), st.integers(1, 50), st.integers(1, 50), st.integers(1, 8), st.integers(1, 8))
def test_announcement_monotone(e1, e2, d1, d2, l1, l2):
    e_lo, e_hi = sorted((e1, e2))
    assume(e_lo < e_hi)
    assert ch_announcement_weight(e_lo, d1, l1) < ch_announcement_weight(e_hi, d1, l1)
    if d1 != d2:
        lo, hi = sorted((d1, d2))
        assert ch_announcement_weight(e1, lo, l1) > ch_announcement_weight(e1, hi, l1)
    if l1 != l2:
        lo, hi = sorted((l1, l2))
        assert ch_announcement_weight(e1, d1, lo) < ch_announcement_weight(e1, d1, hi)


def test_elect_single_node():
    nodes = make_nodes([(55, 50), (60, 50)])
    nodes = nodes[:1]
    layers, adj = {0: 1}, {0: []}
    # deg 0 here, so weight = soc / (beta + 1) = 2/3 >= 0.5
    assert elect_cluster_heads(nodes, layers, adj, HALF, 100, 2.0) == {0}
    assert nodes[0].num_ch == 1


def test_elect_boundary_is_inclusive():
    nodes = make_nodes([(55, 50)], energy=1.0)
    p = WeightParams(alpha=0.5, beta=0.0, gamma=0.5, t0=0.5)
    # weight = 0 * ... + (1/1) * (1/2) - 0 = 0.5 == t0 / 1
    assert node_weight(1, 0, 10, 1.0, 2.0, 0, p) == election_threshold(1, p)
    assert elect_cluster_heads(nodes, {0: 1}, {0: []}, p, 10, 2.0) == {0}


def _instance(n, seed):
    cfg = SimConfig(n_nodes=n, seed=seed)
    nodes = deploy(cfg)
    adj = build_adjacency(nodes, cfg.radio_range)
    layers = assign_layers(adj, nodes, cfg.bs_pos, cfg.radio_range)
    return cfg, nodes, adj, layers


@pytest.mark.parametrize("params", [HALF, LITERAL, WeightParams(alpha=0.9, beta=0.2, gamma=0.3, t0=0.9)])
def test_election_equals_filter(params):
    cfg, nodes, adj, layers = _instance(200, 4)
    rnd = random.Random(1)
    for n in nodes:
        n.residual_energy = rnd.uniform(0.1, 2.0)
        n.num_ch = rnd.randrange(4)
    before = {n.id: n.num_ch for n in nodes}
    expected = {
        n.id for n in nodes
        if layers[n.id] is not UNREACHABLE
        and direct_weight(layers[n.id], len(adj[n.id]), 200, n.residual_energy, 2.0, n.num_ch,
                          params.alpha, params.beta, params.gamma, params.variant.value == "literal")
        >= params.t0 / layers[n.id]
    }
    got = elect_cluster_heads(nodes, layers, adj, params, 200, 2.0)
    assert got == expected
    assert all(n.num_ch == before[n.id] + (n.id in got) for n in nodes)


def test_layer_tie_break():
    ann = {0: ChAnnouncement(0, 0.4, 2), 1: ChAnnouncement(1, 0.4, 3)}
    adj = {0: [2], 1: [2], 2: [0, 1]}
    cs = form_clusters({0, 1}, ann, adj, {0: 2, 1: 3, 2: 2})
    assert cs.members == {0: [], 1: [2]}


def test_single_announcement_joined():
    ann = {5: ChAnnouncement(5, 0.01, 1)}
    cs = form_clusters({5}, ann, {5: [6], 6: [5]}, {5: 1, 6: 2})
    assert cs.members == {5: [6]}


def test_id_breaks_remaining_ties():
    ann = {3: ChAnnouncement(3, 0.4, 2), 7: ChAnnouncement(7, 0.4, 2)}
    cs = form_clusters({3, 7}, ann, {3: [9], 7: [9], 9: [3, 7]}, {3: 2, 7: 2, 9: 2})
    assert cs.members[3] == [9]


def test_orphan_promotes():
    cs = form_clusters(set(), {}, {0: [1], 1: [0]}, {0: 1, 1: 2})
    assert cs.members == {0: [], 1: []}
    assert cs.promoted == [0, 1]


def brute_force_membership(ch_set, announcements, adj, layers):
    out = {}
    for i in adj:
        if i in ch_set or layers[i] is UNREACHABLE:
            continue
        best = None
        for j in adj[i]:
            if j not in announcements:
                continue
            a = announcements[j]
            if best is None:
                best = a
                continue
            if a.p_ch > best.p_ch or (
                a.p_ch == best.p_ch and (a.layer > best.layer or (a.layer == best.layer and a.ch_id < best.ch_id))
            ):
                best = a
        out[i] = best.ch_id if best else i
    return out


@pytest.mark.parametrize("seed", range(10))
def test_membership_equals_argmax_oracle(seed):
    cfg, nodes, adj, layers = _instance(150, seed)
    rnd = random.Random(seed)
    for n in nodes:
        n.residual_energy = rnd.choice([0.5, 1.0, 1.5, 2.0])  # coarse values force weight ties
    ch_set = {i for i in adj if layers[i] is not UNREACHABLE and rnd.random() < 0.25}
    ann = make_announcements(ch_set, nodes, adj, layers)
    cs = form_clusters(ch_set, ann, adj, layers)
    got = {m: ch for ch, ms in cs.members.items() for m in ms}
    got.update({i: i for i in cs.promoted})
    assert got == brute_force_membership(ch_set, ann, adj, layers)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31), st.integers(-20, 20))
def test_scaling_weights_keeps_choice(seed, k):
    cfg, nodes, adj, layers = _instance(80, seed % 1000)
    rnd = random.Random(seed)
    ch_set = {i for i in adj if layers[i] is not UNREACHABLE and rnd.random() < 0.3}
    ann = make_announcements(ch_set, nodes, adj, layers)
    # power-of-two scale is exact in floating point, so ties survive scaling
    scaled = {c: a._replace(p_ch=a.p_ch * 2.0**k) for c, a in ann.items()}
    assert form_clusters(ch_set, ann, adj, layers).members == form_clusters(ch_set, scaled, adj, layers).members


@pytest.mark.parametrize("seed", range(5))
def test_partition(seed):
    cfg, nodes, adj, layers = _instance(120, seed)
    cs, _ = setup_round(nodes, adj, layers, cfg.weights, 120, 2.0)
    members = [m for ms in cs.members.values() for m in ms]
    assert len(members) == len(set(members))
    covered = set(members) | set(cs.members)
    reachable = {i for i, k in layers.items() if k is not UNREACHABLE}
    assert covered == reachable
    by_id = {n.id: n for n in nodes}
    for ch, ms in cs.members.items():
        assert all(distance(by_id[m].pos, by_id[ch].pos) <= cfg.radio_range for m in ms)


def test_relay_layer_one():
    cs = ClusterSet(members={0: []})
    assert select_relay(0, cs, {0: []}, {0: 1}, make_nodes([(50, 60)])) == DIRECT_TO_BS


def test_relay_prefers_energy():
    nodes = make_nodes([(50, 110), (45, 90), (55, 90), (50, 80)])
    nodes[1].residual_energy, nodes[2].residual_energy = 1.2, 1.5
    adj = build_adjacency(nodes, 25)
    layers = {0: 3, 1: 2, 2: 2, 3: 1}
    cs = ClusterSet(members={0: [], 1: [], 2: []})
    assert select_relay(0, cs, adj, layers, nodes) == 2


def test_relay_without_lower_head_goes_direct():
    nodes = make_nodes([(50, 110), (50, 90)])
    adj = build_adjacency(nodes, 25)
    cs = ClusterSet(members={0: []})
    assert select_relay(0, cs, adj, {0: 3, 1: 2}, nodes) == DIRECT_TO_BS


@pytest.mark.parametrize("seed", range(5))
def test_relay_chains_descend(seed):
    cfg, nodes, adj, layers = _instance(200, seed)
    cs, _ = setup_round(nodes, adj, layers, WeightParams(t0=0.9), 200, 2.0)
    max_layer = max(k for k in layers.values() if k is not UNREACHABLE)
    for ch in cs.members:
        cur, hops = ch, 0
        while cs.relay[cur] != DIRECT_TO_BS:
            nxt = cs.relay[cur]
            assert layers[nxt] < layers[cur]
            assert nxt in cs.members
            cur, hops = nxt, hops + 1
        assert hops < max_layer


def test_control_head_without_members():
    nodes = make_nodes([(50, 60)])
    ledger = EnergyLedger()
    charge_control_traffic(ClusterSet(members={0: []}, relay={0: DIRECT_TO_BS}), nodes, {}, RADIO, 200, 25, ledger)
    assert ledger.total == pytest.approx(2 * tx_cost(200, 25, RADIO), rel=1e-12)


def test_control_member_example():
    nodes = make_nodes([(50, 60), (50, 75)])
    cs = ClusterSet(members={0: [1]}, relay={0: DIRECT_TO_BS})
    charge_control_traffic(cs, nodes, {1: 3}, RADIO, 200, 25, EnergyLedger())
    # 3 * 1e-5 + tx(200, 15) + 1e-5, with tx(200, 15) = 1e-5 + 10e-12 * 200 * 225 = 1.045e-5
    assert 2.0 - nodes[1].residual_energy == pytest.approx(5.045e-5, rel=1e-9)


@pytest.mark.parametrize("seed", range(4))
def test_control_energy_enumeration(seed):
    cfg, nodes, adj, layers = _instance(50, seed)
    cs, heard = setup_round(nodes, adj, layers, WeightParams(t0=0.8), 50, 2.0)
    elected = set(cs.members) - set(cs.promoted)
    announcers = {c for c in elected if adj[c]}
    by_id = {n.id: n for n in nodes}
    messages = []  # (payer, joules)
    for c in elected:
        messages.append((c, tx_cost(200, 25, RADIO)))  # announcement
        messages.append((c, tx_cost(200, 25, RADIO)))  # schedule
        for m in cs.members[c]:
            for j in adj[m]:
                if j in announcers:
                    messages.append((m, rx_cost(200, RADIO)))
            messages.append((m, tx_cost(200, distance(by_id[m].pos, by_id[c].pos), RADIO)))
            messages.append((c, rx_cost(200, RADIO)))
            messages.append((m, rx_cost(200, RADIO)))
    ledger = EnergyLedger()
    charge_control_traffic(cs, nodes, heard, RADIO, 200, 25, ledger)
    assert ledger.total == pytest.approx(math.fsum(j for _, j in messages), rel=1e-12)
    for n in nodes:
        spent = math.fsum(j for p, j in messages if p == n.id)
        assert 2.0 - n.residual_energy == pytest.approx(spent, rel=1e-9, abs=1e-15)
