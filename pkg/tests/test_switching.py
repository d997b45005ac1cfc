from collections import Counter
import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from biregular_mp import switching as sw
from biregular_mp.errors import DegenerateGraph, InvalidGraph
from biregular_mp.graphs import adjacency, seed_graph, validate_config

SMALL = [(2, 2, 1, 1), (3, 3, 2, 2), (4, 2, 1, 2), (4, 4, 2, 2), (6, 4, 2, 3)]


def _is_valid(g):
    A = adjacency(g)
    c = g.config
    return (A.sum(axis=1) == c.d_b).all() and (A.sum(axis=0) == c.d_w).all()


def test_edges_avoiding_orders():
    g = seed_graph(validate_config(3, 3, 2, 2))
    assert sw.edges_avoiding(g, "black", 0) == [(1, 0), (1, 2), (2, 1), (2, 2)]
    assert sw.edges_avoiding(g, "white", 0) == [(0, 1), (2, 1), (1, 2), (2, 2)]
    assert sw.incident_edge(g, "white", 2, 1) == (2, 2)


def test_proposal_and_indicator_I():
    g = seed_graph(validate_config(3, 3, 2, 2))
    prop = sw.proposal_at(g, "black", 0, 0, 0, 2)
    assert prop.edges() == ((0, 0), (1, 0), (2, 1))
    assert sw.indicator_I(prop) == 0  # white 0 repeated
    prop = sw.proposal_at(g, "black", 0, 0, 1, 2)
    assert prop.edges() == ((0, 0), (1, 2), (2, 1))
    assert sw.indicator_I(prop) == 1
    with pytest.raises(InvalidGraph):
        sw.proposal_at(g, "black", 0, 0, 1, 1)
    with pytest.raises(InvalidGraph):
        sw.proposal_at(g, "black", 3, 0, 0, 1)


def test_replacements_on_six_cycle():
    g = seed_graph(validate_config(3, 3, 2, 2))
    prop = sw.proposal_at(g, "black", 0, 0, 1, 2)
    # S = (0,0),(1,2),(2,1); (2,2) and (0,1) already lie in E minus S
    opts = sw.replacement_matchings(g, prop)
    assert opts == [((0, 2), (1, 1), (2, 0))]
    for o in opts:
        out = sw._replace_edges(g, prop.edges(), o)
        assert _is_valid(out)


@given(st.sampled_from(SMALL), st.integers(0, 2**32 - 1))
@settings(max_examples=40, deadline=None)
def test_replacements_match_brute_force(shape, seed):
    cfg = validate_config(*shape)
    g = sw.run_chain(cfg, 100, seed)
    K = cfg.n_edges - cfg.d_b
    if K < 2:
        return
    prop = sw.draw_configuration(g, "black", 0, 0, seed)
    S = set(prop.edges())
    rest = g.edge_set() - S
    expected = set()
    if sw.indicator_I(prop):
        bs = sorted({b for b, _ in S})
        ws = sorted({w for _, w in S})
        for perm in itertools.permutations(ws):
            new = set(zip(bs, perm))
            if new != S and not new & rest:
                expected.add(frozenset(new))
    assert {frozenset(o) for o in sw.replacement_matchings(g, prop)} == expected


def test_degenerate_draw():
    g = seed_graph(validate_config(2, 2, 1, 1))
    with pytest.raises(DegenerateGraph):
        sw.draw_configuration(g, "black", 0, 0, 1)


@given(st.sampled_from(SMALL), st.integers(0, 2**32 - 1))
@settings(max_examples=30, deadline=None)
def test_draw_configuration_avoids_vertex(shape, seed):
    cfg = validate_config(*shape)
    g = sw.run_chain(cfg, 50, seed)
    if cfg.n_edges - cfg.d_b < 2:
        return
    rng = np.random.default_rng(seed)
    prop = sw.draw_configuration(g, "black", 0, 0, rng)
    assert prop.p != prop.q
    assert prop.p[0] != 0 and prop.q[0] != 0
    assert prop.e == (0, g.black_adj[0][0])


@given(st.sampled_from(SMALL), st.integers(0, 2**32 - 1))
@settings(max_examples=30, deadline=None)
def test_moves_preserve_biregularity(shape, seed):
    cfg = validate_config(*shape)
    rng = np.random.default_rng(seed)
    g = seed_graph(cfg)
    for _ in range(20):
        g = sw.step_from_word(g, int(rng.integers(2**63)) * 2 + 1, "mixed")
        assert _is_valid(g)
    if cfg.n_edges - cfg.d_b >= 2:
        out = sw.apply_global_switching(g, "black", 0, rng)
        assert _is_valid(out)


def _prop(color, v, mu, e, p, q):
    return sw.SwitchProposal(color, v, mu, e, p, q)


def test_indicators_J_h_active_set():
    # black centre 0 with neighbours 0 and 1
    a = _prop("black", 0, 0, (0, 0), (1, 2), (2, 3))
    b = _prop("black", 0, 1, (0, 1), (3, 4), (4, 5))
    assert sw.indicator_J([a, b], 0) == 1 and sw.indicator_J([a, b], 1) == 1
    assert sw.active_set([a, b]).W == {0, 1}
    assert sw.indicator_h([a, b], 0) == 1
    # second component reuses white 0, the neighbour of the first
    c = _prop("black", 0, 1, (0, 1), (3, 0), (4, 5))
    assert sw.indicator_J([a, c], 0) == 0
    assert sw.indicator_h([a, c], 0) == 0
    assert sw.indicator_h([a, c], 0, literal=True) == 1
    assert sw.active_set([a, c]).W == set()


def test_global_switching_details():
    cfg = validate_config(6, 6, 2, 2)
    g = sw.run_chain(cfg, 500, 3)
    out, props, W = sw.apply_global_switching(g, "white", 1, 11, return_details=True)
    assert len(props) == 2
    assert W.W <= {0, 1}
    assert _is_valid(out)


def test_double_swap():
    g = seed_graph(validate_config(3, 3, 2, 2))
    assert sw.apply_double_swap(g, (0, 0), (1, 2)) is g  # (1,0) already present
    out = sw.apply_double_swap(g, (0, 0), (2, 2))
    assert out.black_adj == ((1, 2), (0, 2), (0, 1))
    assert sw.apply_double_swap(g, (0, 0), (1, 0)) is g  # same white
    assert sw.apply_double_swap(g, (0, 0), (0, 1)) is g  # same black


@pytest.mark.parametrize("shape", [(2, 2, 1, 1), (3, 3, 2, 2), (6, 4, 2, 3), (40, 20, 3, 6), (12, 12, 3, 3)])
@pytest.mark.parametrize("kernel", ["mixed", "switching"])
def test_compiled_kernel_matches_reference(shape, kernel):
    cfg = validate_config(*shape)
    words = np.random.default_rng(sum(shape)).bit_generator.random_raw(1500)
    g = seed_graph(cfg)
    for w in words:
        g = sw.step_from_word(g, int(w), kernel)
    assert sw.run_words(seed_graph(cfg), words, kernel) == g


def test_chain_determinism_and_streams():
    cfg = validate_config(6, 4, 2, 3)
    assert sw.run_chain(cfg, 300, 5) == sw.run_chain(cfg, 300, 5)
    a = sw.sample_graphs(cfg, 4, 300, 9)
    b = sw.sample_graphs(cfg, 4, 300, 9)
    assert a == b
    with pytest.raises(ValueError):
        sw.run_chain(cfg, -1, 0)
    with pytest.raises(ValueError):
        sw.run_chain(cfg, 1, None)


def test_chunked_stream_equals_single_pass():
    cfg = validate_config(6, 4, 2, 3)
    steps = sw._CHUNK + 17
    words = np.random.Generator(np.random.PCG64(np.random.SeedSequence(4))).bit_generator.random_raw(steps)
    assert sw.run_chain(cfg, steps, 4) == sw.run_words(seed_graph(cfg), words)


@pytest.mark.parametrize("shape", [(2, 2, 1, 1), (3, 3, 2, 2), (4, 2, 1, 2), (3, 3, 1, 1)])
@pytest.mark.parametrize("kernel", ["mixed", "switching"])
def test_exact_kernel_is_symmetric_stochastic(shape, kernel):
    omega, P = sw.transition_matrix(validate_config(*shape), kernel)
    n = len(omega)
    assert all(sum(row) == 1 for row in P)
    assert all(P[i][j] == P[j][i] for i in range(n) for j in range(n))


@pytest.mark.parametrize("shape", [(2, 2, 1, 1), (3, 3, 2, 2), (4, 2, 1, 2), (3, 3, 1, 1)])
def test_mixed_kernel_irreducible(shape):
    _, P = sw.transition_matrix(validate_config(*shape), "mixed")
    assert len(sw.communicating_classes(P)) == 1


def test_switching_kernel_reducible_on_tiny_configs():
    _, P = sw.transition_matrix(validate_config(2, 2, 1, 1), "switching")
    assert P == [[1, 0], [0, 1]]
    omega, P = sw.transition_matrix(validate_config(3, 3, 2, 2), "switching")
    classes = sw.communicating_classes(P)
    assert sorted(len(c) for c in classes) == [3, 3]


def test_exact_kernel_matches_word_decoding():
    # empirical one-step frequencies from the word decoder vs the exact kernel
    cfg = validate_config(3, 3, 2, 2)
    omega, P = sw.transition_matrix(cfg)
    index = {g.black_adj: k for k, g in enumerate(omega)}
    start = omega[0]
    words = np.random.default_rng(0).bit_generator.random_raw(40000)
    counts = Counter(index[sw.step_from_word(start, int(w)).black_adj] for w in words)
    for j in range(len(omega)):
        assert abs(counts[j] / len(words) - float(P[0][j])) < 0.01


def test_total_variation():
    assert sw.total_variation(Counter({0: 5, 1: 5}), 2) == 0
    assert sw.total_variation(Counter({0: 10}), 2) == pytest.approx(0.5)
    assert sw.total_variation(Counter({0: 3, 1: 1}), 4) == pytest.approx(0.5)


def test_uniformity_report_small():
    rep = sw.uniformity_report(validate_config(3, 3, 2, 2), 200, 3000, 1)
    assert rep.oracle_size == 6
    assert rep.tv_distance < 0.05
    assert rep.pq_tv_avoiding < 0.1
    assert rep.pq_tv_all_edges > rep.pq_tv_avoiding  # edges at the vertex are never drawn
    assert rep.csv_row()[0] == "3-3-2-2"
