"""Local and global switchings and the Markov chain they generate.

A local switching at a vertex ``v`` along label ``mu`` takes the edge
``e = (v, v_mu)`` together with two further edges ``p, q`` that avoid ``v``
and, when the three edges span six distinct vertices, replaces this
perfect matching by another one on the same six vertices that keeps the
graph simple.

Random chain steps are driven by one uint64 word each (see
:func:`step_from_word`); the compiled kernel in ``_kernels`` decodes words
identically, which makes the two code paths bit-for-bit comparable.
"""
from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Literal

import numpy as np

from . import _kernels
from .errors import DegenerateGraph, InvalidGraph
from .graphs import BiregularGraph, GraphConfig, enumerate_graphs, seed_graph
from .rng import as_generator, spawn_generators

Color = Literal["black", "white"]
Edge = tuple[int, int]  # (black endpoint, white endpoint)
Kernel = Literal["switching", "mixed"]

_PERMS = [p for p in itertools.permutations(range(3)) if p != (0, 1, 2)]
_MODES = {"switching": _kernels.MODE_SWITCHING, "mixed": _kernels.MODE_MIXED}
_CHUNK = 1 << 16


def default_chain_steps(config: GraphConfig) -> int:
    return 20 * config.n_edges


@dataclass(frozen=True)
class SwitchProposal:
    color: Color
    v: int
    mu: int
    e: Edge
    p: Edge
    q: Edge

    def edges(self) -> tuple[Edge, Edge, Edge]:
        return (self.e, self.p, self.q)

    def vertices(self) -> frozenset[tuple[str, int]]:
        out = set()
        for b, w in self.edges():
            out.add(("b", b))
            out.add(("w", w))
        return frozenset(out)

    @property
    def center(self) -> tuple[str, int]:
        return ("b" if self.color == "black" else "w", self.v)

    @property
    def neighbour(self) -> tuple[str, int]:
        """The endpoint ``v_mu`` of ``e`` opposite to ``v``."""
        b, w = self.e
        return ("w", w) if self.color == "black" else ("b", b)


@dataclass(frozen=True)
class ActiveSet:
    W: frozenset[int]


def degree_of(config: GraphConfig, color: Color) -> int:
    return config.d_b if color == "black" else config.d_w


def incident_edge(graph: BiregularGraph, color: Color, v: int, mu: int) -> Edge:
    if color == "black":
        return (v, graph.black_adj[v][mu])
    return (graph.white_adj[v][mu], v)


def edges_avoiding(graph: BiregularGraph, color: Color, v: int) -> list[Edge]:
    """Edges not containing ``v``, listed in ``color``-major order."""
    if color == "black":
        return [(b, w) for b, nbrs in enumerate(graph.black_adj) if b != v for w in nbrs]
    return [(b, w) for w, nbrs in enumerate(graph.white_adj) if w != v for b in nbrs]


def _check_vertex(graph: BiregularGraph, color: Color, v: int, mu: int | None = None) -> None:
    cfg = graph.config
    n = cfg.M if color == "black" else cfg.N
    if color not in ("black", "white") or not 0 <= v < n:
        raise InvalidGraph(f"no {color} vertex {v}")
    if mu is not None and not 0 <= mu < degree_of(cfg, color):
        raise InvalidGraph(f"edge label {mu} out of range at {color} vertex {v}")


def proposal_at(graph: BiregularGraph, color: Color, v: int, mu: int, i: int, j: int) -> SwitchProposal:
    """Proposal using the ``i``-th and ``j``-th edges avoiding ``v``."""
    _check_vertex(graph, color, v, mu)
    avoid = edges_avoiding(graph, color, v)
    if i == j:
        raise InvalidGraph("p and q must be distinct edges")
    return SwitchProposal(color, v, mu, incident_edge(graph, color, v, mu), avoid[i], avoid[j])


def draw_configuration(graph: BiregularGraph, color: Color, v: int, mu: int, rng) -> SwitchProposal:
    """Draw ``(p, q)`` uniformly without replacement from the edges avoiding ``v``."""
    _check_vertex(graph, color, v, mu)
    rng = as_generator(rng)
    K = graph.config.n_edges - degree_of(graph.config, color)
    if K < 2:
        raise DegenerateGraph(f"only {K} edge(s) avoid {color} vertex {v}")
    i, j = rng.choice(K, size=2, replace=False)
    return proposal_at(graph, color, v, mu, int(i), int(j))


def draw_configuration_vector(graph: BiregularGraph, color: Color, v: int, rng) -> list[SwitchProposal]:
    rng = as_generator(rng)
    return [draw_configuration(graph, color, v, mu, rng) for mu in range(degree_of(graph.config, color))]


def indicator_I(proposal: SwitchProposal) -> int:
    return int(len(proposal.vertices()) == 6)


def indicator_J(proposals: list[SwitchProposal], mu: int) -> int:
    own = proposals[mu].vertices()
    centre = {proposals[mu].center}
    for nu, other in enumerate(proposals):
        if nu != mu and own & other.vertices() != centre:
            return 0
    return 1


def indicator_h(proposals: list[SwitchProposal], mu: int, literal: bool = False) -> int:
    """Indicator that the neighbour ``v_mu`` lies in no other component.

    With ``literal=True`` the factors are ``1(v_mu in [S_mu'])`` instead,
    i.e. the product as typeset rather than the complement of the
    exceptional event it is meant to detect.
    """
    nb = proposals[mu].neighbour
    for nu, other in enumerate(proposals):
        if nu == mu:
            continue
        inside = nb in other.vertices()
        if inside != literal:
            return 0
    return 1


def active_set(proposals: list[SwitchProposal]) -> ActiveSet:
    return ActiveSet(frozenset(
        mu for mu in range(len(proposals))
        if indicator_I(proposals[mu]) and indicator_J(proposals, mu)
    ))


def replacement_matchings(graph: BiregularGraph, proposal: SwitchProposal) -> list[tuple[Edge, Edge, Edge]]:
    """Perfect matchings on ``[S]`` other than ``S`` that keep ``E`` simple."""
    if not indicator_I(proposal):
        return []
    bs = [b for b, _ in proposal.edges()]
    ws = [w for _, w in proposal.edges()]
    out = []
    for perm in _PERMS:
        new = tuple((bs[t], ws[perm[t]]) for t in range(3))
        if all(perm[t] == t or not graph.has_edge(*new[t]) for t in range(3)):
            out.append(new)
    return out


def _replace_edges(graph: BiregularGraph, removed, added) -> BiregularGraph:
    rows = [set(r) for r in graph.black_adj]
    for b, w in removed:
        rows[b].remove(w)
    for b, w in added:
        if w in rows[b]:
            raise InvalidGraph(f"edge {(b, w)} would be doubled")
        rows[b].add(w)
    return BiregularGraph(graph.config, tuple(tuple(sorted(r)) for r in rows))


def apply_local_switching(graph: BiregularGraph, proposal: SwitchProposal, rng) -> BiregularGraph:
    """Uniform admissible replacement; identity when ``I = 0`` or none exists."""
    options = replacement_matchings(graph, proposal)
    if not options:
        return graph
    choice = int(as_generator(rng).integers(len(options)))
    return _replace_edges(graph, proposal.edges(), options[choice])


def apply_global_switching(graph: BiregularGraph, color: Color, v: int, rng, return_details: bool = False):
    """Composite of the local switchings over the active set ``W``.

    Components in ``W`` meet only at ``v``, so their replacements touch
    disjoint edge sets and are computed against the original graph.
    """
    _check_vertex(graph, color, v)
    rng = as_generator(rng)
    proposals = draw_configuration_vector(graph, color, v, rng)
    W = active_set(proposals)
    removed, added = [], []
    for mu in sorted(W.W):
        options = replacement_matchings(graph, proposals[mu])
        if options:
            removed.extend(proposals[mu].edges())
            added.extend(options[int(rng.integers(len(options)))])
    out = _replace_edges(graph, removed, added) if removed else graph
    if return_details:
        return out, proposals, W
    return out


def apply_double_swap(graph: BiregularGraph, p: Edge, q: Edge) -> BiregularGraph:
    """Swap ``(a,x),(b,y) -> (a,y),(b,x)``; identity if that breaks simplicity."""
    (a, x), (b, y) = p, q
    if a == b or x == y or graph.has_edge(a, y) or graph.has_edge(b, x):
        return graph
    return _replace_edges(graph, [p, q], [(a, y), (b, x)])


# -- word-driven chain ------------------------------------------------------

_MASK64 = (1 << 64) - 1


def _take(word: int, r: int) -> tuple[int, int]:
    prod = word * r
    return prod >> 64, prod & _MASK64


def step_from_word(graph: BiregularGraph, word: int, kernel: Kernel = "mixed") -> BiregularGraph:
    """One chain move, decoding ``word`` exactly as the compiled kernel does.

    ``mixed``: a first binary draw picks a double-edge swap (0) or a local
    switching (1).  A local switching draws, in order, a uniform vertex of
    ``V_b ∪ V_w``, a label, and an ordered pair of distinct edges avoiding
    the vertex; a final draw selects the replacement matching.
    """
    cfg = graph.config
    word = int(word)
    E = cfg.n_edges
    if kernel == "mixed":
        coin, word = _take(word, 2)
        if coin == 0:
            if E < 2:
                return graph
            i, word = _take(word, E)
            j, word = _take(word, E - 1)
            j += j >= i
            edges = graph.edges()
            return apply_double_swap(graph, edges[i], edges[j])
    elif kernel != "switching":
        raise ValueError(f"unknown kernel {kernel!r}")
    g, word = _take(word, cfg.n_vertices)
    color: Color = "black" if g < cfg.M else "white"
    v = g if g < cfg.M else g - cfg.M
    deg = degree_of(cfg, color)
    mu, word = _take(word, deg)
    K = E - deg
    if K < 2:
        return graph
    i, word = _take(word, K)
    j, word = _take(word, K - 1)
    j += j >= i
    prop = proposal_at(graph, color, v, mu, i, j)
    options = replacement_matchings(graph, prop)
    if not options:
        return graph
    choice, _ = _take(word, len(options))
    return _replace_edges(graph, prop.edges(), options[choice])


class _State:
    """Mutable array form of a graph, for the compiled kernel."""

    def __init__(self, graph: BiregularGraph):
        cfg = graph.config
        self.config = cfg
        self.black = np.array(graph.black_adj, dtype=np.int64).reshape(cfg.M, cfg.d_b)
        self.white = np.array(graph.white_adj, dtype=np.int64).reshape(cfg.N, cfg.d_w)
        self.A = np.zeros((cfg.M, cfg.N), dtype=np.uint8)
        np.put_along_axis(self.A, self.black, 1, axis=1)

    def copy(self) -> "_State":
        dup = _State.__new__(_State)
        dup.config = self.config
        dup.black, dup.white, dup.A = self.black.copy(), self.white.copy(), self.A.copy()
        return dup

    def run(self, words: np.ndarray, kernel: Kernel) -> int:
        cfg = self.config
        return int(_kernels.run_words(
            self.black, self.white, self.A, np.ascontiguousarray(words, dtype=np.uint64),
            _MODES[kernel], cfg.M, cfg.N, cfg.d_b, cfg.d_w,
        ))

    def to_graph(self) -> BiregularGraph:
        return BiregularGraph(self.config, tuple(tuple(int(w) for w in r) for r in self.black))

    def key(self) -> bytes:
        return self.black.tobytes()


def run_words(graph: BiregularGraph, words, kernel: Kernel = "mixed") -> BiregularGraph:
    state = _State(graph)
    state.run(np.asarray(words, dtype=np.uint64), kernel)
    return state.to_graph()


def _advance(state: _State, steps: int, rng: np.random.Generator, kernel: Kernel) -> None:
    if kernel not in _MODES:
        raise ValueError(f"unknown kernel {kernel!r}")
    done = 0
    while done < steps:
        n = min(_CHUNK, steps - done)
        state.run(rng.bit_generator.random_raw(n), kernel)
        done += n


def run_chain(config: GraphConfig, steps: int, rng, kernel: Kernel = "mixed",
              start: BiregularGraph | None = None) -> BiregularGraph:
    """Run ``steps`` moves from ``seed_graph(config)`` (or ``start``).

    ``kernel="switching"`` uses only local switchings.  The default
    ``"mixed"`` interleaves them with double-edge swaps with probability
    1/2 each; both moves have symmetric kernels, and the swaps make the
    chain irreducible on small configurations where the switchings alone
    are not.
    """
    if steps < 0:
        raise ValueError("steps must be >= 0")
    rng = as_generator(rng)
    state = _State(start if start is not None else seed_graph(config))
    _advance(state, steps, rng, kernel)
    return state.to_graph()


def sample_graphs(config: GraphConfig, samples: int, steps: int | None, seed, kernel: Kernel = "mixed"):
    """Independent chains, one spawned stream per sample."""
    steps = default_chain_steps(config) if steps is None else steps
    return [run_chain(config, steps, g, kernel) for g in spawn_generators(seed, samples)]


# -- exact kernel and uniformity diagnostics -------------------------------

def _key(graph: BiregularGraph):
    return graph.black_adj


def transition_matrix(config: GraphConfig, kernel: Kernel = "mixed") -> tuple[list[BiregularGraph], list[list[Fraction]]]:
    """Exact one-step kernel over the enumerated state space."""
    omega = enumerate_graphs(config)
    index = {_key(g): k for k, g in enumerate(omega)}
    n = len(omega)
    P = [[Fraction(0)] * n for _ in range(n)]
    E = config.n_edges
    w_switch = Fraction(1, 2) if kernel == "mixed" else Fraction(1)
    for a, graph in enumerate(omega):
        if kernel == "mixed":
            if E < 2:
                P[a][a] += Fraction(1, 2)
            else:
                edges = graph.edges()
                pw = Fraction(1, 2 * E * (E - 1))
                for i, j in itertools.permutations(range(E), 2):
                    P[a][index[_key(apply_double_swap(graph, edges[i], edges[j]))]] += pw
        for g in range(config.n_vertices):
            color: Color = "black" if g < config.M else "white"
            v = g if g < config.M else g - config.M
            deg = degree_of(config, color)
            K = E - deg
            if K < 2:
                P[a][a] += w_switch / config.n_vertices
                continue
            base = w_switch / (config.n_vertices * deg * K * (K - 1))
            for mu in range(deg):
                for i, j in itertools.permutations(range(K), 2):
                    prop = proposal_at(graph, color, v, mu, i, j)
                    options = replacement_matchings(graph, prop)
                    if not options:
                        P[a][a] += base
                        continue
                    for opt in options:
                        dest = _replace_edges(graph, prop.edges(), opt)
                        P[a][index[_key(dest)]] += base / len(options)
    return omega, P


def communicating_classes(P) -> list[set[int]]:
    n = len(P)
    reach = [{j for j in range(n) if P[i][j] > 0} | {i} for i in range(n)]
    changed = True
    while changed:
        changed = False
        for i in range(n):
            new = set().union(*(reach[j] for j in reach[i]))
            if new != reach[i]:
                reach[i] = new
                changed = True
    classes: list[set[int]] = []
    for i in range(n):
        cls = {j for j in reach[i] if i in reach[j]}
        if cls not in classes:
            classes.append(cls)
    return classes


def total_variation(counts, support_size: int) -> float:
    """Half the L1 distance between empirical frequencies and uniform."""
    total = sum(counts.values())
    seen = sum(abs(c / total - 1 / support_size) for c in counts.values())
    unseen = (support_size - len(counts)) / support_size
    return 0.5 * (seen + unseen)


@dataclass(frozen=True)
class UniformityReport:
    config: GraphConfig
    steps: int
    samples: int
    kernel: str
    tv_distance: float
    oracle_size: int
    pq_tv_avoiding: float
    pq_tv_all_edges: float

    CSV_HEADER = ("config", "steps", "samples", "tv_distance", "oracle_size")

    def csv_row(self) -> tuple:
        c = self.config
        return (f"{c.M}-{c.N}-{c.d_b}-{c.d_w}", self.steps, self.samples, self.tv_distance, self.oracle_size)


def uniformity_report(config: GraphConfig, chain_steps: int, samples: int, rng,
                      kernel: Kernel = "mixed", pq_draws: int | None = None) -> UniformityReport:
    """Chain output vs the enumeration oracle, plus the law of drawn ``(p, q)``.

    ``pq_tv_avoiding`` compares the edge ``p`` of proposals drawn at black
    vertex 0 of the seed graph with the uniform law on the edges avoiding
    the vertex; ``pq_tv_all_edges`` compares it with the uniform law on all
    ``N*d_w`` edges.
    """
    omega = enumerate_graphs(config)
    index = {_key(g): k for k, g in enumerate(omega)}
    seeds = spawn_generators(rng, samples + 1)
    start = _State(seed_graph(config))
    counts: Counter = Counter()
    for g in seeds[:samples]:
        state = start.copy()
        _advance(state, chain_steps, g, kernel)
        counts[index[tuple(tuple(int(w) for w in r) for r in state.black)]] += 1
    tv = total_variation(counts, len(omega))

    graph = seed_graph(config)
    K = config.n_edges - config.d_b
    pq_tv_avoid = pq_tv_all = float("nan")
    if K >= 2:
        draws = pq_draws if pq_draws is not None else max(1000, 200 * K)
        gen = seeds[samples]
        avoid = edges_avoiding(graph, "black", 0)
        pair = np.array([gen.choice(K, size=2, replace=False) for _ in range(draws)])
        p_counts = Counter(avoid[i] for i in pair[:, 0])
        pq_tv_avoid = total_variation(p_counts, K)
        freq = np.array([p_counts.get(e, 0) / draws for e in graph.edges()])
        pq_tv_all = 0.5 * float(np.abs(freq - 1 / config.n_edges).sum())
    return UniformityReport(config, chain_steps, samples, kernel, tv, len(omega), pq_tv_avoid, pq_tv_all)
