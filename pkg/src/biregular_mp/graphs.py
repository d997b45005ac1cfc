"""Simple (d_b, d_w)-biregular bipartite graphs on labeled vertex sets.

Black vertices are ``0..M-1`` and white vertices ``0..N-1``.  In the
block linearization the black block occupies global indices ``0..M-1``
and the white block ``M..M+N-1``.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property

import numpy as np

from .errors import (
    EdgeCountMismatch,
    InfeasibleDegree,
    InvalidGraph,
    OrientationError,
    TooLarge,
)

ENUMERATION_EDGE_LIMIT = 16


@dataclass(frozen=True)
class GraphConfig:
    M: int
    N: int
    d_b: int
    d_w: int

    @property
    def alpha(self) -> Fraction:
        return Fraction(self.M, self.N)

    @property
    def gamma(self) -> Fraction:
        return Fraction(self.N, self.M)

    @property
    def n_edges(self) -> int:
        return self.M * self.d_b

    @property
    def n_vertices(self) -> int:
        return self.M + self.N

    def as_dict(self) -> dict:
        return {"M": self.M, "N": self.N, "d_b": self.d_b, "d_w": self.d_w}


def validate_config(M: int, N: int, d_b: int, d_w: int) -> GraphConfig:
    for name, val in (("M", M), ("N", N), ("d_b", d_b), ("d_w", d_w)):
        if isinstance(val, bool) or not isinstance(val, (int, np.integer)) or val < 1:
            raise InfeasibleDegree(f"{name} must be a positive integer, got {val!r}")
    M, N, d_b, d_w = int(M), int(N), int(d_b), int(d_w)
    if M * d_b != N * d_w:
        raise EdgeCountMismatch(f"M*d_b = {M * d_b} != N*d_w = {N * d_w}")
    if M < N:
        raise OrientationError(f"need M >= N, got M={M}, N={N}")
    if d_b > N or d_w > M:
        raise InfeasibleDegree(f"degrees ({d_b}, {d_w}) infeasible for M={M}, N={N}")
    return GraphConfig(M, N, d_b, d_w)


def config_for(N: int, d_b: int, gamma: float) -> GraphConfig:
    """Config with ``M = round(N/gamma)`` and ``d_w`` from the edge count."""
    M = int(round(N / gamma))
    d_w, rem = divmod(M * d_b, N)
    if rem:
        raise EdgeCountMismatch(f"M*d_b = {M * d_b} not divisible by N = {N}")
    return validate_config(M, N, d_b, d_w)


@dataclass(frozen=True)
class BiregularGraph:
    config: GraphConfig
    black_adj: tuple[tuple[int, ...], ...]
    _checked: bool = field(default=False, repr=False, compare=False)

    def __post_init__(self):
        if not self._checked:
            _check_invariants(self.config, self.black_adj)

    @cached_property
    def white_adj(self) -> tuple[tuple[int, ...], ...]:
        rows: list[list[int]] = [[] for _ in range(self.config.N)]
        for b, nbrs in enumerate(self.black_adj):
            for w in nbrs:
                rows[w].append(b)
        return tuple(tuple(r) for r in rows)

    def edges(self) -> list[tuple[int, int]]:
        """Edges as ``(black, white)`` in black-major order."""
        return [(b, w) for b, nbrs in enumerate(self.black_adj) for w in nbrs]

    def edge_set(self) -> frozenset[tuple[int, int]]:
        return frozenset(self.edges())

    def has_edge(self, b: int, w: int) -> bool:
        return w in self.black_adj[b]

    def to_dict(self) -> dict:
        d = self.config.as_dict()
        d["black_adj"] = [list(r) for r in self.black_adj]
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def _check_invariants(config: GraphConfig, black_adj) -> None:
    if len(black_adj) != config.M:
        raise InvalidGraph(f"expected {config.M} black rows, got {len(black_adj)}")
    white_deg = [0] * config.N
    for b, nbrs in enumerate(black_adj):
        if len(nbrs) != config.d_b or len(set(nbrs)) != config.d_b:
            raise InvalidGraph(f"black vertex {b} needs {config.d_b} distinct neighbours: {nbrs}")
        if list(nbrs) != sorted(nbrs):
            raise InvalidGraph(f"black row {b} not sorted: {nbrs}")
        for w in nbrs:
            if not 0 <= w < config.N:
                raise InvalidGraph(f"white index {w} out of range")
            white_deg[w] += 1
    bad = [k for k, d in enumerate(white_deg) if d != config.d_w]
    if bad:
        raise InvalidGraph(f"white vertices {bad} do not have degree {config.d_w}")


def make_graph(config: GraphConfig, black_adj) -> BiregularGraph:
    rows = tuple(tuple(sorted(int(w) for w in r)) for r in black_adj)
    return BiregularGraph(config, rows)


def from_dict(d: dict) -> BiregularGraph:
    config = validate_config(d["M"], d["N"], d["d_b"], d["d_w"])
    return make_graph(config, d["black_adj"])


def from_json(text: str) -> BiregularGraph:
    return from_dict(json.loads(text))


def seed_graph(config: GraphConfig) -> BiregularGraph:
    """Circulant start state: black ``i`` joins whites ``(i*d_b + t) mod N``."""
    M, N, d_b = config.M, config.N, config.d_b
    rows = [sorted((i * d_b + t) % N for t in range(d_b)) for i in range(M)]
    return make_graph(config, rows)


def adjacency(graph: BiregularGraph) -> np.ndarray:
    cfg = graph.config
    A = np.zeros((cfg.M, cfg.N), dtype=np.int8)
    for b, nbrs in enumerate(graph.black_adj):
        A[b, list(nbrs)] = 1
    return A


def from_adjacency(A: np.ndarray) -> BiregularGraph:
    A = np.asarray(A)
    if not np.isin(A, (0, 1)).all():
        raise InvalidGraph("adjacency entries must be 0/1")
    M, N = A.shape
    d_b = int(A[0].sum()) if M else 0
    d_w = int(A[:, 0].sum()) if N else 0
    config = validate_config(M, N, d_b, d_w)
    return make_graph(config, [np.flatnonzero(row).tolist() for row in A])


def enumerate_graphs(config: GraphConfig) -> list[BiregularGraph]:
    """All labeled biregular graphs for ``config``, lexicographically ordered.

    Exhaustive backtracking over black rows; guarded by ``M*d_b <= 16``.
    """
    if config.n_edges > ENUMERATION_EDGE_LIMIT:
        raise TooLarge(f"M*d_b = {config.n_edges} exceeds {ENUMERATION_EDGE_LIMIT}")
    M, N, d_b, d_w = config.M, config.N, config.d_b, config.d_w
    choices = list(itertools.combinations(range(N), d_b))
    out: list[BiregularGraph] = []
    load = [0] * N
    rows: list[tuple[int, ...]] = []

    def extend(b: int) -> None:
        if b == M:
            out.append(BiregularGraph(config, tuple(rows), _checked=True))
            return
        remaining = M - b - 1
        for row in choices:
            if any(load[w] >= d_w for w in row):
                continue
            for w in row:
                load[w] += 1
            # every white still needs its deficit covered by the remaining rows
            if all(d_w - load[w] <= remaining for w in range(N)):
                rows.append(row)
                extend(b + 1)
                rows.pop()
            for w in row:
                load[w] -= 1

    extend(0)
    return out
