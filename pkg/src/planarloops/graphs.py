"""Bipartite graphs with Perron-Frobenius data and the loop-function algebra.

A graph is stored with oriented edges: ids ``0..2E-1``, an involution
``opp`` reversing orientation, and source/target maps.  Every edge crosses
the bipartition.  The Perron data consists of the eigenvalue ``delta``, a
positive vertex function ``mu`` (normalized to 1 at a base vertex) and the
edge weights ``sigma[e] = sqrt(mu[tgt]/mu[src])``.

Elements of the graph algebra are finitely supported functions on closed
loops; a loop is ``(base_vertex, (e_1, ..., e_n))`` with matching endpoints.
TL boxes embed as weighted sums of loops (``embed_tl``), and ``tr0`` pairs
an element with the sum of all TL diagrams, which at zero coupling already
computes the loop-model observable.

All values here are immutable after construction; operations are pure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .errors import DimensionError, PlanarLoopsError
from .scalars import DeltaPoly, Scalar
from .tl import ColoredTLDiagram, TLDiagram, _noncrossing_pairings

Loop = tuple[int, tuple[int, ...]]  # (base vertex, oriented edge ids)


@dataclass(frozen=True)
class BipartiteGraph:
    """Finite connected bipartite graph with oriented edges."""

    names: tuple[str, ...]
    parity: tuple[int, ...]  # +1 for V_+, -1 for V_-
    src: tuple[int, ...]
    tgt: tuple[int, ...]
    opp: tuple[int, ...]
    # Vertices where a truncation breaks the eigenvalue relation (empty for
    # honest finite graphs).
    boundary: frozenset[int] = frozenset()

    def __post_init__(self):
        for e in range(self.num_edges):
            if self.opp[self.opp[e]] != e or self.src[self.opp[e]] != self.tgt[e]:
                raise ValueError("edge involution is inconsistent")
            if self.parity[self.src[e]] == self.parity[self.tgt[e]]:
                raise ValueError("an edge fails to cross the bipartition")
        if not self._connected():
            raise ValueError("graph must be connected")

    def _connected(self) -> bool:
        if self.num_vertices == 0:
            return False
        seen = {0}
        stack = [0]
        while stack:
            v = stack.pop()
            for e in range(self.num_edges):
                if self.src[e] == v and self.tgt[e] not in seen:
                    seen.add(self.tgt[e])
                    stack.append(self.tgt[e])
        return len(seen) == self.num_vertices

    @property
    def num_vertices(self) -> int:
        return len(self.names)

    @property
    def num_edges(self) -> int:
        return len(self.src)

    def out_edges(self, v: int) -> list[int]:
        return [e for e in range(self.num_edges) if self.src[e] == v]

    def vertices(self, sign: int | None = None) -> list[int]:
        if sign is None:
            return list(range(self.num_vertices))
        return [v for v in range(self.num_vertices) if self.parity[v] == sign]

    def adjacency(self) -> np.ndarray:
        a = np.zeros((self.num_vertices, self.num_vertices))
        for e in range(self.num_edges):
            a[self.src[e], self.tgt[e]] += 0.5  # each geometric edge appears twice
            a[self.tgt[e], self.src[e]] += 0.5
        return a

    def is_loop(self, word: Loop) -> bool:
        v, edges = word
        here = v
        for e in edges:
            if self.src[e] != here:
                return False
            here = self.tgt[e]
        return here == v


@dataclass(frozen=True)
class PerronData:
    """Eigenvalue, eigenvector and edge weights of a graph.

    ``mu_exact``/``sigma_exact`` are set when the weights are rational
    (two-vertex graphs and their products), enabling exact arithmetic.
    """

    delta: float
    mu: tuple[float, ...]
    sigma: tuple[float, ...]
    mu_exact: tuple[Fraction, ...] | None = None
    sigma_exact: tuple[Fraction, ...] | None = None

    def sigma_value(self, e: int) -> Scalar:
        if self.sigma_exact is not None:
            return self.sigma_exact[e]
        return self.sigma[e]

    def mu_value(self, v: int) -> Scalar:
        if self.mu_exact is not None:
            return self.mu_exact[v]
        return self.mu[v]

    def rescaled(self, c: float) -> "PerronData":
        """mu -> c*mu; sigma is a ratio and does not change."""
        return PerronData(
            self.delta,
            tuple(c * m for m in self.mu),
            self.sigma,
            None,
            self.sigma_exact,
        )


def verify_perron(graph: BipartiteGraph, perron: PerronData, tol: float = 1e-12) -> None:
    """Check A·mu = delta·mu away from truncation boundaries.

    Also checks sigma[e]*sigma[e°] = 1 and the eigen-identity in sigma form,
    sum over out-edges of sigma^2 = delta.
    """
    mu = np.asarray(perron.mu)
    for v in range(graph.num_vertices):
        if v in graph.boundary:
            continue
        total = sum(mu[graph.tgt[e]] for e in graph.out_edges(v))
        if abs(total - perron.delta * mu[v]) > tol * max(1.0, abs(perron.delta * mu[v])):
            raise PlanarLoopsError(f"Perron relation fails at vertex {graph.names[v]}")
    for e in range(graph.num_edges):
        if abs(perron.sigma[e] * perron.sigma[graph.opp[e]] - 1.0) > 1e-14:
            raise PlanarLoopsError("sigma(e)*sigma(e°) != 1")
    for v in range(graph.num_vertices):
        if v in graph.boundary:
            continue
        s = sum(perron.sigma[e] ** 2 for e in graph.out_edges(v))
        if abs(s - perron.delta) > 1e-11:
            raise PlanarLoopsError("eigen-identity in sigma form fails")


def _build_sigma(graph: BipartiteGraph, mu: Sequence[float]) -> tuple[float, ...]:
    return tuple(
        math.sqrt(mu[graph.tgt[e]] / mu[graph.src[e]]) for e in range(graph.num_edges)
    )


# -- constructors ------------------------------------------------------------


def _chain_graph(n: int, boundary: Iterable[int] = ()) -> BipartiteGraph:
    names = tuple(str(v + 1) for v in range(n))
    parity = tuple(+1 if v % 2 == 0 else -1 for v in range(n))
    src, tgt, opp = [], [], []
    for v in range(n - 1):
        src += [v, v + 1]
        tgt += [v + 1, v]
        opp += [len(opp) + 1, len(opp)]
    return BipartiteGraph(names, parity, tuple(src), tuple(tgt), tuple(opp),
                          frozenset(boundary))


def make_a_n(n: int) -> tuple[BipartiteGraph, PerronData]:
    """The chain with n vertices: delta = 2 cos(pi/(n+1))."""
    if n < 2:
        raise ValueError("the chain graph needs at least two vertices")
    graph = _chain_graph(n)
    delta = 2.0 * math.cos(math.pi / (n + 1))
    mu = tuple(math.sin((v + 1) * math.pi / (n + 1)) / math.sin(math.pi / (n + 1))
               for v in range(n))
    perron = PerronData(delta, mu, _build_sigma(graph, mu))
    verify_perron(graph, perron)
    return graph, perron


def make_a_infinity_truncation(delta: float, n: int) -> tuple[BipartiteGraph, PerronData]:
    """First n vertices of the half-infinite chain carrying delta >= 2.

    The eigenvalue relation holds at every vertex except the cut vertex n,
    so observables based at low vertices are exact for the infinite graph
    as long as their dependency cone stays away from the cut (word length
    below roughly 2(n-2)).
    """
    if delta < 2:
        raise ValueError("the infinite chain carries delta >= 2 only")
    if n < 3:
        raise ValueError("truncation needs at least three vertices")
    graph = _chain_graph(n, boundary=(n - 1,))
    if delta == 2:
        mu = tuple(float(v + 1) for v in range(n))
    else:
        x = (delta + math.sqrt(delta * delta - 4.0)) / 2.0
        mu = tuple((x ** (v + 1) - x ** (-(v + 1))) / (x - 1.0 / x) for v in range(n))
    perron = PerronData(delta, mu, _build_sigma(graph, mu))
    verify_perron(graph, perron)
    return graph, perron


def make_two_vertex(n: int) -> tuple[BipartiteGraph, PerronData]:
    """One even vertex, one odd vertex, n parallel edges: delta = n."""
    if n < 1:
        raise ValueError("need at least one edge")
    names = ("+", "-")
    parity = (+1, -1)
    src, tgt, opp = [], [], []
    for _ in range(n):
        src += [0, 1]
        tgt += [1, 0]
        opp += [len(opp) + 1, len(opp)]
    graph = BipartiteGraph(names, parity, tuple(src), tuple(tgt), tuple(opp))
    one = Fraction(1)
    perron = PerronData(
        float(n), (1.0, 1.0), (1.0,) * (2 * n),
        mu_exact=(one, one), sigma_exact=(one,) * (2 * n),
    )
    verify_perron(graph, perron)
    return graph, perron


def product_graph(
    gr: BipartiteGraph, pr: PerronData, gb: BipartiteGraph, pb: PerronData
) -> tuple[BipartiteGraph, PerronData, dict]:
    """Product graph of the stitched algebra.

    Vertices are pairs, even iff the factors' parities agree.  Red edges
    move in the first factor, black edges in the second; the Perron vector
    is the product and the eigenvalue is the sum.

    Returns (graph, perron, meta) where meta records each product edge's
    color and underlying factor edge, needed to embed colored diagrams.
    """
    vi: dict[tuple[int, int], int] = {}
    names, parity = [], []
    for v in range(gr.num_vertices):
        for w in range(gb.num_vertices):
            vi[(v, w)] = len(names)
            names.append(f"({gr.names[v]},{gb.names[w]})")
            parity.append(+1 if gr.parity[v] == gb.parity[w] else -1)
    src, tgt, opp, color, under = [], [], [], [], []
    pair_of: dict[tuple[int, int, int], int] = {}
    for e in range(gr.num_edges):
        for w in range(gb.num_vertices):
            pair_of[(0, e, w)] = len(src)
            src.append(vi[(gr.src[e], w)])
            tgt.append(vi[(gr.tgt[e], w)])
            color.append(0)
            under.append(e)
    for f in range(gb.num_edges):
        for v in range(gr.num_vertices):
            pair_of[(1, f, v)] = len(src)
            src.append(vi[(v, gb.src[f])])
            tgt.append(vi[(v, gb.tgt[f])])
            color.append(1)
            under.append(f)
    for e in range(gr.num_edges):
        for w in range(gb.num_vertices):
            opp.append(pair_of[(0, gr.opp[e], w)])
    for f in range(gb.num_edges):
        for v in range(gr.num_vertices):
            opp.append(pair_of[(1, gb.opp[f], v)])
    graph = BipartiteGraph(tuple(names), tuple(parity), tuple(src), tuple(tgt), tuple(opp))
    # vi assigns indices in the same v-major order, so this aligns with it.
    mu = tuple(
        pr.mu[v] * pb.mu[w]
        for v in range(gr.num_vertices)
        for w in range(gb.num_vertices)
    )
    exact = None
    if pr.mu_exact is not None and pb.mu_exact is not None:
        exact_list = [Fraction(0)] * len(names)
        for (v, w), idx in vi.items():
            exact_list[idx] = pr.mu_exact[v] * pb.mu_exact[w]
        exact = tuple(exact_list)
    sigma = _build_sigma(graph, mu)
    sigma_exact = None
    if exact is not None:
        sig = []
        for e in range(graph.num_edges):
            ratio = exact[graph.tgt[e]] / exact[graph.src[e]]
            root = _exact_sqrt(ratio)
            if root is None:
                sig = None
                break
            sig.append(root)
        sigma_exact = tuple(sig) if sig is not None else None
    perron = PerronData(pr.delta + pb.delta, mu, sigma, exact, sigma_exact)
    verify_perron(graph, perron, tol=1e-11)
    meta = {"color": tuple(color), "under": tuple(under)}
    return graph, perron, meta


def _exact_sqrt(q: Fraction) -> Fraction | None:
    num = math.isqrt(q.numerator)
    den = math.isqrt(q.denominator)
    if num * num == q.numerator and den * den == q.denominator:
        return Fraction(num, den)
    return None


def load_graph(text: str) -> tuple[BipartiteGraph, PerronData]:
    """Parse the adjacency-list format and compute Perron data numerically.

    Each non-comment line reads ``name parity neighbor [neighbor ...]``
    with parity ``+`` or ``-``; each undirected edge may be listed from
    either or both sides (duplicates from the two sides are merged, but a
    repeated neighbor on one line is a genuine multi-edge).
    """
    names: list[str] = []
    parities: dict[str, int] = {}
    neighbor_lists: dict[str, list[str]] = {}
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) < 2:
            raise ValueError(f"bad graph line {line!r}")
        name, sign, *nbrs = parts
        if sign not in "+-":
            raise ValueError(f"parity of {name!r} must be + or -")
        if name in parities:
            raise ValueError(f"duplicate vertex {name!r}")
        names.append(name)
        parities[name] = +1 if sign == "+" else -1
        neighbor_lists[name] = nbrs
    index = {n: i for i, n in enumerate(names)}
    # Multiplicity of the undirected edge {a, b}: max of the two sides.
    counts: dict[tuple[int, int], int] = {}
    for name, nbrs in neighbor_lists.items():
        for b in set(nbrs):
            if b not in index:
                raise ValueError(f"unknown neighbor {b!r}")
            key = tuple(sorted((index[name], index[b])))
            counts[key] = max(counts.get(key, 0), nbrs.count(b))
    src, tgt, opp = [], [], []
    for (a, b), mult in sorted(counts.items()):
        for _ in range(mult):
            src += [a, b]
            tgt += [b, a]
            opp += [len(opp) + 1, len(opp)]
    parity = tuple(parities[n] for n in names)
    graph = BipartiteGraph(tuple(names), parity, tuple(src), tuple(tgt), tuple(opp))
    perron = perron_by_power_iteration(graph)
    return graph, perron


def perron_by_power_iteration(graph: BipartiteGraph, tol: float = 1e-14) -> PerronData:
    """Dominant eigenpair by power iteration with a Rayleigh quotient."""
    a = graph.adjacency()
    v = np.ones(graph.num_vertices)
    delta = 0.0
    for _ in range(100_000):
        w = a @ v
        new_delta = float(w @ v / (v @ v))
        w_norm = w / np.linalg.norm(w)
        if abs(new_delta - delta) <= tol * max(1.0, abs(new_delta)) and np.allclose(
            w_norm, v / np.linalg.norm(v), atol=1e-15
        ):
            delta = new_delta
            v = w_norm
            break
        delta, v = new_delta, w_norm
    mu = tuple(float(x) for x in v / v[0])
    perron = PerronData(delta, mu, _build_sigma(graph, mu))
    verify_perron(graph, perron, tol=1e-10)
    return perron


# -- graph algebra elements ---------------------------------------------------


@dataclass
class GraphPAElement:
    """Finitely supported function on loops of a graph."""

    graph: BipartiteGraph
    coefficients: dict[Loop, Scalar] = field(default_factory=dict)

    def __post_init__(self):
        for word in self.coefficients:
            if not self.graph.is_loop(word):
                raise ValueError(f"{word} is not a closed loop")

    def degree(self) -> int:
        """Common loop length; raises if the support is inhomogeneous."""
        lengths = {len(edges) for _, edges in self.coefficients}
        if len(lengths) > 1:
            raise DimensionError(f"inhomogeneous element: lengths {sorted(lengths)}")
        return lengths.pop() if lengths else 0

    def support_at(self, v: int):
        return {w: c for w, c in self.coefficients.items() if w[0] == v}


def embed_tl(
    diagram: TLDiagram, graph: BipartiteGraph, perron: PerronData
) -> GraphPAElement:
    """Image of a TL box in the loop algebra of a graph.

    Loops carry one edge per boundary point; matched points carry opposite
    edges, the loop starts in V_+ or V_- according to the diagram's sign,
    and the weight is the product of sigma over the first edge of each
    string.  Non-crossing structure makes every forced (closing) edge
    consistent, so the search branches only at string openings.
    """
    coeffs: dict[Loop, Scalar] = {}
    pairing = diagram.pairing
    n = diagram.num_points

    def extend(base: int, pos: int, here: int, edges: list[int], weight: Scalar):
        if pos == n:
            coeffs[(base, tuple(edges))] = coeffs.get((base, tuple(edges)), 0) + weight
            return
        partner = pairing[pos]
        if partner > pos:  # a string opens here
            for e in graph.out_edges(here):
                edges.append(e)
                extend(base, pos + 1, graph.tgt[e], edges, weight * perron.sigma_value(e))
                edges.pop()
        else:  # the string opened at `partner` closes: edge forced
            e = graph.opp[edges[partner]]
            edges.append(e)
            extend(base, pos + 1, graph.tgt[e], edges, weight)
            edges.pop()

    one: Scalar = Fraction(1) if perron.sigma_exact is not None else 1.0
    for v in graph.vertices(diagram.sign):
        extend(v, 0, v, [], one)
    return GraphPAElement(graph, coeffs)


def tl_pairing_weight(
    word: tuple[int, ...], graph: BipartiteGraph, perron: PerronData
) -> Scalar:
    """Value at a loop of the sum of all TL diagrams with matching size.

    This is the kernel of ``tr0``: for each non-crossing pairing of the
    positions that is compatible with the loop (paired positions carry
    opposite edges), add the product of sigma over string openings.
    """
    n = len(word)
    total: Scalar = Fraction(0) if perron.sigma_exact is not None else 0.0
    for pairing in _noncrossing_pairings(n):
        weight: Scalar = Fraction(1) if perron.sigma_exact is not None else 1.0
        ok = True
        for i, j in enumerate(pairing):
            if i < j:
                if word[j] != graph.opp[word[i]]:
                    ok = False
                    break
                weight = weight * perron.sigma_value(word[i])
        if ok:
            total = total + weight
    return total


def tr0(x: GraphPAElement, v: int, perron: PerronData) -> Scalar:
    """Pairing of a homogeneous element with the sum of all TL diagrams at v.

    For ``x = embed_tl(S)`` the result is independent of v within each
    parity class and equals the zero-coupling loop observable of S.
    """
    x.degree()  # raises on inhomogeneous support
    total: Scalar = Fraction(0) if perron.sigma_exact is not None else 0.0
    for (base, word), c in x.coefficients.items():
        if base != v:
            continue
        total = total + c * tl_pairing_weight(word, x.graph, perron)
    return total


def embed_colored_tl(
    diagram: ColoredTLDiagram,
    graph: BipartiteGraph,
    perron: PerronData,
    meta: dict,
    sign: int = +1,
) -> GraphPAElement:
    """Image of a stitched (two-color) box in a product-graph loop algebra.

    Position x must ride an edge of its color, matched positions carry
    opposite underlying factor edges, and the weight is the product of the
    product-graph sigma over string openings.
    """
    color = meta["color"]
    under = meta["under"]
    pairing = diagram.global_pairing()
    n = diagram.num_points
    coeffs: dict[Loop, Scalar] = {}

    def extend(base: int, pos: int, here: int, edges: list[int], weight):
        if pos == n:
            coeffs[(base, tuple(edges))] = coeffs.get((base, tuple(edges)), 0) + weight
            return
        partner = pairing[pos]
        want_color = diagram.colors[pos]
        if partner > pos:
            for e in graph.out_edges(here):
                if color[e] != want_color:
                    continue
                edges.append(e)
                extend(base, pos + 1, graph.tgt[e], edges, weight * perron.sigma_value(e))
                edges.pop()
        else:
            prev = edges[partner]
            # Same factor edge reversed; the spectator coordinate may have
            # moved in the other factor since the string opened.
            for e in graph.out_edges(here):
                if color[e] != want_color or under[e] != _factor_opp(graph, meta, prev):
                    continue
                edges.append(e)
                extend(base, pos + 1, graph.tgt[e], edges, weight)
                edges.pop()

    one: Scalar = Fraction(1) if perron.sigma_exact is not None else 1.0
    for v in graph.vertices(sign):
        extend(v, 0, v, [], one)
    return GraphPAElement(graph, coeffs)


def _factor_opp(graph: BipartiteGraph, meta: dict, e: int) -> int:
    """Underlying factor edge of e, reversed (for closing colored strings)."""
    return meta["under"][graph.opp[e]]
