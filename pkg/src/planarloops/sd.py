"""Order-by-order solution of the loop equation on graph words.

The trace functional τ is computed as a formal power series in the
couplings, one coefficient table per loop word.  Writing a queried loop as
``u·e`` (``e`` its last edge), the loop equation expresses τ(ue) through

* the splitting term: for every interior occurrence of e° in u, the
  product τ(u1)·τ(u2) of the two loops it cuts off, divided by σ(e);
* the interaction term: one power of a coupling times τ of ``u`` glued to
  a cyclic derivative of a potential word, with weight
  σ(e)^{-1} · μ(s(w))/μ(s(e)) · σ_B(w).

The second term consumes a coupling order, so the system is triangular
order by order and no iteration tolerance enters.  The weight ratio
μ(s(w))/μ(s(e)) equals the telescoped product of σ(g)² over the part of
the potential loop w that is cyclically rotated past its glued edge, which
is the form the diagrammatic derivation produces; the two are identical
because σ(g)² = μ(t(g))/μ(s(g)) telescopes along the loop.

Words are kept in a literal encoding (base vertex + edge ids); no cyclic
canonicalization is applied, so traciality is a checkable property rather
than an assumption.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import ClosureError
from .graphs import BipartiteGraph, GraphPAElement, Loop, PerronData, embed_tl
from .series import CouplingSeries
from .tl import TLDiagram


@dataclass(frozen=True)
class PotentialSpec:
    """Interaction terms: coupling i multiplies the loop sum of element i."""

    terms: tuple[GraphPAElement, ...]

    @classmethod
    def from_diagrams(
        cls, diagrams: tuple[TLDiagram, ...], graph: BipartiteGraph, perron: PerronData
    ) -> "PotentialSpec":
        return cls(tuple(embed_tl(d, graph, perron) for d in diagrams))

    @property
    def num_couplings(self) -> int:
        return len(self.terms)

    def max_degree(self) -> int:
        return max((t.degree() for t in self.terms), default=0)


@dataclass
class WordTable:
    """Lazy per-word coupling series for τ, with a hard length guard."""

    graph: BipartiteGraph
    perron: PerronData
    potential: PotentialSpec
    max_word_length: int
    order: int
    _cache: dict[tuple[Loop, int], float] = field(default_factory=dict)

    def tau_coefficient(self, word: Loop, expo: tuple[int, ...]) -> float:
        """Coefficient of prod t_i^{expo_i} in τ(word)."""
        return self._tau(word, expo)

    def tau_series(self, word: Loop) -> CouplingSeries:
        k = self.potential.num_couplings
        coeffs = {}
        for expo in _exponents(k, self.order):
            value = self._tau(word, expo)
            if value != 0.0:
                coeffs[expo] = value
        return CouplingSeries(k, self.order, coeffs)

    # -- the recursion -------------------------------------------------

    def _tau(self, word: Loop, expo: tuple[int, ...]) -> float:
        base, edges = word
        if len(edges) > self.max_word_length:
            raise ClosureError(
                f"word of length {len(edges)} exceeds the table bound "
                f"{self.max_word_length}; raise max_word_length",
                missing_length=len(edges),
            )
        if not edges:
            return 1.0 if sum(expo) == 0 else 0.0
        if len(edges) % 2:
            return 0.0
        key = (word, expo)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        graph = self.graph
        e = edges[-1]
        u = edges[:-1]
        sigma_inv = 1.0 / self.perron.sigma[e]
        e_op = graph.opp[e]
        total = 0.0
        # splitting term: u = u1 e° u2 cuts off two shorter loops
        for pos, g in enumerate(u):
            if g != e_op:
                continue
            u1 = (base, u[:pos])
            u2 = (graph.src[e], u[pos + 1:])
            for split in _split_exponents(expo):
                left = self._tau(u1, split)
                if left == 0.0:
                    continue
                right = self._tau(u2, _sub(expo, split))
                total += left * right
        # interaction term: consumes one order of t_i
        mu = self.perron.mu
        for i, element in enumerate(self.potential.terms):
            if expo[i] == 0:
                continue
            lower = _dec(expo, i)
            for (w_base, w_edges), coeff in element.coefficients.items():
                weight = float(coeff) * mu[w_base] / mu[graph.src[e]]
                for pos, g in enumerate(w_edges):
                    if g != e_op:
                        continue
                    glued = u + w_edges[pos + 1:] + w_edges[:pos]
                    total += weight * self._tau((base, glued), lower)
        total *= sigma_inv
        self._cache[key] = total
        return total


def _exponents(k: int, order: int):
    if k == 0:
        yield ()
        return
    from itertools import product

    for expo in product(range(order + 1), repeat=k):
        if sum(expo) <= order:
            yield expo


def _split_exponents(expo: tuple[int, ...]):
    from itertools import product

    for part in product(*(range(n + 1) for n in expo)):
        yield part


def _sub(a: tuple[int, ...], b: tuple[int, ...]) -> tuple[int, ...]:
    return tuple(x - y for x, y in zip(a, b))


def _dec(a: tuple[int, ...], i: int) -> tuple[int, ...]:
    return tuple(x - 1 if j == i else x for j, x in enumerate(a))


def solve_sd(
    graph: BipartiteGraph,
    perron: PerronData,
    potential: PotentialSpec,
    max_word_length: int,
    order: int,
) -> WordTable:
    """Word table for the unique formal-series solution of the loop equation.

    ``max_word_length`` must cover the dependency cone of every query:
    length + order·(D-2) for potentials of degree D.  Queries outside the
    bound raise :class:`planarloops.errors.ClosureError` naming the missing
    length rather than silently truncating.
    """
    degree = potential.max_degree()
    if degree % 2:
        raise ValueError("potential elements must have even degree")
    return WordTable(graph, perron, potential, max_word_length, order)


def required_length(query_length: int, order: int, degree: int) -> int:
    """Dependency-cone bound for solve_sd's max_word_length."""
    return query_length + order * max(degree - 2, 0) + 2


def observable_from_table(table: WordTable, diagram: TLDiagram, v: int) -> CouplingSeries:
    """τ paired against the embedded diagram at base vertex v.

    Independent of v within the parity class selected by the diagram's
    shading (a testable property of the solution, not an input).
    """
    element = embed_tl(diagram, table.graph, table.perron)
    k = table.potential.num_couplings
    coeffs: dict[tuple[int, ...], float] = {}
    for word, coeff in element.support_at(v).items():
        for expo in _exponents(k, table.order):
            value = table.tau_coefficient(word, expo)
            if value:
                coeffs[expo] = coeffs.get(expo, 0.0) + float(coeff) * value
    return CouplingSeries(k, table.order, coeffs)


def cyclic_rotation(graph: BipartiteGraph, word: Loop) -> Loop:
    """The loop re-based one edge along itself (for traciality checks)."""
    base, edges = word
    if not edges:
        return word
    return (graph.tgt[edges[0]], edges[1:] + edges[:1])


def contraction_bound(
    graph: BipartiteGraph,
    perron: PerronData,
    potential: PotentialSpec,
    couplings: tuple[float, ...],
    cutoff: float,
    gamma: float,
) -> float:
    """Uniqueness-regime certificate for the loop equation at numeric couplings.

    Evaluates  γ²/(m(1-γK)) + A(t)·γ^(2-D)  with
    m = min over edges of sqrt(μ(s)μ(t)),
    A(t) = max over edges e of (μ(s)μ(t))^(-1/2) Σ_i |t_i| k_i^e,
    where k_i^e counts the distinct monomials of the cyclic derivative of
    potential element i with respect to e°.  A value below 1 certifies the
    small-coupling uniqueness regime for word tables bounded by K.
    """
    if not 0.0 < gamma < 1.0 / cutoff:
        raise ValueError(f"gamma must lie in (0, 1/K) = (0, {1.0 / cutoff})")
    mu = perron.mu
    m = min(
        (mu[graph.src[e]] * mu[graph.tgt[e]]) ** 0.5 for e in range(graph.num_edges)
    )
    degree = potential.max_degree()
    a_t = 0.0
    for e in range(graph.num_edges):
        e_op = graph.opp[e]
        total = 0.0
        for t_i, element in zip(couplings, potential.terms):
            monomials = set()
            for (w_base, w_edges), _ in element.coefficients.items():
                for pos, g in enumerate(w_edges):
                    if g == e_op:
                        monomials.add(w_edges[pos + 1:] + w_edges[:pos])
            total += abs(t_i) * len(monomials)
        weight = (mu[graph.src[e]] * mu[graph.tgt[e]]) ** -0.5
        a_t = max(a_t, weight * total)
    return gamma**2 / (m * (1.0 - gamma * cutoff)) + a_t * gamma ** (2 - degree)


def best_contraction_factor(
    graph: BipartiteGraph,
    perron: PerronData,
    potential: PotentialSpec,
    couplings: tuple[float, ...],
    cutoff: float,
    grid: int = 400,
) -> tuple[float, float]:
    """Minimum of the certificate over a γ grid; returns (factor, γ)."""
    best = (float("inf"), 0.0)
    for j in range(1, grid):
        gamma = j / grid / cutoff
        factor = contraction_bound(graph, perron, potential, couplings, cutoff, gamma)
        if factor < best[0]:
            best = (factor, gamma)
    return best
