"""Brute-force enumeration of planar configurations.

This module is the combinatorial oracle of the package: loop-model
observables are computed as truncated coupling series by summing
``δ^(#loops)`` over genus-zero, shading-consistent gluings of labeled
TL vertices.  Coefficients are exact polynomials in the fugacity with
rational coefficients, so every other computation route can be checked
against this one.

Conventions (validated against the loop-equation route at low orders):

* vertices and boundary points are labeled; the coefficient of
  ``prod t_i^{r_i}`` carries the factor ``1/prod r_i!``;
* observable sums keep exactly the configurations in which every
  interaction vertex is connected to the external disk (disconnected
  vacuum parts cancel against the partition-function normalization);
* free-energy sums keep connected vacuum configurations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import product as iter_product

from ._kernels import count_configurations
from .errors import ResourceError
from .scalars import DeltaPoly
from .series import CouplingSeries
from .tl import ColoredTLDiagram, TLDiagram

MAX_POINTS_DEFAULT = 24


@dataclass(frozen=True)
class ConfigurationProblem:
    """External diagram, interaction vertex types, and the order budget."""

    external: TLDiagram | None
    vertex_types: tuple[TLDiagram, ...]
    max_order: int
    max_points: int = MAX_POINTS_DEFAULT

    def __post_init__(self):
        for b in self.vertex_types:
            if b.num_points == 0 or b.num_points % 2:
                raise ValueError("vertex types need a positive even point count")


def _parity_bit(pos: int, sign: int) -> int:
    # The segment before point `pos` (0-based) is unshaded iff pos is even
    # for sign +, odd for sign -; strings must join bits 0-1.
    return pos % 2 if sign > 0 else (pos + 1) % 2


@dataclass
class _Assembly:
    """Flattened point arrays fed to the matching kernel."""

    disk: list[int] = field(default_factory=list)
    rot_next: list[int] = field(default_factory=list)
    internal: list[int] = field(default_factory=list)
    color: list[int] = field(default_factory=list)
    parity: list[int] = field(default_factory=list)
    n_disks: int = 0

    def add_disk(self, pairing, bits, colors) -> None:
        base = len(self.disk)
        n = len(bits)
        for pos in range(n):
            self.disk.append(self.n_disks)
            self.rot_next.append(base + (pos + 1) % n if n else 0)
            self.internal.append(base + pairing[pos] if pairing[pos] >= 0 else -1)
            self.color.append(colors[pos])
            self.parity.append(bits[pos])
        self.n_disks += 1

    def add_tl(self, d: TLDiagram, color: int = 0) -> None:
        bits = [_parity_bit(p, d.sign) for p in range(d.num_points)]
        self.add_disk(d.pairing, bits, [color] * d.num_points)

    def add_empty_disk(self) -> None:
        self.add_disk((), (), ())

    def matching_bound(self) -> float:
        """Upper bound on parity/color-consistent matchings (for error messages)."""
        classes: dict[tuple[int, int], int] = {}
        for c, b in zip(self.color, self.parity):
            classes[(c, b)] = classes.get((c, b), 0) + 1
        bound = 1.0
        colors = {c for c, _ in classes}
        for c in colors:
            n0 = classes.get((c, 0), 0)
            n1 = classes.get((c, 1), 0)
            free = classes.get((c, -1), 0)
            if free:
                bound *= float(math.factorial(free)) / (
                    math.factorial(free // 2) * 2.0 ** (free // 2)
                ) if free % 2 == 0 else 0.0
            if n0 or n1:
                bound *= float(math.factorial(max(n0, n1))) if n0 == n1 else 0.0
        return bound

    def count(self, n_colors: int, connect: int) -> dict[tuple[int, ...], int]:
        return count_configurations(
            self.disk, self.rot_next, self.internal, self.color, self.parity,
            n_colors, connect,
        )


def _check_size(total_points: int, assembly: _Assembly, max_points: int) -> None:
    if total_points > max_points:
        raise ResourceError(
            f"{total_points} boundary points exceed the search guard "
            f"({max_points}); estimated matchings: {assembly.matching_bound():.3g}",
            bound=assembly.matching_bound(),
        )


def _orders(k: int, max_total: int, at_least: int = 0):
    for r in iter_product(range(max_total + 1), repeat=k):
        if at_least <= sum(r) <= max_total:
            yield r


def observable_series(prob: ConfigurationProblem) -> CouplingSeries:
    """The loop observable of the external diagram as a coupling series.

    Coefficient of ``prod t_i^{r_i}``: 1/prod(r_i!) times the sum of
    ``δ^(#loops)`` over admissible configurations built on the external
    diagram and r_i labeled copies of each vertex type, all vertices
    connected to the external disk.
    """
    if prob.external is None:
        raise ValueError("observable_series needs an external diagram")
    k = len(prob.vertex_types)
    coeffs = {}
    for r in _orders(k, prob.max_order):
        assembly = _Assembly()
        assembly.add_tl(prob.external)
        total = prob.external.num_points
        for b, count in zip(prob.vertex_types, r):
            for _ in range(count):
                assembly.add_tl(b)
                total += b.num_points
        _check_size(total, assembly, prob.max_points)
        counts = assembly.count(1, connect=1)
        poly = _delta_weighted(counts, 1)
        if poly:
            weight = Fraction(1)
            for count in r:
                weight /= math.factorial(count)
            coeffs[r] = poly * weight
    return CouplingSeries(k, prob.max_order, coeffs)


def free_energy_series(
    vertex_types: tuple[TLDiagram, ...], max_order: int, max_points: int = MAX_POINTS_DEFAULT
) -> CouplingSeries:
    """Connected-vacuum generating series, one unit of sum(mu^2) per graph."""
    k = len(vertex_types)
    coeffs = {}
    for r in _orders(k, max_order, at_least=1):
        assembly = _Assembly()
        total = 0
        for b, count in zip(vertex_types, r):
            for _ in range(count):
                assembly.add_tl(b)
                total += b.num_points
        _check_size(total, assembly, max_points)
        counts = assembly.count(1, connect=1)
        poly = _delta_weighted(counts, 1)
        if poly:
            weight = Fraction(1)
            for count in r:
                weight /= math.factorial(count)
            coeffs[r] = poly * weight
    return CouplingSeries(k, max_order, coeffs)


def stitched_observable_series(
    external: ColoredTLDiagram,
    vertex_types: tuple[ColoredTLDiagram, ...],
    max_order: int,
    max_points: int = MAX_POINTS_DEFAULT,
) -> CouplingSeries:
    """Two-color observable; coefficients are polynomials in (δr, δb).

    Strings carry the color of their endpoints, each closed loop weighs
    δr or δb by its color, and the two checkerboard shadings are enforced
    independently (the parity of a point is its position within its color
    class on the disk).
    """
    k = len(vertex_types)
    coeffs = {}
    for r in _orders(k, max_order):
        assembly = _Assembly()
        assembly.add_disk(*_colored_arrays(external))
        total = external.num_points
        for b, count in zip(vertex_types, r):
            for _ in range(count):
                assembly.add_disk(*_colored_arrays(b))
                total += b.num_points
        _check_size(total, assembly, max_points)
        counts = assembly.count(2, connect=1)
        poly = _delta_weighted(counts, 2)
        if poly:
            weight = Fraction(1)
            for count in r:
                weight /= math.factorial(count)
            coeffs[r] = poly * weight
    return CouplingSeries(k, max_order, coeffs)


def _colored_arrays(d: ColoredTLDiagram):
    pairing = d.global_pairing()
    bits = [0] * d.num_points
    for color, sub in ((0, d.red), (1, d.black)):
        for induced, pos in enumerate(d.positions(color)):
            bits[pos] = _parity_bit(induced, sub.sign)
    return pairing, bits, list(d.colors)


def _delta_weighted(counts: dict[tuple[int, ...], int], nsymbols: int) -> DeltaPoly:
    poly = DeltaPoly({}, nsymbols)
    for loops, count in counts.items():
        poly = poly + DeltaPoly({tuple(loops): count}, nsymbols)
    return poly


# -- closures of a single diagram (order zero) --------------------------------


def closure_polynomial(d: TLDiagram) -> DeltaPoly:
    """Sum of δ^(#loops) over all planar closures of one diagram."""
    prob = ConfigurationProblem(d, (), 0)
    return observable_series(prob).coeff(())


# -- strips: the auxiliary model of the two-coupling quartic analysis ---------
#
# Configurations over an external element with n cups (shaded inside)
# followed by p strip endpoints in the unshaded region, glued to l copies
# of the unshaded half-vertex (one string + one strip) and k copies of the
# shaded one.  Strips are a second endpoint species: they pair among
# themselves planarly, carry no shading and no loop weight, and white and
# black strips do not mix.

_STRING, _WSTRIP, _BSTRIP = 0, 1, 2


def _add_half_vertex(assembly: _Assembly, shaded: bool) -> None:
    sign = -1 if shaded else +1
    bits = [_parity_bit(0, sign), _parity_bit(1, sign), -1]
    strip = _BSTRIP if shaded else _WSTRIP
    assembly.add_disk((1, 0, -1), bits, [_STRING, _STRING, strip])


def _add_cups_and_strips(assembly: _Assembly, n: int, p: int) -> None:
    cups = TLDiagram.cups(n) if n else None
    pairing = list(cups.pairing) if cups else []
    bits = [_parity_bit(i, +1) for i in range(2 * n)]
    colors = [_STRING] * (2 * n)
    pairing += [-1] * p
    bits += [-1] * p
    colors += [_WSTRIP] * p
    assembly.add_disk(pairing, bits, colors)


def strip_configuration_count(p: int, n: int, l: int, k: int,
                              max_points: int = MAX_POINTS_DEFAULT) -> DeltaPoly:
    """Direct kernel evaluation of the strip model count C(p, n, l, k)."""
    if min(p, n, l, k) < 0:
        return DeltaPoly({}, 1)
    assembly = _Assembly()
    _add_cups_and_strips(assembly, n, p)
    for _ in range(l):
        _add_half_vertex(assembly, shaded=False)
    for _ in range(k):
        _add_half_vertex(assembly, shaded=True)
    total = 2 * n + p + 3 * (l + k)
    _check_size(total, assembly, max_points)
    counts = assembly.count(3, connect=1)
    poly = DeltaPoly({}, 1)
    for loops, count in counts.items():
        poly = poly + DeltaPoly({(loops[0],): count}, 1)  # strips weigh 1
    return poly


@lru_cache(maxsize=None)
def strip_recurrence(p: int, n: int, l: int, k: int) -> DeltaPoly:
    """C(p, n, l, k) by the strip-peeling recurrence.

    The first external strip either glues to another external strip,
    splitting the configuration into an inside part (p1 strips, no cups)
    and an outside part, or glues to one of the l unshaded half-vertices,
    whose string then behaves as one more cup.  Values with p = 0 seed the
    recursion via direct enumeration.
    """
    if min(p, n, l, k) < 0:
        return DeltaPoly({}, 1)
    if p == 0:
        return strip_configuration_count(0, n, l, k)
    total = DeltaPoly({}, 1)
    for p1 in range(0, p - 1):
        for l1 in range(l + 1):
            for k1 in range(k + 1):
                inner = strip_recurrence(p1, 0, l1, k1)
                if not inner:
                    continue
                outer = strip_recurrence(p - p1 - 2, n, l - l1, k - k1)
                if not outer:
                    continue
                total = total + math.comb(l, l1) * math.comb(k, k1) * inner * outer
    if l > 0:
        total = total + l * strip_recurrence(p - 1, n + 1, l - 1, k)
    return total
