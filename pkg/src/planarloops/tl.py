"""Shaded Temperley--Lieb diagram combinatorics.

A diagram on 2k boundary points is an isotopy class, recorded as a
non-crossing fixed-point-free involution plus a shading sign.  Boundary
points are numbered 1..2k clockwise starting at the marked initial
segment; sign ``+`` means that segment borders an unshaded region.  Since
regions alternate across strings, the segment after point j is unshaded
iff j is even (for sign ``+``), and every string joins an odd point to an
even point.

No geometric data is kept: two pictures are the same diagram iff their
pairings and signs agree.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from functools import lru_cache

from .errors import DimensionError, ShadingError

Pairing = tuple[int, ...]  # 0-based involution: pairing[i] = partner of point i


def _is_noncrossing(pairing: Pairing) -> bool:
    n = len(pairing)
    if any(not (0 <= pairing[i] < n) or pairing[i] == i or pairing[pairing[i]] != i for i in range(n)):
        return False
    stack: list[int] = []
    for i in range(n):
        if pairing[i] > i:
            stack.append(pairing[i])
        elif not stack or stack.pop() != i:
            return False
    return True


@dataclass(frozen=True)
class TLDiagram:
    """A shaded TL box: non-crossing pairing of 2k points plus a sign."""

    pairing: Pairing
    sign: int = +1  # +1: marked segment unshaded, -1: shaded

    def __post_init__(self):
        if len(self.pairing) % 2 != 0:
            raise ValueError("a TL diagram needs an even number of boundary points")
        if self.sign not in (+1, -1):
            raise ValueError("sign must be +1 or -1")
        if not _is_noncrossing(self.pairing):
            raise ValueError(f"pairing {self.pairing} is not a non-crossing involution")
        for i, j in enumerate(self.pairing):
            if (i - j) % 2 == 0:
                raise ValueError("strings must join points of opposite parity")

    @property
    def num_points(self) -> int:
        return len(self.pairing)

    @property
    def strands(self) -> int:
        return len(self.pairing) // 2

    def pairs(self) -> list[tuple[int, int]]:
        """Matched pairs (i, j) with i < j, 0-based."""
        return [(i, j) for i, j in enumerate(self.pairing) if i < j]

    def __str__(self) -> str:
        sign = "+" if self.sign > 0 else "-"
        body = "".join(f"({i + 1},{j + 1})" for i, j in self.pairs())
        return f"{sign}:{body}"

    # -- named diagrams -------------------------------------------------

    @staticmethod
    def empty(sign: int = +1) -> "TLDiagram":
        return TLDiagram((), sign)

    @staticmethod
    def cup(sign: int = +1) -> "TLDiagram":
        """One string; with sign +1 the inside of the cup is shaded."""
        return TLDiagram((1, 0), sign)

    @staticmethod
    def cups(n: int, sign: int = +1) -> "TLDiagram":
        """n side-by-side (non-nested) cups: the B_n diagrams."""
        pairing = []
        for _ in range(n):
            base = len(pairing)
            pairing += [base + 1, base]
        return TLDiagram(tuple(pairing), sign)

    @staticmethod
    def nested_cups(n: int, sign: int = +1) -> "TLDiagram":
        pairing = [0] * (2 * n)
        for i in range(n):
            pairing[i] = 2 * n - 1 - i
            pairing[2 * n - 1 - i] = i
        return TLDiagram(tuple(pairing), sign)


def parse_diagram(text: str) -> TLDiagram:
    """Parse the textual notation, e.g. ``+:(1,2)(3,6)(4,5)``."""
    text = text.strip()
    if ":" not in text:
        raise ValueError(f"missing sign prefix in {text!r}")
    sign_txt, _, body = text.partition(":")
    sign = {"+": +1, "-": -1}.get(sign_txt.strip())
    if sign is None:
        raise ValueError(f"bad sign {sign_txt!r}")
    pairs = re.findall(r"\(\s*(\d+)\s*,\s*(\d+)\s*\)", body)
    if re.sub(r"[\s()0-9,]", "", body):
        raise ValueError(f"unexpected characters in {text!r}")
    flat = [int(x) for pair in pairs for x in pair]
    if not flat:
        return TLDiagram.empty(sign)
    n = max(flat)
    if sorted(flat) != list(range(1, n + 1)):
        raise ValueError(f"pairs in {text!r} do not cover 1..{n} exactly once")
    pairing = [0] * n
    for a, b in pairs:
        i, j = int(a) - 1, int(b) - 1
        pairing[i], pairing[j] = j, i
    return TLDiagram(tuple(pairing), sign)


@lru_cache(maxsize=None)
def _noncrossing_pairings(n_points: int) -> tuple[Pairing, ...]:
    if n_points == 0:
        return ((),)
    out: list[Pairing] = []
    partial = [0] * n_points

    def fill(points: tuple[int, ...]):
        # Pair points[0] with a partner leaving even-sized segments; the
        # enclosed and following segments are then matched independently.
        if not points:
            yield
            return
        first = points[0]
        for idx in range(1, len(points), 2):
            partner = points[idx]
            partial[first], partial[partner] = partner, first
            for _ in fill(points[1:idx]):
                yield from fill(points[idx + 1:])

    for _ in fill(tuple(range(n_points))):
        out.append(tuple(partial))
    return tuple(out)


def generate_tl(k: int, sign: int = +1) -> list[TLDiagram]:
    """All shaded TL diagrams with k strands; there are Catalan(k) of them."""
    if k < 0:
        raise ValueError("strand count must be nonnegative")
    return [TLDiagram(p, sign) for p in _noncrossing_pairings(2 * k)]


def closure_loops(a: TLDiagram, b: TLDiagram) -> int:
    """Number of closed loops when b is reflected and glued onto a.

    The sesquilinear pairing of the two diagrams is δ**closure_loops(a, b).
    """
    if a.num_points != b.num_points:
        raise DimensionError("cannot close diagrams of different sizes")
    if a.sign != b.sign:
        raise ShadingError("cannot close diagrams of opposite shading")
    n = a.num_points
    if n == 0:
        return 0
    # Each closed string is traced by alternately applying the two
    # involutions; the composition's cycles each get traversed twice.
    seen = [False] * n
    cycles = 0
    for start in range(n):
        if seen[start]:
            continue
        cycles += 1
        i = start
        while not seen[i]:
            seen[i] = True
            i = b.pairing[a.pairing[i]]
    return cycles // 2


def wedge(a: TLDiagram, b: TLDiagram) -> TLDiagram:
    """Disjoint juxtaposition a ∧ b (the Gr_0 product of boxes)."""
    if a.sign != b.sign:
        raise ShadingError("wedge requires matching shading at the junction")
    offset = a.num_points
    pairing = tuple(a.pairing) + tuple(p + offset for p in b.pairing)
    return TLDiagram(pairing, a.sign)


def gram_matrix(k: int, sign: int = +1):
    """Loop-count matrix [closure_loops(a, b)] over all diagrams with k strands.

    Raising δ to these entries gives the Gram matrix of the pairing, which
    is positive semidefinite at the admissible fugacities.
    """
    diagrams = generate_tl(k, sign)
    return [[closure_loops(a, b) for b in diagrams] for a in diagrams]


# -- two-color (stitched) diagrams ------------------------------------------


@dataclass(frozen=True)
class ColoredTLDiagram:
    """A superposition basis element of the stitched algebra.

    ``colors[i]`` assigns boundary point i (0-based) to the red (0) or
    black (1) factor.  Each color class, read in its induced cyclic
    order, carries its own shaded TL diagram; red and black strings may
    cross each other but not themselves.
    """

    colors: tuple[int, ...]
    red: TLDiagram
    black: TLDiagram

    def __post_init__(self):
        if sorted(set(self.colors) - {0, 1}):
            raise ValueError("colors must be 0 (red) or 1 (black)")
        n_red = self.colors.count(0)
        n_black = self.colors.count(1)
        if n_red % 2 or n_black % 2:
            raise ValueError("each color class must have even size")
        if self.red.num_points != n_red or self.black.num_points != n_black:
            raise DimensionError("sub-diagram sizes do not match the coloring")

    @property
    def num_points(self) -> int:
        return len(self.colors)

    def positions(self, color: int) -> list[int]:
        return [i for i, c in enumerate(self.colors) if c == color]

    def global_pairing(self) -> Pairing:
        """The induced involution on all points (colors kept separate)."""
        pairing = [0] * self.num_points
        for color, sub in ((0, self.red), (1, self.black)):
            pos = self.positions(color)
            for i, j in sub.pairs():
                pairing[pos[i]], pairing[pos[j]] = pos[j], pos[i]
        return tuple(pairing)


def stitch_product_diagrams(n: int, red_sign: int = +1, black_sign: int = +1) -> list[ColoredTLDiagram]:
    """Superimposed-tangle basis of the stitched algebra on 2n points.

    Every way of splitting the 2n boundary points into two even color
    classes, together with a non-crossing pairing of each class in its
    induced order.
    """
    if n < 0:
        raise ValueError("strand count must be nonnegative")
    out: list[ColoredTLDiagram] = []
    for red_count in range(0, 2 * n + 1, 2):
        for red_pos in itertools.combinations(range(2 * n), red_count):
            red_set = set(red_pos)
            colors = tuple(0 if i in red_set else 1 for i in range(2 * n))
            # Non-crossing pairings join opposite parities automatically,
            # so every combination below is a valid shaded sub-diagram.
            for red_pairing in _noncrossing_pairings(red_count):
                red = TLDiagram(red_pairing, red_sign)
                for black_pairing in _noncrossing_pairings(2 * n - red_count):
                    out.append(ColoredTLDiagram(colors, red, TLDiagram(black_pairing, black_sign)))
    return out


def crossing_vertex() -> ColoredTLDiagram:
    """The mixed quartic vertex: a red and a black string crossing.

    Points 1,3 are red and joined; points 2,4 are black and joined.  This
    is the interaction of the two-color loop model with potential
    β ΣΣ X_i Y_j X_i† Y_j†.
    """
    return ColoredTLDiagram(
        colors=(0, 1, 0, 1),
        red=TLDiagram.cup(+1),
        black=TLDiagram.cup(+1),
    )
