"""Scalar coefficient types for series and diagram weights.

Three modes are used throughout the package:

* exact rationals (``fractions.Fraction``),
* exact polynomials in the loop fugacity (``DeltaPoly``; one symbol for the
  plain models, two symbols for the two-color stitched models),
* floats, for the graph pipelines whose edge weights are irrational.

The exact modes admit ``==``; floats are compared with tolerances only.
``DeltaPoly`` evaluation at a numeric fugacity commutes with ring
operations, which is what lets exact enumeration results be compared
against per-graph numeric routes.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Mapping, Union

Rational = Union[int, Fraction]


def _as_fraction(value: Rational) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    raise TypeError(f"expected an exact rational, got {type(value).__name__}")


class DeltaPoly:
    """A polynomial with Fraction coefficients in one or more fugacity symbols.

    Monomials are keyed by exponent tuples of length ``nsymbols``.  The
    single-symbol case prints as a polynomial in δ; the two-symbol case
    uses δr, δb (stitched models).
    """

    __slots__ = ("nsymbols", "coeffs")

    SYMBOLS = {1: ("δ",), 2: ("δr", "δb")}

    def __init__(self, coeffs: Mapping[tuple[int, ...], Rational] | None = None, nsymbols: int = 1):
        self.nsymbols = nsymbols
        clean: dict[tuple[int, ...], Fraction] = {}
        for expo, c in (coeffs or {}).items():
            expo = tuple(expo)
            if len(expo) != nsymbols:
                raise ValueError("exponent arity does not match symbol count")
            c = _as_fraction(c)
            if c != 0:
                clean[expo] = c
        self.coeffs = clean

    # -- constructors -------------------------------------------------

    @classmethod
    def const(cls, value: Rational, nsymbols: int = 1) -> "DeltaPoly":
        return cls({(0,) * nsymbols: _as_fraction(value)}, nsymbols)

    @classmethod
    def delta(cls, power: int = 1) -> "DeltaPoly":
        """δ**power in the single-symbol ring."""
        return cls({(power,): Fraction(1)}, 1)

    @classmethod
    def symbol(cls, index: int, nsymbols: int) -> "DeltaPoly":
        expo = [0] * nsymbols
        expo[index] = 1
        return cls({tuple(expo): Fraction(1)}, nsymbols)

    @classmethod
    def from_coeff_list(cls, coeffs: Iterable[Rational]) -> "DeltaPoly":
        """Single-symbol polynomial from the list [c0, c1, ...] = Σ ci δ^i."""
        return cls({(i,): _as_fraction(c) for i, c in enumerate(coeffs)}, 1)

    def coeff_list(self) -> list[Fraction]:
        """Single-symbol coefficient list, constant term first."""
        if self.nsymbols != 1:
            raise ValueError("coefficient lists are defined for one symbol only")
        deg = max((e[0] for e in self.coeffs), default=0)
        out = [Fraction(0)] * (deg + 1)
        for (i,), c in self.coeffs.items():
            out[i] = c
        return out

    # -- ring operations ----------------------------------------------

    def _coerce(self, other) -> "DeltaPoly | None":
        if isinstance(other, DeltaPoly):
            if other.nsymbols != self.nsymbols:
                raise ValueError("mixed symbol counts")
            return other
        if isinstance(other, (int, Fraction)):
            return DeltaPoly.const(other, self.nsymbols)
        return None

    def __add__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        out = dict(self.coeffs)
        for expo, c in other.coeffs.items():
            out[expo] = out.get(expo, Fraction(0)) + c
        return DeltaPoly(out, self.nsymbols)

    __radd__ = __add__

    def __neg__(self):
        return DeltaPoly({e: -c for e, c in self.coeffs.items()}, self.nsymbols)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return other + (-self)

    def __mul__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        out: dict[tuple[int, ...], Fraction] = {}
        for e1, c1 in self.coeffs.items():
            for e2, c2 in other.coeffs.items():
                expo = tuple(a + b for a, b in zip(e1, e2))
                out[expo] = out.get(expo, Fraction(0)) + c1 * c2
        return DeltaPoly(out, self.nsymbols)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if n < 0:
            raise ValueError("negative powers are not polynomial")
        out = DeltaPoly.const(1, self.nsymbols)
        for _ in range(n):
            out = out * self
        return out

    def __eq__(self, other):
        coerced = self._coerce(other)
        if coerced is None:
            return NotImplemented
        return self.coeffs == coerced.coeffs

    def __hash__(self):
        return hash((self.nsymbols, frozenset(self.coeffs.items())))

    def __bool__(self):
        return bool(self.coeffs)

    # -- evaluation and printing --------------------------------------

    def eval(self, *values: float) -> float:
        """Evaluate at numeric fugacities; commutes with +,*."""
        if len(values) != self.nsymbols:
            raise ValueError("wrong number of fugacity values")
        total = 0.0
        for expo, c in self.coeffs.items():
            term = float(c)
            for v, p in zip(values, expo):
                term *= v**p
            total += term
        return total

    def __repr__(self):
        return f"DeltaPoly({self})"

    def __str__(self):
        if not self.coeffs:
            return "0"
        syms = self.SYMBOLS.get(self.nsymbols)
        parts = []
        for expo in sorted(self.coeffs, reverse=True):
            c = self.coeffs[expo]
            mono = ""
            if syms is not None:
                for s, p in zip(syms, expo):
                    if p == 1:
                        mono += s
                    elif p > 1:
                        mono += f"{s}^{p}"
            else:
                mono = "*".join(f"x{i}^{p}" for i, p in enumerate(expo) if p)
            if mono and c == 1:
                coeff = ""
            elif mono and c == -1:
                coeff = "-"
            else:
                coeff = str(c)
            parts.append(coeff + mono if mono else str(c))
        text = "+".join(parts)
        return text.replace("+-", "-")


Scalar = Union[Fraction, DeltaPoly, float, complex]


def scalar_is_zero(x: Scalar) -> bool:
    if isinstance(x, DeltaPoly):
        return not x.coeffs
    return x == 0


def scalar_eval(x: Scalar, *fugacities: float) -> float | complex:
    """Collapse an exact scalar to a float, given fugacity values if needed."""
    if isinstance(x, DeltaPoly):
        return x.eval(*fugacities)
    if isinstance(x, Fraction):
        return float(x)
    return x


def format_exact(x: Scalar) -> str:
    """Serialize a scalar for the plain-text series format.

    Rationals print as ``p`` or ``p/q``; δ-polynomials as coefficient
    lists ``[c0, c1, ...]`` with rational entries.
    """
    if isinstance(x, DeltaPoly):
        return "[" + ", ".join(str(c) for c in x.coeff_list()) + "]"
    if isinstance(x, (int, Fraction)):
        return str(x)
    return repr(x)


def parse_exact(text: str) -> Scalar:
    """Inverse of :func:`format_exact` for the exact modes (float fallback)."""
    text = text.strip()
    if text.startswith("["):
        items = text.strip("[]").split(",")
        return DeltaPoly.from_coeff_list([Fraction(t.strip()) for t in items if t.strip()])
    try:
        return Fraction(text)
    except ValueError:
        return float(text)
