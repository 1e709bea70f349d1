"""Truncated multivariate power series in the coupling constants.

A :class:`CouplingSeries` is a finitely supported map from exponent vectors
``(n_1, ..., n_k)`` with ``sum(n_i) <= max_total_degree`` to scalar
coefficients.  Coefficients may be exact rationals, fugacity polynomials
(:class:`planarloops.scalars.DeltaPoly`) or floats; arithmetic never mixes
the exact and float worlds implicitly — whatever the coefficients support
is what you get.

Values are immutable after construction and all operations are pure, so
instances can be shared freely across threads.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Callable, Iterable, Mapping

from .errors import CompositionError, DimensionError
from .scalars import DeltaPoly, Scalar, format_exact, parse_exact, scalar_is_zero

Exponent = tuple[int, ...]


class CouplingSeries:
    """A power series in k couplings, truncated at a total degree."""

    __slots__ = ("num_vars", "max_total_degree", "coefficients")

    def __init__(
        self,
        num_vars: int,
        max_total_degree: int,
        coefficients: Mapping[Exponent, Scalar] | None = None,
    ):
        if num_vars < 0 or max_total_degree < 0:
            raise ValueError("num_vars and max_total_degree must be nonnegative")
        self.num_vars = num_vars
        self.max_total_degree = max_total_degree
        clean: dict[Exponent, Scalar] = {}
        for expo, c in (coefficients or {}).items():
            expo = tuple(expo)
            if len(expo) != num_vars:
                raise DimensionError(f"exponent {expo} has arity != {num_vars}")
            if any(n < 0 for n in expo):
                raise ValueError(f"negative exponent in {expo}")
            if sum(expo) > max_total_degree:
                continue  # closed under truncation
            if not scalar_is_zero(c):
                clean[expo] = c
        self.coefficients = clean

    # -- constructors ---------------------------------------------------

    @classmethod
    def constant(cls, value: Scalar, num_vars: int, order: int) -> "CouplingSeries":
        return cls(num_vars, order, {(0,) * num_vars: value})

    @classmethod
    def variable(cls, index: int, num_vars: int, order: int, one: Scalar = Fraction(1)) -> "CouplingSeries":
        expo = [0] * num_vars
        expo[index] = 1
        return cls(num_vars, order, {tuple(expo): one})

    def coeff(self, expo: Iterable[int]) -> Scalar:
        return self.coefficients.get(tuple(expo), 0)

    # -- ring operations --------------------------------------------------

    def _check_vars(self, other: "CouplingSeries") -> int:
        if self.num_vars != other.num_vars:
            raise DimensionError(
                f"series in {self.num_vars} and {other.num_vars} variables cannot be combined"
            )
        return min(self.max_total_degree, other.max_total_degree)

    def __add__(self, other):
        if not isinstance(other, CouplingSeries):
            return NotImplemented
        order = self._check_vars(other)
        out: dict[Exponent, Scalar] = {}
        for expo, c in self.coefficients.items():
            if sum(expo) <= order:
                out[expo] = c
        for expo, c in other.coefficients.items():
            if sum(expo) <= order:
                prev = out.get(expo)
                out[expo] = c if prev is None else prev + c
        return CouplingSeries(self.num_vars, order, out)

    def __neg__(self):
        return CouplingSeries(
            self.num_vars, self.max_total_degree, {e: -c for e, c in self.coefficients.items()}
        )

    def __sub__(self, other):
        if not isinstance(other, CouplingSeries):
            return NotImplemented
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, CouplingSeries):
            order = self._check_vars(other)
            out: dict[Exponent, Scalar] = {}
            for e1, c1 in self.coefficients.items():
                d1 = sum(e1)
                if d1 > order:
                    continue
                for e2, c2 in other.coefficients.items():
                    if d1 + sum(e2) > order:
                        continue
                    expo = tuple(a + b for a, b in zip(e1, e2))
                    prod = c1 * c2
                    prev = out.get(expo)
                    out[expo] = prod if prev is None else prev + prod
            return CouplingSeries(self.num_vars, order, out)
        # scalar multiple
        return CouplingSeries(
            self.num_vars,
            self.max_total_degree,
            {e: other * c for e, c in self.coefficients.items()},
        )

    def __rmul__(self, other):
        return self.__mul__(other)

    def __pow__(self, n: int):
        if n < 0:
            raise ValueError("negative powers of a series are not supported")
        out = CouplingSeries.constant(Fraction(1), self.num_vars, self.max_total_degree)
        for _ in range(n):
            out = out * self
        return out

    def __eq__(self, other):
        if not isinstance(other, CouplingSeries):
            return NotImplemented
        return (
            self.num_vars == other.num_vars
            and self.max_total_degree == other.max_total_degree
            and self.coefficients == other.coefficients
        )

    def truncate(self, order: int) -> "CouplingSeries":
        return CouplingSeries(self.num_vars, min(order, self.max_total_degree), self.coefficients)

    def map_coefficients(self, fn: Callable[[Scalar], Scalar]) -> "CouplingSeries":
        return CouplingSeries(
            self.num_vars, self.max_total_degree, {e: fn(c) for e, c in self.coefficients.items()}
        )

    def eval_fugacity(self, *fugacities: float) -> "CouplingSeries":
        """Collapse DeltaPoly/Fraction coefficients to floats."""
        from .scalars import scalar_eval

        return self.map_coefficients(lambda c: scalar_eval(c, *fugacities))

    def eval_couplings(self, values: Iterable[float]) -> Scalar:
        """Sum the truncated series at numeric coupling values."""
        values = tuple(values)
        if len(values) != self.num_vars:
            raise DimensionError("wrong number of coupling values")
        total: Scalar = 0
        for expo, c in self.coefficients.items():
            term = c
            for v, p in zip(values, expo):
                term = term * v**p
            total = total + term
        return total

    def __repr__(self):
        entries = ", ".join(
            f"{expo}: {c}" for expo, c in sorted(self.coefficients.items())
        )
        return f"CouplingSeries(k={self.num_vars}, N={self.max_total_degree}, {{{entries}}})"


# -- univariate composition and reversion --------------------------------


def series_compose_univariate(outer: CouplingSeries, inner: CouplingSeries) -> CouplingSeries:
    """Formal composition outer(inner) for univariate outer.

    ``inner`` may live in any number of variables but must have no constant
    term; the result is truncated at ``inner``'s order.
    """
    if outer.num_vars != 1:
        raise DimensionError("outer series must be univariate")
    if not scalar_is_zero(inner.coeff((0,) * inner.num_vars)):
        raise CompositionError("inner series must have zero constant term")
    order = inner.max_total_degree
    result = CouplingSeries.constant(outer.coeff((0,)), inner.num_vars, order)
    # Horner in the inner series: a_N x^N + ... evaluated inside-out.
    degree = max((e[0] for e in outer.coefficients), default=0)
    acc = CouplingSeries(inner.num_vars, order)
    for d in range(degree, 0, -1):
        c = outer.coeff((d,))
        if not scalar_is_zero(c):
            acc = acc + CouplingSeries.constant(c, inner.num_vars, order)
        acc = acc * inner
    return acc + result


def series_reversion(f: CouplingSeries) -> CouplingSeries:
    """Compositional inverse g with f(g(γ)) = γ, by coefficient matching.

    Requires univariate f with zero constant term and invertible (nonzero)
    linear coefficient.  Coefficients must support exact or float division.
    """
    if f.num_vars != 1:
        raise DimensionError("reversion is defined for univariate series")
    if not scalar_is_zero(f.coeff((0,))):
        raise CompositionError("cannot invert a series with constant term")
    a1 = f.coeff((1,))
    if scalar_is_zero(a1):
        raise CompositionError("vanishing linear coefficient; series is not invertible")
    order = f.max_total_degree
    inv_a1 = Fraction(1) / a1 if isinstance(a1, (int, Fraction)) else 1.0 / a1
    g: dict[Exponent, Scalar] = {(1,): inv_a1}
    for n in range(2, order + 1):
        # Impose [γ^n] f(g(γ)) = 0 and solve for the new coefficient g_n:
        # the only appearance of g_n at this order is a1 * g_n.
        partial = CouplingSeries(1, n, g)
        residual = series_compose_univariate(f.truncate(n), partial).coeff((n,))
        g[(n,)] = -(inv_a1 * residual)
    return CouplingSeries(1, order, g)


# -- plain-text serialization ---------------------------------------------


def dump_series(s: CouplingSeries) -> str:
    """Serialize as ordered records ``n_1,...,n_k : coefficient``.

    The header line carries the variable count and truncation order so the
    format round-trips exactly.  δ-polynomial coefficients appear as
    rational coefficient lists ``[c0, c1, ...]``.
    """
    lines = [f"series k={s.num_vars} order={s.max_total_degree}"]
    for expo in sorted(s.coefficients):
        coeff = s.coefficients[expo]
        key = ",".join(str(n) for n in expo)
        lines.append(f"{key} : {format_exact(coeff)}")
    return "\n".join(lines) + "\n"


def load_series(text: str) -> CouplingSeries:
    lines = [ln.strip() for ln in text.strip().splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("series"):
        raise ValueError("missing series header line")
    header = dict(item.split("=") for item in lines[0].split()[1:])
    num_vars = int(header["k"])
    order = int(header["order"])
    coeffs: dict[Exponent, Scalar] = {}
    for line in lines[1:]:
        key, _, value = line.partition(":")
        expo = tuple(int(t) for t in key.split(",") if t.strip() != "") if key.strip() else ()
        coeffs[expo] = parse_exact(value)
    return CouplingSeries(num_vars, order, coeffs)
