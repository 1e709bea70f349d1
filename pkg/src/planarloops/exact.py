"""Exact and semi-exact solvers for the two worked loop models.

Cup model (one coupling family): the generating measure of the cup powers
is the equilibrium measure of a linear-plus-log potential.  Moments obey
the closed recursion

    m_{k+1} = sum_{p+q=k} m_p m_q + (delta-1) m_k + sum_r r t_r m_{k+r},

whose zero-coupling solution is the Marchenko-Pastur family (m_1 = delta,
m_2 = delta^2+delta, ...).  The log-weight coefficient is delta-1, the
column/row excess of the underlying rectangular blocks.

Double-cup (Potts) model: after the auxiliary-field transformation the
model becomes a pair of coupled one-matrix problems.  With couplings
written as alpha = 2*t1, beta = 2*t2 (this normalization is what makes
the auxiliary functional equations and the small-coupling expansions
close exactly; the loop-observable cross-check in the tests freezes it),
the pair (nu_plus, nu_minus) minimizes

    S = sum_eps [ 1/2 int x^2 d nu_eps - Sigma(nu_eps) ]
        + delta int int log|1 + sqrt(alpha) x + sqrt(beta) y| dnu_+ dnu_-

and the observable series are recovered from the moments of nu_plus via a
generating-function inversion (``potts_series`` / ``potts_generating_function``).
Two routes are provided: an exact order-by-order moment series and a
particle minimizer at numeric couplings.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .errors import CompositionError, ConvergenceError, RegimeError
from .scalars import DeltaPoly
from .series import CouplingSeries

# ---------------------------------------------------------------------------
# cup model
# ---------------------------------------------------------------------------


@dataclass
class EquilibriumMeasure:
    """One-cut equilibrium measure: endpoints, grid density, moments."""

    a: float
    b: float
    grid: np.ndarray  # Chebyshev points in [a, b]
    density: np.ndarray  # density values on the grid (may be empty for particles)
    moments: list[float]  # m_0 .. m_J

    def mass(self) -> float:
        return self.moments[0]


def cup_moments(
    couplings: Sequence[float], delta: float, j_max: int, tol: float = 1e-14
) -> list[float]:
    """Moments of the cup-model measure at numeric couplings.

    Fixed-point iteration of the moment recursion; converges inside the
    small-coupling regime and raises otherwise.
    """
    degree = len(couplings)
    j_top = j_max + degree + 2
    m = _mp_moments(delta, j_top)
    for _ in range(500):
        worst = 0.0
        for k in range(j_top):
            new = sum(m[p] * m[k - p] for p in range(k + 1)) + (delta - 1.0) * m[k]
            for r, t_r in enumerate(couplings, start=1):
                if t_r and k + r <= j_top:
                    new += r * t_r * m[k + r]
            worst = max(worst, abs(new - m[k + 1]))
            m[k + 1] = new
        if worst <= tol * max(1.0, abs(m[1])):
            return m[: j_max + 1]
    raise ConvergenceError(
        "cup moment iteration did not converge; couplings too large", residual=worst
    )


def cup_moment_series(
    num_couplings: int, delta_order: int, order: int, j_max: int
) -> list[CouplingSeries]:
    """Exact coupling series of the cup-model moments, delta symbolic.

    Returns [m_0, ..., m_j_max] as series in (t_1..t_k) with polynomial
    fugacity coefficients.  ``delta_order`` is unused headroom kept for
    signature stability; coefficients are exact regardless.
    """
    one = DeltaPoly.const(1)
    delta = DeltaPoly.delta()
    j_top = j_max + num_couplings + 2 + order * max(num_couplings - 1, 0)
    m = [CouplingSeries.constant(c, num_couplings, order) for c in _mp_moment_polys(j_top + 1)]
    t_vars = [
        CouplingSeries.variable(i, num_couplings, order, one) for i in range(num_couplings)
    ]
    dm1 = CouplingSeries.constant(delta - one, num_couplings, order)
    for _ in range(order + 1):
        for k in range(j_top):
            new = dm1 * m[k]
            for p in range(k + 1):
                new = new + m[p] * m[k - p]
            for r in range(1, num_couplings + 1):
                if k + r <= j_top:
                    new = new + r * (t_vars[r - 1] * m[k + r])
            m[k + 1] = new
    return m[: j_max + 1]


def _mp_moments(delta: float, j_top: int) -> list[float]:
    m = [0.0] * (j_top + 2)
    m[0] = 1.0
    for k in range(j_top + 1):
        m[k + 1] = sum(m[p] * m[k - p] for p in range(k + 1)) + (delta - 1.0) * m[k]
    return m


def _mp_moment_polys(count: int) -> list[DeltaPoly]:
    one = DeltaPoly.const(1)
    delta = DeltaPoly.delta()
    m = [DeltaPoly.const(0) for _ in range(count + 1)]
    m[0] = one
    for k in range(count):
        acc = (delta - one) * m[k]
        for p in range(k + 1):
            acc = acc + m[p] * m[k - p]
        m[k + 1] = acc
    return m[:count]


def _discriminant_poly(couplings: Sequence[float], delta: float, m: Sequence[float]) -> np.ndarray:
    """Coefficients (ascending) of D(z) = (z(P'-1)+delta-1)^2 - 4z(zQ(z)+c)."""
    degree = len(couplings)
    # P'(z) - 1 as ascending coefficients
    pp = np.zeros(max(degree, 1))
    pp[0] = -1.0
    for r, t_r in enumerate(couplings, start=1):
        if r - 1 < len(pp):
            pp[r - 1] += r * t_r
    zpp = np.concatenate(([delta - 1.0], pp))  # z*(P'-1) + delta-1
    d = np.polynomial.polynomial.polymul(zpp, zpp)
    # Q(z) = -sum_r r t_r sum_{i+j=r-2} z^i m_j
    q = np.zeros(max(degree - 1, 1))
    for r, t_r in enumerate(couplings, start=1):
        for i in range(r - 1):
            q[i] -= r * t_r * m[r - 2 - i]
    c = 1.0 - sum(r * t_r * m[r - 1] for r, t_r in enumerate(couplings, start=1))
    zq_c = np.concatenate(([c], q))  # z Q(z) + c
    corr = np.concatenate(([0.0], 4.0 * zq_c))  # 4 z (z Q + c)
    n = max(len(d), len(corr))
    d = np.pad(d, (0, n - len(d)))
    corr = np.pad(corr, (0, n - len(corr)))
    return d - corr


def cup_solve(
    couplings: Sequence[float],
    delta: float,
    cutoff: float,
    j_max: int = 8,
    grid_size: int = 201,
) -> tuple[EquilibriumMeasure, Callable[[complex], complex]]:
    """Equilibrium measure of the cup model and its Stieltjes transform.

    Solves the moment system at numeric couplings, locates the one-cut
    support as the sign-change interval of the discriminant polynomial
    (the one-cut property is detected, not assumed), and returns the
    measure together with a quadrature-backed evaluator of
    G(z) = int density(x)/(z-x) dx.
    """
    couplings = tuple(float(t) for t in couplings)
    m = cup_moments(couplings, delta, max(j_max, len(couplings) + 2))
    disc = _discriminant_poly(couplings, delta, m)

    def d_of(x: float) -> float:
        return float(np.polynomial.polynomial.polyval(x, disc))

    x0 = m[1]
    if d_of(x0) >= 0.0:
        raise ConvergenceError("discriminant not negative at the mean", residual=d_of(x0))
    hi = x0
    limit = max(cutoff, (1.0 + math.sqrt(max(delta, 1e-9))) ** 2 * 4.0)
    while d_of(hi) < 0.0:
        hi = x0 + 1.2 * (hi - x0) + 0.1
        if hi > 4.0 * limit:
            raise ConvergenceError("no upper support edge found")
    lo = x0
    while d_of(lo) < 0.0 and lo > 1e-12:
        lo = max(lo - 0.1 * (hi - x0), 0.0)
    from scipy.optimize import brentq

    b = float(brentq(d_of, x0, hi, xtol=1e-14, rtol=8.9e-16))
    a = 0.0 if lo <= 1e-12 and d_of(0.0) <= 0.0 else float(brentq(d_of, lo, x0, xtol=1e-14, rtol=8.9e-16))
    # one-cut detection: no further negative region on (b, 4*limit]
    scan = np.linspace(b + 1e-6, 4.0 * limit, 400)
    if np.any(np.polynomial.polynomial.polyval(scan, disc) < 0.0):
        raise ConvergenceError("secondary support region detected; not one-cut")
    if a > 0:
        scan = np.linspace(max(1e-9, a * 1e-3), a - 1e-9, 200)
        if np.any(np.polynomial.polynomial.polyval(scan, disc) < 0.0):
            raise ConvergenceError("secondary support region detected; not one-cut")
    if not (-cutoff <= a < b <= cutoff):
        raise RegimeError(f"support [{a:.4f}, {b:.4f}] escapes the cutoff {cutoff}")

    theta = np.pi * (np.arange(grid_size) + 0.5) / grid_size
    grid = (a + b) / 2.0 + (b - a) / 2.0 * np.cos(theta)
    vals = -np.polynomial.polynomial.polyval(grid, disc)
    vals[vals < 0.0] = 0.0
    density = np.sqrt(vals) / (2.0 * np.pi * np.abs(grid))
    measure = EquilibriumMeasure(a, b, grid, density, m)

    # Gauss-Chebyshev (second kind flavour) quadrature against the density
    nodes, weights = _cheb_quadrature(a, b, disc, 800)

    def stieltjes(z: complex) -> complex:
        return complex(np.sum(weights / (z - nodes)))

    # internal consistency: quadrature mass and first moments vs recursion
    mass = float(np.sum(weights))
    if abs(mass - 1.0) > 1e-8:
        raise ConvergenceError(f"density mass {mass} deviates from 1", residual=abs(mass - 1))
    return measure, stieltjes


def _cheb_quadrature(a: float, b: float, disc: np.ndarray, n: int):
    theta = np.pi * (np.arange(n) + 0.5) / n
    x = (a + b) / 2.0 + (b - a) / 2.0 * np.cos(theta)
    vals = -np.polynomial.polynomial.polyval(x, disc)
    vals[vals < 0.0] = 0.0
    rho = np.sqrt(vals) / (2.0 * np.pi * np.abs(x))
    w = rho * (b - a) / 2.0 * np.sin(theta) * (np.pi / n)
    return x, w


def cup_quadratic_residual(
    couplings: Sequence[float],
    delta: float,
    stieltjes: Callable[[complex], complex],
    moments: Sequence[float],
    points: Sequence[complex],
) -> float:
    """Max residual of G^2 + B G + C = 0 at the given off-support points.

    B = (delta-1)/z + P'(z) - 1 and C = Q(z) + c/z with Q, c built from the
    converged moments; the log-weight coefficient delta-1 is the one the
    moment recursion satisfies.
    """
    worst = 0.0
    for z in points:
        g = stieltjes(z)
        pp = sum(r * t_r * z ** (r - 1) for r, t_r in enumerate(couplings, start=1))
        bb = (delta - 1.0) / z + pp - 1.0
        q = -sum(
            r * t_r * sum(z**i * moments[r - 2 - i] for i in range(r - 1))
            for r, t_r in enumerate(couplings, start=1)
        )
        c = 1.0 - sum(r * t_r * moments[r - 1] for r, t_r in enumerate(couplings, start=1))
        worst = max(worst, abs(g * g + bb * g + q + c / z))
    return worst


# ---------------------------------------------------------------------------
# double-cup model: particle minimizer
# ---------------------------------------------------------------------------


@dataclass
class CoupledMeasures:
    """Particle approximation of the coupled pair (nu_plus, nu_minus).

    ``alpha``/``beta`` are the double-cup couplings alpha = 2 t1 and
    beta = 2 t2; the functional couples the measures through
    log|1 + sqrt(alpha) x + sqrt(beta) y|.  ``tilde`` measures are the
    affine images: law of -sqrt(alpha) x under nu_plus (support near 0)
    and of 1 + sqrt(beta) y under nu_minus (support near 1).
    """

    alpha: float
    beta: float
    delta: float
    x_plus: np.ndarray
    y_minus: np.ndarray

    def tilde_plus(self) -> np.ndarray:
        return -math.sqrt(self.alpha) * self.x_plus

    def tilde_minus(self) -> np.ndarray:
        return 1.0 + math.sqrt(self.beta) * self.y_minus

    def moment_plus(self, k: int) -> float:
        return float(np.mean(self.x_plus**k))

    def tilde_moment_plus(self, k: int) -> float:
        return float(np.mean(self.tilde_plus() ** k))

    def stieltjes_tilde_plus(self, z: complex) -> complex:
        return complex(np.mean(1.0 / (z - self.tilde_plus())))

    def stieltjes_tilde_minus(self, z: complex) -> complex:
        return complex(np.mean(1.0 / (z - self.tilde_minus())))

    def measures(self) -> tuple[EquilibriumMeasure, EquilibriumMeasure]:
        out = []
        for pts in (self.x_plus, self.y_minus):
            moments = [float(np.mean(pts**k)) for k in range(7)]
            out.append(
                EquilibriumMeasure(float(pts.min()), float(pts.max()), pts.copy(),
                                   np.array([]), moments)
            )
        return out[0], out[1]


def _semicircle_quantiles(n: int) -> np.ndarray:
    """Quantiles of the radius-2 semicircle law, by bisection on the CDF."""
    probs = (np.arange(n) + 0.5) / n

    def cdf(x):
        return 0.5 + (x * np.sqrt(4.0 - x * x) / 4.0 + np.arcsin(x / 2.0)) / np.pi

    lo = np.full(n, -2.0)
    hi = np.full(n, 2.0)
    for _ in range(60):
        mid = (lo + hi) / 2.0
        below = cdf(mid) < probs
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    return (lo + hi) / 2.0


def _coupled_energy(x, y, a_c, b_c, delta):
    n = len(x)
    e = 0.5 * (np.mean(x * x) + np.mean(y * y))
    for pts in (x, y):
        diff = np.abs(pts[:, None] - pts[None, :])
        np.fill_diagonal(diff, 1.0)
        e -= np.sum(np.log(diff)) / (n * n)
    cross = np.log(np.abs(1.0 + a_c * x[:, None] + b_c * y[None, :]))
    e += delta * np.sum(cross) / (n * n)
    return float(e)


def _coupled_gradients(x, y, a_c, b_c, delta):
    n = len(x)
    gx = x / n
    gy = y / n
    hx = np.full(n, 1.0 / n)
    hy = np.full(n, 1.0 / n)
    for pts, g, h in ((x, gx, hx), (y, gy, hy)):
        diff = pts[:, None] - pts[None, :]
        np.fill_diagonal(diff, np.inf)
        inv = 1.0 / diff
        g -= 2.0 * np.sum(inv, axis=1) / (n * n)
        h += 2.0 * np.sum(inv * inv, axis=1) / (n * n)
    denom = 1.0 + a_c * x[:, None] + b_c * y[None, :]
    inv = 1.0 / denom
    gx += delta * a_c * np.sum(inv, axis=1) / (n * n)
    gy += delta * b_c * np.sum(inv, axis=0) / (n * n)
    hx -= delta * a_c * a_c * np.sum(inv * inv, axis=1) / (n * n)
    hy -= delta * b_c * b_c * np.sum(inv * inv, axis=0) / (n * n)
    return gx, gy, np.maximum(hx, 1e-12), np.maximum(hy, 1e-12)


def doublecup_minimize(
    alpha: float,
    beta: float,
    delta: float,
    n_particles: int = 400,
    grad_tol: float = 1e-8,
    max_iter: int = 200_000,
) -> CoupledMeasures:
    """Minimize the coupled functional by damped gradient flow on particles.

    The couplings are alpha = 2 t1, beta = 2 t2 (see the module docstring);
    both must be nonnegative and small enough that the affine supports stay
    disjoint, otherwise a RegimeError is raised.  First-order stationarity
    is pushed below ``grad_tol`` in the sup norm.
    """
    if alpha < 0 or beta < 0:
        raise RegimeError("the double-cup regime needs nonnegative couplings")
    a_c, b_c = math.sqrt(alpha), math.sqrt(beta)
    n = n_particles
    x = _semicircle_quantiles(n) - delta * a_c  # first-order mean shift
    y = _semicircle_quantiles(n) - delta * b_c
    energy = _coupled_energy(x, y, a_c, b_c, delta)
    step = 1.0  # in units of the inverse diagonal curvature
    gnorm = math.inf
    for it in range(max_iter):
        gx, gy, hx, hy = _coupled_gradients(x, y, a_c, b_c, delta)
        # the per-particle force is n times the raw gradient of the energy
        gnorm = n * max(np.abs(gx).max(), np.abs(gy).max())
        if gnorm <= grad_tol:
            break
        dx, dy = gx / hx, gy / hy
        while step > 1e-14:
            x_new = x - step * dx
            y_new = y - step * dy
            if np.any(np.diff(x_new) <= 0.0) or np.any(np.diff(y_new) <= 0.0):
                step *= 0.5
                continue
            e_new = _coupled_energy(x_new, y_new, a_c, b_c, delta)
            if e_new <= energy + 1e-18:
                x, y, energy = x_new, y_new, e_new
                step = min(step * 1.25, 1.0)
                break
            step *= 0.5
        else:
            break
    if gnorm > grad_tol:
        raise ConvergenceError(
            "particle flow stalled above the force tolerance", residual=gnorm
        )
    out = CoupledMeasures(alpha, beta, delta, x, y)
    if alpha > 0 and beta > 0:
        if out.tilde_plus().max() >= out.tilde_minus().min():
            raise RegimeError("affine supports overlap; outside the disjoint regime")
    return out


# ---------------------------------------------------------------------------
# double-cup model: exact moment series and the observable generating function
# ---------------------------------------------------------------------------

# The series solver works over the ring of 2-variable coupling series in
# (sa, sb) = (sqrt(alpha), sqrt(beta)) with fugacity-polynomial coefficients.


def doublecup_moment_series(order: int, j_top: int) -> tuple[list[CouplingSeries], list[CouplingSeries]]:
    """Moments of (nu_plus, nu_minus) as exact series in (sqrt(alpha), sqrt(beta)).

    Solves the coupled equilibrium moment relations order by order; each
    measure sees a polynomial potential whose coefficients are built from
    the other measure's moments through the expansion of
    delta * log(1 + sqrt(alpha) x + sqrt(beta) y).
    """
    one = DeltaPoly.const(1)
    delta = CouplingSeries.constant(DeltaPoly.delta(), 2, order)
    zero = CouplingSeries(2, order)
    sa = CouplingSeries.variable(0, 2, order, one)
    sb = CouplingSeries.variable(1, 2, order, one)

    cats = _catalan_constants(j_top + 2, order)
    m_p = list(cats)
    m_m = list(cats)

    def potential_coeffs(other: list[CouplingSeries], svar: CouplingSeries, ovar: CouplingSeries):
        # coefficient of x^r in the interaction part of V':
        #   delta * sum_s (-1)^(r+s) C(r+s, r) svar^(r+1) ovar^s m_other[s]
        coeffs = {}
        for r in range(order):
            acc = zero
            s_pow = CouplingSeries.constant(one, 2, order)
            base = svar ** (r + 1)
            for s in range(order + 1):
                term = base * s_pow * other[s] if s <= j_top else zero
                coeff = math.comb(r + s, r)
                if (r + s) % 2:
                    term = -(coeff * term)
                else:
                    term = coeff * term
                acc = acc + term
                s_pow = s_pow * ovar
            coeffs[r] = delta * acc
        return coeffs

    for _ in range(order + 2):
        c_p = potential_coeffs(m_m, sa, sb)
        c_m = potential_coeffs(m_p, sb, sa)
        for m, c in ((m_p, c_p), (m_m, c_m)):
            acc = zero
            for r, c_r in c.items():
                if r <= j_top:
                    acc = acc + c_r * m[r]
            m[1] = -acc
            for k in range(j_top - 1):
                new = zero
                for p in range(k + 1):
                    new = new + m[p] * m[k - p]
                for r, c_r in c.items():
                    if k + 1 + r <= j_top + 1:
                        new = new - c_r * m[k + 1 + r]
                m[k + 2] = new
    return m_p[: j_top + 1], m_m[: j_top + 1]


def _catalan_constants(count: int, order: int) -> list[CouplingSeries]:
    cat = [1]
    for k in range(count):
        cat.append(sum(cat[p] * cat[k - p] for p in range(k + 1)))
    out = []
    for j in range(count + 1):
        value = DeltaPoly.const(cat[j // 2]) if j % 2 == 0 else DeltaPoly.const(0)
        out.append(CouplingSeries.constant(value, 2, order))
    return out


def _ring_reversion(g: list, order: int, zero, one):
    """Inverse of y = g_1 z + g_2 z^2 + ... with g_1 = ring one."""
    w = [zero, one] + [zero] * (order - 1)
    for k in range(2, order + 1):
        # residual = [y^k] g(w(y)) with current w (w_k still zero)
        comp = _poly_compose(g[: k + 1], w[: k + 1], k, zero)
        w[k] = -comp[k]
    return w


def _poly_compose(g: list, w: list, order: int, zero):
    """Coefficients of g(w(y)) up to y^order; w has zero constant term."""
    out = [zero] * (order + 1)
    if len(g) > 0:
        out[0] = out[0] + g[0]
    current = list(w[: order + 1]) + [zero] * max(0, order + 1 - len(w))
    power = current
    for d in range(1, len(g)):
        if d > 1:
            power = _poly_mul(power, current, order, zero)
        for k in range(order + 1):
            out[k] = out[k] + g[d] * power[k]
    return out


def _poly_mul(a: list, b: list, order: int, zero):
    out = [zero] * (order + 1)
    for i, ai in enumerate(a[: order + 1]):
        if ai is zero:
            continue
        for j, bj in enumerate(b[: order + 1 - i]):
            out[i + j] = out[i + j] + ai * bj
    return out


def potts_series(order_gamma: int, order_t: int) -> list[CouplingSeries]:
    """Exact series in (t1, t2) of T(B_n) for n <= order_gamma.

    Built from the double-cup moment series through the strip generating
    identity: with M(z) the moment generating function of the reflected
    nu_plus and scale s = sqrt(alpha), the map y = z/(1 - z^2 M(z)) is
    inverted and T(B_n) is the y^n coefficient of (z(y)/y) M(z(y)) divided
    by s^n.  Only even powers of (sa, sb) survive, which is asserted, and
    they convert to (t1, t2) through alpha = 2 t1, beta = 2 t2.
    """
    order_ab = 2 * order_t + 2
    z_deg = 2 * order_gamma + 3
    j_top = z_deg + order_ab + 2  # staleness at the table top decays below order_ab
    m_p, _ = doublecup_moment_series(order_ab, j_top)
    zero = CouplingSeries(2, order_ab)
    one_s = CouplingSeries.constant(DeltaPoly.const(1), 2, order_ab)
    # reflected measure: m_k -> (-1)^k m_k
    refl = [m if k % 2 == 0 else -m for k, m in enumerate(m_p)]
    # g(z) = z / (1 - z^2 M(z)) = z * sum_j (z^2 M(z))^j, as z-coefficients
    m_poly = refl[: z_deg + 1] + [zero] * max(0, z_deg + 1 - len(refl))
    z2m = [zero, zero] + m_poly[: z_deg - 1]
    geom = [one_s] + [zero] * z_deg
    power = [one_s] + [zero] * z_deg
    for _ in range(z_deg // 2 + 1):
        power = _poly_mul(power, z2m, z_deg, zero)
        for k in range(z_deg + 1):
            geom[k] = geom[k] + power[k]
    g = [zero] + geom[: z_deg]  # multiply by z
    w = _ring_reversion(g, order_gamma + 1, zero, one_s)
    # C(y) = (w(y)/y) * M(w(y)): w/y has coefficients w_{k+1}
    w_over_y = w[1: order_gamma + 2] + [zero] * max(0, order_gamma + 1 - len(w) + 1)
    m_of_w = _poly_compose(m_poly, w, order_gamma, zero)
    c_series = _poly_mul(w_over_y, m_of_w, order_gamma, zero)
    out = []
    for n, series in enumerate(c_series[: order_gamma + 1]):
        out.append(_divide_and_substitute(series, n, order_t))
    return out


def _divide_and_substitute(series: CouplingSeries, n: int, order_t: int) -> CouplingSeries:
    """T(B_n) = series / sa^n, then (sa, sb) -> (t1, t2) via alpha = 2 t1."""
    coeffs = {}
    for (i, j), poly in series.coefficients.items():
        i2 = i - n
        if i2 < 0:
            raise CompositionError("generating series not divisible by the coupling scale")
        if i2 % 2 or j % 2:
            raise CompositionError("odd coupling powers survived the substitution")
        expo = (i2 // 2, j // 2)
        if sum(expo) <= order_t:
            coeffs[expo] = poly * Fraction(2) ** (sum(expo))
    return CouplingSeries(2, order_t, coeffs)


def potts_generating_function(
    measures: CoupledMeasures, order_gamma: int
) -> CouplingSeries:
    """Numeric gamma-series of C(gamma) = sum_n gamma^n T(B_n) from particles.

    Uses the same inversion as :func:`potts_series` with the particle
    moments of the reflected nu_plus; the scale is sqrt(alpha).  Requires
    a strictly positive coupling (the inversion degenerates at alpha = 0).
    """
    s = math.sqrt(measures.alpha)
    if s == 0.0:
        raise CompositionError("gamma inversion needs a nonzero first coupling")
    z_deg = 2 * order_gamma + 3
    refl = [((-1.0) ** k) * measures.moment_plus(k) for k in range(z_deg + 1)]
    g = np.zeros(z_deg + 2)
    # g(z) = z/(1 - z^2 M(z)), numerically via geometric series
    m_poly = np.array(refl)
    geom = np.zeros(z_deg + 1)
    geom[0] = 1.0
    z2m = np.zeros(z_deg + 1)
    z2m[2:] = m_poly[: z_deg - 1]
    power = geom.copy()
    for _ in range(z_deg // 2 + 1):
        power = np.polynomial.polynomial.polymul(power, z2m)[: z_deg + 1]
        power = np.pad(power, (0, z_deg + 1 - len(power)))
        geom += power
    g[1:] = geom
    w = _numeric_reversion(g, order_gamma + 1)
    w_over_y = w[1: order_gamma + 2]
    m_of_w = _numeric_compose(m_poly, w, order_gamma)
    c = np.polynomial.polynomial.polymul(w_over_y, m_of_w)[: order_gamma + 1]
    coeffs = {}
    for n, value in enumerate(c):
        coeffs[(n,)] = float(value) * s ** (-n)  # T(B_n) = [y^n] / scale^n
    return CouplingSeries(1, order_gamma, coeffs)


def _numeric_reversion(g: np.ndarray, order: int) -> np.ndarray:
    if abs(g[1]) < 1e-300:
        raise CompositionError("vanishing linear coefficient; series is not invertible")
    w = np.zeros(order + 1)
    w[1] = 1.0 / g[1]
    for k in range(2, order + 1):
        comp = _numeric_compose(g[: k + 1], w, k)
        w[k] = -comp[k] / g[1]
    return w


def _numeric_compose(g: np.ndarray, w: np.ndarray, order: int) -> np.ndarray:
    out = np.zeros(order + 1)
    out[0] = g[0] if len(g) else 0.0
    power = np.zeros(order + 1)
    power[: min(len(w), order + 1)] = w[: order + 1]
    current = power.copy()
    for d in range(1, len(g)):
        if d > 1:
            current = np.polynomial.polynomial.polymul(current, power)[: order + 1]
            current = np.pad(current, (0, order + 1 - len(current)))
        out += g[d] * current
    return out
