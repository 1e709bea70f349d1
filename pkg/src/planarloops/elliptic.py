"""Elliptic parametrization of the double-cup resolvent.

The affine images of the coupled measures occupy two short real cuts
[a1, a2] near 0 and [b1, b2] near 1.  The curve y^2 = prod (z - c) over
the four branch points is uniformized by

    u(z) = (i/2) sqrt((b1-a1)(b2-a2)) int_{b2}^z dz'/s(z'),

where s is the square root with cuts exactly on the two segments and
+z^2 behaviour at infinity (the product of principal square roots of the
four factors has precisely this branch structure).  The map sends the cut
plane to a rectangle with half-periods K (real) and K' (imaginary); the
point at infinity lands at u_inf on the imaginary axis with
u(z) = u_inf + z_{-1}/z + O(1/z^2), z_{-1} = -(i/2) sqrt((b1-a1)(b2-a2)).

The reparametrized Stieltjes transform of the upper measure is assembled
from ratios of the rescaled theta function: with delta = q + 1/q,

    omega_plus(u) = [phi(u) + phi(-u) + R(z(u))] / (q - 1/q),

where phi carries the two theta ratios with residue-matching constants
and R collects the inhomogeneous part.  (The sum phi(u) + phi(-u) is the
combination whose poles at +-u_inf cancel against R's; the residue
bookkeeping is asserted numerically in the tests.)

Small-coupling frames are seeded from hard-coded endpoint/coupling
expansions in the nome p and the asymmetry kappa (through p^{3/2} for the
endpoints, p^3 for the couplings); these same expansions double as golden
values for the particle route.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .errors import BranchError, PlanarLoopsError, RegimeError

# -- small-p expansions (endpoints through p^(3/2), couplings through p^3) ----


def series_alpha(p: float, kappa: float, delta: float) -> float:
    k, d = kappa, delta
    return k * (
        p
        - (k * (3 * d + 2) + (2 * d + 6) / k) * p**2
        + (
            (8 * d**2 + 5 * d + 3) * k**2
            + (8 * d**2 + 45 * d + 24)
            + (5 * d**2 + 12 * d + 17) / k**2
        )
        * p**3
    )


def series_beta(p: float, kappa: float, delta: float) -> float:
    return series_alpha(p, 1.0 / kappa, delta)


def series_endpoints(p: float, kappa: float, delta: float) -> tuple[float, float, float, float]:
    k, d = kappa, delta
    rp = math.sqrt(p)
    inner_a = 2.0 * ((3 + d) / k**2 + (1 + d) * k**2) * p * rp
    a1 = k * (-2 * rp + d * p + inner_a)
    a2 = k * (2 * rp + d * p - inner_a)
    inner_b = 2.0 * ((1 + d) / k**2 + (3 + d) * k**2) * p * rp
    b1 = 1.0 - (2 * rp + d * p - inner_b) / k
    b2 = 1.0 - (-2 * rp + d * p + inner_b) / k
    return a1, a2, b1, b2


def series_tilde_moment1(p: float, kappa: float, delta: float) -> float:
    k, d = kappa, delta
    return (
        k
        * d
        * (
            p
            - (k * (2 * d + 1) + (d + 5) / k) * p**2
            + (
                k**2 * (4 * d**2 + 1)
                + (3 * d**2 + 24 * d + 1)
                + (2 * d**2 + 4 * d + 11) / k**2
            )
            * p**3
        )
    )


def series_tilde_moment2(p: float, kappa: float, delta: float) -> float:
    k, d = kappa, delta
    return k * (
        p
        + (k * (d**2 - 2 * d - 2) - 2 * (3 + d) / k) * p**2
        + (
            k**2 * (-4 * d**3 + 3 * d**2 + 3 * d + 3)
            + (-2 * d**3 - 4 * d**2 + 36 * d + 24)
            + (5 * d**2 + 12 * d + 17) / k**2
        )
        * p**3
    )


def golden_moment_ratios(alpha: float, beta: float, delta: float) -> tuple[float, float]:
    """The printed small-coupling expansions of the two moment ratios.

    Returns ((1/alpha) int x dnu~+, (1/alpha^2)(int x^2 dnu~+ - alpha)) to
    second and first order respectively.
    """
    d = delta
    first = d + d * (1 + d) * (alpha + beta) + d * (
        (2 + 5 * d + 2 * d**2) * alpha**2
        + (6 + 8 * d + 4 * d**2) * alpha * beta
        + (2 + 5 * d + 2 * d**2) * beta**2
    )
    second = d * (1 + d) + d * (2 + 5 * d + 2 * d**2) * alpha + d * (3 + 4 * d + 2 * d**2) * beta
    return first, second


# -- theta function ------------------------------------------------------------


def theta(u: complex, big_k: float, big_kp: float, tol: float = 1e-16) -> complex:
    """The rescaled first theta function with half-periods (2K, 2iK').

    2 sum_n (-1)^n exp(-(n+1/2)^2 pi K'/K) sin((2n+1) pi u / 2K) for complex
    u; antiperiodic under u -> u+2K, twisted by -exp(pi(K'-iu)/K) under
    u -> u+2iK', with a single simple zero at 0 modulo the periods.  (The
    alternating sign is what makes those identities hold; the test suite
    pins them numerically.)
    """
    if big_k <= 0 or big_kp <= 0:
        raise ValueError("half-periods must be positive")
    ratio = math.pi * big_kp / big_k
    total = 0.0 + 0.0j
    scale = 0.0
    for n in range(200):
        amp = math.exp(-((n + 0.5) ** 2) * ratio)
        sign = -1.0 if n % 2 else 1.0
        term = 2.0 * sign * amp * cmath.sin((2 * n + 1) * math.pi * u / (2.0 * big_k))
        total += term
        scale = max(scale, abs(term))
        # sin grows like exp(|Im u| pi (2n+1) / 2K); bound the remainder
        growth = math.exp(abs(complex(u).imag) * math.pi * (2 * n + 3) / (2 * big_k))
        if amp * growth < tol * max(scale, 1e-300) and n >= 2:
            break
    return total


def theta_prime0(big_k: float, big_kp: float, tol: float = 1e-16) -> float:
    ratio = math.pi * big_kp / big_k
    total = 0.0
    for n in range(200):
        sign = -1.0 if n % 2 else 1.0
        term = 2.0 * sign * math.exp(-((n + 0.5) ** 2) * ratio) * (2 * n + 1) * math.pi / (2.0 * big_k)
        total += term
        if abs(term) < tol * abs(total) and n >= 2:
            break
    return total


# -- the frame -----------------------------------------------------------------


@dataclass
class EllipticFrame:
    delta: float
    p_in: float
    kappa_in: float
    alpha: float
    beta: float
    a1: float
    a2: float
    b1: float
    b2: float
    big_k: float
    big_kp: float
    u_inf: complex
    z_m1: complex
    q: complex
    nu: complex
    # quadrature scaffolding
    _gl_nodes: np.ndarray = None
    _gl_weights: np.ndarray = None
    _inverse_table: list = None

    @property
    def scale(self) -> float:
        return math.sqrt((self.b1 - self.a1) * (self.b2 - self.a2))

    def nome(self) -> float:
        return math.exp(-math.pi * self.big_kp / self.big_k)

    def kappa_out(self) -> float:
        value = self.nome() * cmath.exp(-2j * math.pi * self.u_inf / self.big_k)
        return float(value.real)

    # -- branch-consistent square root and the u-map ------------------------

    def _sqrt_q(self, z):
        z = np.asarray(z, dtype=complex)
        return (
            np.sqrt(z - self.a1) * np.sqrt(z - self.a2) * np.sqrt(z - self.b1) * np.sqrt(z - self.b2)
        )

    def _leg(self, z_from: complex, z_to: complex, singular_from=False, singular_to=False) -> complex:
        """Gauss-Legendre integral of dz/s(z) along a straight segment.

        Square-root endpoint singularities are removed by the w^2
        substitution on the affected half of the segment.
        """
        nodes, weights = self._gl_nodes, self._gl_weights

        def plain(za, zb):
            mid = (za + zb) / 2.0
            half = (zb - za) / 2.0
            zz = mid + half * nodes
            return half * np.sum(weights / self._sqrt_q(zz))

        def desing(z_sing, z_end):
            # z = z_sing + w^2 * (z_end - z_sing), w in [0, 1]
            span = z_end - z_sing
            w = (nodes + 1.0) / 2.0
            zz = z_sing + (w**2) * span
            vals = 2.0 * w * span / self._sqrt_q(zz)
            # remove the 1/sqrt factor analytically: near z_sing,
            # s(z) ~ sqrt(z - z_sing) * rest, and dz = 2 w span dw keeps the
            # integrand bounded; the quadrature handles the smooth remainder.
            return np.sum(weights * vals) / 2.0

        if singular_from and singular_to:
            mid = (z_from + z_to) / 2.0
            return self._leg(z_from, mid, True, False) + self._leg(mid, z_to, False, True)
        if singular_from:
            return desing(z_from, z_to)
        if singular_to:
            return -desing(z_to, z_from)
        return plain(z_from, z_to)

    def _is_branch_point(self, z: complex) -> bool:
        return any(abs(z - c) < 1e-13 for c in (self.a1, self.a2, self.b1, self.b2))

    def u_of_z(self, z: complex) -> complex:
        """u(z) with the upper-half-plane contour convention."""
        z = complex(z)
        if abs(z) > 3.0 * max(1.0, abs(self.b2), abs(self.a1)):
            return self._u_via_infinity(z)
        if z.imag < 0:
            return -self.u_of_z(z.conjugate()).conjugate()
        on_cut = abs(z.imag) < 1e-13 and (
            self.a1 - 1e-13 < z.real < self.a2 - 1e-13 or self.b1 + 1e-13 < z.real < self.b2 - 1e-13
        )
        if on_cut and not self._is_branch_point(z):
            raise BranchError(f"{z} lies on a branch cut")
        height = 0.75 * (self.b2 - self.a1)
        lift = complex(self.b2, height)
        total = self._leg(self.b2, lift, singular_from=True)
        target_lift = complex(z.real, max(z.imag, height))
        total += self._leg(lift, target_lift)
        total += self._leg(target_lift, z, singular_to=self._is_branch_point(z))
        return 0.5j * self.scale * total

    def z_of_u(self, u: complex, tol: float = 1e-11) -> complex:
        """Inverse map by Newton iteration, using periodicity to fold u.

        Residuals are reduced modulo the period lattice (2K, 2iK'), so
        targets on the identified rectangle edges converge too.
        """
        folded = self._fold(u)
        init = min(
            self._inverse_table,
            key=lambda pair: abs(self._lattice_reduce(pair[1] - folded)),
        )[0]
        z = complex(init)
        for _ in range(80):
            fu = self._lattice_reduce(self.u_of_z(z) - folded)
            if abs(fu) < tol * max(1.0, self.big_k):
                return z
            deriv = 0.5j * self.scale / complex(self._sqrt_q(z))
            step = fu / deriv
            cap = 0.5 * (abs(z) + 1.0)
            if abs(step) > cap:
                step *= cap / abs(step)
            z = z - step
        raise PlanarLoopsError(f"z(u) Newton iteration did not converge for u={u}")

    def _u_via_infinity(self, z: complex) -> complex:
        """u(z) = u_inf - (i/2) scale * int_z^inf dz'/s via w = 1/z'.

        The straight w-segment [0, 1/z] stays far from the w-images of the
        cuts whenever |z| is a few diameters out, so one Gauss-Legendre leg
        suffices and the accuracy is uniform in |z| (used near the pole of
        z(u) where the direct contour would need very long legs).
        """
        w_end = 1.0 / z
        nodes, weights = self._gl_nodes, self._gl_weights
        half = w_end / 2.0
        w = half + half * nodes
        vals = np.ones_like(w, dtype=complex)
        for c in (self.a1, self.a2, self.b1, self.b2):
            vals = vals * np.sqrt(1.0 - c * w)
        tail = half * np.sum(weights / vals)
        return self.u_inf - 0.5j * self.scale * tail

    def _lattice_reduce(self, d: complex) -> complex:
        two_k, two_kp = 2.0 * self.big_k, 2.0 * self.big_kp
        re = (d.real + self.big_k) % two_k - self.big_k
        im = (d.imag + self.big_kp) % two_kp - self.big_kp
        return complex(re, im)

    def _fold(self, u: complex) -> complex:
        two_k, two_kp = 2.0 * self.big_k, 2.0 * self.big_kp
        re = (u.real + self.big_k) % two_k - self.big_k
        im = u.imag % two_kp
        if im > self.big_kp:
            re, im = -re, two_kp - im
        return complex(re, im)


def elliptic_frame_from_pk(p: float, kappa: float, delta: float, gl_points: int = 220) -> EllipticFrame:
    """Frame from the nome and asymmetry, endpoints seeded by the expansions.

    Valid for small p (the expansions carry the error); the recomputed nome
    exp(-pi K'/K) is checked against the input as an internal consistency
    guard.
    """
    if not 0 < p < 0.05:
        raise RegimeError("the endpoint expansions are validated for p < 0.05 only")
    if kappa <= 0:
        raise ValueError("kappa must be positive")
    a1, a2, b1, b2 = series_endpoints(p, kappa, delta)
    if not a1 < a2 < b1 < b2:
        raise RegimeError("endpoint expansions produced a degenerate configuration")
    alpha = series_alpha(p, kappa, delta)
    beta = series_beta(p, kappa, delta)
    if delta == 2.0:
        raise RegimeError("delta = 2 is the degenerate boundary of the elliptic route")
    if delta < 2.0:
        nu = math.acos(delta / 2.0) / math.pi
        q = cmath.exp(1j * math.pi * nu)
    else:
        q = (delta - math.sqrt(delta * delta - 4.0)) / 2.0
        nu = cmath.log(q) / (1j * math.pi)
    nodes, weights = np.polynomial.legendre.leggauss(gl_points)
    frame = EllipticFrame(
        delta=delta, p_in=p, kappa_in=kappa, alpha=alpha, beta=beta,
        a1=a1, a2=a2, b1=b1, b2=b2,
        big_k=1.0, big_kp=1.0, u_inf=0j, z_m1=0j, q=q, nu=nu,
        _gl_nodes=nodes, _gl_weights=weights,
    )
    # half-periods and the image of infinity
    u_b1 = frame.u_of_z(frame.b1)
    frame.big_k = abs(u_b1.real)
    if abs(u_b1.imag) > 1e-8 * max(1.0, frame.big_k):
        raise PlanarLoopsError("u(b1) is not real; branch bookkeeping failed")
    u_a1 = frame.u_of_z(frame.a1)
    frame.big_kp = u_a1.imag
    if abs(u_a1.real) > 1e-7 * max(1.0, frame.big_kp):
        raise PlanarLoopsError("u(a1) is not purely imaginary; branch bookkeeping failed")
    frame.u_inf = _u_infinity(frame)
    frame.z_m1 = -0.5j * frame.scale
    if abs(frame.nome() - p) > 0.05 * p:
        raise PlanarLoopsError(
            f"recomputed nome {frame.nome():.3e} deviates from the input {p:.3e}"
        )
    # inverse-map table: ring around both cuts plus axis points
    table = []
    center = (frame.a1 + frame.b2) / 2.0
    radius = 1.2 * (frame.b2 - frame.a1)
    for angle in np.linspace(0.05, math.pi - 0.05, 24):
        z = center + radius * cmath.exp(1j * angle)
        table.append((z, frame.u_of_z(z)))
    for x in np.linspace(frame.a2 + 0.05 * (frame.b1 - frame.a2), frame.b1 - 0.05 * (frame.b1 - frame.a2), 12):
        table.append((complex(x), frame.u_of_z(complex(x))))
    for x in np.linspace(frame.b2 + 0.02, frame.b2 + 3.0, 10):
        table.append((complex(x), frame.u_of_z(complex(x))))
    for x in np.linspace(frame.a1 - 3.0, frame.a1 - 0.02, 10):
        table.append((complex(x), frame.u_of_z(complex(x))))
    frame._inverse_table = table
    return frame


def _u_infinity(frame: EllipticFrame) -> complex:
    """Integral from b2 to +infinity: finite leg plus the 1/w-substituted tail."""
    nodes, weights = frame._gl_nodes, frame._gl_weights
    big_r = frame.b2 + 12.0 * (frame.b2 - frame.a1)
    finite = frame._leg(frame.b2, big_r, singular_from=True)
    # z = 1/w: int_R^inf dz/s(z) = int_0^{1/R} dw / sqrt(prod(1 - c w))
    cs = (frame.a1, frame.a2, frame.b1, frame.b2)
    half = 0.5 / big_r
    w = half + half * nodes
    vals = np.ones_like(w, dtype=complex)
    for c in cs:
        vals = vals * np.sqrt(1.0 - c * w)
    tail = half * np.sum(weights / vals)
    return 0.5j * frame.scale * (finite + tail)


# -- the resolvent -------------------------------------------------------------


def phi_plus(frame: EllipticFrame, u: complex) -> complex:
    """Theta-ratio building block with residue-matching constants."""
    k, kp = frame.big_k, frame.big_kp
    q = frame.q
    shift = 2.0 * frame.nu * k
    tp0 = theta_prime0(k, kp)
    t_shift = theta(shift, k, kp)
    if abs(t_shift) < 1e-300:
        raise PlanarLoopsError("theta(2 nu K) vanishes; degenerate frame")
    front = frame.z_m1 * tp0 / t_shift / (q - 1.0 / q)
    c_plus = -front * (1.0 / frame.alpha + q / frame.beta)
    c_minus = front * (1.0 / frame.alpha + 1.0 / (q * frame.beta))
    return c_plus * theta(u - frame.u_inf - shift, k, kp) / theta(u - frame.u_inf, k, kp) + (
        c_minus * theta(u + frame.u_inf - shift, k, kp) / theta(u + frame.u_inf, k, kp)
    )


def inhomogeneous_r(frame: EllipticFrame, z: complex) -> complex:
    q = frame.q
    return (2.0 * q / (1.0 - q * q)) * z / frame.alpha + (
        (q * q + 1.0) / (1.0 - q * q) * (z - 1.0) / frame.beta
    )


def omega_plus(frame: EllipticFrame, u: complex, z: complex | None = None) -> complex:
    """Reparametrized Stieltjes transform of the upper affine measure.

    ``z`` may be supplied when u = u(z) is already known (avoiding the
    inverse map); near the poles +-u_inf evaluation is refused.
    """
    for pole in (frame.u_inf, -frame.u_inf):
        if abs(frame._fold(u) - frame._fold(pole)) < 1e-9 * max(frame.big_k, 1.0):
            raise BranchError("u sits on a pole of the parametrization")
    if z is None:
        z = frame.z_of_u(u)
    q = frame.q
    return (phi_plus(frame, u) + phi_plus(frame, -u) + inhomogeneous_r(frame, z)) / (q - 1.0 / q)


def omega_plus_at_z(frame: EllipticFrame, z: complex) -> complex:
    return omega_plus(frame, frame.u_of_z(z), z=z)
