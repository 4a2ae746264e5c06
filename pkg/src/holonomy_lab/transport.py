"""Parallel transport along curves in the universal cover, holonomy of closed geodesics.

Transport solves U'(t) = -A(c(t))(c'(t)) U(t) in the trivialisation of the
pulled-back bundle over the half-plane, with a classical RK4 step followed by
projection onto the unitary group.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import scipy.optimize

from ._linalg import polar_unitary, unitarity_defect
from .bundle import ConnectionBase, MixedConnection
from .classes import ClosedGeodesic, ConjClass
from .hyperbolic import Geodesic, apply_matrix, as_complex, mobius_derivative

STEPS_PER_UNIT = 32
MIN_STEPS = 64

# curve(tau) -> (points, derivatives), vectorised over tau
Curve = Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]]


class StepCountTooSmall(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class TransportResult:
    matrix: np.ndarray
    path: object
    steps: int

    @property
    def unitarity_defect(self) -> float:
        return unitarity_defect(self.matrix)


@dataclass(frozen=True, eq=False)
class Holonomy:
    cls: ConjClass
    matrix: np.ndarray

    @property
    def trace(self) -> complex:
        return complex(np.trace(self.matrix))


def default_steps(length: float, steps_per_unit: int = STEPS_PER_UNIT) -> int:
    return max(MIN_STEPS, math.ceil(steps_per_unit * abs(length)))


def _rk4(gen_at, u, a: float, b: float, m0=None):
    h = b - a
    m = gen_at(np.array([a, 0.5 * (a + b), b]))
    if m0 is not None:
        m[0] = m0
    k1 = m[0] @ u
    k2 = m[1] @ (u + 0.5 * h * k1)
    k3 = m[1] @ (u + 0.5 * h * k2)
    k4 = m[2] @ (u + h * k3)
    return polar_unitary(u + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4))


def _crossings(level_at, a: float, b: float, la: np.ndarray, lb: np.ndarray) -> list[float]:
    # support edges are where a level changes sign; the form is only C^1 there
    out = []
    for k in np.nonzero((la > 0) != (lb > 0))[0]:
        out.append(scipy.optimize.brentq(lambda t: float(level_at(t)[k]), a, b, xtol=1e-15, rtol=1e-15))
    return sorted(out)


def integrate(conn: ConnectionBase, curve: Curve, tau0: float, tau1: float, steps: int, u0=None) -> np.ndarray:
    """RK4 with polar re-unitarisation on [tau0, tau1] (tau1 < tau0 allowed).

    Steps that cross the edge of a support are split at the crossing so each
    piece sees a smooth integrand.
    """
    r = conn.rank
    u = np.eye(r, dtype=complex) if u0 is None else np.array(u0, dtype=complex)
    if steps < 1:
        raise StepCountTooSmall("at least one step is required")
    if conn.is_flat_trivial:
        return u
    h = (tau1 - tau0) / steps
    taus = tau0 + h * np.arange(2 * steps + 1) / 2.0
    z, dz = curve(taus)
    gen = -conn.eval(z, dz)
    level = conn.support_level(z)
    active = np.abs(gen).reshape(len(taus), -1).max(axis=1) > 0

    def gen_at(t):
        zz, dd = curve(t)
        return -conn.eval(zz, dd)

    def level_at(t):
        return conn.support_level(curve(np.array([t]))[0])[0]

    for k in range(steps):
        i = 2 * k
        lv = level[i : i + 3]
        cuts = _crossings(level_at, taus[i], taus[i + 1], lv[0], lv[1])
        cuts += _crossings(level_at, taus[i + 1], taus[i + 2], lv[1], lv[2])
        cuts = sorted(cuts)
        if cuts:
            knots = [taus[i], *cuts, taus[i + 2]]
            for a, b in zip(knots[:-1], knots[1:]):
                if b != a:
                    u = _rk4(gen_at, u, a, b)
            continue
        if not (active[i] or active[i + 1] or active[i + 2]):
            continue
        m0, mh, m1 = gen[i], gen[i + 1], gen[i + 2]
        k1 = m0 @ u
        k2 = mh @ (u + 0.5 * h * k1)
        k3 = mh @ (u + 0.5 * h * k2)
        k4 = m1 @ (u + h * k3)
        u = polar_unitary(u + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4))
    return u


def integrate_through(
    conn: ConnectionBase, curve: Curve, breakpoints: Sequence[float], steps_per_unit: float
) -> list[np.ndarray]:
    """Transports from breakpoints[0] to every breakpoint, in order."""
    out = [np.eye(conn.rank, dtype=complex)]
    u = out[0]
    for a, b in zip(breakpoints[:-1], breakpoints[1:]):
        n = max(4, math.ceil(steps_per_unit * abs(b - a)))
        u = integrate(conn, curve, a, b, n, u)
        out.append(u)
    return out


def geodesic_curve(geo: Geodesic) -> Curve:
    return lambda s: (geo.point(s), geo.velocity(s))


def transport_geodesic(conn: ConnectionBase, geo: Geodesic, s0: float, s1: float, steps: int | None = None) -> TransportResult:
    length = abs(s1 - s0)
    if steps is None:
        steps = default_steps(length)
    if steps < 4 * length:
        raise StepCountTooSmall(f"{steps} steps for length {length:.3f}")
    u = integrate(conn, geodesic_curve(geo), s0, s1, steps)
    return TransportResult(u, (geo, s0, s1), steps)


def transport_segment(conn: ConnectionBase, start, xi: float, length: float, steps: int | None = None) -> TransportResult:
    """Transport from ``start`` along the geodesic heading to boundary point ``xi``."""
    geo = Geodesic.from_point_towards(as_complex(start), xi)
    return transport_geodesic(conn, geo, 0.0, length, steps)


def connector_transport(
    conn: ConnectionBase, x, y, steps: int | None = None, steps_per_unit: int = STEPS_PER_UNIT
) -> TransportResult:
    """Transport along the geodesic segment from x to y in the half-plane."""
    x, y = as_complex(x), as_complex(y)
    if x == y:
        return TransportResult(np.eye(conn.rank, dtype=complex), (x, y), 0)
    geo, length = Geodesic.between(x, y)
    if steps is None:
        steps = default_steps(length, steps_per_unit)
    return transport_geodesic(conn, geo, 0.0, length, max(steps, math.ceil(4 * length)))


def holonomy_class(conn: ConnectionBase, geo: ClosedGeodesic, steps: int | None = None) -> Holonomy:
    """Hol = rho(g)^{-1} P, P the transport along the axis from the base point to g(base point)."""
    res = transport_geodesic(conn, geo.geodesic, 0.0, geo.length, steps)
    rho = conn.rep.evaluate(geo.cls.word)
    return Holonomy(geo.cls, rho.conj().T @ res.matrix)


def holonomies(
    conn: ConnectionBase,
    geos: Sequence[ClosedGeodesic],
    steps_per_unit: int = STEPS_PER_UNIT,
    threads: int = 1,
) -> list[Holonomy]:
    def one(g):
        return holonomy_class(conn, g, default_steps(g.length, steps_per_unit))

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            return list(pool.map(one, geos))
    return [one(g) for g in geos]


# ---------------------------------------------------------------------------
# Ambrose-Singer on a geodesic square
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GeodesicSquare:
    """Homotopy Gamma(s, t), (s, t) in [0, 1]^2.

    Gamma(., 0) runs from ``corner`` for length ``side`` toward boundary point
    ``heading``; Gamma(s, .) is the geodesic of length ``side`` leaving
    Gamma(s, 0) perpendicularly to the right.
    """

    corner: complex
    side: float
    heading: float = math.inf

    def _frame(self) -> np.ndarray:
        return Geodesic.from_point_towards(self.corner, self.heading).frame

    def _local(self, s, t):
        h = self.side
        y = np.exp(h * s)
        th = h * t
        zeta = y * (np.tanh(th) + 1j / np.cosh(th))
        d_s = h * zeta
        d_t = y * h * (1.0 / np.cosh(th) ** 2 - 1j * np.tanh(th) / np.cosh(th))
        return zeta, d_s, d_t

    def point(self, s, t):
        zeta, _, _ = self._local(s, t)
        return apply_matrix(self._frame(), zeta)

    def tangents(self, s, t):
        n = self._frame()
        zeta, d_s, d_t = self._local(s, t)
        jac = mobius_derivative(n, zeta)
        return apply_matrix(n, zeta), jac * d_s, jac * d_t

    def s_curve(self, t: float) -> Curve:
        def curve(s):
            z, ds, _ = self.tangents(s, np.full_like(s, t))
            return z, ds

        return curve

    def t_curve(self, s: float) -> Curve:
        def curve(t):
            z, _, dt = self.tangents(np.full_like(t, s), t)
            return z, dt

        return curve


@dataclass(frozen=True)
class AmbroseSingerResult:
    lhs: np.ndarray
    rhs: np.ndarray

    @property
    def residual(self) -> float:
        return float(np.linalg.norm(self.lhs - self.rhs))

    @property
    def lhs_norm(self) -> float:
        return float(np.linalg.norm(self.lhs))


def ambrose_singer(conn: ConnectionBase, rect: GeodesicSquare, n: int = 16, steps_per_unit: float = 400.0) -> AmbroseSingerResult:
    """Both sides of C_up(1,1)^{-1} C_right(1,1) - 1 = double integral of C_up^{-1} F(d_t, d_s) C_right.

    The double integral uses an n x n tensor Gauss-Legendre rule; transports
    to interior nodes follow the vertical and horizontal recipes.
    """
    if n < 2:
        raise ValueError("need at least two quadrature nodes")
    x, w = np.polynomial.legendre.leggauss(n)
    nodes = 0.5 * (x + 1.0)
    weights = 0.5 * w
    grid = [0.0, *nodes, 1.0]

    left = integrate_through(conn, rect.t_curve(0.0), [0.0, 1.0], steps_per_unit)[-1]
    bottom = integrate_through(conn, rect.s_curve(0.0), grid, steps_per_unit)
    top = integrate_through(conn, rect.s_curve(1.0), grid, steps_per_unit)

    # column transports W_s(t) from Gamma(s, 0), at t nodes and t = 1
    s_vals = [*nodes, 1.0]
    columns = [integrate_through(conn, rect.t_curve(s), grid, steps_per_unit) for s in s_vals]

    ss, tt = np.meshgrid(nodes, nodes, indexing="ij")
    z, d_s, d_t = rect.tangents(ss, tt)
    curv = conn.curvature(z)
    area = (np.conj(d_t) * d_s).imag  # dx^dy(d_t, d_s)
    f_ts = curv * area[..., None, None]

    rhs = np.zeros((conn.rank, conn.rank), dtype=complex)
    for j in range(n):
        wcol = columns[j]
        w1 = wcol[-1]
        up_base = w1.conj().T @ top[j + 1] @ left  # C_up(s, t) = W(t) W(1)^{-1} top(s) left
        right_base = bottom[j + 1]
        for k in range(n):
            wt = wcol[k + 1]
            c_up = wt @ up_base
            c_right = wt @ right_base
            rhs += weights[j] * weights[k] * (c_up.conj().T @ f_ts[j, k] @ c_right)

    c_up_11 = top[-1] @ left
    c_right_11 = columns[-1][-1] @ bottom[-1]
    lhs = c_up_11.conj().T @ c_right_11 - np.eye(conn.rank)
    return AmbroseSingerResult(lhs, rhs)


def ambrose_singer_check(conn: ConnectionBase, rect: GeodesicSquare, n: int = 16, steps_per_unit: float = 400.0) -> float:
    if n < 8:
        raise ValueError("ambrose_singer_check needs n >= 8")
    return ambrose_singer(conn, rect, n, steps_per_unit).residual


# ---------------------------------------------------------------------------
# Mixed transport and connection-difference bound
# ---------------------------------------------------------------------------


def mixed_transport_check(
    conn1: ConnectionBase,
    conn2: ConnectionBase,
    start,
    xi: float,
    length: float,
    u0: np.ndarray,
    steps: int | None = None,
) -> float:
    """|| P u0 - C2 u0 C1^{-1} ||_F from three independent transports."""
    mixed = MixedConnection(conn1, conn2)
    r2, r1 = mixed.shape
    u0 = np.asarray(u0, dtype=complex).reshape(r2, r1)
    c1 = transport_segment(conn1, start, xi, length, steps).matrix
    c2 = transport_segment(conn2, start, xi, length, steps).matrix
    p = transport_segment(mixed, start, xi, length, steps).matrix
    pu = (p @ u0.ravel(order="F")).reshape((r2, r1), order="F")
    return float(np.linalg.norm(pu - c2 @ u0 @ c1.conj().T))


def c0_distance(conn1: ConnectionBase, conn2: ConnectionBase, centers: Sequence[complex], radius: float, samples: int = 80) -> float:
    """Sup over unit vectors of ||(A1 - A2)(v)||_F, sampled on balls around ``centers``.

    Equivariance makes the pointwise norm deck-invariant, so sampling the
    supports inside the fundamental domain is enough.
    """
    best = 0.0
    for c in centers:
        c = complex(c)
        rr, th = np.meshgrid(np.linspace(0, radius, samples), np.linspace(0, 2 * np.pi, samples, endpoint=False))
        # hyperbolic polar coordinates around i, moved to c by z -> Re c + Im c * z
        z = c.real + c.imag * _polar_point(rr, th)
        ax1, ay1 = conn1.components(z)
        ax2, ay2 = conn2.components(z)
        dx, dy = ax1 - ax2, ay1 - ay2
        gxx = np.einsum("...ij,...ij->...", dx.conj(), dx).real
        gyy = np.einsum("...ij,...ij->...", dy.conj(), dy).real
        gxy = np.einsum("...ij,...ij->...", dx.conj(), dy).real
        lam = 0.5 * (gxx + gyy) + np.sqrt(0.25 * (gxx - gyy) ** 2 + gxy**2)
        best = max(best, float(np.max(np.sqrt(lam) * z.imag)))
    return best


def _polar_point(r, theta):
    """Point at distance r from i in direction theta (theta = pi/2 is straight up)."""
    # exp map at i: rotate the vertical geodesic i e^r by the elliptic element fixing i
    c, s = np.cos((theta - np.pi / 2) / 2), np.sin((theta - np.pi / 2) / 2)
    w = 1j * np.exp(r)
    return (c * w - s) / (s * w + c)
