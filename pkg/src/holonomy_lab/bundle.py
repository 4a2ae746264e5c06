"""Unitary connections on Hermitian bundles over the surface models.

A bundle is the flat bundle of a unitary representation rho of the surface
group: sections are maps s on the upper half-plane with s(g z) = rho(g) s(z).
A connection is d + A where A is a skew-Hermitian matrix-valued 1-form on the
half-plane with the equivariance A(g z)(dg v) = rho(g) A(z)(v) rho(g)^{-1}.

Every connection here is described by its *local form* on the fundamental
domain (a finite sum of compactly supported bumps) and extended to the whole
half-plane by that equivariance.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np
import scipy.linalg

from ._linalg import skew_defect, unitarity_defect
from .hyperbolic import SurfaceGroup, as_complex

UNITARY_TOL = 1e-10
REP_RELATOR_TOL = 1e-8
FD_STEP = 1e-5


class BundleError(ValueError):
    pass


class RankMismatch(BundleError):
    pass


# ---------------------------------------------------------------------------
# Representations
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class UnitaryRep:
    group: SurfaceGroup
    matrices: dict[str, np.ndarray]

    def __post_init__(self):
        mats = {}
        ranks = set()
        for name in self.group.generators:
            if name not in self.matrices:
                raise BundleError(f"missing matrix for generator {name!r}")
            m = np.array(self.matrices[name], dtype=complex)
            if m.ndim != 2 or m.shape[0] != m.shape[1]:
                raise BundleError(f"matrix for {name!r} is not square")
            if unitarity_defect(m) > UNITARY_TOL:
                raise BundleError(f"matrix for {name!r} is not unitary (defect {unitarity_defect(m):.2e})")
            m.setflags(write=False)
            mats[name] = m
            ranks.add(m.shape[0])
        if len(ranks) != 1:
            raise RankMismatch("generator matrices have different sizes")
        object.__setattr__(self, "matrices", mats)
        if self.group.relator is not None:
            res = np.abs(self.evaluate(self.group.relator) - np.eye(self.rank)).max()
            if res > REP_RELATOR_TOL:
                raise BundleError(f"representation violates the surface relator (residual {res:.2e})")

    @property
    def rank(self) -> int:
        return next(iter(self.matrices.values())).shape[0]

    def letter(self, c: str) -> np.ndarray:
        m = self.matrices[c.lower()]
        return m if c.islower() else m.conj().T

    def evaluate(self, word: str) -> np.ndarray:
        return _evaluate_cached(self, word)

    @classmethod
    def trivial(cls, group: SurfaceGroup, rank: int) -> "UnitaryRep":
        return cls(group, {g: np.eye(rank) for g in group.generators})

    @classmethod
    def character(cls, group: SurfaceGroup, phases: dict[str, float]) -> "UnitaryRep":
        """Rank-one representation sending generator g to exp(i phases[g])."""
        return cls(group, {g: np.array([[np.exp(1j * phases.get(g, 0.0))]]) for g in group.generators})

    def conjugate_by(self, u: np.ndarray) -> "UnitaryRep":
        """The representation u rho u^{-1}."""
        return UnitaryRep(self.group, {g: u @ m @ u.conj().T for g, m in self.matrices.items()})


@lru_cache(maxsize=65536)
def _evaluate_cached(rep: UnitaryRep, word: str) -> np.ndarray:
    if not word:
        return np.eye(rep.rank, dtype=complex)
    if len(word) == 1:
        return rep.letter(word)
    half = len(word) // 2
    return _evaluate_cached(rep, word[:half]) @ _evaluate_cached(rep, word[half:])


def block_diag_rep(r1: UnitaryRep, r2: UnitaryRep) -> UnitaryRep:
    if r1.group is not r2.group:
        raise BundleError("representations live on different surface groups")
    return UnitaryRep(
        r1.group, {g: scipy.linalg.block_diag(r1.matrices[g], r2.matrices[g]) for g in r1.group.generators}
    )


# ---------------------------------------------------------------------------
# Bump profiles
# ---------------------------------------------------------------------------


def _cosh_distance(w, c: complex):
    w = np.asarray(w, dtype=complex)
    return 1.0 + np.abs(w - c) ** 2 / (2.0 * w.imag * c.imag)


def bump_profile(w, center: complex, radius: float) -> np.ndarray:
    """(1 - (d/R)^2)^2 inside the hyperbolic ball of radius R, zero outside."""
    d = np.arccosh(np.maximum(_cosh_distance(w, center), 1.0))
    s2 = (d / radius) ** 2
    return np.where(s2 < 1.0, (1.0 - s2) ** 2, 0.0)


def bump_gradient(w, center: complex, radius: float) -> tuple[np.ndarray, np.ndarray]:
    """Partial derivatives (d/dx, d/dy) of :func:`bump_profile`."""
    w = np.asarray(w, dtype=complex)
    x, y = w.real, w.imag
    xc, yc = center.real, center.imag
    q = _cosh_distance(w, center)
    d = np.arccosh(np.maximum(q, 1.0))
    s2 = (d / radius) ** 2
    sinh_d = np.sinh(d)
    ratio = np.where(d > 1e-8, d / np.where(d > 1e-8, sinh_d, 1.0), 1.0)
    factor = np.where(s2 < 1.0, -4.0 * (1.0 - s2) / radius**2 * ratio, 0.0)
    dq_dx = (x - xc) / (y * yc)
    dq_dy = (y - yc) / (y * yc) - np.abs(w - center) ** 2 / (2.0 * y**2 * yc)
    return factor * dq_dx, factor * dq_dy


@dataclass(frozen=True, eq=False)
class BumpForm:
    """f(d(z, center)/radius) (coeff_dx dx + coeff_dy dy) on the fundamental domain."""

    center: complex
    radius: float
    coeff_dx: np.ndarray
    coeff_dy: np.ndarray

    def __post_init__(self):
        c = as_complex(self.center)
        if not c.imag > 0:
            raise BundleError("bump center must lie in the upper half-plane")
        if not self.radius > 0:
            raise BundleError("bump radius must be positive")
        cx = np.array(self.coeff_dx, dtype=complex)
        cy = np.array(self.coeff_dy, dtype=complex)
        if cx.shape != cy.shape or cx.ndim != 2 or cx.shape[0] != cx.shape[1]:
            raise BundleError("bump coefficients must be square matrices of equal size")
        if max(skew_defect(cx), skew_defect(cy)) > 1e-12:
            raise BundleError("bump coefficients must be skew-Hermitian")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "coeff_dx", cx)
        object.__setattr__(self, "coeff_dy", cy)

    @property
    def rank(self) -> int:
        return self.coeff_dx.shape[0]

    def components(self, w) -> tuple[np.ndarray, np.ndarray]:
        f = bump_profile(w, self.center, self.radius)[..., None, None]
        return f * self.coeff_dx, f * self.coeff_dy

    def padded(self, rank: int, offset: int) -> "BumpForm":
        cx = np.zeros((rank, rank), dtype=complex)
        cy = np.zeros((rank, rank), dtype=complex)
        k = self.rank
        cx[offset : offset + k, offset : offset + k] = self.coeff_dx
        cy[offset : offset + k, offset : offset + k] = self.coeff_dy
        return BumpForm(self.center, self.radius, cx, cy)


@dataclass(frozen=True, eq=False)
class GaugeElement:
    """Gauge map p = exp(f chi) near ``center``, identity elsewhere in the domain."""

    center: complex
    radius: float
    chi: np.ndarray

    def __post_init__(self):
        chi = np.array(self.chi, dtype=complex)
        if skew_defect(chi) > 1e-12:
            raise BundleError("gauge generator must be skew-Hermitian")
        object.__setattr__(self, "center", as_complex(self.center))
        object.__setattr__(self, "chi", chi)
        # chi = V diag(i theta) V^*
        theta, v = np.linalg.eigh(-1j * chi)
        object.__setattr__(self, "_eig", (theta, v))

    def local_matrix(self, w) -> np.ndarray:
        f = bump_profile(w, self.center, self.radius)
        theta, v = self._eig
        phase = np.exp(1j * f[..., None] * theta)
        return (v * phase[..., None, :]) @ v.conj().T


def _check_support(group: SurfaceGroup, center: complex, radius: float) -> None:
    margin = group.distance_to_boundary(center)
    if margin <= radius:
        raise BundleError(
            f"support of radius {radius} around {center} leaves the open fundamental domain "
            f"(distance to boundary {margin:.4f})"
        )


# ---------------------------------------------------------------------------
# Connections
# ---------------------------------------------------------------------------


class ConnectionBase:
    """Equivariant extension of a local form given on the fundamental domain.

    Subclasses implement :meth:`local_components` returning the dx and dy
    coefficient matrices at points of the fundamental domain.
    """

    rep: UnitaryRep

    @property
    def rank(self) -> int:
        return self.rep.rank

    @property
    def group(self) -> SurfaceGroup:
        return self.rep.group

    @property
    def is_flat_trivial(self) -> bool:
        return False

    def local_components(self, w: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError

    def supports(self) -> tuple[tuple[complex, float], ...]:
        """(center, radius) of every ball in the fundamental domain where the local form lives."""
        return ()

    def support_level(self, z) -> np.ndarray:
        """1 - (d/R)^2 at the reduced point for each support, shape z.shape + (n_supports,).

        Positive exactly inside a support.  The local form is smooth away from
        the zero sets, so transport splits steps at sign changes.
        """
        z = np.asarray(z, dtype=complex)
        sup = self.supports()
        if not sup:
            return np.zeros(z.shape + (0,))
        w, _, _ = self.group.reduce_points(z.ravel())
        lev = np.empty((w.size, len(sup)))
        for k, (c, rad) in enumerate(sup):
            d = np.arccosh(np.maximum(_cosh_distance(w, c), 1.0))
            lev[:, k] = 1.0 - (d / rad) ** 2
        return lev.reshape(z.shape + (len(sup),))

    def components(self, z) -> tuple[np.ndarray, np.ndarray]:
        """dx and dy coefficients of A at arbitrary points, shape (..., r, r)."""
        z = np.asarray(z, dtype=complex)
        r = self.rank
        shape = z.shape
        if self.is_flat_trivial:
            zero = np.zeros(shape + (r, r), dtype=complex)
            return zero, zero.copy()
        flat = z.ravel()
        w, words, gp = self.group.reduce_points(flat)
        lx, ly = self.local_components(w)
        # pull back the local form by gamma, then conjugate by rho(gamma)
        ax = gp.real[:, None, None] * lx + gp.imag[:, None, None] * ly
        ay = -gp.imag[:, None, None] * lx + gp.real[:, None, None] * ly
        cache: dict[str, np.ndarray] = {}
        for k, wd in enumerate(words):
            if not wd:
                continue
            if not (ax[k].any() or ay[k].any()):
                continue
            rho = cache.get(wd)
            if rho is None:
                rho = cache[wd] = self.rep.evaluate(wd)
            ax[k] = rho.conj().T @ ax[k] @ rho
            ay[k] = rho.conj().T @ ay[k] @ rho
        return ax.reshape(shape + (r, r)), ay.reshape(shape + (r, r))

    def eval(self, z, v) -> np.ndarray:
        """A(z)(v) for tangent vector(s) v given as complex numbers."""
        ax, ay = self.components(z)
        v = np.asarray(v, dtype=complex)
        return v.real[..., None, None] * ax + v.imag[..., None, None] * ay

    def curvature(self, z) -> np.ndarray:
        """dx^dy coefficient of dA + A^A; dA by centred differences."""
        z = np.asarray(z, dtype=complex)
        h = FD_STEP
        pts = np.stack([z, z + h, z - h, z + 1j * h, z - 1j * h])
        ax, ay = self.components(pts)
        d_ay_dx = (ay[1] - ay[2]) / (2 * h)
        d_ax_dy = (ax[3] - ax[4]) / (2 * h)
        return d_ay_dx - d_ax_dy + ax[0] @ ay[0] - ay[0] @ ax[0]


@dataclass(frozen=True, eq=False)
class Connection(ConnectionBase):
    rep: UnitaryRep
    bumps: tuple[BumpForm, ...] = ()
    name: str = ""

    def __post_init__(self):
        bumps = tuple(self.bumps)
        for b in bumps:
            if b.rank != self.rep.rank:
                raise RankMismatch(f"bump of rank {b.rank} on a rank-{self.rep.rank} bundle")
            _check_support(self.rep.group, b.center, b.radius)
        object.__setattr__(self, "bumps", bumps)

    @property
    def is_flat_trivial(self) -> bool:
        return not self.bumps

    def supports(self):
        return tuple((b.center, b.radius) for b in self.bumps)

    def local_components(self, w):
        w = np.asarray(w, dtype=complex)
        r = self.rank
        lx = np.zeros(w.shape + (r, r), dtype=complex)
        ly = np.zeros(w.shape + (r, r), dtype=complex)
        for b in self.bumps:
            bx, by = b.components(w)
            lx += bx
            ly += by
        return lx, ly

    @classmethod
    def flat(cls, rep: UnitaryRep, name: str = "") -> "Connection":
        return cls(rep, (), name)

    @classmethod
    def trivial(cls, group: SurfaceGroup, rank: int) -> "Connection":
        return cls(UnitaryRep.trivial(group, rank), (), f"trivial{rank}")


def connection_eval(conn: ConnectionBase, z, v) -> np.ndarray:
    return conn.eval(z, v)


def curvature_eval(conn: ConnectionBase, z) -> np.ndarray:
    return conn.curvature(z)


@dataclass(frozen=True, eq=False)
class GaugedConnection(ConnectionBase):
    """p^* nabla = nabla + p^{-1} (nabla^End p), i.e. A -> p^{-1} dp + p^{-1} A p."""

    base: ConnectionBase
    gauge: GaugeElement

    def __post_init__(self):
        _check_support(self.base.group, self.gauge.center, self.gauge.radius)
        if self.gauge.chi.shape[0] != self.base.rank:
            raise RankMismatch("gauge generator rank differs from the bundle rank")

    @property
    def rep(self) -> UnitaryRep:
        return self.base.rep

    def supports(self):
        return self.base.supports() + ((self.gauge.center, self.gauge.radius),)

    def local_components(self, w):
        lx, ly = self.base.local_components(w)
        p = self.gauge.local_matrix(w)
        pinv = np.swapaxes(p, -1, -2).conj()
        fx, fy = bump_gradient(w, self.gauge.center, self.gauge.radius)
        chi = self.gauge.chi
        # p^{-1} dp = chi df since p = exp(f chi)
        return (
            fx[..., None, None] * chi + pinv @ lx @ p,
            fy[..., None, None] * chi + pinv @ ly @ p,
        )

    def gauge_matrix(self, z) -> np.ndarray:
        """Equivariant extension p(z) = rho(gamma)^{-1} p(gamma z) rho(gamma)."""
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        w, words, _ = self.group.reduce_points(z)
        p = self.gauge.local_matrix(w)
        for k, wd in enumerate(words):
            if wd:
                rho = self.rep.evaluate(wd)
                p[k] = rho.conj().T @ p[k] @ rho
        return p


def gauge_transform(conn: ConnectionBase, g: GaugeElement) -> GaugedConnection:
    return GaugedConnection(conn, g)


def _kron_rep(rep1: UnitaryRep, rep2: UnitaryRep) -> UnitaryRep:
    # u -> rho2 u rho1^{-1} in column-stacked coordinates
    return UnitaryRep(
        rep1.group, {g: np.kron(rep1.matrices[g].conj(), rep2.matrices[g]) for g in rep1.group.generators}
    )


@dataclass(frozen=True, eq=False)
class MixedConnection(ConnectionBase):
    """Connection on Hom(E1, E2) acting by u -> du + A2 u - u A1.

    Sections u are r2 x r1 matrices; as a connection on C^{r1 r2} it uses
    column-stacked coordinates, so all transport machinery applies unchanged.
    """

    conn1: ConnectionBase
    conn2: ConnectionBase
    rep: UnitaryRep = field(init=False)

    def __post_init__(self):
        if self.conn1.group is not self.conn2.group:
            raise BundleError("connections live on different surface groups")
        object.__setattr__(self, "rep", _kron_rep(self.conn1.rep, self.conn2.rep))

    @property
    def shape(self) -> tuple[int, int]:
        return self.conn2.rank, self.conn1.rank

    @property
    def is_flat_trivial(self) -> bool:
        return self.conn1.is_flat_trivial and self.conn2.is_flat_trivial

    def supports(self):
        return self.conn1.supports() + self.conn2.supports()

    @staticmethod
    def _kron_form(m1, m2):
        r1, r2 = m1.shape[-1], m2.shape[-1]
        eye1, eye2 = np.eye(r1), np.eye(r2)
        left = np.einsum("ij,...kl->...ikjl", eye1, m2).reshape(m2.shape[:-2] + (r1 * r2, r1 * r2))
        right = np.einsum("...ji,kl->...ikjl", m1, eye2).reshape(m1.shape[:-2] + (r1 * r2, r1 * r2))
        return left - right

    def local_components(self, w):
        l1x, l1y = self.conn1.local_components(w)
        l2x, l2y = self.conn2.local_components(w)
        return self._kron_form(l1x, l2x), self._kron_form(l1y, l2y)

    def apply(self, z, v, u: np.ndarray) -> np.ndarray:
        """A2(z)(v) u - u A1(z)(v) for a single point."""
        a1 = self.conn1.eval(z, v)
        a2 = self.conn2.eval(z, v)
        return a2 @ u - u @ a1


def mixed_connection(conn1: ConnectionBase, conn2: ConnectionBase) -> MixedConnection:
    return MixedConnection(conn1, conn2)


def mixed_curvature_residual(conn1: ConnectionBase, conn2: ConnectionBase, z, u: np.ndarray) -> float:
    """|| F_Hom(z) u - (F2(z) u - u F1(z)) ||_F, every curvature by finite differences."""
    mixed = MixedConnection(conn1, conn2)
    r2, r1 = mixed.shape
    u = np.asarray(u, dtype=complex).reshape(r2, r1)
    f = mixed.curvature(complex(z))
    lhs = (f @ u.ravel(order="F")).reshape((r2, r1), order="F")
    rhs = conn2.curvature(complex(z)) @ u - u @ conn1.curvature(complex(z))
    return float(np.linalg.norm(lhs - rhs))


def direct_sum(conn1: Connection, conn2: Connection) -> Connection:
    r1, r2 = conn1.rank, conn2.rank
    rep = block_diag_rep(conn1.rep, conn2.rep)
    bumps = tuple(b.padded(r1 + r2, 0) for b in conn1.bumps) + tuple(b.padded(r1 + r2, r1) for b in conn2.bumps)
    name = f"{conn1.name}+{conn2.name}" if conn1.name and conn2.name else ""
    return Connection(rep, bumps, name)


def tensor_line(conn1: Connection, conn2: Connection) -> Connection:
    if conn1.rank != 1 or conn2.rank != 1:
        raise RankMismatch("tensor_line needs two rank-one connections")
    rep = UnitaryRep(conn1.group, {g: conn1.rep.matrices[g] @ conn2.rep.matrices[g] for g in conn1.group.generators})
    return Connection(rep, conn1.bumps + conn2.bumps)


def dual_line(conn: Connection) -> Connection:
    if conn.rank != 1:
        raise RankMismatch("dual_line needs a rank-one connection")
    rep = UnitaryRep(conn.group, {g: m.conj() for g, m in conn.rep.matrices.items()})
    bumps = tuple(BumpForm(b.center, b.radius, b.coeff_dx.conj(), b.coeff_dy.conj()) for b in conn.bumps)
    return Connection(rep, bumps)


def random_bumps(
    group: SurfaceGroup,
    rank: int,
    rng: np.random.Generator,
    count: int = 1,
    scale: float = 0.5,
    centers: Sequence[complex] | None = None,
    radius: float | None = None,
) -> tuple[BumpForm, ...]:
    """Bumps with random skew-Hermitian coefficients at admissible centres."""
    from ._linalg import random_skew_hermitian

    out = []
    for k in range(count):
        if centers is not None:
            c = complex(centers[k % len(centers)])
        else:
            c = _random_center(group, rng)
        margin = group.distance_to_boundary(c)
        rad = radius if radius is not None else min(0.6, 0.8 * margin)
        out.append(
            BumpForm(c, rad, random_skew_hermitian(rng, rank, scale), random_skew_hermitian(rng, rank, scale))
        )
    return tuple(out)


def _random_center(group: SurfaceGroup, rng: np.random.Generator) -> complex:
    for _ in range(1000):
        z = complex(rng.uniform(-1.5, 1.5), np.exp(rng.uniform(-0.5, 1.0)))
        if group.distance_to_boundary(z) > 0.3:
            return z
    raise BundleError("could not place a bump inside the fundamental domain")


__all__ = [
    "BumpForm",
    "Connection",
    "ConnectionBase",
    "GaugeElement",
    "GaugedConnection",
    "MixedConnection",
    "RankMismatch",
    "UnitaryRep",
    "bump_gradient",
    "bump_profile",
    "connection_eval",
    "curvature_eval",
    "direct_sum",
    "dual_line",
    "gauge_transform",
    "mixed_connection",
    "mixed_curvature_residual",
    "random_bumps",
    "tensor_line",
]
