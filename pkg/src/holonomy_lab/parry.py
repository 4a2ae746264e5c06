"""Homoclinic orbits to a reference closed geodesic and the Parry representation.

Notation: g* is a primitive hyperbolic element with axis from xi- to xi+,
x* the projection of i onto that axis and T* its translation length.  N is
the frame with N(0) = xi-, N(inf) = xi+, N(i) = x*, so g* acts on
N-coordinates as multiplication by exp(T*).

The homoclinic orbit with label h runs from xi- to h(xi+).  It is
parametrised so that gamma(s) and the axis point N(i e^s) lie on the same
horocycle at xi-; far along either end all computations are moved back near
x* by a deck transformation, which is exact by equivariance and keeps every
evaluated point well inside the half-plane.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from ._linalg import nullspace, polar_unitary
from .bundle import ConnectionBase, RankMismatch, UnitaryRep
from .classes import _cyclic_words_with_prefix, canonical_word, cyclic_reduce, primitive_root
from .hyperbolic import (
    Geodesic,
    MobiusElement,
    NotHyperbolic,
    SurfaceGroup,
    apply_boundary,
    apply_matrix,
    axis,
    distance,
    free_reduce,
    invert_word,
    translation_length,
)
from .transport import STEPS_PER_UNIT, connector_transport, default_steps, transport_geodesic

DELTA = 0.1
APPROACH_N = 8
INTERTWINER_TOL = 1e-9
DET_DRAWS = 50


class ParryError(ValueError):
    pass


class DegenerateEndpoints(ParryError):
    pass


class NoWrapFound(ParryError):
    pass


class EmptyConcatenation(ParryError):
    pass


def power_word(w: str, n: int) -> str:
    return w * n if n >= 0 else invert_word(w) * (-n)


def _fit_rate(values: Sequence[float]) -> tuple[float, float]:
    """Slope of -log(values) against 1..n and the R^2 of the fit."""
    y = np.log(np.asarray(values, dtype=float))
    x = np.arange(1, len(y) + 1, dtype=float)
    slope, icept = np.polyfit(x, y, 1)
    fit = slope * x + icept
    ss_res = float(np.sum((y - fit) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    return -float(slope), 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0


# ---------------------------------------------------------------------------
# Reference orbit and homoclinic orbits
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ReferenceOrbit:
    group: SurfaceGroup
    g_star: MobiusElement
    x_star: complex
    T_star: float
    geodesic: Geodesic  # anchored at x*

    @classmethod
    def from_word(cls, group: SurfaceGroup, word: str) -> "ReferenceOrbit":
        w = free_reduce(word)
        if not w:
            raise NotHyperbolic("the reference word is trivial")
        if primitive_root(cyclic_reduce(w))[1] != 1:
            raise ParryError(f"reference word {word!r} is not primitive")
        g = group.element(w)
        xm, xp = axis(g)
        geo = Geodesic.through(xm, xp)
        geo = geo.shifted(geo.parameter_of_projection(1j))
        return cls(group, g, complex(geo.point(0.0)), translation_length(g), geo)

    @property
    def word(self) -> str:
        return self.g_star.word

    @property
    def frame(self) -> np.ndarray:
        return self.geodesic.frame

    def rho_power(self, rep: UnitaryRep, n: int) -> np.ndarray:
        return np.linalg.matrix_power(rep.evaluate(self.word), n) if n >= 0 else np.linalg.matrix_power(
            rep.evaluate(self.word).conj().T, -n
        )

    def holonomy(self, conn: ConnectionBase, steps_per_unit: int = STEPS_PER_UNIT) -> np.ndarray:
        """Hol* = rho(g*)^{-1} P, P the transport from x* to g* x* along the axis."""
        p = transport_geodesic(conn, self.geodesic, 0.0, self.T_star, default_steps(self.T_star, steps_per_unit))
        return conn.rep.evaluate(self.word).conj().T @ p.matrix


def canonical_label(ref: ReferenceOrbit, h: str) -> str:
    """Shortest word in the double coset <g*> h <g*> reachable by stripping g*-powers."""
    g = ref.word
    w = free_reduce(h)
    changed = True
    while changed and w:
        changed = False
        for cand in (free_reduce(invert_word(g) + w), free_reduce(g + w), free_reduce(w + g), free_reduce(w + invert_word(g))):
            if len(cand) < len(w):
                w, changed = cand, True
                break
    return w


def _geodesic_from_frame(frame: np.ndarray) -> Geodesic:
    return Geodesic(apply_boundary(frame, 0.0), apply_boundary(frame, math.inf), frame)


@dataclass(frozen=True, eq=False)
class HomoclinicOrbit:
    ref: ReferenceOrbit
    label: MobiusElement
    xi_minus: float
    xi_plus: float
    degenerate: bool
    delta: float = DELTA
    p: float = math.inf  # N^{-1}(xi_plus)
    q: float = 0.0  # (hN)^{-1}(xi_minus)
    c: float = 0.0  # forward synchronisation offset
    j: int = 0  # A- = j T*
    jp: int = 0  # A+ = jp T* + c
    approach_minus: tuple[float, ...] = ()
    approach_plus: tuple[float, ...] = ()
    theta_minus: float = 0.0
    theta_plus: float = 0.0

    @property
    def T(self) -> float:
        return self.ref.T_star

    @property
    def A_minus(self) -> float:
        return self.j * self.T

    @property
    def A_plus(self) -> float:
        return self.jp * self.T + self.c

    @property
    def trunk_length(self) -> float:
        return self.A_plus - self.A_minus

    @property
    def theta(self) -> float:
        return min(self.theta_minus, self.theta_plus)

    # N-coordinates of the backward copy g*^n gamma, and of the forward copy
    # (h g*^m h^{-1})^{-1} gamma in hN-coordinates
    def backward_geodesic(self, n: int) -> tuple[Geodesic, float]:
        """(geodesic, parameter shift) with gamma(s) = g*^{-n} geo(s + shift)."""
        if self.degenerate:
            return self.ref.geodesic, n * self.T
        c = -math.exp(-n * self.T) / self.p
        return _geodesic_from_frame(self.ref.frame @ np.array([[-1.0, 0.0], [c, -1.0]])), n * self.T

    def forward_geodesic(self, m: int) -> tuple[Geodesic, float]:
        """(geodesic, parameter shift) with gamma(s) = (h g*^m h^{-1}) geo(s + shift)."""
        if self.degenerate:
            return self.ref.geodesic, -m * self.T
        nh = self.label.matrix @ self.ref.frame
        frame = nh @ np.array([[1.0, math.exp(-m * self.T) * self.q], [0.0, 1.0]])
        return _geodesic_from_frame(frame), -self.c - m * self.T

    def point(self, s: float) -> complex:
        geo, shift = self.backward_geodesic(0)
        return complex(geo.point(s + shift))

    def _deck_backward(self, rep: UnitaryRep, n: int) -> np.ndarray:
        # rho of g*^{-n}
        return self.ref.rho_power(rep, -n)

    def _deck_forward(self, rep: UnitaryRep, m: int) -> np.ndarray:
        rh = rep.evaluate(self.label.word)
        return rh @ self.ref.rho_power(rep, m) @ rh.conj().T

    def transport(self, conn: ConnectionBase, s0: float, s1: float, steps_per_unit: int = STEPS_PER_UNIT) -> np.ndarray:
        """Parallel transport along gamma from gamma(s0) to gamma(s1)."""
        T = self.T
        npieces = max(1, math.ceil(abs(s1 - s0) / T - 1e-12))
        knots = np.linspace(s0, s1, npieces + 1)
        mid_trunk = 0.5 * (self.A_minus + self.A_plus)
        u = np.eye(conn.rank, dtype=complex)
        for a, b in zip(knots[:-1], knots[1:]):
            mid = 0.5 * (a + b)
            if mid <= mid_trunk:
                n = round(-mid / T)
                geo, shift = self.backward_geodesic(n)
                deck = self._deck_backward(conn.rep, n)
            else:
                m = round((mid - self.c) / T)
                geo, shift = self.forward_geodesic(m)
                deck = self._deck_forward(conn.rep, m)
            piece = transport_geodesic(conn, geo, a + shift, b + shift, default_steps(abs(b - a), steps_per_unit)).matrix
            u = deck @ piece @ deck.conj().T @ u
        return u

    def with_trunk_shift(self, left: int, right: int) -> "HomoclinicOrbit":
        """Move A- back by ``left`` periods and A+ forward by ``right`` periods."""
        return replace(self, j=self.j - left, jp=self.jp + right)


def homoclinic_geodesic(ref: ReferenceOrbit, h: MobiusElement | str, delta: float = DELTA) -> HomoclinicOrbit:
    """Orbit from fix-(g*) to h fix+(g*) with trunk endpoints at first delta-entry times."""
    if isinstance(h, str):
        h = ref.group.element(free_reduce(h))
    xm, xp_star = ref.geodesic.xi_minus, ref.geodesic.xi_plus
    nf = ref.frame
    m = np.linalg.inv(nf) @ h.matrix @ nf  # h in N-coordinates
    scale = np.abs(m).max()
    if abs(m[1, 0]) <= 1e-12 * scale:
        # h fixes xi+, so h lies in <g*>: the orbit is the axis itself
        return HomoclinicOrbit(ref, h, xm, xp_star, True, delta)
    if abs(m[0, 0]) <= 1e-12 * scale:
        raise DegenerateEndpoints("h maps the attracting end of the axis onto the repelling one")
    p = m[0, 0] / m[1, 0]
    mi = np.linalg.inv(m)
    q = apply_boundary(mi, 0.0)
    xi_plus = apply_boundary(h.matrix, xp_star)
    orbit = HomoclinicOrbit(ref, h, xm, xi_plus, False, delta, p=p, q=q)
    # forward offset: gamma(0) in hN-coordinates sits at q + i e^{-c}
    g0 = orbit.point(0.0)
    w0 = apply_matrix(np.linalg.inv(h.matrix @ nf), g0)
    c = -math.log(w0.imag)
    T = ref.T_star
    # backward: d(gamma(s), axis(s)) = 2 asinh(e^s / (2|p|)); forward: 2 asinh(|q| e^{-(s-c)} / 2)
    sd = 2.0 * math.sinh(delta / 2.0)
    j = math.floor(math.log(sd * abs(p)) / T)
    jp = math.ceil(math.log(abs(q) / sd) / T) if q != 0 else 0
    if jp * T + c < j * T:
        jp += math.ceil((j * T - jp * T - c) / T)
    orbit = replace(orbit, c=c, j=j, jp=jp)
    return _with_approach(orbit)


def _with_approach(orbit: HomoclinicOrbit) -> HomoclinicOrbit:
    ref = orbit.ref
    dm, dp = [], []
    for n in range(1, APPROACH_N + 1):
        # x_n^- = g*^{j-n} geo_{n-j}(0) against g*^{j-n} x*
        geo, shift = orbit.backward_geodesic(n - orbit.j)
        dm.append(distance(complex(geo.point(orbit.A_minus - n * orbit.T + shift)), ref.x_star))
        geo, shift = orbit.forward_geodesic(orbit.jp + n)
        target = complex(apply_matrix(orbit.label.matrix, ref.x_star))
        dp.append(distance(complex(geo.point(orbit.A_plus + n * orbit.T + shift)), target))
    tm, _ = _fit_rate(dm)
    tp, _ = _fit_rate(dp)
    if not (tm > 0 and tp > 0):
        raise ParryError("approach to the reference orbit is not exponential")
    return replace(orbit, approach_minus=tuple(dm), approach_plus=tuple(dp), theta_minus=tm, theta_plus=tp)


# ---------------------------------------------------------------------------
# Wrap selection, spiral limit, Parry approximants
# ---------------------------------------------------------------------------


def select_wrap_sequence(u: np.ndarray, kmax: int, tol: float) -> list[int]:
    """All 1 <= k <= kmax with ||U^k - I||_F <= tol."""
    if kmax < 1:
        raise ValueError("kmax must be >= 1")
    lam = np.linalg.eigvals(np.asarray(u, dtype=complex))
    lam = lam / np.abs(lam)
    ks = np.arange(1, kmax + 1)
    # U is normal, so the Frobenius norm only sees the eigenvalues
    dev = np.sqrt(np.sum(np.abs(lam[None, :] ** ks[:, None] - 1.0) ** 2, axis=1))
    out = [int(k) for k in ks[dev <= tol]]
    if not out:
        raise NoWrapFound(f"no k <= {kmax} with ||U^k - I|| <= {tol}")
    return out


@dataclass(frozen=True, eq=False)
class SpiralResult:
    q: tuple[np.ndarray, ...]  # q_1 .. q_N
    limit: np.ndarray
    residuals: tuple[float, ...]  # ||q_n - q_N||, n = 1 .. N-2
    rate: float
    r_squared: float
    x0: complex


def spiral_limit(
    conn: ConnectionBase,
    ref: ReferenceOrbit,
    offset: float = 0.3,
    n_max: int = 8,
    steps_per_unit: int = STEPS_PER_UNIT,
) -> SpiralResult:
    """q_n = C(x*, nT)^{-1} C_{x_n -> x*} C(x0, nT) C_{x* -> x0} for x0 on the stable horocycle.

    x0 = N(offset + i); its forward flow is N(offset + i e^t).  In the lift
    all rho factors cancel, so q_n is a product of honest transports.
    """
    if n_max < 3:
        raise ValueError("n_max must be at least 3")
    nf = ref.frame
    T = ref.T_star
    rstar = conn.rep.evaluate(ref.word)
    steps = default_steps(T, steps_per_unit)

    def conj(n, m):
        r = np.linalg.matrix_power(rstar, n)
        return r @ m @ r.conj().T

    axis_piece = transport_geodesic(conn, ref.geodesic, 0.0, T, steps).matrix
    x0 = complex(apply_matrix(nf, offset + 1j))
    c0 = connector_transport(conn, ref.x_star, x0, steps_per_unit=steps_per_unit).matrix
    p_axis = np.eye(conn.rank, dtype=complex)
    p_flow = np.eye(conn.rank, dtype=complex)
    qs = []
    for n in range(1, n_max + 1):
        i = n - 1
        p_axis = conj(i, axis_piece) @ p_axis
        flow = _geodesic_from_frame(nf @ np.array([[1.0, offset * math.exp(-i * T)], [0.0, 1.0]]))
        p_flow = conj(i, transport_geodesic(conn, flow, 0.0, T, steps).matrix) @ p_flow
        xn = complex(apply_matrix(nf, offset * math.exp(-n * T) + 1j))
        back = conj(n, connector_transport(conn, xn, ref.x_star, steps_per_unit=steps_per_unit).matrix)
        qs.append(p_axis.conj().T @ back @ p_flow @ c0)
    limit = qs[-1]
    res = [float(np.linalg.norm(qs[n] - limit)) for n in range(n_max - 2)]
    if all(r > 0 for r in res):
        rate, r2 = _fit_rate(res)
    else:
        rate, r2 = math.inf, 1.0
    return SpiralResult(tuple(qs), limit, tuple(res), rate, r2, x0)


def parry_generator(
    conn: ConnectionBase,
    orbit: HomoclinicOrbit,
    k_n: int,
    k_m: int,
    steps_per_unit: int = STEPS_PER_UNIT,
) -> np.ndarray:
    """rho_{m,n}: connector from x*, k_n wraps in, the trunk, k_m wraps out, connector back to x*."""
    if orbit.degenerate:
        raise DegenerateEndpoints("the label lies in <g*>; the orbit is the reference orbit itself")
    ref = orbit.ref
    rep = conn.rep
    T = orbit.T
    s0 = orbit.A_minus - k_n * T
    s1 = orbit.A_plus + k_m * T
    # start: x* -> L0 = g*^{j-k_n} x*, identified through rho, then to gamma(s0)
    nb = k_n - orbit.j
    geo, shift = orbit.backward_geodesic(nb)
    c_in = connector_transport(conn, ref.x_star, complex(geo.point(s0 + shift)), steps_per_unit=steps_per_unit).matrix
    start = orbit._deck_backward(rep, nb) @ c_in  # = conn(L0 -> gamma(s0)) rho(g*^{j-k_n})
    middle = orbit.transport(conn, s0, s1, steps_per_unit)
    mf = orbit.jp + k_m
    geo, shift = orbit.forward_geodesic(mf)
    target = complex(apply_matrix(orbit.label.matrix, ref.x_star))
    c_out = connector_transport(conn, complex(geo.point(s1 + shift)), target, steps_per_unit=steps_per_unit).matrix
    deck = orbit._deck_forward(rep, mf)
    end = (rep.evaluate(orbit.label.word) @ ref.rho_power(rep, mf)).conj().T @ deck @ c_out @ deck.conj().T
    return end @ middle @ start


def flat_parry_oracle(rep: UnitaryRep, orbit: HomoclinicOrbit, k_n: int, k_m: int) -> np.ndarray:
    """rho(h g*^{j'+k_m})^{-1} rho(g*^{j-k_n}): the flat value of rho_{m,n}."""
    ref = orbit.ref
    left = rep.evaluate(orbit.label.word) @ ref.rho_power(rep, orbit.jp + k_m)
    return left.conj().T @ ref.rho_power(rep, orbit.j - k_n)


@dataclass(frozen=True, eq=False)
class ParryApproximant:
    label: str
    wraps: tuple[int, ...]
    matrices: tuple[np.ndarray, ...]  # rho_{n,n}
    limit: np.ndarray
    residuals: tuple[float, ...]  # ||rho_n - rho_N||
    steps: tuple[float, ...]  # ||rho_{n+1} - rho_n||

    @property
    def unitarity_defect(self) -> float:
        return max(float(np.linalg.norm(m.conj().T @ m - np.eye(m.shape[0]))) for m in self.matrices)


def parry_approximant(
    conn: ConnectionBase,
    orbit: HomoclinicOrbit,
    n_terms: int = 4,
    wraps: Sequence[int] | None = None,
    kmax: int = 10_000,
    tol: float = 1e-6,
    steps_per_unit: int = STEPS_PER_UNIT,
) -> ParryApproximant:
    if wraps is None:
        hol = orbit.ref.holonomy(conn, steps_per_unit)
        wraps = select_wrap_sequence(hol, kmax, tol)[:n_terms]
    wraps = tuple(int(k) for k in wraps)
    mats = tuple(parry_generator(conn, orbit, k, k, steps_per_unit) for k in wraps)
    limit = mats[-1]
    res = tuple(float(np.linalg.norm(m - limit)) for m in mats)
    steps = tuple(float(np.linalg.norm(b - a)) for a, b in zip(mats[:-1], mats[1:]))
    return ParryApproximant(orbit.label.word, wraps, mats, limit, res, steps)


def label_words(n_labels: int, depth: int) -> list[tuple[int, ...]]:
    out = []
    for d in range(depth + 1):
        out += list(itertools.product(range(n_labels), repeat=d))
    return out


def character_table(
    conn: ConnectionBase,
    ref: ReferenceOrbit,
    labels: Sequence[str],
    depth: int = 2,
    wrap: int | None = None,
    steps_per_unit: int = STEPS_PER_UNIT,
    threads: int = 1,
    generators: Sequence[np.ndarray] | None = None,
) -> dict[str, complex]:
    """Traces of products of Parry generators, keyed by space-separated label words."""
    if depth > 3:
        raise ValueError("depth must be at most 3")
    if generators is None:
        if wrap is None:
            wrap = select_wrap_sequence(ref.holonomy(conn, steps_per_unit), 10_000, 1e-6)[-1]

        def one(h):
            return parry_generator(conn, homoclinic_geodesic(ref, h), wrap, wrap, steps_per_unit)

        if threads > 1:
            with ThreadPoolExecutor(threads) as pool:
                generators = list(pool.map(one, labels))
        else:
            generators = [one(h) for h in labels]
    r = conn.rank
    table = {}
    for word in label_words(len(labels), depth):
        m = np.eye(r, dtype=complex)
        for i in word:
            m = m @ generators[i]
        table[" ".join(labels[i] for i in word)] = complex(np.trace(m))
    return table


def tune_finite_order(conn_factory, ref: ReferenceOrbit, rotation: np.ndarray, steps_per_unit: int = STEPS_PER_UNIT):
    """Choose rho(g*) so that the holonomy of the reference orbit is conjugate to ``rotation``.

    ``conn_factory(matrix)`` builds the connection with rho(g*) = matrix.  The
    reference must be a single generator: its axis then crosses the
    fundamental domain in one segment of length T* whose transport Q does not
    depend on rho, and rho(g*) = Q rotation^{-1} gives Hol* ~ rotation.
    """
    g = ref.word
    if len(g) != 1 or not g.islower():
        raise ParryError("finite-order tuning needs a single positive generator as reference")
    group = ref.group
    geo = ref.geodesic
    r = np.asarray(rotation).shape[0]
    if not group.in_domain(ref.x_star):
        raise ParryError("x* must lie in the fundamental domain")
    # exit parameter of the axis from the closed domain, by bisection
    lo, hi = 0.0, ref.T_star
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if group.in_domain(complex(geo.point(mid))):
            lo = mid
        else:
            hi = mid
    s_out = 0.5 * (lo + hi)
    probe = conn_factory(np.eye(r))
    q = transport_geodesic(probe, geo, s_out - ref.T_star, s_out, default_steps(ref.T_star, steps_per_unit)).matrix
    return conn_factory(q @ np.asarray(rotation).conj().T)


# ---------------------------------------------------------------------------
# Flat representations: intertwiners, commutants, invariant vectors
# ---------------------------------------------------------------------------


def _stacked_commutation(rep1: UnitaryRep, rep2: UnitaryRep) -> np.ndarray:
    # vec(rho1 p - p rho2) = (I kron rho1 - rho2^T kron I) vec(p), column-stacked
    r = rep1.rank
    eye = np.eye(r)
    blocks = [np.kron(eye, rep1.matrices[g]) - np.kron(rep2.matrices[g].T, eye) for g in rep1.group.generators]
    return np.vstack(blocks)


@dataclass(frozen=True, eq=False)
class IntertwinerResult:
    basis: tuple[np.ndarray, ...]
    p_star: np.ndarray | None  # unitary with rho1(g) p = p rho2(g)
    residual: float

    @property
    def dimension(self) -> int:
        return len(self.basis)

    @property
    def conjugator(self) -> np.ndarray | None:
        """u with rho2 = u rho1 u^{-1}, i.e. p_star^{-1}."""
        return None if self.p_star is None else self.p_star.conj().T


def solve_intertwiner(rep1: UnitaryRep, rep2: UnitaryRep, seed: int = 0) -> IntertwinerResult:
    if rep1.rank != rep2.rank:
        raise RankMismatch("intertwiners need representations of equal rank")
    r = rep1.rank
    ns = nullspace(_stacked_commutation(rep1, rep2), INTERTWINER_TOL)
    basis = tuple(ns[:, k].reshape((r, r), order="F") for k in range(ns.shape[1]))
    if not basis:
        return IntertwinerResult((), None, math.inf)
    rng = np.random.default_rng(seed)
    best, best_det = None, 0.0
    for _ in range(DET_DRAWS):
        coef = rng.normal(size=len(basis)) + 1j * rng.normal(size=len(basis))
        p = sum(c * b for c, b in zip(coef, basis))
        d = abs(np.linalg.det(p)) / np.linalg.norm(p) ** r
        if d > best_det:
            best, best_det = p, d
    if best_det <= 1e-8:
        return IntertwinerResult(basis, None, math.inf)
    # the polar factor of an intertwiner between unitary reps is again one
    u = polar_unitary(best)
    res = max(float(np.linalg.norm(rep1.matrices[g] @ u - u @ rep2.matrices[g])) for g in rep1.group.generators)
    return IntertwinerResult(basis, u, res)


def commutant_dimension(rep: UnitaryRep) -> int:
    return int(nullspace(_stacked_commutation(rep, rep), INTERTWINER_TOL).shape[1])


def common_fixed_vector(rep: UnitaryRep) -> np.ndarray | None:
    r = rep.rank
    stacked = np.vstack([rep.matrices[g] - np.eye(r) for g in rep.group.generators])
    ns = nullspace(stacked, INTERTWINER_TOL)
    if ns.shape[1] == 0:
        return None
    # project the standard basis vectors in turn so the answer is deterministic
    proj = ns @ ns.conj().T
    for k in range(r):
        v = proj[:, k]
        if np.linalg.norm(v) > 1e-6:
            return v / np.linalg.norm(v)
    return None  # pragma: no cover


def class_words(group: SurfaceGroup, max_len: int) -> list[str]:
    """Canonical cyclic words of length <= max_len (primitive or not)."""
    out = []
    for c in group.alphabet:
        out += _cyclic_words_with_prefix(c, group.alphabet, max_len)
    return sorted(out, key=lambda w: (len(w), [group.alphabet.index(ch) for ch in w]))


def distinguishing_word(rep1: UnitaryRep, rep2: UnitaryRep, radius: int = 6, tol: float = 1e-8) -> str | None:
    """First class word (shortlex) where the characters differ, or None."""
    for w in class_words(rep1.group, radius):
        if abs(np.trace(rep1.evaluate(w)) - np.trace(rep2.evaluate(w))) > tol:
            return w
    return None


@dataclass(frozen=True, eq=False)
class CharacterComparison:
    distinguishing_word: str | None
    intertwiner: IntertwinerResult | None

    @property
    def conjugate(self) -> bool:
        return self.intertwiner is not None and self.intertwiner.p_star is not None


def compare_flat(rep1: UnitaryRep, rep2: UnitaryRep, radius: int = 6) -> CharacterComparison:
    """Character scan over the ball, then the intertwiner if the characters agree."""
    w = distinguishing_word(rep1, rep2, radius)
    if w is not None:
        return CharacterComparison(w, None)
    return CharacterComparison(None, solve_intertwiner(rep1, rep2))


# ---------------------------------------------------------------------------
# Shadowing of concatenations
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ShadowingSegment:
    label: str
    wrap: int
    distances: tuple[float, ...]

    @property
    def max_distance(self) -> float:
        return max(self.distances)

    @property
    def mid_distance(self) -> float:
        return self.distances[len(self.distances) // 2]


@dataclass(frozen=True)
class ShadowingProfile:
    word: str
    wraps: tuple[int, ...]
    length: float
    primitive: bool
    segments: tuple[ShadowingSegment, ...]


def concatenation_word(ref: ReferenceOrbit, labels: Sequence[str], wraps: Sequence[int]) -> str:
    return "".join(free_reduce(h) + power_word(ref.word, k) for h, k in zip(labels, wraps))


def proof_wraps(ref: ReferenceOrbit, labels: Sequence[str], k: int, kmax: int = 1000) -> list[int]:
    """Wraps (k, ..., k, k_N) with the smallest k_N such that (k_N - k) T* > l(W)/2."""
    wraps = [k] * len(labels)
    for kn in range(k + 1, kmax + 1):
        wraps[-1] = kn
        w = concatenation_word(ref, labels, wraps)
        if (kn - k) * ref.T_star > translation_length(ref.group.element(w)) / 2:
            return wraps
    raise ParryError("no asymmetric wrap found")


def shadowing_profile(
    ref: ReferenceOrbit,
    labels: Sequence[str],
    k_wrap: int | Sequence[int],
    samples: int = 33,
) -> ShadowingProfile:
    """Distances from the pieces g*-axis translates of the pseudo-orbit to the closed geodesic of

    W = h_1 g*^{k_1} h_2 g*^{k_2} ..., sampled along each wrap block.
    """
    if not labels:
        raise EmptyConcatenation("no labels to concatenate")
    wraps = [k_wrap] * len(labels) if isinstance(k_wrap, int) else list(k_wrap)
    if len(wraps) != len(labels) or min(wraps) < 1:
        raise ValueError("one wrap count >= 1 per label is required")
    group = ref.group
    word = concatenation_word(ref, labels, wraps)
    cw = canonical_word(word, group)
    if not cw:
        raise EmptyConcatenation("the concatenated word is trivial")
    primitive = primitive_root(cw)[1] == 1
    nf = ref.frame
    ninv = np.linalg.inv(nf)
    T = ref.T_star
    segments = []
    tokens = []
    for h, k in zip(labels, wraps):
        tokens += [free_reduce(h), power_word(ref.word, k)]
    for i, h in enumerate(labels):
        # rotate W so it starts with the wrap block after label i; that block
        # is then the first piece of the pseudo-orbit from x*
        rot = "".join(tokens[2 * i + 1 :] + tokens[: 2 * i + 1])
        m = ninv @ group.word_matrix(rot) @ nf
        xm, xp = axis(m)
        target = Geodesic.through(xm, xp)
        s = np.linspace(0.0, wraps[i] * T, samples)
        d = target.distance_to(1j * np.exp(s))
        segments.append(ShadowingSegment(h, wraps[i], tuple(float(v) for v in d)))
    return ShadowingProfile(word, tuple(wraps), translation_length(group.element(word)), primitive, tuple(segments))


__all__ = [
    "CharacterComparison",
    "DegenerateEndpoints",
    "EmptyConcatenation",
    "HomoclinicOrbit",
    "IntertwinerResult",
    "NoWrapFound",
    "ParryApproximant",
    "ReferenceOrbit",
    "ShadowingProfile",
    "SpiralResult",
    "canonical_label",
    "character_table",
    "commutant_dimension",
    "common_fixed_vector",
    "compare_flat",
    "distinguishing_word",
    "flat_parry_oracle",
    "homoclinic_geodesic",
    "parry_approximant",
    "parry_generator",
    "proof_wraps",
    "select_wrap_sequence",
    "shadowing_profile",
    "solve_intertwiner",
    "spiral_limit",
    "tune_finite_order",
]
