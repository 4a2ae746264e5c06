"""Upper half-plane geometry and explicit Fuchsian group models.

Points live in the upper half-plane and are handled as complex numbers
internally; :class:`Point` is the public wrapper.  Boundary points are real
floats, with ``math.inf`` standing for the point at infinity.

Two surface models are provided: a free Schottky group built by ping-pong on
disjoint half-disks, and the closed genus-2 surface obtained from the regular
hyperbolic octagon with angles pi/4.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

INF = math.inf

DET_TOL = 1e-12
RELATOR_TOL = 1e-9


class GeometryError(ValueError):
    pass


class NotHyperbolic(GeometryError):
    pass


class InvalidAnchor(GeometryError):
    pass


class InvalidSchottky(GeometryError):
    pass


class ModelConstructionFailed(GeometryError):
    pass


@dataclass(frozen=True)
class Point:
    x: float
    y: float

    def __post_init__(self):
        if not self.y > 0:
            raise GeometryError(f"point must lie in the upper half-plane, got y={self.y}")

    @property
    def z(self) -> complex:
        return complex(self.x, self.y)

    @classmethod
    def from_complex(cls, z: complex) -> "Point":
        return cls(float(z.real), float(z.imag))


def as_complex(p) -> complex:
    return p.z if isinstance(p, Point) else complex(p)


def distance(p, q) -> float:
    """Hyperbolic distance in the upper half-plane (curvature -1)."""
    z, w = as_complex(p), as_complex(q)
    return 2.0 * math.asinh(abs(z - w) / (2.0 * math.sqrt(z.imag * w.imag)))


def distance_array(z: np.ndarray, w) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    w = np.asarray(w, dtype=complex)
    return 2.0 * np.arcsinh(np.abs(z - w) / (2.0 * np.sqrt(z.imag * w.imag)))


# ---------------------------------------------------------------------------
# Words and generator symbols
# ---------------------------------------------------------------------------

# Generators are lower-case letters; their inverses are the upper-case letters.


def invert_letter(c: str) -> str:
    return c.lower() if c.isupper() else c.upper()


def invert_word(w: str) -> str:
    return "".join(invert_letter(c) for c in reversed(w))


def free_reduce(w: str) -> str:
    out: list[str] = []
    for c in w:
        if out and out[-1] == invert_letter(c):
            out.pop()
        else:
            out.append(c)
    return "".join(out)


# ---------------------------------------------------------------------------
# Moebius elements
# ---------------------------------------------------------------------------


def normalize_sl2(m: np.ndarray) -> np.ndarray:
    """Scale to determinant one and pick the sign with nonnegative trace."""
    m = np.array(m, dtype=float)
    det = np.linalg.det(m)
    scale = max(1.0, float(np.abs(m).max()) ** 2)
    # long words: det is 1 up to cancellation error of size eps * |m|^2
    if abs(det - 1.0) > DET_TOL * scale:
        if det <= 0:
            raise GeometryError(f"matrix does not preserve the upper half-plane (det={det})")
        m = m / math.sqrt(det)
    if m[0, 0] + m[1, 1] < 0:
        m = -m
    return m


@dataclass(frozen=True, eq=False)
class MobiusElement:
    matrix: np.ndarray
    word: str = ""

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float)
        if m.shape != (2, 2):
            raise GeometryError("Moebius matrix must be 2x2")
        if abs(np.linalg.det(m) - 1.0) > DET_TOL * max(1.0, float(np.abs(m).max()) ** 2):
            raise GeometryError(f"determinant {np.linalg.det(m)} is not 1")
        if m[0, 0] + m[1, 1] < 0:
            m = -m
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @classmethod
    def from_matrix(cls, m, word: str = "") -> "MobiusElement":
        return cls(normalize_sl2(m), word)

    @property
    def trace(self) -> float:
        return float(self.matrix[0, 0] + self.matrix[1, 1])

    def __matmul__(self, other: "MobiusElement") -> "MobiusElement":
        return MobiusElement.from_matrix(self.matrix @ other.matrix, free_reduce(self.word + other.word))

    def inverse(self) -> "MobiusElement":
        a, b, c, d = self.matrix.ravel()
        return MobiusElement(np.array([[d, -b], [-c, a]]), invert_word(self.word))

    def __pow__(self, k: int) -> "MobiusElement":
        if k < 0:
            return self.inverse() ** (-k)
        m = np.linalg.matrix_power(self.matrix, k)
        return MobiusElement.from_matrix(m, free_reduce(self.word * k))

    def __call__(self, z):
        return mobius_apply(self, z)


def identity() -> MobiusElement:
    return MobiusElement(np.eye(2), "")


def apply_matrix(m: np.ndarray, z):
    """Apply a real 2x2 matrix to complex point(s) or boundary values."""
    a, b, c, d = m.ravel()
    if np.isscalar(z) and not isinstance(z, complex) and math.isinf(z):
        return a / c if c != 0 else INF
    return (a * z + b) / (c * z + d)


def apply_boundary(m: np.ndarray, xi: float) -> float:
    a, b, c, d = np.asarray(m, dtype=float).ravel()
    if math.isinf(xi):
        return a / c if c != 0 else INF
    den = c * xi + d
    if den == 0:
        return INF
    return (a * xi + b) / den


def mobius_derivative(m: np.ndarray, z):
    a, b, c, d = m.ravel()
    return 1.0 / (c * z + d) ** 2


def mobius_apply(g: MobiusElement, z) -> Point:
    w = apply_matrix(g.matrix, as_complex(z))
    assert w.imag > 0, "Moebius image left the upper half-plane"
    return Point.from_complex(w)


def translation_length(g: MobiusElement | np.ndarray) -> float:
    m = g.matrix if isinstance(g, MobiusElement) else np.asarray(g)
    t = abs(m[0, 0] + m[1, 1])
    if t <= 2.0:
        raise NotHyperbolic(f"|trace| = {t} <= 2")
    return 2.0 * math.acosh(t / 2.0)


def axis(g: MobiusElement | np.ndarray) -> tuple[float, float]:
    """Repelling and attracting fixed points (xi_minus, xi_plus) on the boundary."""
    m = g.matrix if isinstance(g, MobiusElement) else normalize_sl2(g)
    a, b, c, d = m.ravel()
    tr = a + d
    if abs(tr) <= 2.0:
        raise NotHyperbolic(f"|trace| = {abs(tr)} <= 2")
    if c == 0:
        finite = b / (d - a)
        return (finite, INF) if abs(a) > abs(d) else (INF, finite)
    disc = math.sqrt(tr * tr - 4.0)
    # cancellation-free roots of c z^2 + (d - a) z - b = 0
    q = -0.5 * ((d - a) + math.copysign(disc, d - a))
    r1 = q / c
    r2 = -b / q if q != 0 else (a - d) / c - r1
    # attracting fixed point has |c z + d| > 1
    if abs(c * r1 + d) > abs(c * r2 + d):
        return r2, r1
    return r1, r2


# ---------------------------------------------------------------------------
# Geodesics
# ---------------------------------------------------------------------------


def frame_matrix(xi_minus: float, xi_plus: float) -> np.ndarray:
    """SL(2,R) matrix N with N(0) = xi_minus and N(inf) = xi_plus."""
    if xi_minus == xi_plus:
        raise GeometryError("geodesic endpoints coincide")
    if math.isinf(xi_plus):
        return np.array([[1.0, xi_minus], [0.0, 1.0]])
    if math.isinf(xi_minus):
        return np.array([[xi_plus, -1.0], [1.0, 0.0]])
    # N(w) = (xi_plus * w + k xi_minus) / (w + k) with k chosen so det > 0
    k = math.copysign(1.0, xi_plus - xi_minus)
    m = np.array([[xi_plus, k * xi_minus], [1.0, k]])
    return m / math.sqrt(abs(xi_plus - xi_minus))


@dataclass(frozen=True, eq=False)
class Geodesic:
    """Unit-speed oriented geodesic s -> N(i e^s), anchor at s = 0."""

    xi_minus: float
    xi_plus: float
    frame: np.ndarray = field(repr=False)

    @classmethod
    def through(cls, xi_minus: float, xi_plus: float, anchor=None) -> "Geodesic":
        n = frame_matrix(xi_minus, xi_plus)
        if anchor is not None:
            w = apply_matrix(np.linalg.inv(n), as_complex(anchor))
            if abs(w.real) > 1e-9 * abs(w):
                raise InvalidAnchor(f"anchor is off the geodesic by {abs(w.real) / w.imag:.3e}")
            n = n @ np.diag([math.sqrt(abs(w)), 1.0 / math.sqrt(abs(w))])
        return cls(xi_minus, xi_plus, n)

    @classmethod
    def from_point_towards(cls, z, xi_plus: float) -> "Geodesic":
        """Geodesic through z heading to the boundary point xi_plus, anchored at z."""
        z = as_complex(z)
        if math.isinf(xi_plus):
            return cls.through(z.real, INF, z)
        s = np.array([[0.0, -1.0], [1.0, -xi_plus]])  # xi_plus -> inf
        w = apply_matrix(s, z)
        xi_minus = apply_boundary(np.linalg.inv(s), w.real)
        return cls.through(xi_minus, xi_plus, z)

    @classmethod
    def between(cls, p, q) -> tuple["Geodesic", float]:
        """Geodesic from p through q, anchored at p, with the length d(p, q)."""
        z, w = as_complex(p), as_complex(q)
        a = np.array([[1.0, -z.real], [0.0, z.imag]]) / math.sqrt(z.imag)
        wq = apply_matrix(a, w)  # p sits at i now
        ainv = np.linalg.inv(a)
        if abs(wq.real) < 1e-15:
            xi = INF if wq.imag > 1.0 else 0.0
        else:
            c = (abs(wq) ** 2 - 1.0) / (2.0 * wq.real)
            rad = math.sqrt(1.0 + c * c)
            xi = c + rad if wq.real > 0 else c - rad
        xi = apply_boundary(ainv, xi)
        return cls.from_point_towards(z, xi), distance(z, w)

    def point(self, s):
        zeta = 1j * np.exp(s)
        return apply_matrix(self.frame, zeta)

    def velocity(self, s):
        zeta = 1j * np.exp(s)
        return mobius_derivative(self.frame, zeta) * zeta

    def normalize(self, z):
        """Coordinates in which this geodesic is the imaginary axis."""
        return apply_matrix(np.linalg.inv(self.frame), z)

    def distance_to(self, z) -> np.ndarray:
        w = self.normalize(np.asarray(z, dtype=complex))
        return np.arcsinh(np.abs(w.real) / w.imag)

    def parameter_of_projection(self, z) -> float:
        w = self.normalize(as_complex(z))
        return math.log(abs(w))

    def projection(self, z) -> complex:
        return complex(self.point(self.parameter_of_projection(z)))

    def shifted(self, s0: float) -> "Geodesic":
        n = self.frame @ np.diag([math.exp(s0 / 2), math.exp(-s0 / 2)])
        return Geodesic(self.xi_minus, self.xi_plus, n)


def geodesic_point(xi_minus: float, xi_plus: float, s: float, anchor) -> Point:
    geo = Geodesic.through(xi_minus, xi_plus, anchor)
    return Point.from_complex(complex(geo.point(s)))


def busemann(xi: float, z) -> np.ndarray:
    """Busemann function at boundary point xi, normalised by the frame sending xi to inf."""
    z = np.asarray(z, dtype=complex)
    if math.isinf(xi):
        return -np.log(z.imag)
    s = np.array([[0.0, -1.0], [1.0, -xi]])
    return -np.log(apply_matrix(s, z).imag)


# ---------------------------------------------------------------------------
# Disk model helpers (used only to construct the models)
# ---------------------------------------------------------------------------

_CAYLEY = np.array([[1j, 1j], [-1.0, 1.0]]) / np.sqrt(2j)  # disk -> half-plane
_CAYLEY_INV = np.linalg.inv(_CAYLEY)


def disk_to_half(w):
    return 1j * (1 + w) / (1 - w)


def half_to_disk(z):
    return (z - 1j) / (z + 1j)


def _disk_boundary_to_real(w: complex) -> float:
    if abs(w - 1) < 1e-14:
        return INF
    return float(disk_to_half(w).real)


def _su11_to_sl2(m: np.ndarray) -> np.ndarray:
    h = _CAYLEY @ m @ _CAYLEY_INV
    h = h / np.sqrt(np.linalg.det(h))
    k = np.unravel_index(np.argmax(np.abs(h)), h.shape)
    h = h * (abs(h[k]) / h[k])
    if np.abs(h.imag).max() > 1e-9 * np.abs(h).max():
        raise ModelConstructionFailed("disk isometry did not convert to a real matrix")
    return normalize_sl2(h.real)


def _disk_translation(length: float, angle: float) -> np.ndarray:
    ch, sh = math.cosh(length / 2), math.sinh(length / 2)
    return np.array([[ch, sh * np.exp(1j * angle)], [sh * np.exp(-1j * angle), ch]])


@dataclass(frozen=True)
class DiskSide:
    """A side of the fundamental domain: geodesic circle |w - center| = radius in the disk.

    Points strictly inside the circle lie beyond the side and are pulled back
    by applying ``generator``.
    """

    center: complex
    radius: float
    generator: str

    def endpoints(self) -> tuple[float, float]:
        d = abs(self.center)
        phi = np.angle(self.center)
        half = math.acos(1.0 / d)
        return (
            _disk_boundary_to_real(np.exp(1j * (phi - half))),
            _disk_boundary_to_real(np.exp(1j * (phi + half))),
        )


# ---------------------------------------------------------------------------
# Surface groups
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SurfaceGroup:
    kind: str
    generators: dict[str, MobiusElement]
    sides: tuple[DiskSide, ...]
    relator: str | None = None
    domain: dict = field(default_factory=dict)

    @property
    def rank(self) -> int:
        return len(self.generators)

    @property
    def alphabet(self) -> tuple[str, ...]:
        """Letters ordered a < A < b < B < ..."""
        out: list[str] = []
        for g in sorted(self.generators):
            out += [g, g.upper()]
        return tuple(out)

    def letter(self, c: str) -> MobiusElement:
        if c.islower():
            return self.generators[c]
        return self.generators[c.lower()].inverse()

    def word_matrix(self, w: str) -> np.ndarray:
        m = np.eye(2)
        for c in w:
            m = m @ self.letter(c).matrix
        return m

    def element(self, w: str) -> MobiusElement:
        return MobiusElement.from_matrix(self.word_matrix(w), w)

    def relator_residual(self) -> float:
        if self.relator is None:
            return 0.0
        m = self.word_matrix(self.relator)
        return float(min(np.abs(m - np.eye(2)).max(), np.abs(m + np.eye(2)).max()))

    def reduce_points(self, z: np.ndarray, max_iter: int = 10_000):
        """Pull points back into the fundamental domain.

        Returns ``(w, words, deriv)`` with ``w = gamma(z)`` in the closed
        domain, ``words[k]`` the word of ``gamma`` for the k-th point (so
        ``gamma = word_matrix(words[k])``) and ``deriv`` the complex derivative
        of ``gamma`` at z.
        """
        z = np.array(z, dtype=complex, copy=True)
        flat = z.ravel()
        words = [""] * flat.size
        deriv = np.ones(flat.size, dtype=complex)
        todo = np.arange(flat.size)
        for _ in range(max_iter):
            if todo.size == 0:
                break
            wd = half_to_disk(flat[todo])
            moved = np.zeros(todo.size, dtype=bool)
            for side in self.sides:
                inside = (np.abs(wd - side.center) < side.radius) & ~moved
                if not inside.any():
                    continue
                idx = todo[inside]
                m = self.letter(side.generator).matrix
                deriv[idx] *= mobius_derivative(m, flat[idx])
                flat[idx] = apply_matrix(m, flat[idx])
                for k in idx:
                    words[k] = free_reduce(side.generator + words[k])
                moved |= inside
            todo = todo[moved]
        else:
            raise GeometryError("point reduction did not terminate")
        return flat.reshape(z.shape), words, deriv.reshape(z.shape)

    def in_domain(self, z) -> bool:
        wd = half_to_disk(as_complex(z))
        return all(abs(wd - s.center) > s.radius for s in self.sides)

    def distance_to_boundary(self, z) -> float:
        """Hyperbolic distance from an interior point to the union of side geodesics."""
        z = as_complex(z)
        if not self.in_domain(z):
            return 0.0
        return min(float(Geodesic.through(*s.endpoints()).distance_to(z)) for s in self.sides)


def schottky_group(
    lambdas: Sequence[float] = (3.0, 3.0),
    angles: Sequence[float] | None = None,
) -> SurfaceGroup:
    """Free Schottky group of rank ``len(lambdas)``.

    Generator j translates by ``2 log lambda_j`` along the disk diameter at
    ``angles[j]``; the default angles are evenly spaced and offset so that no
    ping-pong disk contains the point mapped to infinity.
    """
    k = len(lambdas)
    if k < 1:
        raise InvalidSchottky("need at least one generator")
    if angles is None:
        angles = [math.pi / (2 * k) + j * math.pi / k for j in range(k)]
    if len(angles) != k:
        raise InvalidSchottky("one axis angle per generator required")
    names = "abcdefghijklmnopqrstuvwxyz"[:k]
    gens: dict[str, MobiusElement] = {}
    sides: list[DiskSide] = []
    for name, lam, theta in zip(names, lambdas, angles):
        if not lam > 1.0:
            raise InvalidSchottky(f"lambda must exceed 1, got {lam}")
        length = 2.0 * math.log(lam)
        m_disk = _disk_translation(length, theta)
        gens[name] = MobiusElement(_su11_to_sl2(m_disk), name)
        d, rad = 1.0 / math.tanh(length / 2), 1.0 / math.sinh(length / 2)
        # the translation maps the exterior of the circle at -d e^{i theta}
        # onto the interior of the circle at +d e^{i theta}
        sides.append(DiskSide(d * np.exp(1j * theta), rad, name.upper()))
        sides.append(DiskSide(-d * np.exp(1j * theta), rad, name))
    for s1, s2 in itertools.combinations(sides, 2):
        if abs(s1.center - s2.center) <= s1.radius + s2.radius:
            raise InvalidSchottky("ping-pong disks overlap or touch")
    for s in sides:
        if abs(1.0 - s.center) <= s.radius:
            raise InvalidSchottky("a ping-pong disk contains the disk point sent to infinity")
    group = SurfaceGroup("schottky", gens, tuple(sides))
    _check_ping_pong(group)
    half_disks = []
    for s in sides:
        e1, e2 = s.endpoints()
        half_disks.append({"center": (e1 + e2) / 2, "radius": abs(e2 - e1) / 2, "generator": s.generator})
    object.__setattr__(group, "domain", {"half_disks": half_disks})
    return group


def _check_ping_pong(group: SurfaceGroup) -> None:
    """Each generator must carry the boundary of its disk onto the paired disk."""
    by_gen = {s.generator: s for s in group.sides}
    for name in group.generators:
        g = group.letter(name).matrix
        src = by_gen[name]  # points inside src are moved by g to outside its partner
        dst = by_gen[name.upper()]
        for e in src.endpoints():
            img = apply_boundary(g, e)
            if min(abs(img - x) for x in dst.endpoints()) > 1e-8 * max(1.0, abs(img)):
                raise InvalidSchottky(f"generator {name} does not pair its ping-pong disks")


def _reflect_diameter(phi: float) -> np.ndarray:
    # anti-Moebius w -> e^{2 i phi} conj(w)
    return np.array([[np.exp(1j * phi), 0], [0, np.exp(-1j * phi)]])


def _reflect_circle(center: complex, radius: float) -> np.ndarray:
    # anti-Moebius w -> c + r^2 / (conj(w) - conj(c))
    c = center
    return np.array([[c, radius**2 - abs(c) ** 2], [1.0, -np.conj(c)]])


def _compose_anti(m1: np.ndarray, m2: np.ndarray) -> np.ndarray:
    """Matrix of the Moebius map (anti m1) o (anti m2)."""
    return m1 @ np.conj(m2)


def genus2_group() -> SurfaceGroup:
    """Regular octagon (all angles pi/4) with side pattern a b A B c d C D."""
    n = 8
    cosh_r = (1.0 / math.tan(math.pi / n)) ** 2  # circumradius from angle pi/4
    r_v = math.tanh(math.acosh(cosh_r) / 2)
    mid = [j * math.pi / 4 for j in range(n)]
    dist = (r_v**2 + 1.0) / (2 * r_v * math.cos(math.pi / n))
    circles = [(dist * np.exp(1j * phi), math.sqrt(dist**2 - 1.0)) for phi in mid]
    # sides j and j+2 are paired for j in {0, 1, 4, 5}
    pairs = {"a": (0, 2), "b": (1, 3), "c": (4, 6), "d": (5, 7)}
    disk_maps: dict[str, np.ndarray] = {}
    for name, (i, j) in pairs.items():
        # reflect side j onto side i across the bisecting diameter, then through side i
        bis = (mid[i] + mid[j]) / 2
        m = _compose_anti(_reflect_circle(*circles[i]), _reflect_diameter(bis))
        disk_maps[name] = m / np.sqrt(np.linalg.det(m))
    base = {k: _su11_to_sl2(v) for k, v in disk_maps.items()}
    relator = "abABcdCD"
    best = None
    for flips in itertools.product([False, True], repeat=4):
        mats = {k: (np.linalg.inv(m) if f else m) for (k, m), f in zip(base.items(), flips)}
        gens = {k: MobiusElement(normalize_sl2(m), k) for k, m in mats.items()}
        trial = SurfaceGroup("genus2", gens, (), relator)
        res = trial.relator_residual()
        if best is None or res < best[0]:
            best = (res, gens, flips)
    res, gens, flips = best
    if res > RELATOR_TOL:
        raise ModelConstructionFailed(f"octagon relator residual {res:.3e}")
    sides = []
    for (name, (i, j)), f in zip(pairs.items(), flips):
        # generator g maps side j onto side i (or the reverse when flipped);
        # a point beyond side i is pulled back by g^{-1}
        fwd, back = (name, name.upper()) if f else (name.upper(), name)
        sides.append(DiskSide(circles[i][0], circles[i][1], fwd))
        sides.append(DiskSide(circles[j][0], circles[j][1], back))
    group = SurfaceGroup("genus2", gens, tuple(sides), relator)
    _check_side_pairing(group)
    vertices = [
        complex(disk_to_half(r_v * np.exp(1j * (phi + math.pi / n)))) for phi in mid
    ]
    object.__setattr__(group, "domain", {"octagon_vertices": [(v.real, v.imag) for v in vertices]})
    return group


def _check_side_pairing(group: SurfaceGroup) -> None:
    """A point just beyond a side must land just inside the paired side."""
    for side in group.sides:
        w_out = side.center * (1 - (side.radius * 0.999) / abs(side.center))
        inner = side.center * (1 - (side.radius * 1.001) / abs(side.center))
        z = disk_to_half(w_out)
        z2 = apply_matrix(group.letter(side.generator).matrix, z)
        if not group.in_domain(z2) and not group.in_domain(disk_to_half(inner)):
            raise ModelConstructionFailed("side pairing check failed")
        if not group.in_domain(z2):
            raise ModelConstructionFailed(f"side pairing for {side.generator} maps outward")


def build_surface(spec: dict) -> SurfaceGroup:
    kind = spec.get("kind", "schottky")
    if kind == "schottky":
        return schottky_group(spec.get("lambdas", (3.0, 3.0)), spec.get("angles"))
    if kind == "genus2":
        return genus2_group()
    raise GeometryError(f"unknown surface kind {kind!r}")
