import math

import numpy as np
import pytest

from conftest import random_rep
from holonomy_lab._linalg import random_skew_hermitian, random_unitary
from holonomy_lab.bundle import BumpForm, Connection, GaugeElement, UnitaryRep, direct_sum, gauge_transform, random_bumps, tensor_line
from holonomy_lab.classes import canonical_class, class_geodesic, enumerate_primitive_classes
from holonomy_lab.hyperbolic import Geodesic
from holonomy_lab.transport import (
    GeodesicSquare,
    StepCountTooSmall,
    ambrose_singer,
    ambrose_singer_check,
    c0_distance,
    connector_transport,
    default_steps,
    holonomy_class,
    holonomies,
    mixed_transport_check,
    transport_geodesic,
    transport_segment,
)


@pytest.fixture
def bumped(schottky, rng):
    return Connection(random_rep(schottky, rng), random_bumps(schottky, 2, rng, count=2, centers=[1j, 0.5 + 1.3j], radius=0.4))


def test_flat_transport_is_identity(schottky, rng):
    conn = Connection.flat(random_rep(schottky, rng))
    assert np.array_equal(transport_segment(conn, 1j, 2.0, 3.0).matrix, np.eye(2))
    assert np.array_equal(connector_transport(conn, 1j, 2 + 1j).matrix, np.eye(2))


def test_step_floor(bumped):
    with pytest.raises(StepCountTooSmall):
        transport_segment(bumped, 1j, 1.0, 5.0, steps=10)


def test_reverse_and_concatenation(bumped):
    geo = Geodesic.from_point_towards(1j * math.exp(-0.8), math.inf)
    fwd = transport_geodesic(bumped, geo, 0.0, 1.6, 128).matrix
    back = transport_geodesic(bumped, geo, 1.6, 0.0, 128).matrix
    assert np.linalg.norm(back @ fwd - np.eye(2)) <= 1e-9
    first = transport_geodesic(bumped, geo, 0.0, 0.8, 64).matrix
    second = transport_geodesic(bumped, geo, 0.8, 1.6, 64).matrix
    assert np.linalg.norm(second @ first - fwd) <= 1e-9
    res = transport_geodesic(bumped, geo, 0.0, 1.6, 128)
    assert res.unitarity_defect <= 1e-9


def test_self_convergence_order(bumped):
    geo = Geodesic.from_point_towards(1j * math.exp(-0.9) + 0.05, math.inf)
    ref = transport_geodesic(bumped, geo, 0.0, 1.8, 2560).matrix
    errs = [np.linalg.norm(transport_geodesic(bumped, geo, 0.0, 1.8, n).matrix - ref) for n in (16, 32, 64)]
    order = np.polyfit(np.log([16, 32, 64]), np.log(errs), 1)[0]
    assert -order >= 3.5


def test_connector_continuity(bumped):
    x = 1j + 0.1
    y = x + 1e-8 * x.imag
    assert np.linalg.norm(connector_transport(bumped, x, y).matrix - np.eye(2)) <= 1e-6


def test_holonomy_examples(schottky, rng):
    triv = Connection.trivial(schottky, 3)
    for c in enumerate_primitive_classes(schottky, 3):
        assert holonomy_class(triv, class_geodesic(c)).trace == pytest.approx(3)
    rep = random_rep(schottky, rng)
    flat = Connection.flat(rep)
    classes = enumerate_primitive_classes(schottky, 5)[:100]
    for h in holonomies(flat, [class_geodesic(c) for c in classes]):
        assert abs(h.trace - np.trace(rep.evaluate(h.cls.word)).conjugate()) <= 1e-6


def test_holonomy_power_law(bumped, schottky):
    for w in ["a", "ab", "aBB"]:
        c = class_geodesic(canonical_class(w, schottky))
        c2 = class_geodesic(canonical_class(w * 2, schottky))
        h = holonomy_class(bumped, c, default_steps(c.length, 64)).matrix
        h2 = holonomy_class(bumped, c2, default_steps(c2.length, 64)).matrix
        # same base point, so the square is exact up to integration error
        assert np.linalg.norm(h2 - h @ h) <= 1e-7


def test_trace_is_base_point_independent(bumped, schottky):
    for w in ["ab", "aBB", "abAB"]:
        c = class_geodesic(canonical_class(w, schottky))
        g = canonical_class(w, schottky).matrix.matrix
        rho = bumped.rep.evaluate(c.cls.word)
        for shift in (0.37, 1.1):
            steps = default_steps(c.length, 64)
            p = transport_geodesic(bumped, c.geodesic, shift, shift + c.length, steps).matrix
            assert abs(np.trace(rho.conj().T @ p) - holonomy_class(bumped, c, steps).trace) <= 1e-8


def test_gauge_invariance_of_traces(bumped, schottky, rng):
    classes = enumerate_primitive_classes(schottky, 5)[:20]
    geos = [class_geodesic(c) for c in classes]
    base = holonomies(bumped, geos, 64)
    for k in range(2):
        g = GaugeElement(1j + 0.2 * complex(*rng.normal(size=2)) * 0.3, 0.35, random_skew_hermitian(rng, 2))
        gauged = holonomies(gauge_transform(bumped, g), geos, 64)
        assert max(abs(a.trace - b.trace) for a, b in zip(base, gauged)) <= 1e-6


def test_gauge_round_trip(bumped, schottky, rng):
    chi = random_skew_hermitian(rng, 2)
    once = gauge_transform(bumped, GaugeElement(1j + 0.1, 0.3, chi))
    twice = gauge_transform(once, GaugeElement(1j + 0.1, 0.3, -chi))
    geos = [class_geodesic(c) for c in enumerate_primitive_classes(schottky, 3)]
    for a, b in zip(holonomies(bumped, geos, 64), holonomies(twice, geos, 64)):
        assert abs(a.trace - b.trace) <= 1e-8


def test_gauge_conjugates_connectors(bumped, rng):
    g = GaugeElement(1j + 0.1, 0.3, random_skew_hermitian(rng, 2))
    gauged = gauge_transform(bumped, g)
    x, y = 1j * 0.8 - 0.2, 1.3j + 0.3
    c = connector_transport(bumped, x, y, steps_per_unit=128).matrix
    cg = connector_transport(gauged, x, y, steps_per_unit=128).matrix
    px, py = gauged.gauge_matrix(x)[0], gauged.gauge_matrix(y)[0]
    assert np.linalg.norm(cg - py.conj().T @ c @ px) <= 1e-7


def test_direct_sum_and_tensor_traces(schottky, rng):
    c1 = Connection(random_rep(schottky, rng, 1), random_bumps(schottky, 1, rng, centers=[1j], radius=0.4))
    c2 = Connection(random_rep(schottky, rng, 1), random_bumps(schottky, 1, rng, centers=[0.4 + 1.2j], radius=0.4))
    geos = [class_geodesic(c) for c in enumerate_primitive_classes(schottky, 4)[:20]]
    h1, h2 = holonomies(c1, geos, 64), holonomies(c2, geos, 64)
    hs = holonomies(direct_sum(c1, c2), geos, 64)
    ht = holonomies(tensor_line(c1, c2), geos, 64)
    for a, b, s, t in zip(h1, h2, hs, ht):
        assert abs(s.trace - (a.trace + b.trace)) <= 1e-7
        assert abs(np.linalg.det(s.matrix) - a.trace * b.trace) <= 1e-7
        assert abs(t.trace - a.trace * b.trace) <= 1e-8


def test_ambrose_singer_flat(schottky, rng):
    conn = Connection.flat(random_rep(schottky, rng))
    assert ambrose_singer_check(conn, GeodesicSquare(0.6j, 0.2)) <= 1e-10
    with pytest.raises(ValueError):
        ambrose_singer_check(conn, GeodesicSquare(0.6j, 0.2), n=4)


def test_ambrose_singer_bump_refinement(schottky, rng):
    conn = Connection(random_rep(schottky, rng), (BumpForm(1j, 0.5, random_skew_hermitian(rng, 2), random_skew_hermitian(rng, 2)),))
    square = GeodesicSquare(0.6j, 0.2)
    r16 = ambrose_singer_check(conn, square, 16)
    r32 = ambrose_singer_check(conn, square, 32)
    assert r16 <= 1e-4
    assert r32 * 2 <= r16


def test_ambrose_singer_area_scaling(schottky, rng):
    conn = Connection(random_rep(schottky, rng), (BumpForm(1j, 0.5, random_skew_hermitian(rng, 2), random_skew_hermitian(rng, 2)),))
    norms = [ambrose_singer(conn, GeodesicSquare(0.9j, h), 8).lhs_norm for h in (0.2, 0.1, 0.05)]
    for big, small in zip(norms, norms[1:]):
        assert 2.0 <= big / small <= 8.0


def test_mixed_transport_identity(schottky, rng):
    flat1 = Connection.flat(random_rep(schottky, rng, 2))
    flat2 = Connection.flat(random_rep(schottky, rng, 3))
    assert mixed_transport_check(flat1, flat2, 1j, 2.0, 2.0, rng.normal(size=(3, 2))) <= 1e-12
    c1 = Connection(random_rep(schottky, rng, 2), random_bumps(schottky, 2, rng, count=2))
    c2 = Connection(random_rep(schottky, rng, 3), random_bumps(schottky, 3, rng, count=2))
    assert mixed_transport_check(c1, c2, 1j, 2.0, 2.0, np.zeros((3, 2))) == 0.0
    for _ in range(5):
        start = complex(rng.uniform(-1, 1), math.exp(rng.uniform(-0.5, 0.5)))
        u0 = rng.normal(size=(3, 2)) + 1j * rng.normal(size=(3, 2))
        assert mixed_transport_check(c1, c2, start, float(rng.uniform(-2, 2)), 2.0, u0, 200) <= 1e-7


def test_connection_difference_bound(schottky, rng):
    rep = random_rep(schottky, rng)
    b = BumpForm(1j, 0.5, random_skew_hermitian(rng, 2), random_skew_hermitian(rng, 2))
    b2 = BumpForm(1j, 0.5, b.coeff_dx + 0.1 * random_skew_hermitian(rng, 2), b.coeff_dy)
    c1, c2 = Connection(rep, (b,)), Connection(rep, (b2,))
    bound = c0_distance(c1, c2, [1j], 0.5)
    for x, y in [(0.5j, 2j), (-0.4 + 0.7j, 0.4 + 1.5j)]:
        u1 = connector_transport(c1, x, y, steps_per_unit=128).matrix
        u2 = connector_transport(c2, x, y, steps_per_unit=128).matrix
        length = float(np.arccosh(1 + abs(x - y) ** 2 / (2 * x.imag * y.imag)))
        assert np.linalg.norm(u1.conj().T @ u2 - np.eye(2), 2) <= length * bound * (1 + 1e-6)


def test_thread_determinism(bumped, schottky):
    geos = [class_geodesic(c) for c in enumerate_primitive_classes(schottky, 4)]
    a = holonomies(bumped, geos, 32, threads=1)
    b = holonomies(bumped, geos, 32, threads=6)
    assert all(np.array_equal(x.matrix, y.matrix) for x, y in zip(a, b))
