import numpy as np
import pytest
import sympy as sp

from conftest import random_rep
from holonomy_lab._linalg import random_skew_hermitian, random_unitary, skew_defect
from holonomy_lab.bundle import (
    BumpForm,
    BundleError,
    Connection,
    GaugeElement,
    RankMismatch,
    UnitaryRep,
    bump_gradient,
    bump_profile,
    connection_eval,
    curvature_eval,
    direct_sum,
    dual_line,
    gauge_transform,
    mixed_curvature_residual,
    random_bumps,
    tensor_line,
)
from holonomy_lab.hyperbolic import apply_matrix, mobius_derivative


def analytic_bump_curvature(center, radius, cx, cy):
    """Curvature dx^dy coefficient of f (cx dx + cy dy) from a symbolic f."""
    x, y = sp.symbols("x y", real=True)
    q = 1 + ((x - center.real) ** 2 + (y - center.imag) ** 2) / (2 * y * center.imag)
    f = (1 - (sp.acosh(q) / radius) ** 2) ** 2
    fx, fy = sp.lambdify((x, y), sp.diff(f, x)), sp.lambdify((x, y), sp.diff(f, y))
    fv = sp.lambdify((x, y), f)

    def curv(z):
        a, b = z.real, z.imag
        return fx(a, b) * cy - fy(a, b) * cx + fv(a, b) ** 2 * (cx @ cy - cy @ cx)

    return curv


@pytest.fixture
def bumped(schottky, rng):
    rep = random_rep(schottky, rng)
    return Connection(rep, random_bumps(schottky, 2, rng, count=2, centers=[1j, 0.5 + 1.3j], radius=0.4))


def test_rep_validation(schottky, genus2, rng):
    with pytest.raises(BundleError):
        UnitaryRep(schottky, {"a": np.eye(2), "b": 2 * np.eye(2)})
    with pytest.raises(RankMismatch):
        UnitaryRep(schottky, {"a": np.eye(2), "b": np.eye(3)})
    with pytest.raises(BundleError):
        UnitaryRep(genus2, {g: random_unitary(rng, 2) for g in genus2.generators})
    UnitaryRep.trivial(genus2, 2)
    u = random_unitary(rng, 2)
    rep = random_rep(schottky, rng)
    assert np.allclose(rep.conjugate_by(u).evaluate("aB"), u @ rep.evaluate("aB") @ u.conj().T)


def test_bump_profile_is_c1(rng):
    c, r = 1j, 0.5
    # radial line through the edge of the ball: value and slope vanish there
    edge = 1j * np.exp(r)
    eps = 1e-6
    assert bump_profile(edge * np.exp(-eps), c, r) == pytest.approx(0, abs=1e-10)
    gx, gy = bump_gradient(np.array([edge * np.exp(-eps), edge * np.exp(eps)]), c, r)
    assert np.abs(gy).max() < 1e-4
    z = c + 0.2 * (rng.normal() + 1j * rng.normal())
    h = 1e-6
    fx = (bump_profile(z + h, c, r) - bump_profile(z - h, c, r)) / (2 * h)
    fy = (bump_profile(z + 1j * h, c, r) - bump_profile(z - 1j * h, c, r)) / (2 * h)
    gx, gy = bump_gradient(z, c, r)
    assert (float(gx), float(gy)) == pytest.approx((float(fx), float(fy)), abs=1e-7)


def test_connection_values_are_skew_hermitian(bumped, rng):
    for _ in range(20):
        z = complex(rng.normal(), rng.uniform(0.2, 3))
        v = complex(*rng.normal(size=2))
        assert skew_defect(connection_eval(bumped, z, v)) <= 1e-12
        assert skew_defect(curvature_eval(bumped, z)) <= 1e-9


def test_connection_is_equivariant(bumped, schottky, rng):
    for _ in range(20):
        z = bumped.bumps[0].center + 0.3 * complex(*rng.normal(size=2)) * 0.5
        v = complex(*rng.normal(size=2))
        for word in ["a", "B", "ab"]:
            h = schottky.word_matrix(word)
            rho = bumped.rep.evaluate(word)
            lhs = connection_eval(bumped, z, v)
            rhs = rho.conj().T @ connection_eval(bumped, apply_matrix(h, z), mobius_derivative(h, z) * v) @ rho
            assert np.abs(lhs - rhs).max() <= 1e-10


def test_curvature_matches_symbolic(schottky, rng):
    cx, cy = random_skew_hermitian(rng, 2), random_skew_hermitian(rng, 2)
    b = BumpForm(1j, 0.5, cx, cy)
    conn = Connection(UnitaryRep.trivial(schottky, 2), (b,))
    exact = analytic_bump_curvature(1j, 0.5, cx, cy)
    for _ in range(10):
        z = 1j * np.exp(rng.uniform(-0.3, 0.3)) + rng.uniform(-0.3, 0.3)
        assert np.abs(curvature_eval(conn, z) - exact(z)).max() <= 1e-8


def test_flat_connection_has_zero_form(schottky, rng):
    conn = Connection.flat(random_rep(schottky, rng))
    assert not np.any(connection_eval(conn, 1j, 1.0))
    assert not np.any(curvature_eval(conn, 0.3 + 2j))


def test_gauge_transforms_curvature_by_conjugation(bumped, rng):
    g = GaugeElement(1j + 0.1, 0.3, random_skew_hermitian(rng, 2))
    gauged = gauge_transform(bumped, g)
    for _ in range(10):
        z = 1j + 0.1 + 0.15 * complex(*rng.normal(size=2))
        p = gauged.gauge_matrix(z)[0]
        assert np.abs(curvature_eval(gauged, z) - p.conj().T @ curvature_eval(bumped, z) @ p).max() <= 1e-8


def test_support_must_fit(schottky, rng):
    with pytest.raises(BundleError):
        Connection(UnitaryRep.trivial(schottky, 2), (BumpForm(1j, 3.0, np.zeros((2, 2)), np.zeros((2, 2))),))
    with pytest.raises(BundleError):
        BumpForm(1j, 0.5, np.eye(2), np.zeros((2, 2)))


def test_mixed_curvature_identity(schottky, rng):
    c1 = Connection(random_rep(schottky, rng, 2), random_bumps(schottky, 2, rng, count=2))
    c2 = Connection(random_rep(schottky, rng, 3), random_bumps(schottky, 3, rng, count=2))
    centers = [b.center for b in c1.bumps + c2.bumps]
    for k in range(20):
        c = centers[k % len(centers)]
        z = c + 0.2 * c.imag * complex(*rng.normal(size=2))
        assert mixed_curvature_residual(c1, c2, z, rng.normal(size=(3, 2))) <= 1e-5


def test_direct_sum_and_lines(schottky, rng):
    c1 = Connection(random_rep(schottky, rng, 1), random_bumps(schottky, 1, rng))
    c2 = Connection(random_rep(schottky, rng, 2), random_bumps(schottky, 2, rng))
    s = direct_sum(c1, c2)
    assert s.rank == 3
    z = c1.bumps[0].center
    a = connection_eval(s, z, 1.0)
    assert np.allclose(a[:1, :1], connection_eval(c1, z, 1.0))
    assert np.allclose(a[1:, 1:], connection_eval(c2, z, 1.0))
    assert not np.any(a[:1, 1:])
    l2 = Connection(random_rep(schottky, rng, 1), random_bumps(schottky, 1, rng))
    t = tensor_line(c1, l2)
    for z in [c1.bumps[0].center, l2.bumps[0].center]:
        assert connection_eval(t, z, 1j) == pytest.approx(connection_eval(c1, z, 1j) + connection_eval(l2, z, 1j))
    d = dual_line(c1)
    assert connection_eval(d, z, 1.0) == pytest.approx(connection_eval(c1, z, 1.0).conj())
    with pytest.raises(RankMismatch):
        tensor_line(c1, c2)
