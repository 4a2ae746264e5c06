"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -s`` or ``python3 tests/test_acceptance.py``.
All criteria use the Schottky model unless stated; criterion 11 also builds the genus-2 octagon.
"""

import cmath
import math
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES, random_rep
from test_classes import necklace_oracle
from holonomy_lab._linalg import random_skew_hermitian, random_unitary
from holonomy_lab.bundle import (
    BumpForm,
    Connection,
    GaugeElement,
    UnitaryRep,
    block_diag_rep,
    direct_sum,
    gauge_transform,
    mixed_curvature_residual,
    random_bumps,
)
from holonomy_lab.classes import canonical_word, enumerate_primitive_classes
from holonomy_lab.hyperbolic import apply_matrix, disk_to_half, genus2_group, half_to_disk, schottky_group
from holonomy_lab.parry import (
    ReferenceOrbit,
    commutant_dimension,
    compare_flat,
    proof_wraps,
    shadowing_profile,
    solve_intertwiner,
    spiral_limit,
)
from holonomy_lab.tracemap import line_recovery_classes, primitive_trace_map, recover_line_characters
from holonomy_lab.transport import GeodesicSquare, ambrose_singer_check, mixed_transport_check

SEED = 20240601


def report(n, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} criterion {n}: {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert ok, line


@pytest.fixture(scope="module")
def G():
    return schottky_group()


def oracle_traces(rep, classes):
    # flat holonomy of the class of w is rho(w)^{-1}
    return np.array([np.trace(rep.evaluate(c.word)).conjugate() for c in classes])


def test_1_flat_oracle(G):
    rng = np.random.default_rng(SEED + 1)
    t0 = time.perf_counter()
    classes = enumerate_primitive_classes(G, 6)
    rep = random_rep(G, rng)
    want = oracle_traces(rep, classes)
    flat = Connection.flat(rep)
    # a flat connection in a non-identity gauge forces the full ODE pipeline
    gauged = gauge_transform(flat, GaugeElement(1j, 0.5, random_skew_hermitian(rng, 2)))
    dev = max(np.abs(primitive_trace_map(c, classes, 64).traces - want).max() for c in (flat, gauged))
    elapsed = time.perf_counter() - t0
    report(1, dev <= 1e-6 and elapsed <= 60, f"{len(classes)} classes, max deviation {dev:.2e}, {elapsed:.1f} s")


def test_2_gauge_invariance(G):
    rng = np.random.default_rng(SEED + 2)
    classes = enumerate_primitive_classes(G, 5)[:50]
    conn = Connection(random_rep(G, rng), random_bumps(G, 2, rng, count=2, centers=[1j, 0.5 + 1.3j], radius=0.4))
    # 64 steps per unit leaves ~1e-6 of RK4 error on the longer classes
    base = primitive_trace_map(conn, classes, 128).traces
    worst = 0.0
    for _ in range(5):
        center = complex(rng.uniform(-0.3, 0.3), math.exp(rng.uniform(-0.3, 0.3)))
        g = GaugeElement(center, float(rng.uniform(0.3, 0.5)), random_skew_hermitian(rng, 2))
        worst = max(worst, float(np.abs(primitive_trace_map(gauge_transform(conn, g), classes, 128).traces - base).max()))
    report(2, worst <= 1e-6, f"5 gauges x {len(classes)} classes, max deviation {worst:.2e}")


def test_3_ambrose_singer(G):
    rng = np.random.default_rng(SEED + 3)
    flat = Connection.flat(random_rep(G, rng))
    r_flat = ambrose_singer_check(flat, GeodesicSquare(0.6j, 0.2), 16)
    bump = Connection(random_rep(G, rng), (BumpForm(1j, 0.5, random_skew_hermitian(rng, 2), random_skew_hermitian(rng, 2)),))
    # the square straddles the support edge, where the curvature is least smooth
    square = GeodesicSquare(0.6j, 0.2)
    r16 = ambrose_singer_check(bump, square, 16)
    r32 = ambrose_singer_check(bump, square, 32)
    ok = r_flat <= 1e-10 and r16 <= 1e-4 and r16 >= 2 * r32
    report(3, ok, f"flat {r_flat:.2e}, bump n=16 {r16:.2e}, n=32 {r32:.2e}, ratio {r16 / r32:.2f}")


def test_4_mixed_connection(G):
    rng = np.random.default_rng(SEED + 4)
    c1 = Connection(random_rep(G, rng, 2), random_bumps(G, 2, rng, count=2, centers=[1j, 0.5 + 1.3j], radius=0.4))
    c2 = Connection(random_rep(G, rng, 3), random_bumps(G, 3, rng, count=2, centers=[1.2j, -0.4 + 0.9j], radius=0.4))
    worst_t = 0.0
    for _ in range(10):
        start = complex(rng.uniform(-1, 1), math.exp(rng.uniform(-0.5, 0.5)))
        u0 = rng.normal(size=(3, 2)) + 1j * rng.normal(size=(3, 2))
        worst_t = max(worst_t, mixed_transport_check(c1, c2, start, float(rng.uniform(-2, 2)), float(rng.uniform(0.5, 2.0)), u0, 200))
    worst_c = 0.0
    for _ in range(20):
        z = complex(rng.uniform(-0.6, 0.6), math.exp(rng.uniform(-0.4, 0.4)))
        worst_c = max(worst_c, mixed_curvature_residual(c1, c2, z, rng.normal(size=(3, 2)) + 1j * rng.normal(size=(3, 2))))
    report(4, worst_t <= 1e-7 and worst_c <= 1e-5, f"transport {worst_t:.2e} (10 segments), curvature {worst_c:.2e} (20 points)")


def test_5_spiral(G):
    rng = np.random.default_rng(SEED + 5)
    ref = ReferenceOrbit.from_word(G, "a")
    notes, ok = [], True
    for _ in range(3):
        bumps = random_bumps(G, 2, rng, count=2, centers=[ref.x_star, 0.4 + 1.2j], radius=0.4)
        sp = spiral_limit(Connection(random_rep(G, rng), bumps), ref, steps_per_unit=64)
        res = sp.residuals
        dec = all(b < a for a, b in zip(res[2:], res[3:]))
        ok &= dec and sp.rate > 0 and sp.r_squared >= 0.9
        notes.append(f"slope {-sp.rate:.2f} R2 {sp.r_squared:.4f}")
    report(5, ok, "; ".join(notes))


def test_6_character_rigidity(G):
    rng = np.random.default_rng(SEED + 6)
    worst_res = worst_phase = 0.0
    for _ in range(10):
        rep = random_rep(G, rng)
        u = random_unitary(rng, 2)
        res = solve_intertwiner(rep, rep.conjugate_by(u))
        c = res.conjugator
        phase = np.vdot(c.ravel(), u.ravel())
        worst_res = max(worst_res, res.residual)
        worst_phase = max(worst_phase, float(np.abs(c * phase / abs(phase) - u).max()))
    words, none_count = [], 0
    for _ in range(10):
        r1, r2 = random_rep(G, rng), random_rep(G, rng)
        none_count += solve_intertwiner(r1, r2).p_star is None
        words.append(compare_flat(r1, r2).distinguishing_word)
    ok = worst_res <= 1e-8 and worst_phase <= 1e-8 and none_count == 10 and all(words)
    report(6, ok, f"conjugate pairs residual {worst_res:.1e}, u error {worst_phase:.1e}; distinct pairs rejected {none_count}/10, words {words[:3]}...")


def test_7_commutant(G):
    rng = np.random.default_rng(SEED + 7)
    chi1 = UnitaryRep.character(G, {"a": 0.4, "b": 1.0})
    chi2 = UnitaryRep.character(G, {"a": -0.9, "b": 2.0})
    got = {
        "irreducible": commutant_dimension(random_rep(G, rng)),
        "trivial": commutant_dimension(UnitaryRep.trivial(G, 2)),
        "chi+chi": commutant_dimension(block_diag_rep(chi1, chi1)),
        "chi1+chi2": commutant_dimension(block_diag_rep(chi1, chi2)),
    }
    report(7, got == {"irreducible": 1, "trivial": 4, "chi+chi": 4, "chi1+chi2": 2}, f"dimensions {got}")


def test_8_enumeration(G):
    got = {c.word for c in enumerate_primitive_classes(G, 6)}
    want = {canonical_word(next(iter(orb)), G) for orb in necklace_oracle(6)}
    report(8, got == want, f"{len(got)} classes vs oracle {len(want)}")


def test_9_shadowing(G):
    ref = ReferenceOrbit.from_word(G, "a")
    mids = [max(s.mid_distance for s in shadowing_profile(ref, ["b", "B"], k).segments) for k in (2, 4, 6)]
    monotone = mids[0] > mids[1] > mids[2]
    prim = []
    for labels in (["b"], ["b", "b"], ["b", "B"], ["bA", "B", "b"]):
        wraps = proof_wraps(ref, labels, 2)
        prim.append(shadowing_profile(ref, labels, wraps).primitive)
    report(9, monotone and all(prim), f"mid distances {', '.join(f'{m:.2e}' for m in mids)}; primitive {sum(prim)}/{len(prim)}")


def test_10_abelian_recovery(G):
    rng = np.random.default_rng(SEED + 10)
    failures, worst = 0, 0.0
    for trial in range(20):
        k = 1 + trial % 3
        while True:
            phases = [{g: rng.uniform(0, 2 * math.pi) for g in "ab"} for _ in range(k)]
            vals = [{g: cmath.exp(1j * p[g]) for g in p} for p in phases]
            gaps = [abs(x[g] - y[g]) for g in "ab" for i, x in enumerate(vals) for y in vals[i + 1 :]]
            if not gaps or min(gaps) > 1e-2:
                break
        conns = [Connection.flat(UnitaryRep.character(G, p)) for p in phases]
        total = conns[0]
        for c in conns[1:]:
            total = direct_sum(total, c)
        rec = recover_line_characters(primitive_trace_map(total, line_recovery_classes(G, k)), k)
        got = sorted(tuple(round(cmath.phase(c[g]) % (2 * math.pi), 6) for g in "ab") for c in rec.characters)
        want = sorted(tuple(round(p[g] % (2 * math.pi), 6) for g in "ab") for p in phases)
        worst = max(worst, rec.residual)
        failures += rec.residual > 1e-6 or got != want
    report(10, failures == 0, f"20 trials, k in 1..3, max residual {worst:.1e}, failures {failures}")


def test_11_model_construction():
    g2 = genus2_group()
    rel = g2.relator_residual()
    G = schottky_group()
    rng = np.random.default_rng(SEED + 11)
    # every letter x maps the outside of its disk into the disk paired with x^{-1}
    by_gen = {s.generator: s for s in G.sides}
    bad = 0
    for x in G.alphabet:
        src, dst = by_gen[x], by_gen[x.swapcase()]
        w = rng.uniform(-1, 1, 400) + 1j * rng.uniform(-1, 1, 400)
        w = w[(np.abs(w) < 0.999) & (np.abs(w - src.center) > src.radius)]
        img = half_to_disk(apply_matrix(G.letter(x).matrix, disk_to_half(w)))
        bad += int(np.sum(np.abs(img - dst.center) >= dst.radius))
    report(11, rel <= 1e-9 and bad == 0, f"genus-2 relator residual {rel:.1e}; ping-pong violations {bad}")


def test_12_determinism(G):
    rng = np.random.default_rng(SEED + 12)
    conn = Connection(random_rep(G, rng), random_bumps(G, 2, rng, count=2, centers=[1j, 0.5 + 1.3j], radius=0.4))
    classes = enumerate_primitive_classes(G, 4)
    texts = [primitive_trace_map(conn, classes, 64, threads=t, connection_id="c").to_json() for t in (1, 8)]
    report(12, texts[0] == texts[1], f"{len(classes)} classes, JSON identical for threads 1 and 8: {texts[0] == texts[1]}")


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q", "-s"]))
