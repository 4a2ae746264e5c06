"""Batch driver: ``holonomy-lab {enumerate,trace-map,compare,parry,checks}``.

A run is described by one JSON document::

    {
      "surface": {"kind": "schottky", "lambdas": [3, 3]},
      "run": {"max_word_len": 4, "ode_steps_per_unit": 64, "tol": 1e-6, "seed": 0, "threads": 1},
      "connections": {
        "flat": {"rank": 2, "rep": "random"},
        "bumped": {"rank": 2, "rep": "random", "bumps": {"count": 2, "scale": 0.5}},
        "gauged": {"gauge": {"of": "bumped", "radius": 0.3}}
      },
      "compare": ["bumped", "gauged"],
      "parry": {"connection": "flat", "reference": "a", "labels": ["b", "B"]},
      "checks": {"connections": ["flat", "bumped"]}
    }

Matrices are row-major nested lists of [re, im] pairs.  Every random draw
comes from a Philox stream keyed by (seed, name), so outputs do not depend
on the order in which connections are built or on the thread count.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import zlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import _io
from ._linalg import random_skew_hermitian, random_unitary
from .bundle import (
    BumpForm,
    BundleError,
    Connection,
    ConnectionBase,
    GaugeElement,
    UnitaryRep,
    direct_sum,
    gauge_transform,
    mixed_curvature_residual,
    random_bumps,
)
from .classes import ConjClass, enumerate_primitive_classes
from .hyperbolic import GeometryError, SurfaceGroup, build_surface
from .parry import (
    ParryError,
    ReferenceOrbit,
    character_table,
    flat_parry_oracle,
    homoclinic_geodesic,
    parry_approximant,
    spiral_limit,
)
from .tracemap import KeyMismatch, TraceSequence, compare_trace_maps, primitive_trace_map
from .transport import GeodesicSquare, ambrose_singer_check, mixed_transport_check

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_MISMATCH = 3
EXIT_TOLERANCE = 4

THREADS_ENV = "HOLONOMY_LAB_THREADS"

# tolerances of the check battery, before the configurable factor
CHECK_TOLS = {
    "ambrose_singer_flat": 1e-10,
    "ambrose_singer": 1e-4,
    "mixed_transport": 1e-7,
    "mixed_curvature": 1e-5,
    "spiral_r_squared": 0.9,
}
FLAT_ORACLE_TOL = 1e-7


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Config parsing
# ---------------------------------------------------------------------------


@dataclass
class RunConfig:
    surface: SurfaceGroup
    surface_spec: dict
    connections: dict[str, dict]
    max_word_len: int = 4
    steps_per_unit: int = 64
    tol: float = 1e-6
    seed: int = 0
    threads: int = 1
    experiments: dict[str, Any] = field(default_factory=dict)
    _built: dict[str, ConnectionBase] = field(default_factory=dict, repr=False)

    def rng(self, name: str) -> np.random.Generator:
        key = np.random.SeedSequence([self.seed, zlib.crc32(name.encode())])
        return np.random.Generator(np.random.Philox(key))

    def connection(self, name: str) -> ConnectionBase:
        if name not in self._built:
            if name not in self.connections:
                raise ConfigError(f"connections.{name}: no such connection (have {sorted(self.connections)})")
            self._built[name] = _build_connection(self, name, self.connections[name], set())
        return self._built[name]


def _field(doc: dict, key: str, kind, where: str, default=None):
    if key not in doc:
        if default is None:
            raise ConfigError(f"{where}.{key}: missing")
        return default
    val = doc[key]
    if kind is float and isinstance(val, int) and not isinstance(val, bool):
        val = float(val)
    if not isinstance(val, kind) or isinstance(val, bool) and kind is not bool:
        raise ConfigError(f"{where}.{key}: expected {kind.__name__}, got {type(val).__name__}")
    return val


def parse_matrix(doc, where: str) -> np.ndarray:
    try:
        arr = np.array(doc, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: not a matrix of [re, im] pairs ({exc})") from None
    if arr.ndim != 3 or arr.shape[2] != 2 or arr.shape[0] != arr.shape[1]:
        raise ConfigError(f"{where}: expected a square array of [re, im] pairs, got shape {arr.shape}")
    return arr[..., 0] + 1j * arr[..., 1]


def matrix_doc(m: np.ndarray) -> list:
    return [[[float(v.real), float(v.imag)] for v in row] for row in np.asarray(m, dtype=complex)]


def load_config(path: str | os.PathLike, overrides: dict | None = None) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read ({exc.strerror})") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    return config_from_dict(doc, overrides)


def config_from_dict(doc: dict, overrides: dict | None = None) -> RunConfig:
    if not isinstance(doc, dict):
        raise ConfigError("config: top level must be an object")
    spec = doc.get("surface", {"kind": "schottky"})
    if not isinstance(spec, dict):
        raise ConfigError("surface: expected an object")
    try:
        surface = build_surface(spec)
    except (GeometryError, TypeError, ValueError) as exc:
        raise ConfigError(f"surface: {exc}") from None
    run = doc.get("run", {})
    if not isinstance(run, dict):
        raise ConfigError("run: expected an object")
    conns = doc.get("connections", {})
    if not isinstance(conns, dict) or not all(isinstance(v, dict) for v in conns.values()):
        raise ConfigError("connections: expected an object of named connection objects")
    cfg = RunConfig(
        surface=surface,
        surface_spec=spec,
        connections=conns,
        max_word_len=_field(run, "max_word_len", int, "run", 4),
        steps_per_unit=_field(run, "ode_steps_per_unit", int, "run", 64),
        tol=_field(run, "tol", float, "run", 1e-6),
        seed=_field(run, "seed", int, "run", 0),
        threads=_field(run, "threads", int, "run", 1),
        experiments={k: doc[k] for k in ("compare", "parry", "checks", "trace_map") if k in doc},
    )
    for key, val in (overrides or {}).items():
        if val is not None:
            setattr(cfg, key, val)
    if not cfg.tol > 0:
        raise ConfigError("run.tol: must be positive")
    if cfg.max_word_len < 1:
        raise ConfigError("run.max_word_len: must be at least 1")
    if cfg.steps_per_unit < 4:
        raise ConfigError("run.ode_steps_per_unit: must be at least 4")
    if cfg.threads < 1:
        raise ConfigError("run.threads: must be at least 1")
    return cfg


def _build_rep(cfg: RunConfig, name: str, doc: dict, rng) -> UnitaryRep:
    where = f"connections.{name}"
    group = cfg.surface
    rank = _field(doc, "rank", int, where, 1 if doc.get("rep") == "character" else 2)
    spec = doc.get("rep", "trivial")
    if spec == "trivial":
        return UnitaryRep.trivial(group, rank)
    if spec == "random":
        if group.relator is not None:
            raise ConfigError(f"{where}.rep: random representations are only available on free groups")
        return UnitaryRep(group, {g: random_unitary(rng, rank) for g in group.generators})
    if spec == "character":
        phases = doc.get("phases", {})
        if not isinstance(phases, dict):
            raise ConfigError(f"{where}.phases: expected generator -> angle")
        return UnitaryRep.character(group, {g: float(v) for g, v in phases.items()})
    if isinstance(spec, dict):
        mats = {g: parse_matrix(m, f"{where}.rep.{g}") for g, m in spec.items()}
        return UnitaryRep(group, mats)
    raise ConfigError(f"{where}.rep: expected 'trivial', 'random', 'character' or generator matrices")


def _build_bumps(cfg: RunConfig, name: str, spec, rank: int, rng) -> tuple[BumpForm, ...]:
    where = f"connections.{name}.bumps"
    if isinstance(spec, dict):
        count = _field(spec, "count", int, where, 1)
        scale = _field(spec, "scale", float, where, 0.5)
        radius = spec.get("radius")
        centers = spec.get("centers")
        if centers is not None:
            centers = [complex(*c) for c in centers]
        return random_bumps(cfg.surface, rank, rng, count, scale, centers, radius)
    if isinstance(spec, list):
        out = []
        for k, b in enumerate(spec):
            w = f"{where}[{k}]"
            if not isinstance(b, dict):
                raise ConfigError(f"{w}: expected an object")
            c = complex(*b.get("center", (0.0, 1.0)))
            out.append(BumpForm(c, _field(b, "radius", float, w), parse_matrix(b.get("dx"), w + ".dx"), parse_matrix(b.get("dy"), w + ".dy")))
        return tuple(out)
    raise ConfigError(f"{where}: expected a list of bumps or a random-bump object")


def _build_connection(cfg: RunConfig, name: str, doc: dict, seen: set) -> ConnectionBase:
    where = f"connections.{name}"
    if name in seen:
        raise ConfigError(f"{where}: circular reference")
    seen = seen | {name}
    rng = cfg.rng(name)
    try:
        if "gauge" in doc:
            g = doc["gauge"]
            if not isinstance(g, dict) or "of" not in g:
                raise ConfigError(f"{where}.gauge: expected an object with 'of'")
            base = ref_key(cfg, g["of"], where + ".gauge.of", seen)
            supp = base.supports()
            center = complex(*g["center"]) if "center" in g else (supp[0][0] + 0.05 * supp[0][0].imag if supp else 1j)
            radius = float(g.get("radius", 0.3))
            chi = parse_matrix(g["chi"], where + ".gauge.chi") if "chi" in g else random_skew_hermitian(rng, base.rank)
            return gauge_transform(base, GaugeElement(center, radius, chi))
        if "direct_sum" in doc:
            a, b = doc["direct_sum"]
            return direct_sum(ref_key(cfg, a, where + ".direct_sum", seen), ref_key(cfg, b, where + ".direct_sum", seen))
        if "conjugate" in doc:
            base = ref_key(cfg, doc["conjugate"], where + ".conjugate", seen)
            u = parse_matrix(doc["by"], where + ".by") if "by" in doc else random_unitary(rng, base.rank)
            return Connection(base.rep.conjugate_by(u), name=name)
        rep = _build_rep(cfg, name, doc, rng)
        bumps = _build_bumps(cfg, name, doc["bumps"], rep.rank, rng) if "bumps" in doc else ()
        return Connection(rep, bumps, name)
    except (BundleError, GeometryError) as exc:
        raise ConfigError(f"{where}: {exc}") from None
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"{where}: malformed entry ({exc!r})") from None


def ref_key(cfg: RunConfig, other, where: str, seen: set) -> ConnectionBase:
    if not isinstance(other, str) or other not in cfg.connections:
        raise ConfigError(f"{where}: unknown connection {other!r}")
    if other not in cfg._built:
        cfg._built[other] = _build_connection(cfg, other, cfg.connections[other], seen)
    return cfg._built[other]


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def _classes(cfg: RunConfig) -> list[ConjClass]:
    return enumerate_primitive_classes(cfg.surface, cfg.max_word_len, threads=cfg.threads)


def _write(out: Path, name: str, text: str) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    path = out / name
    path.write_text(text)
    return path


def cmd_enumerate(cfg: RunConfig, out: Path) -> int:
    classes = _classes(cfg)
    doc = {
        "model": cfg.surface.kind,
        "max_word_len": cfg.max_word_len,
        "count": len(classes),
        "classes": [{"word": c.word, "length": float(c.geodesic_length), "primitive": bool(c.primitive)} for c in classes],
    }
    _write(out, "classes.json", _io.dumps(doc))
    print(f"enumerate: {len(classes)} primitive classes of word length <= {cfg.max_word_len}")
    return EXIT_OK


def _trace_meta(cfg: RunConfig) -> dict:
    return {"tol": cfg.tol, "max_word_len": cfg.max_word_len}


def flat_oracle_sequence(conn: ConnectionBase, classes: Sequence[ConjClass], cfg: RunConfig) -> TraceSequence:
    """Traces of rho(w)^{-1}: pure matrix products, valid for flat connections."""
    traces = np.array([np.trace(conn.rep.evaluate(c.word)).conjugate() for c in classes], dtype=complex)
    meta = {"model": cfg.surface.kind, "connection_id": getattr(conn, "name", ""), "steps": 0, **_trace_meta(cfg)}
    return TraceSequence(tuple(classes), traces, conn.rank, meta)


def _is_flat(conn: ConnectionBase) -> bool:
    return not conn.supports()


def cmd_trace_map(cfg: RunConfig, out: Path, names: Sequence[str], oracle: bool = False) -> int:
    names = list(names) or list(cfg.experiments.get("trace_map", [])) or list(cfg.connections)
    if not names:
        raise ConfigError("connections: nothing to run")
    classes = _classes(cfg)
    code = EXIT_OK
    for name in names:
        conn = cfg.connection(name)
        seq = primitive_trace_map(conn, classes, cfg.steps_per_unit, cfg.threads, name, _trace_meta(cfg))
        _write(out, f"trace_map_{name}.json", seq.to_json())
        _write(out, f"trace_map_{name}.csv", seq.to_csv())
        line = f"trace-map {name}: {len(seq)} classes, rank {seq.rank}"
        if oracle:
            if not _is_flat(conn):
                raise ConfigError(f"connections.{name}: --oracle needs a flat connection")
            ref = flat_oracle_sequence(conn, classes, cfg)
            _write(out, f"oracle_{name}.json", ref.to_json())
            cmp = compare_trace_maps(seq, ref, cfg.tol)
            line += f"; oracle deviation {cmp.max_abs_deviation:.3e} at {cmp.argmax or '-'} ({'ok' if cmp.equivalent else 'FAIL'})"
            if not cmp.equivalent:
                code = EXIT_TOLERANCE
        print(line)
    return code


def load_trace_json(path: str | os.PathLike, group: SurfaceGroup) -> TraceSequence:
    from .classes import canonical_class

    try:
        doc = json.loads(Path(path).read_text())
        rows = doc["classes"]
        classes = tuple(canonical_class(r["word"], group) for r in rows)
        traces = np.array([complex(*r["trace"]) for r in rows], dtype=complex)
        rank = int(doc.get("meta", {}).get("rank", 0))
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise ConfigError(f"{path}: not a trace-map file ({exc!r})") from None
    return TraceSequence(classes, traces, rank, {"connection_id": doc.get("connection_id", str(path))})


def cmd_compare(cfg: RunConfig, out: Path, names: Sequence[str]) -> int:
    names = list(names) or list(cfg.experiments.get("compare", []))
    if len(names) != 2:
        raise ConfigError("compare: exactly two connection names or trace-map files are needed")
    seqs = []
    classes = None
    for name in names:
        if name.endswith(".json") and Path(name).exists():
            seqs.append(load_trace_json(name, cfg.surface))
            continue
        classes = classes if classes is not None else _classes(cfg)
        conn = cfg.connection(name)
        seqs.append(primitive_trace_map(conn, classes, cfg.steps_per_unit, cfg.threads, name, _trace_meta(cfg)))
    try:
        cmp = compare_trace_maps(seqs[0], seqs[1], cfg.tol)
    except KeyMismatch as exc:
        print(f"compare: {exc}", file=sys.stderr)
        return EXIT_MISMATCH
    doc = {"first": names[0], "second": names[1], **cmp.as_dict()}
    stem = "_".join(Path(n).stem for n in names)
    _write(out, f"compare_{stem}.json", _io.dumps(doc))
    print(f"compare {names[0]} vs {names[1]}: {cmp.verdict} (max deviation {cmp.max_abs_deviation:.3e} at {cmp.argmax or '-'})")
    return EXIT_OK


def cmd_parry(cfg: RunConfig, out: Path, reference: str | None, labels: Sequence[str]) -> int:
    spec = cfg.experiments.get("parry", {})
    if not isinstance(spec, dict):
        raise ConfigError("parry: expected an object")
    name = spec.get("connection") or next(iter(cfg.connections), None)
    if name is None:
        raise ConfigError("parry.connection: missing")
    reference = reference or spec.get("reference", "a")
    labels = list(labels) or list(spec.get("labels", []))
    if not labels:
        raise ConfigError("parry.labels: at least one label is needed")
    depth = int(spec.get("depth", 2))
    n_terms = int(spec.get("n_terms", 3))
    # a generic U(r) holonomy only returns close to I, so the default is loose
    wrap_tol = float(spec.get("wrap_tol", 0.05))
    wraps = spec.get("wraps")
    if wraps is not None and (not isinstance(wraps, list) or not all(isinstance(k, int) and k >= 0 for k in wraps)):
        raise ConfigError("parry.wraps: expected a list of non-negative integers")
    kmax = int(spec.get("kmax", 10_000))
    conn = cfg.connection(name)
    try:
        ref = ReferenceOrbit.from_word(cfg.surface, reference)
    except (GeometryError, ValueError) as exc:
        raise ConfigError(f"parry.reference: {exc}") from None
    flat = _is_flat(conn)
    spu = cfg.steps_per_unit
    reports = []
    generators = {}
    worst = 0.0
    code = EXIT_OK
    for h in labels:
        try:
            orbit = homoclinic_geodesic(ref, h)
        except ParryError as exc:
            reports.append({"label": h, "error": str(exc)})
            continue
        entry = {"label": h, "canonical": orbit.label.word, "degenerate": orbit.degenerate}
        if orbit.degenerate:
            reports.append(entry)
            continue
        entry.update(
            {
                "A_minus": orbit.A_minus,
                "A_plus": orbit.A_plus,
                "trunk_length": orbit.trunk_length,
                "theta_minus": orbit.theta_minus,
                "theta_plus": orbit.theta_plus,
            }
        )
        try:
            pa = parry_approximant(conn, orbit, n_terms, wraps, kmax, wrap_tol, spu)
        except ParryError as exc:
            entry["error"] = str(exc)
            reports.append(entry)
            code = EXIT_TOLERANCE
            continue
        generators[h] = pa.limit
        entry.update(
            {
                "wraps": list(pa.wraps),
                "residuals": list(pa.residuals),
                "steps": list(pa.steps),
                "unitarity_defect": pa.unitarity_defect,
                "limit": matrix_doc(pa.limit),
            }
        )
        if flat:
            dev = float(np.abs(pa.limit - flat_parry_oracle(conn.rep, orbit, pa.wraps[-1], pa.wraps[-1])).max())
            entry["oracle_deviation"] = dev
            worst = max(worst, dev)
        reports.append(entry)
    used = [h for h in labels if h in generators]
    table = character_table(conn, ref, used, depth, generators=[generators[h] for h in used]) if used else {}
    doc = {
        "connection": name,
        "reference": {"word": ref.word, "T": ref.T_star, "x": [ref.x_star.real, ref.x_star.imag]},
        "labels": reports,
        "character_table": [{"word": k, "trace": [v.real, v.imag]} for k, v in table.items()],
    }
    if flat:
        doc["oracle_max_deviation"] = worst
        if worst > FLAT_ORACLE_TOL:
            code = EXIT_TOLERANCE
    _write(out, "parry.json", _io.dumps(doc))
    for e in reports:
        tag = "degenerate" if e.get("degenerate") else ("error: " + e["error"] if "error" in e else f"wraps {e['wraps']}")
        print(f"parry {name} {ref.word}/{e['label']}: {tag}")
    if flat:
        print(f"parry flat oracle deviation {worst:.3e} ({'ok' if worst <= FLAT_ORACLE_TOL else 'FAIL'})")
    return code


def _check_squares(conn: ConnectionBase) -> list[GeodesicSquare]:
    sup = conn.supports()
    if not sup:
        return [GeodesicSquare(0.6j, 0.2)]
    # straddle the edge of the first support, where the curvature varies most
    c, r = sup[0]
    return [GeodesicSquare(complex(c.real, c.imag * math.exp(-0.8 * r)), 0.2)]


def run_checks(cfg: RunConfig, names: Sequence[str], factor: float = 1.0) -> dict:
    rng = cfg.rng("checks")
    tols = {k: v * factor for k, v in CHECK_TOLS.items()}
    tols["spiral_r_squared"] = CHECK_TOLS["spiral_r_squared"]
    results = []
    ref = ReferenceOrbit.from_word(cfg.surface, cfg.surface.alphabet[0])
    conns = [cfg.connection(n) for n in names]
    for k, (name, conn) in enumerate(zip(names, conns)):
        flat = _is_flat(conn)
        as_tol = tols["ambrose_singer_flat"] if flat else tols["ambrose_singer"]
        for sq in _check_squares(conn):
            res = ambrose_singer_check(conn, sq, 16)
            results.append({"connection": name, "check": "ambrose_singer", "value": res, "tol": as_tol, "pass": res <= as_tol})
        other = conns[(k + 1) % len(conns)]
        worst = 0.0
        for _ in range(10):
            start = complex(rng.uniform(-1.0, 1.0), math.exp(rng.uniform(-0.5, 0.5)))
            u0 = rng.normal(size=(other.rank, conn.rank)) + 1j * rng.normal(size=(other.rank, conn.rank))
            worst = max(worst, mixed_transport_check(conn, other, start, float(rng.uniform(-2, 2)), float(rng.uniform(0.5, 2.0)), u0, 200))
        results.append({"connection": name, "check": "mixed_transport", "value": worst, "tol": tols["mixed_transport"], "pass": worst <= tols["mixed_transport"]})
        worst = 0.0
        centers = [s[0] for s in conn.supports()] or [1j]
        for j in range(20):
            c = centers[j % len(centers)]
            z = complex(c.real + 0.2 * c.imag * rng.normal(), c.imag * math.exp(0.2 * rng.normal()))
            u0 = rng.normal(size=(other.rank, conn.rank))
            worst = max(worst, mixed_curvature_residual(conn, other, z, u0))
        results.append({"connection": name, "check": "mixed_curvature", "value": worst, "tol": tols["mixed_curvature"], "pass": worst <= tols["mixed_curvature"]})
        sp = spiral_limit(conn, ref, steps_per_unit=cfg.steps_per_unit)
        res = list(sp.residuals)
        if max(res) <= tols["ambrose_singer_flat"]:
            ok, note = True, "converged"
        else:
            dec = all(b < a for a, b in zip(res[2:], res[3:]))
            ok = dec and sp.rate > 0 and sp.r_squared >= tols["spiral_r_squared"]
            note = f"rate {sp.rate:.3f}, r2 {sp.r_squared:.4f}, decreasing {dec}"
        results.append({"connection": name, "check": "spiral", "value": max(res), "residuals": res, "note": note, "pass": ok})
    return {"factor": factor, "results": results, "pass": all(r["pass"] for r in results)}


def cmd_checks(cfg: RunConfig, out: Path, names: Sequence[str]) -> int:
    spec = cfg.experiments.get("checks", {})
    if not isinstance(spec, dict):
        raise ConfigError("checks: expected an object")
    names = list(names) or list(spec.get("connections", [])) or list(cfg.connections)
    if not names:
        raise ConfigError("checks.connections: nothing to check")
    factor = float(spec.get("tol_factor", 1.0))
    if not factor > 0:
        raise ConfigError("checks.tol_factor: must be positive")
    report = run_checks(cfg, names, factor)
    _write(out, "checks.json", _io.dumps(report))
    for r in report["results"]:
        tol = f" (tol {r['tol']:.1e})" if "tol" in r else f" ({r['note']})"
        print(f"{'PASS' if r['pass'] else 'FAIL'} {r['connection']} {r['check']}: {r['value']:.3e}{tol}")
    return EXIT_OK if report["pass"] else EXIT_TOLERANCE


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------


def _threads(arg: int | None) -> int | None:
    if arg is not None:
        return arg
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            return int(env)
        except ValueError:
            raise ConfigError(f"{THREADS_ENV}: expected an integer, got {env!r}") from None
    return None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="JSON run configuration")
    common.add_argument("--out", default=".", help="output directory (default: current)")
    common.add_argument("--threads", type=int, help=f"worker threads (fallback ${THREADS_ENV})")
    common.add_argument("--seed", type=int, help="override run.seed")

    p = argparse.ArgumentParser(prog="holonomy-lab", description="Holonomy and primitive trace map experiments on hyperbolic surfaces.")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("enumerate", parents=[common], help="primitive class table")
    tm = sub.add_parser("trace-map", parents=[common], help="primitive trace map of named connections")
    tm.add_argument("connections", nargs="*")
    tm.add_argument("--oracle", action="store_true", help="also write and compare the flat matrix-product oracle")
    cp = sub.add_parser("compare", parents=[common], help="compare two trace maps")
    cp.add_argument("names", nargs="*", help="connection names or trace-map JSON files")
    pa = sub.add_parser("parry", parents=[common], help="homoclinic orbits, Parry generators and character table")
    pa.add_argument("--reference")
    pa.add_argument("labels", nargs="*")
    ch = sub.add_parser("checks", parents=[common], help="Ambrose-Singer, mixed-connection and spiral batteries")
    ch.add_argument("connections", nargs="*")
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    out = Path(args.out)
    try:
        cfg = load_config(args.config, {"threads": _threads(args.threads), "seed": args.seed})
        if args.command == "enumerate":
            return cmd_enumerate(cfg, out)
        if args.command == "trace-map":
            return cmd_trace_map(cfg, out, args.connections, args.oracle)
        if args.command == "compare":
            return cmd_compare(cfg, out, args.names)
        if args.command == "parry":
            return cmd_parry(cfg, out, args.reference, args.labels)
        return cmd_checks(cfg, out, args.connections)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
