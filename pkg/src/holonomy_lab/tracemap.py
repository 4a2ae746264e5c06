"""Primitive trace map, det-sharp, trace comparison and abelian character recovery.

The trace map of a connection is the sequence of holonomy traces over the
enumerated primitive classes.  For a flat connection the holonomy of class g
is rho(g)^{-1}, so traces read the character at the inverse word.
"""

from __future__ import annotations

import cmath
import itertools
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from . import _io
from .bundle import ConnectionBase
from .classes import ClosedGeodesic, ConjClass, canonical_class, canonical_word, class_geodesic, is_primitive
from .hyperbolic import SurfaceGroup
from .transport import STEPS_PER_UNIT, Holonomy, holonomies

DEFAULT_TOL = 1e-6
ROOT_SEPARATION = 1e-4


class TraceMapError(ValueError):
    pass


class NonPrimitiveClass(TraceMapError):
    pass


class KeyMismatch(TraceMapError):
    pass


class InsufficientData(TraceMapError):
    pass


class IllConditioned(TraceMapError):
    pass


@dataclass(frozen=True, eq=False)
class TraceSequence:
    """Traces keyed by primitive class, in enumeration order."""

    classes: tuple[ConjClass, ...]
    traces: np.ndarray
    rank: int
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.classes)

    @property
    def words(self) -> tuple[str, ...]:
        return tuple(c.word for c in self.classes)

    def as_dict(self) -> dict[str, complex]:
        return {c.word: complex(t) for c, t in zip(self.classes, self.traces)}

    def __getitem__(self, word: str) -> complex:
        return self.as_dict()[word]

    def to_json(self) -> str:
        doc = {
            "model": self.meta.get("model", ""),
            "connection_id": self.meta.get("connection_id", ""),
            "classes": [
                {"word": c.word, "length": float(c.geodesic_length), "trace": [float(t.real), float(t.imag)]}
                for c, t in zip(self.classes, self.traces)
            ],
            "meta": {
                "steps": self.meta.get("steps", STEPS_PER_UNIT),
                "tol": self.meta.get("tol", DEFAULT_TOL),
                "rank": self.rank,
                "truncation": f"primitive classes of word length <= {self.meta.get('max_word_len', '?')}",
            },
        }
        return _io.dumps(doc)

    def to_csv(self) -> str:
        rows = []
        for c, t in zip(self.classes, self.traces):
            w = _wave(c.geodesic_length, complex(t), c.geodesic_length)
            rows.append([c.word, float(c.geodesic_length), float(t.real), float(t.imag), float(w.real), float(w.imag)])
        return _io.csv_text(["word", "length", "trace_re", "trace_im", "wave_re", "wave_im"], rows)


def _check_primitive(classes: Sequence[ConjClass]) -> None:
    for c in classes:
        if not is_primitive(c):
            raise NonPrimitiveClass(f"class {c.word} is not primitive")


def _holonomies(conn, classes, steps_per_unit, threads) -> list[Holonomy]:
    _check_primitive(classes)
    geos = [class_geodesic(c) for c in classes]
    return holonomies(conn, geos, steps_per_unit, threads)


def primitive_trace_map(
    conn: ConnectionBase,
    classes: Sequence[ConjClass],
    steps_per_unit: int = STEPS_PER_UNIT,
    threads: int = 1,
    connection_id: str = "",
    meta: Mapping | None = None,
) -> TraceSequence:
    hol = _holonomies(conn, classes, steps_per_unit, threads)
    info = {
        "model": conn.group.kind,
        "connection_id": connection_id or getattr(conn, "name", ""),
        "steps": steps_per_unit,
        "group": conn.group,
    }
    info.update(meta or {})
    traces = np.array([h.trace for h in hol], dtype=complex)
    return TraceSequence(tuple(classes), traces, conn.rank, info)


def det_sharp(
    conn: ConnectionBase, classes: Sequence[ConjClass], steps_per_unit: int = STEPS_PER_UNIT, threads: int = 1
) -> np.ndarray:
    hol = _holonomies(conn, classes, steps_per_unit, threads)
    return np.array([np.linalg.det(h.matrix) for h in hol], dtype=complex)


@dataclass(frozen=True)
class Comparison:
    max_abs_deviation: float
    argmax: str
    tol: float
    n_classes: int

    @property
    def equivalent(self) -> bool:
        return self.max_abs_deviation <= self.tol

    @property
    def verdict(self) -> str:
        return "equivalent" if self.equivalent else "different"

    def as_dict(self) -> dict:
        return {
            "max_abs_deviation": self.max_abs_deviation,
            "argmax": self.argmax,
            "verdict": self.verdict,
            "tol": self.tol,
            "n_classes": self.n_classes,
            "metric": "sup over the enumerated (truncated) class list",
        }


def compare_trace_maps(s1: TraceSequence, s2: TraceSequence, tol: float = DEFAULT_TOL) -> Comparison:
    if s1.words != s2.words:
        raise KeyMismatch("trace sequences are over different class lists")
    if not len(s1):
        return Comparison(0.0, "", tol, 0)
    dev = np.abs(s1.traces - s2.traces)
    k = int(np.argmax(dev))
    return Comparison(float(dev[k]), s1.classes[k].word, tol, len(s1))


def _wave(length: float, trace: complex, primitive_length: float) -> complex:
    return primitive_length * trace / (2 * math.pi * 2 * math.sinh(length / 2))


def wave_trace_coefficient(geo: ClosedGeodesic, hol: Holonomy, primitive_length: float) -> complex:
    """l_prim Tr(Hol) / (2 pi |det(1 - P)|^{1/2}) with |det(1 - P)|^{1/2} = 2 sinh(l/2)."""
    if geo.length <= 0 or primitive_length <= 0:
        raise ValueError("lengths must be positive")
    return _wave(geo.length, hol.trace, primitive_length)


# ---------------------------------------------------------------------------
# Recovery of a sum of flat line characters from traces
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LineCharacters:
    """k characters, each a map generator -> unit complex number."""

    characters: tuple[dict, ...]
    residual: float

    def phases(self) -> list[dict]:
        return [{g: cmath.phase(v) % (2 * math.pi) for g, v in ch.items()} for ch in self.characters]


def _power_word(group: SurfaceGroup, g: str, m: int) -> str:
    # h g h^{-1} g^{m-1} is primitive and has abelian image g^m
    if m == 1:
        return g
    gens = list(group.generators)
    h = gens[(gens.index(g) + 1) % len(gens)]
    return h + g + h.upper() + g * (m - 1)


def _mixed_word(g1: str, g2: str, p: int, q: int) -> str:
    return g1 * p + g2 * q


def line_recovery_words(group: SurfaceGroup, k: int) -> list[str]:
    """Canonical words whose traces :func:`recover_line_characters` needs."""
    gens = list(group.generators)
    words = []
    for g in gens:
        words += [_power_word(group, g, m) for m in range(1, k + 1)]
    if k > 1:
        for g in gens[1:]:
            words += [_mixed_word(gens[0], g, p, q) for p in range(1, k + 1) for q in range(1, k + 1)]
    out = []
    for w in words:
        cw = canonical_word(w, group)
        if cw not in out:
            out.append(cw)
    return out


def line_recovery_classes(group: SurfaceGroup, k: int) -> list[ConjClass]:
    return [canonical_class(w, group) for w in line_recovery_words(group, k)]


def _newton_roots(power_sums: Sequence[complex]) -> np.ndarray:
    """Roots of the monic polynomial whose roots have the given power sums p_1..p_k."""
    k = len(power_sums)
    e = [1.0 + 0j]
    for j in range(1, k + 1):
        acc = sum((-1) ** (i - 1) * e[j - i] * power_sums[i - 1] for i in range(1, j + 1))
        e.append(acc / j)
    coeffs = [(-1) ** j * e[j] for j in range(k + 1)]
    return np.roots(coeffs)


def _min_separation(roots: np.ndarray) -> float:
    if len(roots) < 2:
        return math.inf
    return min(abs(a - b) for a, b in itertools.combinations(roots, 2))


def recover_line_characters(
    trace_data: TraceSequence | Mapping[str, complex],
    k: int,
    group: SurfaceGroup | None = None,
    word_family: Sequence[str] | None = None,
    tol: float = DEFAULT_TOL,
) -> LineCharacters:
    """Recover k flat line characters from the traces of their direct sum.

    Power sums of each generator's values come from primitive words with
    abelian image g^m; Newton's identities turn them into a polynomial whose
    roots are the values.  Values of different generators are paired by the
    permutation that best reproduces the traces of the words g1^p gj^q.
    """
    if isinstance(trace_data, TraceSequence):
        data = trace_data.as_dict()
        group = group or trace_data.meta.get("group")
    else:
        data = {w: complex(v) for w, v in trace_data.items()}
    if group is None:
        raise InsufficientData("the surface group is needed to interpret words")
    if not 1 <= k <= 4:
        raise ValueError("k must be between 1 and 4")
    data = {canonical_word(w, group): v for w, v in data.items()}
    needed = line_recovery_words(group, k) if word_family is None else [canonical_word(w, group) for w in word_family]
    missing = [w for w in line_recovery_words(group, k) if w not in data]
    if missing:
        raise InsufficientData(f"traces missing for words {missing[:5]}")
    # Hol = rho(g)^{-1}: flip to the character of g itself
    chi = {w: v.conjugate() for w, v in data.items()}

    gens = list(group.generators)
    values = {}
    for g in gens:
        sums = [chi[canonical_word(_power_word(group, g, m), group)] for m in range(1, k + 1)]
        roots = _newton_roots(sums)
        if _min_separation(roots) < ROOT_SEPARATION:
            raise IllConditioned(f"values of generator {g} are not separated (min gap {_min_separation(roots):.1e})")
        values[g] = roots / np.abs(roots)

    # pair every generator's values with those of the first generator
    order = {g: list(range(k)) for g in gens}
    for g in gens[1:] if k > 1 else ():
        best, best_perm = math.inf, None
        for perm in itertools.permutations(range(k)):
            res = 0.0
            for p in range(1, k + 1):
                for q in range(1, k + 1):
                    t = chi[canonical_word(_mixed_word(gens[0], g, p, q), group)]
                    pred = sum(values[gens[0]][i] ** p * values[g][perm[i]] ** q for i in range(k))
                    res = max(res, abs(pred - t))
            if res < best:
                best, best_perm = res, perm
        order[g] = list(best_perm)

    chars = [{g: complex(values[g][order[g][i]]) for g in gens} for i in range(k)]
    chars.sort(key=lambda ch: tuple(round(cmath.phase(ch[g]) % (2 * math.pi), 12) for g in gens))

    # residual over every supplied word
    residual = 0.0
    for w in set(needed) | set(data):
        if w not in chi:
            raise InsufficientData(f"trace missing for word {w}")
        pred = sum(_char_value(ch, w) for ch in chars)
        residual = max(residual, abs(pred - chi[w]))
    return LineCharacters(tuple(chars), residual)


def _char_value(ch: Mapping[str, complex], word: str) -> complex:
    v = 1.0 + 0j
    for c in word:
        x = ch[c.lower()]
        v *= x if c.islower() else x.conjugate()
    return v


def line_sum_traces(group: SurfaceGroup, chars: Sequence[Mapping[str, complex]], words: Sequence[str]) -> dict[str, complex]:
    """Forward model: traces of the flat holonomy of a sum of line characters."""
    return {w: sum(_char_value(ch, w) for ch in chars).conjugate() for w in words}


__all__ = [
    "Comparison",
    "IllConditioned",
    "InsufficientData",
    "KeyMismatch",
    "LineCharacters",
    "NonPrimitiveClass",
    "TraceSequence",
    "compare_trace_maps",
    "det_sharp",
    "line_recovery_classes",
    "line_recovery_words",
    "line_sum_traces",
    "primitive_trace_map",
    "recover_line_characters",
    "wave_trace_coefficient",
]
