"""Free homotopy classes as cyclic words, primitivity, and their closed geodesics."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .hyperbolic import (
    Geodesic,
    MobiusElement,
    NotHyperbolic,
    SurfaceGroup,
    axis,
    free_reduce,
    invert_letter,
    translation_length,
)

REFERENCE_POINT = 1j


class EmptyClass(ValueError):
    pass


def cyclic_reduce(w: str) -> str:
    w = free_reduce(w)
    i, j = 0, len(w)
    while j - i >= 2 and w[i] == invert_letter(w[j - 1]):
        i += 1
        j -= 1
    return w[i:j]


def letter_key(alphabet: tuple[str, ...]):
    rank = {c: k for k, c in enumerate(alphabet)}
    return lambda w: tuple(rank[c] for c in w)


def minimal_rotation(w: str, key) -> str:
    if not w:
        return w
    return min((w[k:] + w[:k] for k in range(len(w))), key=key)


def primitive_root(w: str) -> tuple[str, int]:
    """Shortest u with w = u^k."""
    n = len(w)
    for d in range(1, n + 1):
        if n % d == 0 and w[:d] * (n // d) == w:
            return w[:d], n // d
    return w, 1


@dataclass(frozen=True, eq=False)
class ConjClass:
    word: str
    primitive: bool
    geodesic_length: float
    matrix: MobiusElement

    def __eq__(self, other):
        return isinstance(other, ConjClass) and self.word == other.word

    def __hash__(self):
        return hash(self.word)

    def __repr__(self):
        return f"ConjClass({self.word!r}, length={self.geodesic_length:.6f}, primitive={self.primitive})"


def canonical_word(w: str, group: SurfaceGroup) -> str:
    return minimal_rotation(cyclic_reduce(w), letter_key(group.alphabet))


def canonical_class(w: str, group: SurfaceGroup) -> ConjClass:
    word = canonical_word(w, group)
    if not word:
        raise EmptyClass(f"{w!r} reduces to the identity")
    g = group.element(word)
    return ConjClass(word, primitive_root(word)[1] == 1, translation_length(g), g)


def is_primitive(c: ConjClass) -> bool:
    return primitive_root(c.word)[1] == 1


def _sort_key(group: SurfaceGroup):
    key = letter_key(group.alphabet)
    return lambda c: (round(c.geodesic_length, 9), key(c.word))


def _cyclic_words_with_prefix(first: str, alphabet, max_len: int):
    """Canonical (minimal-rotation) cyclically reduced words starting with ``first``."""
    key = letter_key(alphabet)
    out = []
    stack = [first]
    while stack:
        w = stack.pop()
        if w[0] != invert_letter(w[-1]) or len(w) == 1:
            if minimal_rotation(w, key) == w:
                out.append(w)
        if len(w) < max_len:
            for c in alphabet:
                if c != invert_letter(w[-1]):
                    stack.append(w + c)
    return out


def enumerate_primitive_classes(
    group: SurfaceGroup,
    max_word_len: int,
    max_length: float | None = None,
    threads: int = 1,
    conj_tol: float = 1e-7,
    conj_ball: int = 2,
) -> list[ConjClass]:
    """All primitive classes with canonical word length <= max_word_len.

    Sorted by (geodesic length, word).  ``max_length`` filters by
    geodesic length after the fact.
    """
    if max_word_len < 1:
        raise ValueError("max_word_len must be >= 1")
    alphabet = group.alphabet

    def work(first):
        words = _cyclic_words_with_prefix(first, alphabet, max_word_len)
        return [canonical_class(w, group) for w in words if primitive_root(w)[1] == 1]

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            parts = list(pool.map(work, alphabet))
    else:
        parts = [work(c) for c in alphabet]
    classes = [c for part in parts for c in part]
    if group.relator is not None:
        classes = _dedupe_by_geometry(classes, group, conj_tol, conj_ball)
    if max_length is not None:
        classes = [c for c in classes if c.geodesic_length <= max_length]
    return sorted(classes, key=_sort_key(group))


def _ball(group: SurfaceGroup, radius: int) -> list[np.ndarray]:
    words = [""]
    frontier = [""]
    for _ in range(radius):
        nxt = []
        for w in frontier:
            for c in group.alphabet:
                if not w or w[-1] != invert_letter(c):
                    nxt.append(w + c)
        words += nxt
        frontier = nxt
    return [group.word_matrix(w) for w in words]


def conjugate_in_ball(g1: np.ndarray, g2: np.ndarray, ball: list[np.ndarray], tol: float) -> bool:
    for h in ball:
        m = h @ g1 @ np.linalg.inv(h)
        if min(np.abs(m - g2).max(), np.abs(m + g2).max()) <= tol * max(1.0, np.abs(g2).max()):
            return True
    return False


def _dedupe_by_geometry(classes, group, tol, radius):
    # In the one-relator group distinct cyclic words may be conjugate; merge
    # those with equal length whose matrices are conjugate by a short element.
    ball = _ball(group, radius)
    key = letter_key(group.alphabet)
    ordered = sorted(classes, key=lambda c: (c.geodesic_length, len(c.word), key(c.word)))
    kept: list[ConjClass] = []
    for c in ordered:
        dup = False
        for k in reversed(kept):
            if c.geodesic_length - k.geodesic_length > tol:
                break
            if conjugate_in_ball(c.matrix.matrix, k.matrix.matrix, ball, 1e-6):
                dup = True
                break
        if not dup:
            kept.append(c)
    return kept


@dataclass(frozen=True, eq=False)
class ClosedGeodesic:
    cls: ConjClass
    xi_minus: float
    xi_plus: float
    base_point: complex
    length: float
    geodesic: Geodesic


def class_geodesic(c: ConjClass, group: SurfaceGroup | None = None) -> ClosedGeodesic:
    """Axis of the class matrix, based at the projection of i onto the axis."""
    try:
        xm, xp = axis(c.matrix)
    except NotHyperbolic as exc:  # cannot happen for nontrivial classes
        raise AssertionError(f"class {c.word} is not hyperbolic") from exc
    geo = Geodesic.through(xm, xp)
    geo = geo.shifted(geo.parameter_of_projection(REFERENCE_POINT))
    base = complex(geo.point(0.0))
    return ClosedGeodesic(c, xm, xp, base, c.geodesic_length, geo)
