"""Small dense linear-algebra helpers shared across modules."""

from __future__ import annotations

import numpy as np


def polar_unitary(m: np.ndarray) -> np.ndarray:
    """Closest unitary matrix (polar factor), batched over leading axes."""
    u, _, vh = np.linalg.svd(m)
    return u @ vh


def unitarity_defect(m: np.ndarray) -> float:
    r = m.shape[-1]
    return float(np.linalg.norm(m.conj().T @ m - np.eye(r)))


def random_unitary(rng: np.random.Generator, r: int) -> np.ndarray:
    """Haar-distributed unitary via QR with phase correction."""
    z = (rng.normal(size=(r, r)) + 1j * rng.normal(size=(r, r))) / np.sqrt(2)
    q, rr = np.linalg.qr(z)
    d = np.diagonal(rr)
    return q * (d / np.abs(d))


def random_skew_hermitian(rng: np.random.Generator, r: int, scale: float = 1.0) -> np.ndarray:
    z = rng.normal(size=(r, r)) + 1j * rng.normal(size=(r, r))
    return scale * (z - z.conj().T) / 2


def skew_defect(m: np.ndarray) -> float:
    return float(np.abs(m + np.swapaxes(m, -1, -2).conj()).max())


def nullspace(m: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """Orthonormal basis (columns) of the kernel, singular values <= tol counted as zero."""
    _, s, vh = np.linalg.svd(m)
    rank = int(np.sum(s > tol))
    return vh[rank:].conj().T


def vec(u: np.ndarray) -> np.ndarray:
    """Column-stacking vectorisation: vec(A u B) = (B^T kron A) vec(u)."""
    return u.ravel(order="F")


def unvec(x: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    return x.reshape(shape, order="F")
