"""Small dense linear-algebra helpers shared across modules."""
from __future__ import annotations

import numpy as np

# relative tolerance under which two top singular/eigen values count as tied
TIE_RTOL = 1e-12


def hermitian(M: np.ndarray) -> np.ndarray:
    return 0.5 * (M + np.conj(np.swapaxes(M, -1, -2)))


def is_hermitian(M: np.ndarray, rtol: float = 1e-12) -> bool:
    scale = max(1.0, float(np.max(np.abs(M)))) if M.size else 1.0
    return bool(np.max(np.abs(M - np.conj(M.T)), initial=0.0) <= rtol * scale)


def phase_normalize(v: np.ndarray) -> np.ndarray:
    """Rotate ``v`` (or each row of a batch) so its largest-magnitude entry is real positive."""
    v = np.asarray(v, dtype=complex)
    idx = np.argmax(np.abs(v), axis=-1)
    pivot = np.take_along_axis(v, idx[..., None], axis=-1)
    mag = np.abs(pivot)
    phase = np.where(mag > 0, pivot / np.where(mag > 0, mag, 1.0), 1.0)
    return v * np.conj(phase)


def canonical_direction(basis: np.ndarray) -> np.ndarray:
    """Deterministic unit vector inside span(basis columns).

    Projects e_1, e_2, ... onto the subspace and returns the first projection
    that is not negligible, phase-normalized.  With a one-dimensional subspace
    this is just the phase-normalized basis vector.
    """
    Q, _ = np.linalg.qr(basis)
    m = Q.shape[0]
    for i in range(m):
        p = Q @ np.conj(Q[i, :])
        nrm = np.linalg.norm(p)
        if nrm > 1e-8:
            return phase_normalize(p / nrm)
    raise ValueError("empty subspace")


def top_eigenpair(A: np.ndarray) -> tuple[float, np.ndarray, bool]:
    """Largest eigenvalue of Hermitian ``A``, its unit eigenvector and a tie flag."""
    w, V = np.linalg.eigh(hermitian(A))
    top = w[-1]
    tol = TIE_RTOL * max(abs(top), np.finfo(float).tiny)
    tied = np.abs(w - top) <= tol
    if tied.sum() > 1:
        return float(top), canonical_direction(V[:, tied]), True
    return float(top), phase_normalize(V[:, -1]), False


def psd_project(M: np.ndarray) -> tuple[np.ndarray, float]:
    """Nearest PSD matrix in Frobenius norm and the distance moved."""
    w, V = np.linalg.eigh(hermitian(M))
    clipped = np.clip(w, 0.0, None)
    P = (V * clipped) @ np.conj(V.T)
    return hermitian(P), float(np.linalg.norm(w - clipped))


def lambda_min(M: np.ndarray) -> float:
    return float(np.linalg.eigvalsh(hermitian(M))[0])


def quad(t: np.ndarray, M: np.ndarray) -> float:
    """Real part of t^H M t for Hermitian M."""
    return float(np.real(np.conj(t) @ M @ t))
