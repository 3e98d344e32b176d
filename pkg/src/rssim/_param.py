"""Unconstrained real parametrizations of states and Hermitian matrices.

Each ``*_from_params`` has a matching ``*_grad`` that pulls back a matrix
gradient ``G`` (meaning ``dF = Re Tr[G dX]`` with ``G`` Hermitian) to the
real parameter vector.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np


def n_params(d: int) -> int:
    return d * d


@lru_cache(maxsize=None)
def _tri(d: int):
    return np.tril_indices(d, -1)


@lru_cache(maxsize=None)
def _triu(d: int):
    return np.triu_indices(d, 1)


def lower_from_params(x: np.ndarray, d: int) -> np.ndarray:
    """Lower-triangular complex matrix with real diagonal from ``d²`` reals."""
    low = np.zeros((d, d), dtype=complex)
    m = d * (d - 1) // 2
    low[np.diag_indices(d)] = x[:d]
    r, c = _tri(d)
    low[r, c] = x[d : d + m] + 1j * x[d + m : d + 2 * m]
    return low


def lower_to_params(low: np.ndarray) -> np.ndarray:
    d = low.shape[0]
    r, c = _tri(d)
    return np.concatenate([np.real(np.diag(low)), low[r, c].real, low[r, c].imag])


def density_from_params(x: np.ndarray, d: int):
    """``σ = L L† / Tr(L L†)``; returns ``(σ, L, Tr(L L†))``."""
    low = lower_from_params(x, d)
    s = low @ low.conj().T
    t = float(np.real(np.trace(s)))
    if t <= 0:
        s = np.eye(d, dtype=complex)
        t = float(d)
    return s / t, low, t


def density_grad(g: np.ndarray, sigma: np.ndarray, low: np.ndarray, t: float) -> np.ndarray:
    d = low.shape[0]
    c = np.real(np.trace(g @ sigma))
    m = low.conj().T @ (g - c * np.eye(d))
    mt = m.T
    r, cc = _tri(d)
    return (2.0 / t) * np.concatenate([np.real(np.diag(mt)), mt[r, cc].real, -mt[r, cc].imag])


def density_to_params(sigma: np.ndarray, floor: float = 1e-12) -> np.ndarray:
    """Parameters reproducing ``sigma`` (regularized to full rank if needed)."""
    d = sigma.shape[0]
    s = 0.5 * (sigma + sigma.conj().T)
    w, v = np.linalg.eigh(s)
    w = np.clip(w, floor, None)
    s = (v * w) @ v.conj().T
    low = np.linalg.cholesky(s / np.trace(s).real)
    return lower_to_params(low)


def rescale(x: np.ndarray, norm: float = 10.0) -> np.ndarray:
    """Scale parameters of a scale-invariant map to a fixed norm.

    L-BFGS-B takes a first step of unit length; starting from a large norm
    keeps that step small relative to the point.
    """
    n = float(np.linalg.norm(x))
    return x * (norm / n) if n > 0 else x


def random_density_params(d: int, rng: np.random.Generator) -> np.ndarray:
    return rng.standard_normal(d * d)


def herm_from_params(x: np.ndarray, d: int) -> np.ndarray:
    h = np.zeros((d, d), dtype=complex)
    h[np.diag_indices(d)] = x[:d]
    m = d * (d - 1) // 2
    r, c = _triu(d)
    h[r, c] = x[d : d + m] + 1j * x[d + m : d + 2 * m]
    h[c, r] = x[d : d + m] - 1j * x[d + m : d + 2 * m]
    return h


def herm_to_params(h: np.ndarray) -> np.ndarray:
    d = h.shape[0]
    r, c = _triu(d)
    return np.concatenate([np.real(np.diag(h)), h[r, c].real, h[r, c].imag])


def herm_grad(g: np.ndarray) -> np.ndarray:
    d = g.shape[0]
    r, c = _triu(d)
    return np.concatenate([np.real(np.diag(g)), 2 * g[r, c].real, 2 * g[r, c].imag])
