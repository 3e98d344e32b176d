"""Sandwiched Rényi divergences and related scalar quantities, in bits."""

from __future__ import annotations

import math

import numpy as np

from . import linops

SUPPORT_TOL = 1e-9
LN2 = math.log(2.0)


def _support_projector(y, tol=linops.ZERO_EIG):
    w, v = np.linalg.eigh(linops.hermitize(y))
    scale = max(1.0, float(np.max(np.abs(w))))
    keep = w > tol * scale
    return (v[:, keep]) @ v[:, keep].conj().T


def support_violation(x, y) -> float:
    """``Tr[x (I - Π_supp(y))]``."""
    x = np.asarray(x)
    return float(np.real(np.trace(x)) - np.real(np.trace(x @ _support_projector(y))))


def _sandwich_eigs(x, y, alpha):
    gamma = (1.0 - alpha) / (2.0 * alpha)
    yg = linops.matrix_power(y, gamma)
    m = yg @ np.asarray(x, dtype=complex) @ yg
    return np.clip(np.linalg.eigvalsh(linops.hermitize(m)), 0.0, None)


def log_q_alpha(x, y, alpha: float) -> float:
    """Natural log of ``Q_α``; ``+inf`` on support violation with ``α > 1``.

    Uses a shifted log-sum-exp, so large orders (``α`` in the hundreds) do not
    overflow.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    if alpha > 1 and support_violation(x, y) > SUPPORT_TOL:
        return math.inf
    w = _sandwich_eigs(x, y, alpha)
    w = w[w > 0]
    if w.size == 0:
        return -math.inf
    top = w.max()
    return alpha * math.log(top) + math.log(float(np.sum((w / top) ** alpha)))


def q_alpha(x, y, alpha: float) -> float:
    """``Tr (y^γ x y^γ)^α`` with ``γ = (1-α)/2α``; pseudo-powers on ``supp(y)``."""
    lq = log_q_alpha(x, y, alpha)
    return math.exp(lq) if lq < 700 else math.inf


def d_alpha(rho, sigma, alpha: float) -> float:
    """Sandwiched Rényi divergence in bits; ``α == 1`` gives the Umegaki entropy."""
    if alpha == 1:
        return umegaki(rho, sigma)
    lq = log_q_alpha(rho, sigma, alpha)
    if math.isinf(lq):
        return math.inf
    return lq / ((alpha - 1.0) * LN2)


def d_max(rho, sigma) -> float:
    """Max-relative entropy ``log₂ λ_max(σ^{-1/2} ρ σ^{-1/2})`` on ``supp(σ)``."""
    if support_violation(rho, sigma) > SUPPORT_TOL:
        return math.inf
    s = linops.matrix_power(sigma, -0.5)
    top = float(np.linalg.eigvalsh(linops.hermitize(s @ np.asarray(rho) @ s)).max())
    if top <= 0:
        return -math.inf
    return math.log2(top)


def _log2_on_support(w):
    out = np.zeros_like(w)
    pos = w > linops.ZERO_EIG * max(1.0, float(np.max(np.abs(w))))
    out[pos] = np.log2(w[pos])
    return out, pos


def von_neumann(rho) -> float:
    """``-Tr ρ log₂ ρ`` with ``0 log 0 = 0``."""
    w = np.clip(np.linalg.eigvalsh(linops.hermitize(rho)), 0.0, None)
    w = w[w > 0]
    return float(max(0.0, -np.sum(w * np.log2(w))))


def umegaki(rho, sigma) -> float:
    """``Tr ρ (log₂ ρ - log₂ σ)``; ``+inf`` if ``supp ρ ⊄ supp σ``."""
    if support_violation(rho, sigma) > SUPPORT_TOL:
        return math.inf
    rho = linops.hermitize(rho)
    ws, vs = np.linalg.eigh(linops.hermitize(sigma))
    ls, pos = _log2_on_support(ws)
    diag = np.real(np.einsum("ij,jk,ki->i", vs.conj().T, rho, vs))
    cross = float(np.sum(diag[pos] * ls[pos]))
    return -von_neumann(rho) - cross


def mutual_information(rho_rb, dims) -> float:
    """Von Neumann mutual information ``S(R) + S(B) - S(RB)`` of a bipartite state."""
    rho_r = linops.partial_trace(rho_rb, dims, 0)
    rho_b = linops.partial_trace(rho_rb, dims, 1)
    return von_neumann(rho_r) + von_neumann(rho_b) - von_neumann(rho_rb)
