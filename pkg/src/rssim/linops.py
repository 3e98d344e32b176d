"""Dense linear algebra and state utilities on small Hilbert spaces.

Operators are plain complex ``numpy`` arrays. Multipartite operators carry
their subsystem dimensions separately as a tuple ``dims`` whose product is
the matrix size; subsystem 0 is the most significant tensor factor.
"""

from __future__ import annotations

import itertools
import math
from collections.abc import Sequence
from functools import reduce

import numpy as np

HERMITIAN_TOL = 1e-12
PSD_TOL = 1e-10
TRACE_TOL = 1e-10
ZERO_EIG = 1e-12
MAX_DIM = 4096


class EighError(np.linalg.LinAlgError):
    """Eigendecomposition failed to converge."""

    def __init__(self, norm: float):
        super().__init__(f"eigendecomposition did not converge (matrix norm {norm:.6g})")
        self.norm = norm


def kron(*ops) -> np.ndarray:
    """Kronecker product of any number of matrices (or vectors)."""
    if not ops:
        raise ValueError("kron needs at least one operand")
    return reduce(np.kron, (np.asarray(op) for op in ops))


def dagger(a: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(a, -1, -2))


def hermitize(h, tol: float = 1e-8) -> np.ndarray:
    """Return ``(h + h†)/2`` after checking that ``h`` is Hermitian up to ``tol``.

    The tolerance is relative to ``max(1, ‖h‖_max)``; anything further from
    Hermitian raises ``ValueError``.
    """
    h = np.asarray(h, dtype=complex)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {h.shape}")
    dev = np.max(np.abs(h - h.conj().T)) if h.size else 0.0
    scale = max(1.0, float(np.max(np.abs(h)))) if h.size else 1.0
    if dev > tol * scale:
        raise ValueError(f"matrix is not Hermitian (max deviation {dev:.3g})")
    return 0.5 * (h + h.conj().T)


def eigh(h) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (ascending) and unitary eigenvectors of a Hermitian matrix."""
    h = hermitize(h)
    try:
        w, v = np.linalg.eigh(h)
    except np.linalg.LinAlgError as exc:
        raise EighError(float(np.linalg.norm(h))) from exc
    return w, v


def _apply_spectral(w: np.ndarray, v: np.ndarray, fw: np.ndarray) -> np.ndarray:
    return (v * fw) @ v.conj().T


def matrix_power(h, p: float, *, tol: float = ZERO_EIG) -> np.ndarray:
    """Spectral power ``V diag(λ^p) V†`` of a Hermitian matrix.

    Eigenvalues with ``|λ| <= tol·max(1, max|λ|)`` are treated as exact zeros:
    they map to 0 for every ``p``, which makes negative powers pseudo-powers on
    the support and ``p = 0`` the support projector. Non-integer powers need a
    PSD input (eigenvalues above ``-PSD_TOL``); otherwise ``ValueError``.
    """
    w, v = eigh(h)
    scale = max(1.0, float(np.max(np.abs(w)))) if w.size else 1.0
    zero = np.abs(w) <= tol * scale
    integer = float(p).is_integer()
    if not integer:
        if np.any(w < -PSD_TOL * scale):
            raise ValueError(
                f"non-integer power {p} of a matrix with negative eigenvalue {w.min():.3g}"
            )
        w = np.clip(w, 0.0, None)
    fw = np.zeros_like(w)
    nz = ~zero
    fw[nz] = np.sign(w[nz]) ** int(p) * np.abs(w[nz]) ** p if integer else w[nz] ** p
    return _apply_spectral(w, v, fw)


def sqrtm_psd(h) -> np.ndarray:
    return matrix_power(h, 0.5)


def divided_differences(w: np.ndarray, f, fprime, *, rtol: float = 1e-9) -> np.ndarray:
    """First divided-difference matrix ``[f(w_i) - f(w_j)] / (w_i - w_j)``.

    Near-coincident eigenvalues use the derivative. This is the Daleckii–Krein
    kernel: for ``A = V diag(w) V†`` the Fréchet derivative of ``f`` at ``A`` in
    direction ``E`` is ``V (Γ ∘ V†EV) V†``.
    """
    fw = f(w)
    dw = w[:, None] - w[None, :]
    close = np.abs(dw) <= rtol * np.maximum(1.0, np.abs(w)[:, None] + np.abs(w)[None, :])
    with np.errstate(divide="ignore", invalid="ignore"):
        gamma = (fw[:, None] - fw[None, :]) / np.where(close, 1.0, dw)
    mid = 0.5 * (w[:, None] + w[None, :])
    return np.where(close, fprime(mid), gamma)


def frechet_adjoint(v: np.ndarray, gamma: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Pull a gradient ``g`` (w.r.t. ``f(A)``) back to a gradient w.r.t. ``A``."""
    return v @ (gamma * (v.conj().T @ g @ v)) @ v.conj().T


def trace_distance(rho, sigma) -> float:
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(hermitize(rho - sigma)))))


# -- density operators ------------------------------------------------------


def check_dims(dims: Sequence[int], size: int) -> tuple[int, ...]:
    dims = tuple(int(d) for d in dims)
    if any(d < 1 for d in dims):
        raise ValueError(f"subsystem dimensions must be positive, got {dims}")
    if math.prod(dims) != size:
        raise ValueError(f"dims {dims} do not multiply to matrix size {size}")
    return dims


def as_density(rho, *, tol: float = PSD_TOL) -> np.ndarray:
    """Validate a density matrix and clip round-off negativity.

    Eigenvalues below ``-tol`` or a trace more than ``TRACE_TOL`` away from 1
    raise ``ValueError``. Small negative eigenvalues are clipped to 0 and the
    result renormalized.
    """
    rho = hermitize(rho)
    tr = float(np.real(np.trace(rho)))
    if abs(tr - 1.0) > TRACE_TOL:
        raise ValueError(f"density matrix has trace {tr:.12g}")
    w, v = np.linalg.eigh(rho)
    if w[0] < -tol:
        raise ValueError(f"density matrix has negative eigenvalue {w[0]:.3g}")
    if w[0] < 0:
        w = np.clip(w, 0.0, None)
        rho = _apply_spectral(w, v, w / w.sum())
    return rho


def pure_state(vec) -> np.ndarray:
    """Normalized ket as a 1-D complex array."""
    vec = np.asarray(vec, dtype=complex).ravel()
    nrm = np.linalg.norm(vec)
    if nrm == 0:
        raise ValueError("zero vector is not a state")
    return vec / nrm


def projector(vec) -> np.ndarray:
    vec = np.asarray(vec, dtype=complex).ravel()
    return np.outer(vec, vec.conj())


def maximally_entangled(d: int) -> np.ndarray:
    """Density matrix of ``Σ_i |ii⟩/√d``."""
    vec = np.eye(d, dtype=complex).ravel() / math.sqrt(d)
    return projector(vec)


def partial_trace(rho, dims: Sequence[int], keep) -> np.ndarray:
    """Trace out every subsystem not listed in ``keep``.

    ``keep`` may be an int or an iterable of subsystem indices; the kept
    subsystems appear in ascending order in the result.
    """
    rho = np.asarray(rho)
    dims = check_dims(dims, rho.shape[0])
    n = len(dims)
    keep = sorted({keep} if isinstance(keep, (int, np.integer)) else set(keep))
    if not keep:
        raise ValueError("keep must name at least one subsystem")
    if keep[0] < 0 or keep[-1] >= n:
        raise IndexError(f"subsystem index out of range for dims {dims}: {keep}")
    t = rho.reshape(dims + dims)
    traced = [i for i in range(n) if i not in keep]
    row = list(range(n))
    col = [n + i for i in range(n)]
    for i in traced:
        col[i] = row[i]
    out = [row[i] for i in keep] + [col[i] for i in keep]
    res = np.einsum(t, row + col, out)
    dk = math.prod(dims[i] for i in keep)
    return res.reshape(dk, dk)


def permute_subsystems(rho, dims: Sequence[int], perm: Sequence[int]) -> np.ndarray:
    """Reorder the tensor factors of an operator.

    Slot ``i`` of the result holds old subsystem ``perm[i]`` (the convention
    of ``numpy.transpose``). In terms of the natural representation this is
    conjugation by ``W^π`` with ``π^{-1}(i) = perm[i]``.
    """
    rho = np.asarray(rho)
    dims = check_dims(dims, rho.shape[0])
    n = len(dims)
    perm = [int(p) for p in perm]
    if sorted(perm) != list(range(n)):
        raise ValueError(f"{perm} is not a permutation of {n} subsystems")
    t = rho.reshape(dims + dims)
    t = np.transpose(t, perm + [n + p for p in perm])
    return t.reshape(rho.shape)


def permutation_operator(dims: Sequence[int], perm: Sequence[int]) -> np.ndarray:
    """Unitary ``W`` with ``W ρ W† == permute_subsystems(ρ, dims, perm)``."""
    dims = tuple(int(d) for d in dims)
    size = math.prod(dims)
    n = len(dims)
    eye = np.eye(size, dtype=complex).reshape(dims + (size,))
    w = np.transpose(eye, list(perm) + [n]).reshape(size, size)
    return w


def purify(rho) -> np.ndarray:
    """Eigenbasis purification ``Σ_i √λ_i |i⟩_R |v_i⟩_A`` as a vector on R⊗A.

    Eigenvalues are ascending and each eigenvector's first nonzero component
    is made real positive, so the output is deterministic.
    """
    rho = as_density(rho)
    w, v = np.linalg.eigh(rho)
    w = np.clip(w, 0.0, None)
    for k in range(v.shape[1]):
        col = v[:, k]
        idx = int(np.argmax(np.abs(col) > 1e-12))
        col *= np.exp(-1j * np.angle(col[idx]))
    d = rho.shape[0]
    psi = np.zeros((d, d), dtype=complex)
    for i in range(d):
        psi[i, :] = math.sqrt(w[i]) * v[:, i]
    return psi.ravel()


def fidelity(rho, sigma) -> float:
    """Uhlmann fidelity ``‖√ρ √σ‖₁`` clipped to [0, 1]."""
    rho = np.asarray(rho)
    sigma = np.asarray(sigma)
    if rho.shape != sigma.shape:
        raise ValueError(f"dimension mismatch {rho.shape} vs {sigma.shape}")
    sv = np.linalg.svd(sqrtm_psd(rho) @ sqrtm_psd(sigma), compute_uv=False)
    return float(min(1.0, max(0.0, sv.sum())))


def purified_distance(rho, sigma) -> float:
    f = fidelity(rho, sigma)
    return math.sqrt(max(0.0, 1.0 - f * f))


def distinct_eigenvalue_count(h, rel_tol: float = 1e-8) -> int:
    """Number of eigenvalue clusters.

    Sorted eigenvalues are split wherever the gap exceeds
    ``rel_tol · max(|λ_i|, |λ_{i+1}|, 1e-300)``. Eigenvalues within ``ZERO_EIG``
    of zero (relative to the spectral radius) are snapped to 0 first so that a
    numerically zero block counts once.
    """
    if rel_tol <= 0:
        raise ValueError("rel_tol must be positive")
    w = np.sort(np.linalg.eigvalsh(hermitize(h)))
    scale = max(float(np.max(np.abs(w))), 1e-300)
    w = np.where(np.abs(w) <= ZERO_EIG * scale, 0.0, w)
    gaps = np.diff(w)
    ref = np.maximum(np.maximum(np.abs(w[:-1]), np.abs(w[1:])), 1e-300)
    return 1 + int(np.sum(gaps > rel_tol * ref))


# -- symmetric subspace --------------------------------------------------------


def symmetric_subspace_dim(n: int, d: int) -> int:
    """``binomial(n + d - 1, n)``, exact."""
    if n < 1 or d < 1:
        raise ValueError("n and d must be positive")
    return math.comb(n + d - 1, n)


def symmetric_subspace_bound(n: int, d: int) -> int:
    """Polynomial upper bound ``(n + 1)^(d - 1)`` on the symmetric-subspace dimension."""
    if n < 1 or d < 1:
        raise ValueError("n and d must be positive")
    return (n + 1) ** (d - 1)


def symmetric_projector(n: int, d: int) -> np.ndarray:
    """Projector onto Sym((C^d)^{⊗n}), the average of all ``W^π``."""
    size = d**n
    if size > MAX_DIM:
        raise ValueError(f"symmetric projector of dimension {size} exceeds {MAX_DIM}")
    dims = (d,) * n
    proj = np.zeros((size, size), dtype=complex)
    perms = list(itertools.permutations(range(n)))
    for perm in perms:
        proj += permutation_operator(dims, perm)
    return proj / len(perms)


def de_finetti_state(n: int, dA: int) -> np.ndarray:
    """Symmetric test state ``ζ_{A^n}``.

    Obtained by tracing the reference copies out of the normalized projector
    onto Sym((C^{dA} ⊗ C^{dA})^{⊗n}); equivalently the average of ``ρ^{⊗n}``
    over the Hilbert–Schmidt measure on qudit states.
    """
    local = dA * dA
    if local**n > MAX_DIM:
        raise ValueError(f"de Finetti state needs dimension {local**n} > {MAX_DIM}")
    proj = symmetric_projector(n, local) / symmetric_subspace_dim(n, local)
    dims = (dA,) * (2 * n)  # (R̄_1 A_1)(R̄_2 A_2)...
    keep = [2 * i + 1 for i in range(n)]
    return hermitize(partial_trace(proj, dims, keep))


# -- random objects (seeded) -------------------------------------------------------


def random_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / math.sqrt(2)
    q, r = np.linalg.qr(z)
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph


def random_density(d: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Hilbert–Schmidt (Ginibre) random state of the given rank."""
    k = d if rank is None else rank
    g = rng.standard_normal((d, k)) + 1j * rng.standard_normal((d, k))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_pure(d: int, rng: np.random.Generator) -> np.ndarray:
    return pure_state(rng.standard_normal(d) + 1j * rng.standard_normal(d))
