"""Quantum channels in Kraus form, standard families, and channel distances."""

from __future__ import annotations

import itertools
import math
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from . import _param, linops
from .settings import DEFAULT_SETTINGS, SolverSettings

CPTP_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class Channel:
    """CP map ``ρ ↦ Σ_k K_k ρ K_k†`` with ``dim_out × dim_in`` Kraus operators.

    Construction only checks shapes; use :func:`validate` for the CPTP
    conditions.
    """

    kraus: tuple
    name: str = "channel"

    def __post_init__(self):
        ks = tuple(np.array(k, dtype=complex) for k in self.kraus)
        if not ks:
            raise ValueError("kraus list is empty")
        shape = ks[0].shape
        if len(shape) != 2 or any(k.shape != shape for k in ks):
            raise ValueError("kraus operators must be matrices of equal shape")
        for k in ks:
            k.setflags(write=False)
        object.__setattr__(self, "kraus", ks)

    @property
    def dim_in(self) -> int:
        return self.kraus[0].shape[1]

    @property
    def dim_out(self) -> int:
        return self.kraus[0].shape[0]

    def __call__(self, rho):
        return apply(self, rho)

    def __repr__(self):
        return f"Channel({self.name!r}, {self.dim_in}->{self.dim_out}, {len(self.kraus)} kraus)"


@dataclass(frozen=True)
class StinespringIsometry:
    dim_in: int
    dim_out: int
    dim_env: int
    matrix: np.ndarray = field(repr=False)

    def apply(self, rho) -> np.ndarray:
        """Output on B⊗E."""
        return self.matrix @ rho @ self.matrix.conj().T


@dataclass(frozen=True)
class ValidationReport:
    tp_residual: float
    min_choi_eigenvalue: float
    ok: bool

    def problems(self) -> list[str]:
        out = []
        if self.tp_residual > CPTP_TOL:
            out.append(f"kraus: trace preservation violated (residual {self.tp_residual:.3g})")
        if self.min_choi_eigenvalue < -CPTP_TOL:
            out.append(f"kraus: Choi matrix not PSD (min eigenvalue {self.min_choi_eigenvalue:.3g})")
        return out


def _guard(dim: int):
    if dim > linops.MAX_DIM:
        raise ValueError(f"dimension {dim} exceeds the limit {linops.MAX_DIM}")


def validate(ch: Channel) -> ValidationReport:
    s = sum(k.conj().T @ k for k in ch.kraus)
    tp = float(np.max(np.abs(s - np.eye(ch.dim_in))))
    min_eig = float(np.linalg.eigvalsh(choi_matrix(ch)).min())
    return ValidationReport(tp, min_eig, tp <= CPTP_TOL and min_eig >= -CPTP_TOL)


def apply(ch: Channel, rho) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (ch.dim_in, ch.dim_in):
        raise ValueError(f"input of shape {rho.shape} does not match dim_in={ch.dim_in}")
    k = np.stack(ch.kraus)
    return np.einsum("kij,jl,kml->im", k, rho, k.conj())


def apply_adjoint(ch: Channel, op) -> np.ndarray:
    """Heisenberg-picture map ``X ↦ Σ K† X K``."""
    k = np.stack(ch.kraus)
    return np.einsum("kji,jl,klm->im", k.conj(), np.asarray(op), k)


def choi_matrix(ch: Channel, normalized: bool = False) -> np.ndarray:
    """``Σ_ij |i⟩⟨j| ⊗ N(|i⟩⟨j|)`` on R⊗B; divided by ``dim_in`` if normalized."""
    d, db = ch.dim_in, ch.dim_out
    k = np.stack(ch.kraus)  # (n, db, d)
    # vec of (I ⊗ K)|Γ⟩ has entries K[b, i] at position (i, b)
    vecs = np.transpose(k, (0, 2, 1)).reshape(len(ch.kraus), d * db)
    j = vecs.T @ vecs.conj()
    return j / d if normalized else j


def choi(ch: Channel) -> np.ndarray:
    """Normalized Choi state ``(id ⊗ N)(Φ)``."""
    return choi_matrix(ch, normalized=True)


def from_choi(j, dim_in: int, dim_out: int, name: str = "channel") -> Channel:
    """Kraus form of the CP map with unnormalized Choi matrix ``j``."""
    w, v = np.linalg.eigh(linops.hermitize(j))
    kraus = []
    for lam, vec in zip(w, v.T):
        if lam > 1e-14 * max(1.0, w.max()):
            kraus.append(math.sqrt(lam) * vec.reshape(dim_in, dim_out).T)
    return Channel(tuple(kraus), name)


def stinespring(ch: Channel) -> StinespringIsometry:
    """Isometry ``V = Σ_k K_k ⊗ |k⟩_E`` into B⊗E."""
    k = np.stack(ch.kraus, axis=1)  # (db, ne, da)
    db, ne, da = k.shape
    return StinespringIsometry(da, db, ne, k.reshape(db * ne, da))


def tensor(*chs: Channel) -> Channel:
    din = math.prod(c.dim_in for c in chs)
    dout = math.prod(c.dim_out for c in chs)
    _guard(max(din, dout))
    kraus = [linops.kron(*ks) for ks in itertools.product(*(c.kraus for c in chs))]
    return Channel(tuple(kraus), "⊗".join(c.name for c in chs))


def compose(second: Channel, first: Channel) -> Channel:
    """``second ∘ first``."""
    kraus = [b @ a for b in second.kraus for a in first.kraus]
    return Channel(tuple(kraus), f"{second.name}∘{first.name}")


def output_state(ch: Channel, rho_A) -> np.ndarray:
    """``(id_R ⊗ N)(φ_RA)`` for the eigenbasis purification of ``rho_A``.

    The result lives on R⊗B with ``|R| = dim_in``; its R-marginal is the
    diagonal of ``rho_A``'s ascending spectrum.
    """
    rho_A = np.asarray(rho_A, dtype=complex)
    if rho_A.shape != (ch.dim_in, ch.dim_in):
        raise ValueError(f"input of shape {rho_A.shape} does not match dim_in={ch.dim_in}")
    psi = linops.purify(rho_A).reshape(ch.dim_in, ch.dim_in)
    vecs = np.stack([(psi @ k.T).ravel() for k in ch.kraus])
    return vecs.T @ vecs.conj()


# -- standard families ----------------------------------------------------------


def _prob(name, p, hi=1.0):
    if not (0.0 <= p <= hi):
        raise ValueError(f"{name} must lie in [0, {hi}], got {p}")
    return float(p)


def _drop_zero(kraus):
    return tuple(k for k in kraus if np.max(np.abs(k)) > 0)


def weyl_operators(d: int) -> list[np.ndarray]:
    """The ``d²`` generalized Pauli operators ``X^a Z^b``."""
    omega = np.exp(2j * np.pi / d)
    x = np.roll(np.eye(d), 1, axis=0)
    z = np.diag(omega ** np.arange(d))
    return [
        np.linalg.matrix_power(x, a) @ np.linalg.matrix_power(z, b)
        for a in range(d)
        for b in range(d)
    ]


def identity(d: int = 2) -> Channel:
    return Channel((np.eye(d),), f"identity{d}")


def unitary(u, name: str = "unitary") -> Channel:
    return Channel((np.asarray(u),), name)


def depolarizing(d: int = 2, p: float = 0.0) -> Channel:
    """``ρ ↦ (1 - p) ρ + p I/d``."""
    p = _prob("p", p)
    ops = weyl_operators(d)
    w0 = math.sqrt(1.0 - p + p / d**2)
    wk = math.sqrt(p) / d
    kraus = [w0 * ops[0]] + [wk * op for op in ops[1:]]
    return Channel(_drop_zero(kraus), f"depolarizing(d={d},p={p:g})")


def dephasing(p: float = 1.0) -> Channel:
    """Qubit channel scaling off-diagonals by ``1 - p``."""
    p = _prob("p", p)
    kraus = [
        math.sqrt(1 - p) * np.eye(2),
        math.sqrt(p) * np.diag([1.0, 0.0]),
        math.sqrt(p) * np.diag([0.0, 1.0]),
    ]
    return Channel(_drop_zero(kraus), f"dephasing(p={p:g})")


def amplitude_damping(gamma: float) -> Channel:
    gamma = _prob("gamma", gamma)
    k0 = np.array([[1.0, 0.0], [0.0, math.sqrt(1 - gamma)]])
    k1 = np.array([[0.0, math.sqrt(gamma)], [0.0, 0.0]])
    return Channel(_drop_zero([k0, k1]), f"amplitude_damping(gamma={gamma:g})")


def pauli(px: float, py: float, pz: float) -> Channel:
    for nm, v in (("px", px), ("py", py), ("pz", pz)):
        _prob(nm, v)
    p0 = 1.0 - px - py - pz
    if p0 < -1e-15:
        raise ValueError("pauli probabilities must sum to at most 1")
    p0 = max(p0, 0.0)
    paulis = [
        np.eye(2),
        np.array([[0, 1], [1, 0]]),
        np.array([[0, -1j], [1j, 0]]),
        np.diag([1.0, -1.0]),
    ]
    kraus = [math.sqrt(q) * s for q, s in zip((p0, px, py, pz), paulis)]
    return Channel(_drop_zero(kraus), f"pauli({px:g},{py:g},{pz:g})")


CANONICAL = {
    "identity": identity,
    "depolarizing": depolarizing,
    "dephasing": dephasing,
    "amplitude_damping": amplitude_damping,
    "pauli": pauli,
}


def canonical(name: str, **params) -> Channel:
    """Standard channel by family name, e.g. ``canonical("depolarizing", d=2, p=0.2)``."""
    try:
        factory = CANONICAL[name]
    except KeyError:
        raise ValueError(f"unknown channel family {name!r}; choose from {sorted(CANONICAL)}") from None
    try:
        return factory(**params)
    except TypeError as exc:
        raise ValueError(f"bad parameters for {name}: {exc}") from None


def random_channel(dim_in: int, dim_out: int, rng: np.random.Generator, n_kraus: int = 2) -> Channel:
    """Channel from a Haar-ish random isometry C^{dim_in} → C^{dim_out ⊗ n_kraus}."""
    big = dim_out * n_kraus
    if big < dim_in:
        raise ValueError("isometry needs dim_out * n_kraus >= dim_in")
    z = rng.standard_normal((big, dim_in)) + 1j * rng.standard_normal((big, dim_in))
    q, _ = np.linalg.qr(z)
    k = q.reshape(dim_out, n_kraus, dim_in)
    return Channel(tuple(k[:, i, :] for i in range(n_kraus)), "random")


# -- symmetrization -----------------------------------------------------------


def symmetrize(ch: Channel, n: int, dA: int, dB: int) -> Channel:
    """Average of ``W_B^{π^{-1}} ∘ M ∘ W_A^π`` over all permutations of ``n`` slots."""
    if ch.dim_in != dA**n or ch.dim_out != dB**n:
        raise ValueError(f"channel dims {ch.dim_in}->{ch.dim_out} are not {dA}^{n}->{dB}^{n}")
    if n > 3:
        raise ValueError("symmetrize supports n <= 3")
    _guard(max(dA**n, dB**n))
    perms = list(itertools.permutations(range(n)))
    scale = 1.0 / math.sqrt(len(perms))
    kraus = []
    for perm in perms:
        wa = linops.permutation_operator((dA,) * n, perm)
        wb = linops.permutation_operator((dB,) * n, perm)
        kraus.extend(scale * (wb.conj().T @ k @ wa) for k in ch.kraus)
    return Channel(tuple(kraus), f"sym({ch.name})")


# -- worst-case purified distance ------------------------------------------------


@dataclass(frozen=True)
class DistanceEstimate:
    """Best purified distance found by multi-start search.

    ``value`` is attained at ``witness`` (a pure state on R⊗A), so it is a
    certified lower bound on the true channel distance; global optimality is
    not certified.
    """

    value: float
    witness: np.ndarray = field(repr=False)
    restart_spread: float
    restart_values: tuple = field(repr=False, default=())
    certified: bool = False


def _sqrt_and_inv(h):
    w, v = np.linalg.eigh(h)
    w = np.clip(w, 0.0, None)
    return v, w


def _fidelity_and_grads(rho, sigma):
    """Fidelity with gradients w.r.t. both arguments (pseudo-inverse on supports)."""
    vs, ws = _sqrt_and_inv(sigma)
    sq_s = (vs * np.sqrt(ws)) @ vs.conj().T
    vr, wr = _sqrt_and_inv(rho)
    sq_r = (vr * np.sqrt(wr)) @ vr.conj().T

    def half(sq, other):
        t = sq @ other @ sq
        t = 0.5 * (t + t.conj().T)
        w, v = np.linalg.eigh(t)
        w = np.clip(w, 0.0, None)
        f = float(np.sum(np.sqrt(w)))
        cut = 1e-14 * max(1.0, w.max())
        inv = np.where(w > cut, 1.0 / np.sqrt(np.where(w > cut, w, 1.0)), 0.0)
        g = 0.5 * sq @ ((v * inv) @ v.conj().T) @ sq
        return f, g

    f, g_rho = half(sq_s, rho)
    _, g_sigma = half(sq_r, sigma)
    return f, g_rho, g_sigma


def _ptrace_b(op, dr, db):
    return np.trace(op.reshape(dr, db, dr, db), axis1=1, axis2=3)


def _distance_objective(j_m, j_n, d, db):
    eye_b = np.eye(db)

    def fun(x):
        xm = (x[: d * d] + 1j * x[d * d :]).reshape(d, d)
        nrm = np.linalg.norm(xm)
        xh = xm / nrm
        a = np.kron(xh, eye_b)
        rm = a @ j_m @ a.conj().T
        rn = a @ j_n @ a.conj().T
        f, gm, gn = _fidelity_and_grads(rm, rn)
        # Wirtinger gradient of F² with respect to conj(X̂)
        y = 2 * f * (_ptrace_b(gm @ a @ j_m, d, db) + _ptrace_b(gn @ a @ j_n, d, db))
        gvec = np.concatenate([2 * y.real.ravel(), 2 * y.imag.ravel()])
        xv = np.concatenate([xh.real.ravel(), xh.imag.ravel()])
        gvec = (gvec - np.dot(gvec, xv) * xv) / nrm
        return f * f, gvec

    return fun


def channel_purified_distance(
    m: Channel, n: Channel, settings: SolverSettings = DEFAULT_SETTINGS, extra_starts: Sequence = ()
) -> DistanceEstimate:
    """Multi-start estimate of ``max_φ P((id⊗M)(φ), (id⊗N)(φ))``.

    Inputs are ``|φ⟩ = (X ⊗ I)|Γ⟩`` with ``X`` a normalized ``dim_in × dim_in``
    complex matrix (this covers every pure state with ``|R| = dim_in``).
    Start 0 is the maximally entangled input; the rest are seeded random.
    ``extra_starts`` (pure vectors on R⊗A) are appended to the seeded ones.
    """
    if (m.dim_in, m.dim_out) != (n.dim_in, n.dim_out):
        raise ValueError("channels must have equal input and output dimensions")
    d, db = m.dim_in, m.dim_out
    j_m, j_n = choi_matrix(m), choi_matrix(n)
    fun = _distance_objective(j_m, j_n, d, db)
    best_val, best_x, values = np.inf, None, []
    starts = [np.concatenate([np.eye(d).ravel(), np.zeros(d * d)])]
    starts += [settings.rng(k).standard_normal(2 * d * d) for k in range(1, settings.distance_starts)]
    for vec in extra_starts:
        vec = np.asarray(vec, dtype=complex).ravel()
        starts.append(np.concatenate([vec.real, vec.imag]))
    for x0 in starts:
        res = minimize(
            fun, _param.rescale(x0), jac=True, method="L-BFGS-B",
            options={"maxiter": settings.max_iter, "gtol": 1e-12, "ftol": 1e-15},
        )
        values.append(float(res.fun))
        if res.fun < best_val:
            best_val, best_x = float(res.fun), res.x
    xm = (best_x[: d * d] + 1j * best_x[d * d :]).reshape(d, d)
    witness = (xm / np.linalg.norm(xm)).ravel()
    # recompute the attained value with the reference fidelity routine
    rm = _out_pure(m, witness, d)
    rn = _out_pure(n, witness, d)
    value = linops.purified_distance(rm, rn)
    dists = [math.sqrt(max(0.0, 1 - v)) for v in values]
    return DistanceEstimate(value, witness, max(dists) - min(dists), tuple(dists))


def _out_pure(ch: Channel, phi, d):
    psi = np.asarray(phi).reshape(d, d)
    vecs = np.stack([(psi @ k.T).ravel() for k in ch.kraus])
    return vecs.T @ vecs.conj()


def purified_distance_at(m: Channel, n: Channel, phi) -> float:
    """``P((id⊗M)(φ), (id⊗N)(φ))`` for a fixed input ket on R⊗A with ``|R| = dim_in``."""
    phi = linops.pure_state(phi)
    d = m.dim_in
    if phi.size != d * d:
        raise ValueError(f"input ket must have dimension {d * d}")
    return linops.purified_distance(_out_pure(m, phi, d), _out_pure(n, phi, d))


def purified_distance_on_state(m: Channel, n: Channel, psi, dim_ref: int) -> float:
    """Purified distance of outputs for an input ket on R⊗A with arbitrary ``|R|``."""
    psi = linops.pure_state(psi).reshape(dim_ref, m.dim_in)
    outs = []
    for ch in (m, n):
        vecs = np.stack([(psi @ k.T).ravel() for k in ch.kraus])
        outs.append(vecs.T @ vecs.conj())
    return linops.purified_distance(*outs)


def choi_distance(a: Channel, b: Channel) -> float:
    """Max-entry distance between normalized Choi matrices."""
    return float(np.max(np.abs(choi(a) - choi(b))))


def kraus_from_lists(kraus: Sequence) -> Channel:
    return Channel(tuple(np.asarray(k, dtype=complex) for k in kraus))
