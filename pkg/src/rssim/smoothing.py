"""Smoothing quantity of the max-information and its exponent.

``δ(ρ, λ) = min P(ρ̃, ρ)`` over normalized ``ρ̃`` and states ``σ_B`` with
``ρ̃ ≤ 2^λ ρ_R ⊗ σ_B``.

Writing ``ω = ρ_R ⊗ σ`` and ``c = 2^λ``, every feasible ``ρ̃`` is
``ω^{1/2} X ω^{1/2}`` with ``0 ≤ X ≤ c I``. The operator interval is covered by
``X = c · sigmoid(H + tI)`` for Hermitian ``H``, and the scalar ``t`` is fixed
by root-finding so that ``Tr ρ̃ = 1`` holds exactly. The dominance constraint is
therefore satisfied by construction, and ``(H, σ)`` are optimized jointly with
analytic gradients.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, minimize

from . import _param, linops, mutinfo
from .renyi import mutual_information, support_violation
from .channels import Channel, output_state
from .exponents import AMBIGUOUS_BAND, ExponentResult, _max_on_interval
from .settings import DEFAULT_SETTINGS, SolverSettings

FEAS_TOL = 1e-8
BASELINE_SAMPLES = 256


@dataclass(frozen=True)
class SmoothingResult:
    delta: float
    optimizer_state: np.ndarray = field(repr=False)
    optimizer_sigma: np.ndarray = field(repr=False)
    oracle_gap: float
    feasibility_residual: float = 0.0
    converged: bool = True
    restart_spread: float = 0.0

    def describe(self, digits: int = 12) -> str:
        return (
            f"delta={self.delta:.{digits}f} oracle_gap={self.oracle_gap:.3g} "
            f"feasibility_residual={self.feasibility_residual:.3g} converged={self.converged}"
        )


def feasibility_residual(rho_tilde, rho_r, sigma, lam: float) -> float:
    """``max(0, λ_max(ω^{-1/2} ρ̃ ω^{-1/2}) − 2^λ)`` with ``ω = ρ_R ⊗ σ``.

    Returns ``inf`` if ``ρ̃`` leaves the support of ``ω``.
    """
    omega = np.kron(rho_r, sigma)
    if support_violation(rho_tilde, omega) > 1e-9:
        return math.inf
    s = linops.matrix_power(omega, -0.5)
    m = s @ rho_tilde @ s
    top = float(np.linalg.eigvalsh(0.5 * (m + m.conj().T)).max())
    return max(0.0, top - 2.0**lam)


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def _dsigmoid(x):
    y = _sigmoid(x)
    return y * (1.0 - y)


def _logit(p):
    return np.log(p) - np.log1p(-p)


class _Problem:
    """Reduced problem on ``supp(ρ_R) ⊗ B``."""

    def __init__(self, rho, dims, lam):
        self.dr, self.db = (int(d) for d in dims)
        self.lam = float(lam)
        self.c = 2.0**lam
        rho_r = linops.partial_trace(rho, dims, 0)
        w, v = np.linalg.eigh(rho_r)
        keep = w > 1e-12 * max(1.0, w.max())
        self.pr = v[:, keep]
        self.k = self.pr.shape[1]
        self.iso = np.kron(self.pr, np.eye(self.db))
        self.rho = linops.hermitize(self.iso.conj().T @ rho @ self.iso)
        self.rho_r = np.diag(w[keep]).astype(complex)
        self.sq_rho = linops.sqrtm_psd(self.rho)
        self.dim = self.k * self.db
        self.rho_b = linops.partial_trace(rho, dims, 1)

    def embed(self, op):
        return self.iso @ op @ self.iso.conj().T

    def omega(self, sigma):
        return np.kron(self.rho_r, sigma)

    def fidelity_grad(self, rt):
        """``F(ρ̃, ρ)`` and ``∂F/∂ρ̃``."""
        m = self.sq_rho @ rt @ self.sq_rho
        w, v = np.linalg.eigh(0.5 * (m + m.conj().T))
        w = np.clip(w, 0.0, None)
        f = float(np.sum(np.sqrt(w)))
        cut = 1e-14 * max(1.0, w.max())
        inv = np.where(w > cut, 1.0 / np.sqrt(np.where(w > cut, w, 1.0)), 0.0)
        return f, 0.5 * self.sq_rho @ ((v * inv) @ v.conj().T) @ self.sq_rho

    def shift(self, hw, om_diag):
        """Scalar ``t`` with ``c Σ sigmoid(h_i + t) ω_ii = 1`` (``ω`` in the eigenbasis of ``H``)."""
        f = lambda t: self.c * float(np.sum(_sigmoid(hw + t) * om_diag)) - 1.0  # noqa: E731
        # bracket relative to the spectrum of H so that large trial steps stay solvable
        step = 1.0
        lo = -float(hw.max()) - step
        while f(lo) > 0:
            step *= 2.0
            lo = -float(hw.max()) - step
        step = 1.0
        hi = -float(hw.min()) + step
        while f(hi) < 0 and step < 1e6:
            step *= 2.0
            hi = -float(hw.min()) + step
        return brentq(f, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)

    def state(self, h, sigma):
        om = self.omega(sigma)
        hw, hv = np.linalg.eigh(h)
        od = np.real(np.einsum("ij,jk,ki->i", hv.conj().T, om, hv))
        t = self.shift(hw, od)
        x0 = (hv * _sigmoid(hw + t)) @ hv.conj().T
        sq = linops.sqrtm_psd(om)
        rt = self.c * sq @ x0 @ sq
        return rt, om, sq, x0, hw, hv, t

    def value_grad(self, h, sigma, want_grad=True):
        """``-F²`` and gradients with respect to ``H`` and ``σ``."""
        rt, om, sq, x0, hw, hv, t = self.state(h, sigma)
        f, gf = self.fidelity_grad(rt)
        val = -f * f
        if not want_grad:
            return val, None, None, rt
        g = -2.0 * f * gf
        c = self.c
        dd = linops.divided_differences(hw + t, _sigmoid, _dsigmoid)
        a = sq @ g @ sq
        ga = hv @ (dd * (hv.conj().T @ a @ hv)) @ hv.conj().T
        gw = hv @ (dd * (hv.conj().T @ om @ hv)) @ hv.conj().T
        kappa = np.trace(ga).real / np.trace(gw).real
        g_h = c * (ga - kappa * gw)
        ow, ov = np.linalg.eigh(om)
        ow = np.clip(ow, 1e-300, None)
        dsq = linops.divided_differences(ow, np.sqrt, lambda x: 0.5 / np.sqrt(x))
        b = x0 @ sq @ g + g @ sq @ x0
        g_om = c * (linops.frechet_adjoint(ov, dsq, b) - kappa * x0)
        g4 = g_om.reshape(self.k, self.db, self.k, self.db)
        g_sigma = np.einsum("rbsc,sr->bc", g4, self.rho_r)
        return val, g_h, g_sigma, rt


def _x_start(prob: _Problem, sigma):
    """``H`` reproducing the clipped ``ω^{-1/2} ρ ω^{-1/2}``."""
    s = linops.matrix_power(prob.omega(sigma), -0.5)
    x = linops.hermitize(s @ prob.rho @ s) / prob.c
    w, v = np.linalg.eigh(x)
    w = np.clip(w, 1e-6, 1 - 1e-6)
    return (v * _logit(w)) @ v.conj().T


def _omega_sigma_start(prob, k, rng):
    if k == 0:
        s = prob.rho_b
    elif k == 1:
        s = np.eye(prob.db) / prob.db
    else:
        s = linops.random_density(prob.db, rng)
    w, v = np.linalg.eigh(linops.hermitize(s))
    w = np.clip(w, 1e-6, None)
    s = (v * w) @ v.conj().T
    return s / np.trace(s).real


def _run(prob: _Problem, sigma0, h0, settings):
    nh = prob.dim**2
    db = prob.db

    def unpack(x):
        h = _param.herm_from_params(x[:nh], prob.dim)
        sigma, low, tr = _param.density_from_params(x[nh:], db)
        return h, sigma, low, tr

    def fun(x):
        h, sigma, low, tr = unpack(x)
        v, g_h, g_s, _ = prob.value_grad(h, sigma)
        return v, np.concatenate([_param.herm_grad(g_h), _param.density_grad(g_s, sigma, low, tr)])

    x0 = np.concatenate([_param.herm_to_params(h0), _param.rescale(_param.density_to_params(sigma0))])
    res = minimize(
        fun, x0, jac=True, method="L-BFGS-B",
        options={"maxiter": settings.max_iter, "gtol": 1e-12, "ftol": 1e-15, "maxcor": 30},
    )
    h, sigma, _, _ = unpack(res.x)
    v, _, _, rt = prob.value_grad(h, sigma, want_grad=False)
    return -v, h, sigma, rt


def _run_sigma_only(prob: _Problem, sigma0, settings):
    """``λ = 0``: ``ρ̃ = ρ_R ⊗ σ`` is forced; optimize ``σ`` alone."""
    db = prob.db

    def fun(x):
        sigma, low, tr = _param.density_from_params(x, db)
        om = prob.omega(sigma)
        f, gf = prob.fidelity_grad(om)
        g_s = np.einsum("rbsc,sr->bc", (-2.0 * f * gf).reshape(prob.k, db, prob.k, db), prob.rho_r)
        return -f * f, _param.density_grad(g_s, sigma, low, tr)

    x0 = _param.rescale(_param.density_to_params(sigma0))
    res = minimize(fun, x0, jac=True, method="L-BFGS-B",
                   options={"maxiter": settings.max_iter, "gtol": 1e-12, "ftol": 1e-15})
    sigma, _, _ = _param.density_from_params(res.x, db)
    om = prob.omega(sigma)
    return prob.fidelity_grad(om)[0] ** 2, None, sigma, om


def sample_feasible(prob_or_rho, dims, lam, rng, count):
    """Random feasible pairs ``(ρ̃, σ)``; returns arrays of ``F²`` values and the best pair.

    ``X`` gets uniform eigenvalues in ``[0, c]`` under a Haar unitary; the
    trace is then fixed by scaling ``X`` down or mixing it with ``c I``.
    """
    prob = prob_or_rho if isinstance(prob_or_rho, _Problem) else _Problem(prob_or_rho, dims, lam)
    best = (-1.0, None, None)
    vals = np.empty(count)
    for i in range(count):
        sigma = linops.random_density(prob.db, rng)
        om = prob.omega(sigma)
        u = linops.random_unitary(prob.dim, rng)
        x = (u * (prob.c * rng.random(prob.dim))) @ u.conj().T
        rt = _fix_trace(prob, x, om)
        f2 = prob.fidelity_grad(rt)[0] ** 2
        vals[i] = f2
        if f2 > best[0]:
            best = (f2, rt, sigma)
    return vals, best


def _fix_trace(prob, x, om):
    sq = linops.sqrtm_psd(om)
    tr = np.trace(om @ x).real
    if tr >= 1:
        x = x / tr
    else:
        mu = (1.0 - tr) / (prob.c - tr) if prob.c > tr else 1.0
        x = (1 - mu) * x + mu * prob.c * np.eye(prob.dim)
    rt = sq @ x @ sq
    return rt / np.trace(rt).real


def delta_smooth(rho_rb, dims, lam: float, settings: SolverSettings = DEFAULT_SETTINGS) -> SmoothingResult:
    """``δ_{R:B}(ρ, λ)`` with optimizer ``(ρ̃, σ)`` and an oracle-gap certificate.

    If ``λ`` is at least the max-information ``min_σ D_max(ρ ‖ ρ_R ⊗ σ)``
    (computed by a semidefinite program and re-checked directly) the answer
    is 0 with ``ρ̃ = ρ``. Otherwise ``multistarts`` joint descents are run
    from ``σ ∈ {ρ_B, I/|B|, random}``. ``oracle_gap`` is the margin of the
    result over a seeded random feasible-sample baseline; the best baseline
    sample is also refined, so the gap is nonnegative.
    """
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    rho = linops.as_density(rho_rb)
    dims = tuple(int(d) for d in dims)
    if len(dims) != 2:
        raise ValueError("dims must be a bipartition (dR, dB)")
    linops.check_dims(dims, rho.shape[0])
    if rho.shape[0] > 16:
        raise ValueError("total dimension above 16 is not supported")
    rho_r = linops.partial_trace(rho, dims, 0)

    imax, sigma_max = mutinfo.state_max_information(rho, dims)
    if lam >= imax:
        resid = feasibility_residual(rho, rho_r, sigma_max, lam)
        if resid <= FEAS_TOL:
            return SmoothingResult(0.0, rho, sigma_max, 0.0, resid)

    prob = _Problem(rho, dims, lam)
    runs = []
    for k in range(settings.multistarts):
        sigma0 = _omega_sigma_start(prob, k, settings.rng(k))
        if lam == 0:
            runs.append(_run_sigma_only(prob, sigma0, settings))
        else:
            runs.append(_run(prob, sigma0, _x_start(prob, sigma0), settings))

    _, (b_f2, b_rt, b_sigma) = sample_feasible(prob, dims, lam, settings.rng(10_000), BASELINE_SAMPLES)
    if b_rt is not None and b_f2 > max(r[0] for r in runs):
        sq = linops.matrix_power(prob.omega(b_sigma), -0.5)
        x = linops.hermitize(sq @ b_rt @ sq) / prob.c
        w, v = np.linalg.eigh(x)
        h0 = (v * _logit(np.clip(w, 1e-9, 1 - 1e-9))) @ v.conj().T
        refined = _run(prob, b_sigma, h0, settings) if lam > 0 else _run_sigma_only(prob, b_sigma, settings)
        runs.append(refined if refined[0] >= b_f2 else (b_f2, None, b_sigma, b_rt))

    f2s = [r[0] for r in runs]
    best = max(runs, key=lambda r: r[0])
    rt = prob.embed(best[3])
    rt = linops.hermitize(rt / np.trace(rt).real)
    sigma = best[2]
    delta = linops.purified_distance(rt, rho)
    resid = feasibility_residual(rt, rho_r, sigma, lam)
    oracle = math.sqrt(max(0.0, 1.0 - b_f2))
    dists = [math.sqrt(max(0.0, 1.0 - v)) for v in f2s]
    spread = max(dists) - min(dists)
    return SmoothingResult(
        delta=min(1.0, delta),
        optimizer_state=rt,
        optimizer_sigma=sigma,
        oracle_gap=oracle - delta,
        feasibility_residual=resid,
        converged=resid <= FEAS_TOL,
        restart_spread=spread,
    )


def _state_upper(evaluate, r, i_vn, imax, imax_converged, cap):
    if r <= i_vn:
        return ExponentResult(0.0, 0.0)
    if r > imax + AMBIGUOUS_BAND:
        return ExponentResult(math.inf, math.inf, ambiguous=not imax_converged)
    ambiguous = r > imax - AMBIGUOUS_BAND

    def h(s):
        return 0.0 if s == 0 else s * (r - evaluate(1.0 + s))

    a, b = 0.0, 1.0
    hb = h(b)
    s_hi = cap - 1.0
    while True:
        c = min(2.0 * b, s_hi)
        hc = h(c)
        if hc <= hb:
            break
        if c >= s_hi:
            return ExponentResult(0.5 * hc, c, ambiguous=True)
        a, b, hb = b, c, hc
    best, s_star = _max_on_interval(h, a, c)
    return ExponentResult(0.5 * max(best, 0.0), s_star, ambiguous=ambiguous)


def delta_exponent(rho_rb, dims, r: float, settings: SolverSettings = DEFAULT_SETTINGS) -> ExponentResult:
    """``½ sup_{s≥0} s (r − I_{1+s}(R:B)_ρ)``, the decay rate of ``δ(ρ^{⊗n}, nr)``.

    Same bracketing as the channel upper exponent, with the state Rényi
    mutual information in place of the channel one.
    """
    if r < 0:
        raise ValueError("rate must be nonnegative")
    memo: dict[float, float] = {}

    def evaluate(alpha):
        if alpha not in memo:
            memo[alpha] = mutinfo.state_mi_alpha(rho_rb, dims, alpha, settings).value
        return memo[alpha]

    imax = mutinfo.state_mi_max(rho_rb, dims, settings)
    return _state_upper(
        evaluate, r, mutual_information(rho_rb, dims), imax.value, imax.converged, settings.alpha_ladder_cap
    )


def converse_floor(ch: Channel, rho_A, c: float, settings: SolverSettings = DEFAULT_SETTINGS) -> SmoothingResult:
    """Lower bound ``δ_{R:B}((id ⊗ N)(φ_RA), c)`` on the error of any simulation with ``c`` bits."""
    if c <= 0:
        raise ValueError("c must be positive")
    return delta_smooth(output_state(ch, rho_A), (ch.dim_in, ch.dim_out), c, settings)
