"""Sandwiched Rényi mutual information of bipartite states and of channels.

Both problems reduce to one objective. For a bipartite ``ρ_RB`` and a state
``σ_B``, the sandwiched quantity ``Q_α(ρ_RB ‖ ρ_R ⊗ σ_B)`` equals

    Tr (K (T ⊗ σ^β) K)^α,        β = (1 - α)/α,

with ``K = ρ^{1/2}`` and ``T = ρ_R^β`` (pseudo-power). For a channel with
unnormalized Choi matrix ``J`` and input ``ρ_A = τ^T`` the same holds with
``K = J^{1/2}`` and ``T = τ^{1/α}``, which avoids building a purification at
every step. Gradients with respect to ``σ`` and ``τ`` come from the
Daleckii–Krein formula, so both the inner minimization over ``σ`` and the
outer maximization over ``τ`` run as quasi-Newton searches. The outer
gradient uses the envelope theorem at the inner minimizer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from . import _param, linops, renyi
from .channels import Channel, choi_matrix
from .settings import DEFAULT_SETTINGS, SolverSettings

LN2 = math.log(2.0)


@dataclass(frozen=True)
class MutualInfoResult:
    value: float
    minimizer_sigma: np.ndarray = field(repr=False)
    maximizer_input: np.ndarray | None = field(repr=False, default=None)
    converged: bool = True
    restart_spread: float = 0.0
    alpha: float | None = None
    restart_values: tuple = field(repr=False, default=())
    ladder: tuple = field(repr=False, default=())

    def describe(self, digits: int = 12) -> str:
        a = "" if self.alpha is None else f" alpha={self.alpha:g}"
        return (
            f"value={self.value:.{digits}f} bits{a} converged={self.converged} "
            f"restart_spread={self.restart_spread:.3g} bits"
        )


def _support_basis(op, tol=1e-12):
    w, v = np.linalg.eigh(linops.hermitize(op))
    keep = w > tol * max(1.0, float(w.max()))
    return v[:, keep]


def _pow_dd(w, p):
    """Divided differences of ``x ↦ x^p`` at positive eigenvalues ``w``."""
    return linops.divided_differences(w, lambda x: x**p, lambda x: p * x ** (p - 1))


class _Sandwich:
    """``log Q = log Tr (K (T ⊗ P σ^β P†) K)^α`` with gradients."""

    def __init__(self, k, dr, db, alpha, basis):
        if alpha <= 1:
            raise ValueError("alpha must exceed 1")
        self.k = k
        self.dr, self.db = dr, db
        self.alpha = alpha
        self.beta = (1.0 - alpha) / alpha
        self.basis = basis
        self.m = basis.shape[1]
        self.scale = 1.0 / ((alpha - 1.0) * LN2)

    def sigma_power(self, sigma_s):
        ws, vs = np.linalg.eigh(sigma_s)
        ws = np.clip(ws, 1e-100, None)
        s_small = (vs * ws**self.beta) @ vs.conj().T
        return ws, vs, self.basis @ s_small @ self.basis.conj().T

    def evaluate(self, t_op, sigma_s, grad_sigma=True, grad_t=False):
        """Value in bits and optional bit-scaled gradients (w.r.t. σ_s and T)."""
        a = self.alpha
        ws, vs, s_full = self.sigma_power(sigma_s)
        w_mat = self.k @ np.kron(t_op, s_full) @ self.k
        om, u = np.linalg.eigh(0.5 * (w_mat + w_mat.conj().T))
        om = np.clip(om, 0.0, None)
        top = om.max()
        if top <= 0:
            return -math.inf, None, None
        ratio = om / top
        tot = float(np.sum(ratio**a))
        value = (a * math.log(top) + math.log(tot)) * self.scale
        if not (grad_sigma or grad_t):
            return value, None, None
        coef = a * ratio ** (a - 1) / (top * tot) * self.scale
        g = self.k @ ((u * coef) @ u.conj().T) @ self.k
        g4 = g.reshape(self.dr, self.db, self.dr, self.db)
        gs = gt = None
        if grad_sigma:
            g_s = np.einsum("rbsc,sr->bc", g4, t_op)
            g_small = self.basis.conj().T @ g_s @ self.basis
            gamma = _pow_dd(ws, self.beta)
            gs = linops.frechet_adjoint(vs, gamma, g_small)
        if grad_t:
            gt = np.einsum("rbsc,cb->rs", g4, s_full)
        return value, gs, gt


def _minimize_sigma(obj: _Sandwich, t_op, starts, settings: SolverSettings, method=None):
    """Minimize over σ on the support basis; returns (value, σ_small, values per start)."""
    m = obj.m
    method = method or settings.inner_method
    if m == 1:
        s1 = np.ones((1, 1), dtype=complex)
        v, _, _ = obj.evaluate(t_op, s1, grad_sigma=False)
        return v, s1, [v]

    if method == "lbfgs":
        def fun(x):
            sigma, low, tr = _param.density_from_params(x, m)
            v, gs, _ = obj.evaluate(t_op, sigma)
            return v, _param.density_grad(gs, sigma, low, tr)
    else:
        def fun(x):
            sigma, _, _ = _param.density_from_params(x, m)
            return obj.evaluate(t_op, sigma, grad_sigma=False)[0]

    best_v, best_x, vals = math.inf, None, []
    for s0 in starts:
        x0 = _param.rescale(_param.density_to_params(s0))
        if method == "lbfgs":
            res = minimize(
                fun, x0, jac=True, method="L-BFGS-B",
                options={"maxiter": settings.max_iter, "gtol": 1e-13, "ftol": 1e-16, "maxcor": 20},
            )
        else:
            res = minimize(
                fun, x0, method="Nelder-Mead",
                options={"maxiter": settings.max_iter, "maxfev": 4 * settings.max_iter,
                         "xatol": 1e-11, "fatol": 1e-14, "adaptive": True},
            )
            # restart once from the simplex optimum to escape premature collapse
            res = minimize(
                fun, res.x, method="Nelder-Mead",
                options={"maxiter": settings.max_iter, "maxfev": 4 * settings.max_iter,
                         "xatol": 1e-12, "fatol": 1e-15, "adaptive": True},
            )
        v = float(res.fun)
        vals.append(v)
        if v < best_v:
            best_v, best_x = v, res.x
    sigma, _, _ = _param.density_from_params(best_x, m)
    return best_v, sigma, vals


def _embed(obj: _Sandwich, sigma_s):
    return obj.basis @ sigma_s @ obj.basis.conj().T


def _clamp(value, upper):
    if -1e-12 < value < 0:
        value = 0.0
    return min(value, upper) if value > upper and value - upper < 1e-9 else value


# -- state quantities ---------------------------------------------------------------


def state_mi_alpha(rho_rb, dims, alpha: float, settings: SolverSettings = DEFAULT_SETTINGS) -> MutualInfoResult:
    """``I_α(R:B) = min_σ D_α(ρ_RB ‖ ρ_R ⊗ σ_B)`` in bits.

    The minimization is restricted to ``supp(ρ_B)`` (no loss: projecting
    ``σ`` there cannot increase the divergence) and started from ``ρ_B`` and
    the maximally mixed state on that support.
    """
    if not (1 < alpha):
        raise ValueError("alpha must exceed 1")
    rho = linops.as_density(rho_rb)
    dr, db = (int(d) for d in dims)
    linops.check_dims((dr, db), rho.shape[0])
    rho_r = linops.partial_trace(rho, (dr, db), 0)
    rho_b = linops.partial_trace(rho, (dr, db), 1)
    basis = _support_basis(rho_b)
    obj = _Sandwich(linops.sqrtm_psd(rho), dr, db, alpha, basis)
    t_op = linops.matrix_power(rho_r, obj.beta)
    m = basis.shape[1]
    b_small = basis.conj().T @ rho_b @ basis
    starts = [b_small / np.trace(b_small).real, np.eye(m) / m]
    value, sigma_s, vals = _minimize_sigma(obj, t_op, starts, settings)
    spread = max(vals) - min(vals)
    upper = 2 * math.log2(min(dr, db))
    return MutualInfoResult(
        value=_clamp(value, upper),
        minimizer_sigma=_embed(obj, sigma_s),
        converged=spread <= settings.inner_tol * 10,
        restart_spread=spread,
        alpha=alpha,
        restart_values=tuple(vals),
    )


def state_sandwiched_value(rho_rb, dims, sigma_b, alpha: float) -> float:
    """``D_α(ρ_RB ‖ ρ_R ⊗ σ_B)`` evaluated directly from the definition."""
    rho_r = linops.partial_trace(rho_rb, dims, 0)
    return renyi.d_alpha(rho_rb, np.kron(rho_r, sigma_b), alpha)


def state_max_information(rho_rb, dims):
    """``min_σ D_max(ρ_RB ‖ ρ_R ⊗ σ)`` via a semidefinite program.

    Returns ``(value_bits, σ)``; the value is recomputed exactly at the
    returned ``σ`` so it is an upper bound on the minimum (tight to the SDP
    solver accuracy).
    """
    import cvxpy as cp

    rho = linops.as_density(rho_rb)
    dr, db = (int(d) for d in dims)
    rho_r = linops.partial_trace(rho, (dr, db), 0)
    pr = _support_basis(rho_r)
    k = pr.shape[1]
    # conjugate by ρ_R^{-1/2} on its support: condition becomes X ≤ I ⊗ S
    iso = np.kron(pr, np.eye(db))
    r_small = pr.conj().T @ rho_r @ pr
    inv_sqrt = np.kron(linops.matrix_power(r_small, -0.5), np.eye(db))
    x = inv_sqrt @ (iso.conj().T @ rho @ iso) @ inv_sqrt
    x = linops.hermitize(x)
    s = cp.Variable((db, db), hermitian=True)
    cons = [cp.kron(np.eye(k), s) - x >> 0]
    prob = cp.Problem(cp.Minimize(cp.real(cp.trace(s))), cons)
    _solve_sdp(prob)
    sval = linops.hermitize(np.asarray(s.value))
    w, v = np.linalg.eigh(sval)
    w = np.clip(w, 1e-14 * max(1.0, w.max()), None)
    sigma = (v * w) @ v.conj().T
    sigma /= np.trace(sigma).real
    value = renyi.d_max(rho, np.kron(rho_r, sigma))
    return value, sigma


def _solve_sdp(prob):
    import cvxpy as cp

    for solver in ("CLARABEL", "SCS"):
        if solver in cp.installed_solvers():
            try:
                prob.solve(solver=solver)
            except cp.error.SolverError:
                continue
            if prob.status in ("optimal", "optimal_inaccurate"):
                return
    raise RuntimeError(f"SDP solve failed with status {prob.status}")


# -- channel quantities ---------------------------------------------------------------


class _ChannelData:
    def __init__(self, ch: Channel):
        self.ch = ch
        self.d, self.db = ch.dim_in, ch.dim_out
        self.j = choi_matrix(ch)
        self.k = linops.sqrtm_psd(self.j)
        self.basis = _support_basis(linops.partial_trace(self.j, (self.d, self.db), 1))

    def output_b(self, tau):
        """``N(τ^T)`` = ``Tr_R[(τ ⊗ I) J]``."""
        return np.einsum("rbsc,sr->bc", self.j.reshape(self.d, self.db, self.d, self.db), tau)


def _tau_power(tau, p):
    w, v = np.linalg.eigh(0.5 * (tau + tau.conj().T))
    w = np.clip(w, 1e-100, None)
    return w, v, (v * w**p) @ v.conj().T


def _inner_at_tau(data: _ChannelData, obj: _Sandwich, tau, starts, settings, method=None):
    _, _, t_op = _tau_power(tau, 1.0 / obj.alpha)
    return _minimize_sigma(obj, t_op, starts, settings, method)


def _standard_sigma_starts(data: _ChannelData, tau):
    b = data.basis.conj().T @ data.output_b(tau) @ data.basis
    b = 0.5 * (b + b.conj().T)
    m = data.basis.shape[1]
    return [b / np.trace(b).real, np.eye(m) / m]


def channel_mi_alpha_at(
    ch: Channel, rho_A, alpha: float, settings: SolverSettings = DEFAULT_SETTINGS
) -> MutualInfoResult:
    """Per-input value ``I_α(N, ρ_A)`` (independent of the purification used)."""
    data = _ChannelData(ch)
    obj = _Sandwich(data.k, data.d, data.db, alpha, data.basis)
    tau = np.asarray(linops.as_density(rho_A)).T
    value, sigma_s, vals = _inner_at_tau(data, obj, tau, _standard_sigma_starts(data, tau), settings)
    spread = max(vals) - min(vals)
    return MutualInfoResult(
        value=_clamp(value, 2 * math.log2(min(data.d, data.db))),
        minimizer_sigma=_embed(obj, sigma_s),
        maximizer_input=np.asarray(rho_A),
        converged=spread <= settings.inner_tol * 10,
        restart_spread=spread,
        alpha=alpha,
        restart_values=tuple(vals),
    )


def _outer_starts(d, settings: SolverSettings, extra=()):
    starts = [np.eye(d) / d]
    starts.extend(extra)
    k = 1
    while len(starts) < settings.multistarts + len(extra):
        starts.append(linops.random_density(d, settings.rng(k)))
        k += 1
    return starts


def _maximize_over_inputs(d, value_and_grad, starts, settings):
    """Multi-start L-BFGS over ``τ = LL†/Tr``; returns list of (value, τ)."""
    runs = []
    for tau0 in starts:
        x0 = _param.rescale(_param.density_to_params(tau0, floor=1e-6))

        def fun(x):
            tau, low, tr = _param.density_from_params(x, d)
            v, g = value_and_grad(tau)
            return -v, -_param.density_grad(g, tau, low, tr)

        res = minimize(
            fun, x0, jac=True, method="L-BFGS-B",
            options={"maxiter": settings.max_iter, "gtol": 1e-11, "ftol": 1e-15, "maxcor": 20},
        )
        tau, _, _ = _param.density_from_params(res.x, d)
        runs.append((-float(res.fun), tau))
    return runs


def channel_mi_alpha(
    ch: Channel,
    alpha: float,
    settings: SolverSettings = DEFAULT_SETTINGS,
    warm_inputs=(),
) -> MutualInfoResult:
    """``I_α(N) = max_{ρ_A} I_α(N, ρ_A)`` in bits, for ``α > 1``.

    Start 0 is the maximally mixed input, followed by ``warm_inputs`` (input
    states ``ρ_A``) and seeded random inputs. The per-input value is concave,
    so agreement of the restarts within ``outer_tol`` is reported as
    convergence.
    """
    if alpha <= 1:
        raise ValueError("alpha must exceed 1")
    data = _ChannelData(ch)
    d = data.d
    obj = _Sandwich(data.k, d, data.db, alpha, data.basis)
    warm = {"sigma": None}

    def value_and_grad(tau):
        starts = [warm["sigma"]] if warm["sigma"] is not None else _standard_sigma_starts(data, tau)
        wt, vt, t_op = _tau_power(tau, 1.0 / alpha)
        value, sigma_s, _ = _minimize_sigma(obj, t_op, starts, settings)
        warm["sigma"] = sigma_s
        _, _, g_t = obj.evaluate(t_op, sigma_s, grad_sigma=False, grad_t=True)
        gamma = _pow_dd(wt, 1.0 / alpha)
        return value, linops.frechet_adjoint(vt, gamma, g_t)

    extra = [np.asarray(r).T for r in warm_inputs]
    runs = _maximize_over_inputs(d, value_and_grad, _outer_starts(d, settings, extra), settings)
    # polish each candidate's inner problem from the standard starts
    finals = []
    for _, tau in runs:
        starts = _standard_sigma_starts(data, tau)
        value, sigma_s, _ = _inner_at_tau(data, obj, tau, starts, settings)
        finals.append((value, tau, sigma_s))
    vals = [f[0] for f in finals]
    best = max(finals, key=lambda f: f[0])
    spread = max(vals) - min(vals)
    upper = 2 * math.log2(min(d, data.db))
    return MutualInfoResult(
        value=_clamp(best[0], upper),
        minimizer_sigma=_embed(obj, best[2]),
        maximizer_input=best[1].T,
        converged=spread <= settings.outer_tol,
        restart_spread=spread,
        alpha=alpha,
        restart_values=tuple(vals),
    )


def _pseudo_log2(x):
    w, v = np.linalg.eigh(0.5 * (x + x.conj().T))
    pos = w > 1e-15 * max(1.0, float(w.max()))
    lw = np.zeros_like(w)
    lw[pos] = np.log2(w[pos])
    ent = -float(np.sum(w[pos] * lw[pos]))
    return ent, (v * lw) @ v.conj().T


def _vn_value_and_grad(data: _ChannelData, tau):
    d, db = data.d, data.db
    s_r, l_r = _pseudo_log2(tau)
    rho_b = data.output_b(tau)
    s_b, l_b = _pseudo_log2(rho_b)
    y = data.k @ np.kron(tau, np.eye(db)) @ data.k
    s_y, l_y = _pseudo_log2(y)
    j4 = data.j.reshape(d, db, d, db)
    g_b = np.einsum("rbsc,cb->rs", j4, l_b)
    g_y = np.trace((data.k @ l_y @ data.k).reshape(d, db, d, db), axis1=1, axis2=3)
    return s_r + s_b - s_y, -l_r - g_b + g_y


def channel_mi_vn_at(ch: Channel, rho_A) -> float:
    """Von Neumann mutual information of ``(id ⊗ N)(φ_RA)`` for a purification of ``rho_A``."""
    data = _ChannelData(ch)
    return _vn_value_and_grad(data, np.asarray(linops.as_density(rho_A)).T)[0]


def channel_mi_vn(ch: Channel, settings: SolverSettings = DEFAULT_SETTINGS) -> MutualInfoResult:
    """``I(N) = max_{ρ_A} [S(R) + S(B) - S(RB)]`` (entanglement-assisted capacity)."""
    data = _ChannelData(ch)
    runs = _maximize_over_inputs(
        data.d, lambda tau: _vn_value_and_grad(data, tau), _outer_starts(data.d, settings), settings
    )
    vals = [r[0] for r in runs]
    value, tau = max(runs, key=lambda r: r[0])
    spread = max(vals) - min(vals)
    return MutualInfoResult(
        value=_clamp(value, 2 * math.log2(min(data.d, data.db))),
        minimizer_sigma=data.output_b(tau),
        maximizer_input=tau.T,
        converged=spread <= settings.outer_tol,
        restart_spread=spread,
        alpha=1.0,
        restart_values=tuple(vals),
    )


def alpha_ladder(cap: float):
    a = 2.0
    while a <= cap:
        yield a
        a *= 2.0


def ladder_estimate(evaluate, cap: float, step_tol: float = 1e-4) -> MutualInfoResult:
    """Run ``evaluate(α)`` along ``α = 2, 4, 8, …, cap`` until increments drop below ``step_tol``.

    The returned value is the running maximum of the ladder (the true
    sequence is nondecreasing). ``converged`` is false when the cap is hit
    first, in which case the value is a lower estimate.
    """
    ladder = []
    prev = None
    res = None
    converged = False
    for a in alpha_ladder(cap):
        res = evaluate(a)
        ladder.append((a, res.value))
        if prev is not None and abs(res.value - prev) < step_tol:
            converged = True
            break
        prev = res.value
    return MutualInfoResult(
        value=max(v for _, v in ladder),
        minimizer_sigma=res.minimizer_sigma,
        maximizer_input=res.maximizer_input,
        converged=converged and res.converged,
        restart_spread=res.restart_spread,
        alpha=ladder[-1][0],
        restart_values=res.restart_values,
        ladder=tuple(ladder),
    )


def channel_mi_max(ch: Channel, settings: SolverSettings = DEFAULT_SETTINGS, step_tol: float = 1e-4) -> MutualInfoResult:
    """Ladder estimate of ``I_max(N) = lim_{α→∞} I_α(N)``; see :func:`ladder_estimate`."""
    warm = []

    def evaluate(a):
        res = channel_mi_alpha(ch, a, settings, warm_inputs=warm[-1:])
        warm.append(res.maximizer_input)
        return res

    return ladder_estimate(evaluate, settings.alpha_ladder_cap, step_tol)


def state_mi_max(rho_rb, dims, settings: SolverSettings = DEFAULT_SETTINGS, step_tol: float = 1e-4) -> MutualInfoResult:
    """Ladder estimate of ``I_max(R:B)`` for a bipartite state."""
    return ladder_estimate(lambda a: state_mi_alpha(rho_rb, dims, a, settings), settings.alpha_ladder_cap, step_tol)


def channel_max_information(ch: Channel) -> float:
    """``log₂ min{Tr S : J ≤ I ⊗ S}``, the α → ∞ limit, via a semidefinite program.

    Used as an independent check on the ladder estimate.
    """
    import cvxpy as cp

    data = _ChannelData(ch)
    s = cp.Variable((data.db, data.db), hermitian=True)
    prob = cp.Problem(cp.Minimize(cp.real(cp.trace(s))), [cp.kron(np.eye(data.d), s) - data.j >> 0])
    _solve_sdp(prob)
    return math.log2(prob.value)
