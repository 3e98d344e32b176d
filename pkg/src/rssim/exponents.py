"""Reliability-function bounds for reverse Shannon simulation.

With ``h_r(s) = s (r - I_{1+s}(N))`` (concave in ``s`` because
``s ↦ s I_{1+s}`` is convex), the exponents are

* ``E_l(r) = ½ max_{0≤s≤1} h_r(s)``,
* ``E_u(r) = ½ sup_{s≥0} h_r(s)``,

and the critical rate is ``R_crit = d/ds [s I_{1+s}]`` at ``s = 1``. All
rates and exponents are in bits (per channel use).
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from . import linops, mutinfo, renyi
from .channels import Channel, output_state
from .mutinfo import MutualInfoResult
from .settings import DEFAULT_SETTINGS, SolverSettings

REGIMES = ("zero", "exact", "bounds_only", "infinite")
AMBIGUOUS_BAND = 1e-4
S_XTOL = 1e-6


@dataclass(frozen=True)
class ExponentResult:
    value: float
    s_star: float
    converged: bool = True
    ambiguous: bool = False

    def __float__(self):
        return float(self.value)


@dataclass(frozen=True)
class CriticalRate:
    value: float
    uncertainty: float
    coarse: float
    flagged: bool = False


@dataclass(frozen=True)
class CurvePoint:
    r: float
    e_lower: float
    e_upper: float
    regime: str
    ambiguous: bool = False

    def __post_init__(self):
        if self.regime not in REGIMES:
            raise ValueError(f"unknown regime {self.regime!r}")


@dataclass(frozen=True)
class BoundReport:
    n: int
    r: float
    s_star: float
    prefactor: float
    exponent_bits: float
    bound_value: float
    clipped: bool
    log2_prefactor: float
    log2_raw: float

    def describe(self, digits: int = 12) -> str:
        return (
            f"n={self.n} r={self.r:.{digits}g} bits/use s*={self.s_star:.{digits}g} "
            f"prefactor={self.prefactor:.{digits}g} exponent={self.exponent_bits:.{digits}g} bits/use "
            f"bound={self.bound_value:.{digits}g} clipped={self.clipped}"
        )


class ChannelProfile:
    """Memoized Rényi mutual-information profile ``α ↦ I_α(N)`` of one channel.

    Exponent routines evaluate ``I_{1+s}`` many times; sharing a profile
    across calls (as :func:`curve` does) avoids repeating outer solves. Each
    new ``α`` is warm-started from the maximizer of the nearest computed order
    in addition to the usual seeded restarts.
    """

    def __init__(self, ch: Channel, settings: SolverSettings = DEFAULT_SETTINGS):
        self.ch = ch
        self.settings = settings
        self._alpha: dict[float, MutualInfoResult] = {}
        self._vn: MutualInfoResult | None = None
        self._imax: MutualInfoResult | None = None
        self._rcrit: dict[float, CriticalRate] = {}

    @property
    def teleport(self) -> float:
        return 2.0 * math.log2(min(self.ch.dim_in, self.ch.dim_out))

    @property
    def dim(self) -> int:
        return max(self.ch.dim_in, self.ch.dim_out)

    def i_alpha(self, alpha: float) -> MutualInfoResult:
        alpha = float(alpha)
        if alpha == 1.0:
            return self.i_vn()
        if alpha not in self._alpha:
            warm = ()
            if self._alpha:
                near = min(self._alpha, key=lambda a: abs(math.log(a) - math.log(alpha)))
                warm = (self._alpha[near].maximizer_input,)
            self._alpha[alpha] = mutinfo.channel_mi_alpha(self.ch, alpha, self.settings, warm_inputs=warm)
        return self._alpha[alpha]

    def i_vn(self) -> MutualInfoResult:
        if self._vn is None:
            self._vn = mutinfo.channel_mi_vn(self.ch, self.settings)
        return self._vn

    def i_max(self) -> MutualInfoResult:
        if self._imax is None:
            self._imax = mutinfo.ladder_estimate(self.i_alpha, self.settings.alpha_ladder_cap)
        return self._imax

    def g(self, s: float) -> float:
        """``s · I_{1+s}(N)``; ``g(0) = 0``."""
        return 0.0 if s == 0 else s * self.i_alpha(1.0 + s).value

    def h(self, r: float, s: float) -> float:
        return s * r - self.g(s)

    def critical_rate(self, step: float = 1e-3) -> CriticalRate:
        if step not in self._rcrit:
            self._rcrit[step] = _critical_from_g(self.g, step, self._noise)
        return self._rcrit[step]

    def _noise(self, s: float) -> float:
        return s * self.i_alpha(1.0 + s).restart_spread

    def all_converged(self) -> bool:
        res = list(self._alpha.values())
        if self._vn is not None:
            res.append(self._vn)
        return all(r.converged for r in res)


def _profile(ch, settings, profile):
    if profile is not None:
        return profile
    return ChannelProfile(ch, settings)


def _max_on_interval(fun, lo, hi, xtol=S_XTOL):
    """Maximize a concave scalar function on ``[lo, hi]`` including both endpoints."""
    res = minimize_scalar(lambda s: -fun(s), bounds=(lo, hi), method="bounded", options={"xatol": xtol})
    cands = [(fun(lo), lo), (fun(hi), hi), (-float(res.fun), float(res.x))]
    return max(cands)


def _lower(h, r, i_vn):
    if r <= i_vn:
        return ExponentResult(0.0, 0.0)
    best, s_star = _max_on_interval(lambda s: h(r, s), 0.0, 1.0)
    return ExponentResult(max(0.0, 0.5 * best), s_star)


def lower_exponent(
    ch: Channel, r: float, settings: SolverSettings = DEFAULT_SETTINGS, profile: ChannelProfile | None = None
) -> ExponentResult:
    """``E_l(r) = ½ max_{0≤s≤1} s (r − I_{1+s}(N))`` in bits; 0 when ``r ≤ I(N)``."""
    if r < 0:
        raise ValueError("rate must be nonnegative")
    p = _profile(ch, settings, profile)
    res = _lower(p.h, r, p.i_vn().value)
    return ExponentResult(res.value, res.s_star, converged=p.all_converged())


def _upper(r, h, i_vn, rcrit, imax, imax_converged, cap):
    if r <= i_vn:
        return ExponentResult(0.0, 0.0)
    if r > imax + AMBIGUOUS_BAND:
        # an unconverged ladder under-estimates I_max, so divergence is not certain
        return ExponentResult(math.inf, math.inf, ambiguous=not imax_converged)
    ambiguous = r > imax - AMBIGUOUS_BAND
    if r <= rcrit:
        # h'(1) = r − R_crit ≤ 0, so the supremum sits in [0, 1]
        return _lower(h, r, i_vn)
    s_hi = cap - 1.0
    a, b = 0.0, 1.0
    hb = h(r, b)
    while True:
        c = min(2.0 * b, s_hi)
        hc = h(r, c)
        if hc <= hb:
            break
        if c >= s_hi:
            return ExponentResult(0.5 * hc, c, ambiguous=True)
        a, b, hb = b, c, hc
    best, s_star = _max_on_interval(lambda s: h(r, s), a, c)
    return ExponentResult(0.5 * best, s_star, ambiguous=ambiguous)


def upper_exponent(
    ch: Channel, r: float, settings: SolverSettings = DEFAULT_SETTINGS, profile: ChannelProfile | None = None
) -> ExponentResult:
    """``E_u(r) = ½ sup_{s≥0} s (r − I_{1+s}(N))``; ``+inf`` once ``r`` clears the I_max estimate.

    For ``r ≤ R_crit`` the supremum is attained in ``[0, 1]`` (concavity), so
    the value coincides with :func:`lower_exponent`. Above it the bracket on
    ``s`` is doubled until ``h`` decreases and refined by Brent's method.
    Rates within ``1e-4`` of the I_max estimate are flagged ``ambiguous``.
    """
    if r < 0:
        raise ValueError("rate must be nonnegative")
    p = _profile(ch, settings, profile)
    imax = p.i_max()
    res = _upper(
        r, p.h, p.i_vn().value, p.critical_rate().value, imax.value, imax.converged, settings.alpha_ladder_cap
    )
    return ExponentResult(res.value, res.s_star, converged=p.all_converged(), ambiguous=res.ambiguous)


def _derivative(g, s0, h):
    return (g(s0 + h) - g(s0 - h)) / (2.0 * h)


def _critical_from_g(g, step, noise=None):
    d1 = _derivative(g, 1.0, step)
    d2 = _derivative(g, 1.0, step / 2)
    value = (4.0 * d2 - d1) / 3.0
    unc = abs(d1 - d2)
    coarse = _derivative(g, 1.0, 10 * step)
    flagged = False
    if noise is not None:
        # restart spread propagated through the half-step difference quotient
        jitter = max(noise(1.0 + t) + noise(1.0 - t) for t in (step, step / 2)) / step
        flagged = jitter > 10 * max(unc, 1e-6)
    return CriticalRate(value, unc, coarse, flagged)


def critical_rate(
    ch: Channel, settings: SolverSettings = DEFAULT_SETTINGS, profile: ChannelProfile | None = None, step: float = 1e-3
) -> CriticalRate:
    """``R_crit = d/ds [s I_{1+s}(N)]`` at ``s = 1``.

    Central differences with steps ``h`` and ``h/2`` are combined by
    Richardson extrapolation; ``uncertainty`` is their absolute difference and
    ``coarse`` the estimate at step ``10h``.
    """
    return _profile(ch, settings, profile).critical_rate(step)


def classify(r, i_vn, rcrit, teleport) -> str:
    """Regime of rate ``r``; precedence infinite > zero > exact > bounds_only."""
    if r >= teleport:
        return "infinite"
    if r <= i_vn:
        return "zero"
    if r <= rcrit:
        return "exact"
    return "bounds_only"


def exact_reliability(
    ch: Channel,
    r: float,
    settings: SolverSettings = DEFAULT_SETTINGS,
    quantum: bool = False,
    profile: ChannelProfile | None = None,
) -> CurvePoint:
    """Classify ``r`` and report the exponent (exact) or its bounds.

    ``quantum=True`` reads ``r`` as qubits per use and converts it to
    ``2r`` classical bits through teleportation. In the ``exact`` regime
    ``e_lower == e_upper``; in ``bounds_only`` they bracket the unknown
    reliability function.
    """
    if r < 0:
        raise ValueError("rate must be nonnegative")
    p = _profile(ch, settings, profile)
    rate = 2.0 * r if quantum else float(r)
    i_vn = p.i_vn().value
    if rate >= p.teleport:
        return CurvePoint(r, math.inf, math.inf, "infinite")
    if rate <= i_vn:
        return CurvePoint(r, 0.0, 0.0, "zero")
    rcrit = p.critical_rate().value
    lo = _lower(p.h, rate, i_vn)
    if rate <= rcrit:
        return CurvePoint(r, lo.value, lo.value, "exact")
    imax = p.i_max()
    up = _upper(rate, p.h, i_vn, rcrit, imax.value, imax.converged, settings.alpha_ladder_cap)
    return CurvePoint(r, lo.value, max(up.value, lo.value), "bounds_only", ambiguous=up.ambiguous)


def curve(
    ch: Channel,
    r_min: float,
    r_max: float,
    steps: int,
    settings: SolverSettings = DEFAULT_SETTINGS,
    profile: ChannelProfile | None = None,
    quantum: bool = False,
) -> list[CurvePoint]:
    """``steps`` evenly spaced :func:`exact_reliability` points on ``[r_min, r_max]``."""
    if not r_min < r_max:
        raise ValueError("r_min must be below r_max")
    if steps < 2:
        raise ValueError("steps must be at least 2")
    if r_min < 0:
        raise ValueError("rates must be nonnegative")
    p = _profile(ch, settings, profile)
    return [exact_reliability(ch, float(r), settings, quantum, p) for r in np.linspace(r_min, r_max, steps)]


def curve_header(profile: ChannelProfile) -> dict:
    return {
        "I": profile.i_vn().value,
        "I2": profile.i_alpha(2.0).value,
        "Rcrit": profile.critical_rate().value,
        "Imax": profile.i_max().value,
        "teleport": profile.teleport,
    }


def fmt(x: float, digits: int = 12) -> str:
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.{digits}g}"


def curve_csv(points, profile: ChannelProfile, digits: int = 12) -> str:
    """CSV text: two ``#`` header lines, then ``r,e_lower,e_upper,regime`` rows (bits)."""
    head = curve_header(profile)
    out = io.StringIO()
    out.write(f"# channel={profile.ch.name}\n")
    out.write("# " + ", ".join(f"{k}={fmt(v, digits)}" for k, v in head.items()) + "\n")
    out.write("r,e_lower,e_upper,regime\n")
    for pt in points:
        out.write(f"{fmt(pt.r, digits)},{fmt(pt.e_lower, digits)},{fmt(pt.e_upper, digits)},{pt.regime}\n")
    return out.getvalue()


def log2_prefactor(n: int, s: float, d: int) -> float:
    """``log₂ f(n, s)`` with ``f = √(s⁻¹ (n+1)^{(1+s)(d+1)²})``."""
    return 0.5 * (-math.log2(s) + (1.0 + s) * (d + 1) ** 2 * math.log2(n + 1))


def _bound_at(p: ChannelProfile, n, r, s):
    lp = log2_prefactor(n, s, p.dim)
    expo = 0.5 * s * (r - p.i_alpha(1.0 + s).value)
    return lp, expo, lp - n * expo


def finite_n_bound(
    ch: Channel,
    n: int,
    r: float,
    settings: SolverSettings = DEFAULT_SETTINGS,
    s: float | None = None,
    profile: ChannelProfile | None = None,
) -> BoundReport:
    """Achievability bound ``f(n,s) · 2^{−n · ½ s (r − I_{1+s})}`` on the simulation error.

    With ``s`` omitted the bound is minimized over ``s ∈ (0, 1]``. The value is
    clipped at 1; ``log2_raw`` keeps the unclipped exponent of two.
    ``exponent_bits`` is the per-use exponent ``½ s (r − I_{1+s})``.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if r <= 0:
        raise ValueError("rate must be positive")
    p = _profile(ch, settings, profile)
    if s is None:
        fun = lambda t: _bound_at(p, n, r, t)[2]  # noqa: E731
        res = minimize_scalar(fun, bounds=(1e-9, 1.0), method="bounded", options={"xatol": S_XTOL})
        s = 1.0 if fun(1.0) <= float(res.fun) else float(res.x)
    elif not 0 < s <= 1:
        raise ValueError("s must lie in (0, 1]")
    lp, expo, raw = _bound_at(p, n, r, s)
    clipped = raw > 0
    pref = 2.0**lp if lp < 1000 else math.inf
    return BoundReport(
        n=n, r=r, s_star=s, prefactor=pref, exponent_bits=expo,
        bound_value=1.0 if clipped else 2.0**raw, clipped=clipped, log2_prefactor=lp, log2_raw=raw,
    )


def one_shot_fixed_input_bound(ch: Channel, rho_A, sigma_B, c: float, s: float, rel_tol: float = 1e-8) -> float:
    """``√(vˢ/s) · 2^{−(s/2)(c − D_{1+s}(φ_RB ‖ φ_R ⊗ σ_B))}`` clipped at 1.

    ``v`` is the number of distinct eigenvalues of ``φ_R ⊗ σ_B`` (clustered at
    ``rel_tol``). A support violation makes the divergence infinite and the
    bound vacuous.
    """
    if not 0 < s <= 1:
        raise ValueError("s must lie in (0, 1]")
    if c <= 0:
        raise ValueError("c must be positive")
    phi = output_state(ch, rho_A)
    dims = (ch.dim_in, ch.dim_out)
    omega = np.kron(linops.partial_trace(phi, dims, 0), np.asarray(sigma_B))
    dv = renyi.d_alpha(phi, omega, 1.0 + s)
    if math.isinf(dv):
        return 1.0
    v = linops.distinct_eigenvalue_count(omega, rel_tol)
    log2_b = 0.5 * (s * math.log2(v) - math.log2(s)) - 0.5 * s * (c - dv)
    return 1.0 if log2_b >= 0 else 2.0**log2_b
