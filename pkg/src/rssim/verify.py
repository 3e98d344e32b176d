"""Seeded property suites for the structural statements behind the exponents.

Each suite builds a deterministic family of instances from ``settings.seed``
(instance ``k`` draws from ``settings.rng(k)``), measures a nonnegative
violation per instance, and passes when the largest violation is within the
suite's tolerance. Failures are reported, never raised.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import channels as chn
from . import exponents as ex
from . import linops, mutinfo, smoothing
from .settings import DEFAULT_SETTINGS, SolverSettings

SUITES = (
    "additivity",
    "alpha_monotone",
    "s_convexity",
    "input_concavity",
    "symmetric_minimizer",
    "symmetrization",
    "de_finetti",
    "exponent_consistency",
    "smoothing",
)

TOLERANCES = {
    "additivity": 1e-4,
    "alpha_monotone": 1e-6,
    "s_convexity": 1e-6,
    "input_concavity": 1e-6,
    "symmetric_minimizer": 1e-6,
    "symmetrization": 1e-6,
    "de_finetti": 1e-6,
    "exponent_consistency": 1e-6,
    "smoothing": 1e-6,
}

DEFAULT_INSTANCES = {
    "additivity": 5,
    "alpha_monotone": 4,
    "s_convexity": 4,
    "input_concavity": 20,
    "symmetric_minimizer": 20,
    "symmetrization": 20,
    "de_finetti": 20,
    "exponent_consistency": 4,
    "smoothing": 5,
}

COVERAGE = {
    "additivity of the channel Renyi mutual information under tensor products": "additivity",
    "I_alpha(N) nondecreasing in alpha": "alpha_monotone",
    "s -> s I_{1+s}(N) increasing and convex": "s_convexity",
    "per-input I_alpha(N, rho_A) concave in rho_A": "input_concavity",
    "optimal sigma can be chosen permutation symmetric": "symmetric_minimizer",
    "symmetrization does not increase the distance to a symmetric target": "symmetrization",
    "de Finetti reduction to a single symmetric test state": "de_finetti",
    "E_l = E_u below R_crit, linear above, E_u infinite beyond I_max": "exponent_consistency",
    "smoothing quantity: monotone, zero point, feasibility, oracle dominance": "smoothing",
}


@dataclass(frozen=True)
class SuiteReport:
    suite: str
    instances: int
    max_violation: float
    tolerance: float
    passed: bool
    seed: int
    violations: tuple = field(default=())
    notes: tuple = field(default=())

    def to_dict(self) -> dict:
        d = asdict(self)
        d["violations"] = list(self.violations)
        d["notes"] = list(self.notes)
        return d


def _report(name, violations, settings, notes=()):
    v = [float(x) for x in violations]
    worst = max(v) if v else 0.0
    tol = TOLERANCES[name]
    return SuiteReport(name, len(v), worst, tol, bool(worst <= tol), int(settings.seed), tuple(v), tuple(notes))


# -- instance families ---------------------------------------------------------------

QUBIT_FAMILY = (
    ("depolarizing", lambda u: chn.depolarizing(2, 0.05 + 0.6 * u)),
    ("amplitude_damping", lambda u: chn.amplitude_damping(0.05 + 0.8 * u)),
    ("dephasing", lambda u: chn.dephasing(0.1 + 0.8 * u)),
    ("pauli", lambda u: chn.pauli(0.3 * u, 0.1 * u, 0.2 * (1 - u))),
)

ADDITIVITY_PAIRS = (
    (lambda: chn.depolarizing(2, 0.3), lambda: chn.amplitude_damping(0.4)),
    (lambda: chn.dephasing(0.5), lambda: chn.depolarizing(2, 0.1)),
    (lambda: chn.amplitude_damping(0.2), lambda: chn.amplitude_damping(0.6)),
    (lambda: chn.pauli(0.1, 0.05, 0.2), lambda: chn.dephasing(0.3)),
    (lambda: chn.identity(2), lambda: chn.depolarizing(2, 0.5)),
)

PROFILE_CHANNELS = (
    lambda: chn.identity(2),
    lambda: chn.depolarizing(2, 0.2),
    lambda: chn.amplitude_damping(0.3),
    lambda: chn.dephasing(0.4),
)


def _random_qubit_channel(rng):
    if rng.random() < 0.5:
        name, make = QUBIT_FAMILY[int(rng.integers(len(QUBIT_FAMILY)))]
        return make(float(rng.random()))
    return chn.random_channel(2, 2, rng, n_kraus=int(rng.integers(2, 4)))


class _Cache:
    """Per-run memo of channel profiles shared by the α-structure suites."""

    def __init__(self, settings):
        self.settings = settings
        self.profiles: dict[int, ex.ChannelProfile] = {}

    def profile(self, idx: int) -> ex.ChannelProfile:
        if idx not in self.profiles:
            self.profiles[idx] = ex.ChannelProfile(PROFILE_CHANNELS[idx % len(PROFILE_CHANNELS)](), self.settings)
        return self.profiles[idx]


# -- suites ------------------------------------------------------------------------


def _additivity(settings, count, cache):
    tensor_settings = settings.replace(multistarts=max(16, settings.multistarts))
    out, notes = [], []
    for k in range(count):
        make1, make2 = ADDITIVITY_PAIRS[k % len(ADDITIVITY_PAIRS)]
        n1, n2 = make1(), make2()
        for a in (1.3, 1.7, 2.0):
            joint = mutinfo.channel_mi_alpha(chn.tensor(n1, n2), a, tensor_settings)
            single = mutinfo.channel_mi_alpha(n1, a, settings).value + mutinfo.channel_mi_alpha(n2, a, settings).value
            out.append(abs(joint.value - single))
            notes.append(f"{n1.name} x {n2.name} alpha={a}")
    return out, notes


S_MONO = tuple(round(0.1 * i, 10) for i in range(11))
S_CONVEX = tuple(round(0.1 * i, 10) for i in range(1, 20))


def _alpha_monotone(settings, count, cache):
    out, notes = [], []
    for k in range(count):
        p = cache.profile(k)
        vals = [p.i_alpha(1.0 + s).value for s in S_MONO]
        out.append(max(0.0, max(a - b for a, b in zip(vals, vals[1:]))))
        notes.append(p.ch.name)
    return out, notes


def _s_convexity(settings, count, cache):
    out, notes = [], []
    for k in range(count):
        p = cache.profile(k)
        g = [p.g(s) for s in S_CONVEX]
        conv = max(g[i] - 0.5 * (g[i - 1] + g[i + 1]) for i in range(1, len(g) - 1))
        incr = max(a - b for a, b in zip(g, g[1:]))
        out.append(max(0.0, conv, incr))
        notes.append(p.ch.name)
    return out, notes


def _input_concavity(settings, count, cache):
    out, notes = [], []
    for k in range(count):
        rng = settings.rng(k)
        ch = _random_qubit_channel(rng)
        a = float(rng.choice([1.2, 1.5, 2.0]))
        rho, sigma = linops.random_density(2, rng), linops.random_density(2, rng)
        lam = float(rng.uniform(0.1, 0.9))
        mix = lam * rho + (1 - lam) * sigma
        vals = [mutinfo.channel_mi_alpha_at(ch, x, a, settings).value for x in (mix, rho, sigma)]
        out.append(max(0.0, lam * vals[1] + (1 - lam) * vals[2] - vals[0]))
        notes.append(f"{ch.name} alpha={a}")
    return out, notes


def _symmetric_input(rng):
    swap = linops.permutation_operator((2, 2), (1, 0))
    x = linops.random_density(4, rng)
    if rng.random() < 0.5:
        t = linops.random_density(2, rng)
        x = 0.5 * (x + np.kron(t, t))
    return 0.5 * (x + swap @ x @ swap)


def _symmetric_minimizer(settings, count, cache):
    swap = linops.permutation_operator((2, 2), (1, 0))
    out, notes = [], []
    for k in range(count):
        rng = settings.rng(k)
        n = _random_qubit_channel(rng)
        rho_a = _symmetric_input(rng)
        state = chn.output_state(chn.tensor(n, n), rho_a)
        a = float(rng.choice([1.3, 1.5, 2.0]))
        res = mutinfo.state_mi_alpha(state, (4, 4), a, settings)
        s = res.minimizer_sigma
        out.append(float(np.sum(np.abs(np.linalg.eigvalsh(linops.hermitize(s - swap @ s @ swap))))))
        notes.append(f"{n.name} alpha={a}")
    return out, notes


def _permuted_witnesses(witness, d_a=2, n=2):
    """``(I ⊗ W_A^π) φ`` for every permutation ``π`` of the input slots."""
    x = np.asarray(witness).reshape(d_a**n, d_a**n)
    return [(x @ linops.permutation_operator((d_a,) * n, p).T).ravel() for p in itertools.permutations(range(n))]


def _symmetrization(settings, count, cache):
    target = chn.tensor(chn.dephasing(0.5), chn.dephasing(0.5))
    out, notes = [], []
    for k in range(count):
        rng = settings.rng(k)
        m = chn.random_channel(4, 4, rng, n_kraus=int(rng.integers(2, 5)))
        ms = chn.symmetrize(m, 2, 2, 2)
        sym = chn.channel_purified_distance(ms, target, settings)
        raw = chn.channel_purified_distance(m, target, settings, extra_starts=_permuted_witnesses(sym.witness))
        out.append(max(0.0, sym.value - raw.value))
        notes.append(f"P(sym)={sym.value:.12f} P(raw)={raw.value:.12f}")
    return out, notes


def _de_finetti(settings, count, cache):
    zeta = linops.de_finetti_state(2, 2)
    phi = linops.purify(zeta)
    g = linops.symmetric_subspace_dim(2, 4)
    out, notes = [], []
    for k in range(count):
        rng = settings.rng(k)
        n = _random_qubit_channel(rng)
        e = chn.tensor(n, n)
        if k == 0:
            mt = e
        else:
            mt = chn.symmetrize(chn.random_channel(4, 4, rng, n_kraus=int(rng.integers(2, 5))), 2, 2, 2)
        lhs = chn.channel_purified_distance(mt, e, settings).value
        rhs = chn.purified_distance_on_state(mt, e, phi, 4)
        out.append(max(0.0, lhs - math.sqrt(g) * rhs))
        notes.append(f"lhs={lhs:.12f} test_state={rhs:.12f}")
    return out, notes


EXP_CHANNELS = (
    lambda: chn.identity(2),
    lambda: chn.dephasing(1.0),
    lambda: chn.depolarizing(2, 0.2),
    lambda: chn.amplitude_damping(0.3),
)


def exponent_violations(p: ex.ChannelProfile, rates) -> tuple[list[float], list[str]]:
    """Violations of the exponent identities for one channel on a rate grid."""
    i_vn = p.i_vn().value
    i2 = p.i_alpha(2.0).value
    rc = p.critical_rate().value
    imax = p.i_max()
    out, notes = [], []
    out.append(ex.lower_exponent(p.ch, i_vn, profile=p).value)
    notes.append(f"{p.ch.name} E_l(I)")
    for r in rates:
        lo = ex.lower_exponent(p.ch, r, profile=p).value
        up = ex.upper_exponent(p.ch, r, profile=p)
        v = 0.0
        if r <= rc - 1e-3:
            v = abs(lo - up.value) if math.isfinite(up.value) else 1.0
        elif r > rc:
            v = abs(lo - 0.5 * (r - i2))
        if not up.ambiguous and (math.isinf(up.value) != (r > imax.value + ex.AMBIGUOUS_BAND)):
            v = max(v, 1.0)
        out.append(v)
        notes.append(f"{p.ch.name} r={r:.6f}")
    return out, notes


def _exponent_rates(p: ex.ChannelProfile):
    i_vn = p.i_vn().value
    rc = p.critical_rate().value
    imax = p.i_max().value
    rates = list(np.linspace(i_vn, rc - 1e-3, 4)[1:]) if rc - 1e-3 > i_vn else []
    rates += [rc + 1e-3, 0.5 * (rc + imax) if imax > rc else rc + 0.05, imax + 0.05]
    return [float(r) for r in rates]


def _exponent_consistency(settings, count, cache):
    out, notes = [], []
    for k in range(count):
        p = ex.ChannelProfile(EXP_CHANNELS[k % len(EXP_CHANNELS)](), settings)
        o, n = exponent_violations(p, _exponent_rates(p))
        out += o
        notes += n
    return out, notes


LAMBDAS = (0.0, 0.25, 0.5, 1.0, 1.5, 2.5)


def smoothing_violations(rho, dims, lambdas, settings, oracle_samples=2000, rng=None):
    """Monotonicity, zero-point, feasibility and oracle-dominance violations on a λ grid."""
    rng = rng if rng is not None else settings.rng(0)
    imax, _ = mutinfo.state_max_information(rho, dims)
    out, notes, prev = [], [], None
    for lam in lambdas:
        res = smoothing.delta_smooth(rho, dims, lam, settings)
        vals, _ = smoothing.sample_feasible(rho, dims, lam, rng, oracle_samples) if lam < imax else (None, None)
        oracle = math.sqrt(max(0.0, 1 - float(vals.max()))) if vals is not None else 0.0
        v = max(0.0, res.delta - oracle - 1e-9)
        if prev is not None:
            v = max(v, res.delta - prev)
        if lam >= imax + 1e-6:
            v = max(v, res.delta)
        if res.feasibility_residual > smoothing.FEAS_TOL:
            v = max(v, 1.0)
        prev = res.delta
        out.append(v)
        notes.append(f"lambda={lam} delta={res.delta:.12f}")
    return out, notes


def _smoothing(settings, count, cache):
    out, notes = [], []
    for k in range(count):
        rng = settings.rng(k)
        rho = linops.maximally_entangled(2) if k == 0 else linops.random_density(4, rng)
        o, n = smoothing_violations(rho, (2, 2), LAMBDAS, settings, rng=rng)
        out += o
        notes += [f"instance {k} " + s for s in n]
    return out, notes


_RUNNERS = {
    "additivity": _additivity,
    "alpha_monotone": _alpha_monotone,
    "s_convexity": _s_convexity,
    "input_concavity": _input_concavity,
    "symmetric_minimizer": _symmetric_minimizer,
    "symmetrization": _symmetrization,
    "de_finetti": _de_finetti,
    "exponent_consistency": _exponent_consistency,
    "smoothing": _smoothing,
}


def run_suite(
    name: str, settings: SolverSettings = DEFAULT_SETTINGS, instances: int | None = None, cache: _Cache | None = None
) -> SuiteReport:
    """Run one suite and return its report (failures are data, not exceptions)."""
    if name not in _RUNNERS:
        raise ValueError(f"unknown suite {name!r}; expected one of {', '.join(SUITES)}")
    count = DEFAULT_INSTANCES[name] if instances is None else int(instances)
    if count < 1:
        raise ValueError("instances must be at least 1")
    cache = cache if cache is not None else _Cache(settings)
    violations, notes = _RUNNERS[name](settings, count, cache)
    return _report(name, violations, settings, notes)


def run_all(settings: SolverSettings = DEFAULT_SETTINGS, names=SUITES) -> list[SuiteReport]:
    cache = _Cache(settings)
    return [run_suite(n, settings, cache=cache) for n in names]


def reports_json(reports) -> str:
    """Deterministic JSON text (sorted keys, fixed indentation, shortest float repr)."""
    body = {
        "suites": [r.to_dict() for r in reports],
        "passed": all(r.passed for r in reports),
        "coverage": COVERAGE,
    }
    return json.dumps(body, indent=2, sort_keys=True, allow_nan=True) + "\n"
