"""Command-line front end.

Every flag can also be supplied through an environment variable named
``RSS_<FLAG>`` (upper case, dashes as underscores, e.g. ``RSS_SEED=7``); an
explicit flag wins. Solver settings may additionally come from a JSON file
given with ``--config``. Exit codes: 0 success, 1 invalid input or failed
validation, 2 solver non-convergence (results are still printed).
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from . import channels as chn
from . import exponents as ex
from . import io, mutinfo, smoothing, verify
from .io import InputError
from .settings import SolverSettings

EXIT_OK, EXIT_INVALID, EXIT_NONCONVERGED = 0, 1, 2

# flag dest -> SolverSettings field
SETTING_FLAGS = {
    "inner_tol": "inner_tol",
    "outer_tol": "outer_tol",
    "max_iter": "max_iter",
    "multistarts": "multistarts",
    "seed": "seed",
    "alpha_cap": "alpha_ladder_cap",
    "inner_method": "inner_method",
    "distance_starts": "distance_starts",
}
RUN_KEYS = {"out", "format", "seed", "precision"}


@dataclass
class RunConfig:
    settings: SolverSettings = field(default_factory=SolverSettings)
    out: str | None = None
    format: str = "text"
    seed: int = 0
    precision: int = 12

    @classmethod
    def from_mapping(cls, data: dict) -> "RunConfig":
        allowed = set(SolverSettings.field_names()) | RUN_KEYS
        for key in data:
            if key not in allowed:
                raise InputError(key, "unknown configuration key")
        s_kw = {k: v for k, v in data.items() if k in SolverSettings.field_names()}
        try:
            settings = SolverSettings(**s_kw)
        except (TypeError, ValueError) as exc:
            raise InputError("config", str(exc)) from None
        kw = {k: data[k] for k in RUN_KEYS if k in data}
        cfg = cls(settings=settings, **kw)
        if cfg.format not in ("text", "json", "csv"):
            raise InputError("format", f"unsupported format {cfg.format!r}")
        if not isinstance(cfg.precision, int) or not 1 <= cfg.precision <= 17:
            raise InputError("precision", "must be an integer in [1, 17]")
        return cfg


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InputError("arguments", message)


def _common(p):
    g = p.add_argument_group("solver and output")
    g.add_argument("--seed", type=int)
    g.add_argument("--multistarts", type=int)
    g.add_argument("--inner-tol", type=float)
    g.add_argument("--outer-tol", type=float)
    g.add_argument("--max-iter", type=int)
    g.add_argument("--alpha-cap", type=float)
    g.add_argument("--inner-method", choices=("lbfgs", "simplex"))
    g.add_argument("--distance-starts", type=int)
    g.add_argument("--precision", type=int, help="printed digits (default 12)")
    g.add_argument("--format", choices=("text", "json", "csv"))
    g.add_argument("--out", help="output file (default: stdout)")
    g.add_argument("--config", help="JSON file with settings overrides")


def _channel_args(p):
    p.add_argument("--channel", help="channel file or name (identity2, depolarizing, ...)")
    p.add_argument("--param", action="append", help="family parameter key=value (repeatable)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="rssim", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("chan", help="inspect a channel")
    p.add_argument("action", choices=("show",))
    p.add_argument("--name", help="canonical family name")
    p.add_argument("--file", help="channel JSON file")
    _channel_args(p)
    _common(p)

    p = sub.add_parser("mi", help="channel Renyi mutual information")
    _channel_args(p)
    p.add_argument("--alpha", help="order > 1, 1 for von Neumann, or 'max'")
    _common(p)

    p = sub.add_parser("critical", help="critical rate and anchor values")
    _channel_args(p)
    p.add_argument("--step", type=float, help="finite-difference step (default 1e-3)")
    _common(p)

    p = sub.add_parser("curve", help="reliability-function bounds on a rate grid")
    _channel_args(p)
    p.add_argument("--r-min", type=float)
    p.add_argument("--r-max", type=float)
    p.add_argument("--steps", type=int)
    p.add_argument("--quantum", action="store_const", const=True, help="rates in qubits per use")
    _common(p)

    p = sub.add_parser("finite-n", help="finite-blocklength achievability bound")
    _channel_args(p)
    p.add_argument("--rate", type=float)
    p.add_argument("--n", type=int)
    p.add_argument("--s", type=float, help="fix s instead of optimizing")
    _common(p)

    p = sub.add_parser("delta", help="smoothing quantity of a bipartite state")
    p.add_argument("--state", help="state JSON file")
    p.add_argument("--lambda", dest="lam", type=float)
    _common(p)

    p = sub.add_parser("verify", help="run property suites")
    p.add_argument("--suite", action="append", help="suite name or 'all' (repeatable)")
    p.add_argument("--instances", type=int)
    _common(p)
    return parser


def _env_fill(parser: argparse.ArgumentParser, args: argparse.Namespace, environ) -> None:
    """Fill flags left unset from ``RSS_*`` variables."""
    actions = list(parser._actions)
    for a in parser._actions:
        if isinstance(a, argparse._SubParsersAction) and args.command in a.choices:
            actions += a.choices[args.command]._actions
    for a in actions:
        if not a.option_strings or a.dest in ("help",):
            continue
        if getattr(args, a.dest, None) is not None:
            continue
        env = "RSS_" + a.option_strings[-1].lstrip("-").replace("-", "_").upper()
        if env not in environ:
            continue
        raw = environ[env]
        try:
            if isinstance(a, argparse._AppendAction):
                val = [x for x in raw.split(",") if x]
            elif isinstance(a, argparse._StoreConstAction):
                val = a.const if raw.lower() in ("1", "true", "yes") else None
            else:
                val = a.type(raw) if a.type else raw
        except ValueError:
            raise InputError(env, f"cannot parse {raw!r}") from None
        if a.choices is not None and val not in a.choices:
            raise InputError(env, f"{val!r} not in {sorted(a.choices)}")
        setattr(args, a.dest, val)


def _config(args) -> RunConfig:
    data = {}
    if args.config:
        try:
            with open(args.config) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError("config", f"cannot load {args.config}: {exc}") from None
        if not isinstance(data, dict):
            raise InputError("config", "top level must be an object")
        RunConfig.from_mapping(data)  # reject unknown keys early
    for dest, fieldname in SETTING_FLAGS.items():
        v = getattr(args, dest, None)
        if v is not None:
            data[fieldname] = v
    for key in ("out", "format", "precision"):
        v = getattr(args, key, None)
        if v is not None:
            data[key] = v
    if "seed" in data:
        data["seed"] = int(data["seed"])
    return RunConfig.from_mapping(data)


class _Output:
    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self.lines: list[str] = []

    def line(self, text=""):
        self.lines.append(text)

    def num(self, x, unit=""):
        p = self.cfg.precision
        s = ex.fmt(x, p) if (isinstance(x, float) and math.isinf(x)) else f"{x:.{p}f}"
        return f"{s} {unit}".rstrip()

    def emit(self, text=None):
        text = text if text is not None else "\n".join(self.lines) + "\n"
        if self.cfg.out:
            with open(self.cfg.out, "w") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)


def _json_default(x):
    if isinstance(x, float) and math.isinf(x):
        return "inf"
    raise TypeError


def _emit_json(out: _Output, payload: dict):
    out.emit(json.dumps(payload, indent=2, sort_keys=True, default=_json_default) + "\n")


def _channel(args):
    return io.resolve_channel(args.channel, io.parse_params(args.param))


def _cmd_chan(args, cfg, out):
    if args.file:
        ch = io.load_channel(args.file)
    elif args.name:
        ch = io.resolve_channel(args.name, io.parse_params(args.param))
    else:
        ch = _channel(args)
    rep = chn.validate(ch)
    if cfg.format == "json":
        _emit_json(out, {"name": ch.name, "dim_in": ch.dim_in, "dim_out": ch.dim_out, "kraus_count": len(ch.kraus),
                         "tp_residual": rep.tp_residual, "min_choi_eigenvalue": rep.min_choi_eigenvalue, "valid": rep.ok})
    else:
        out.line(f"channel: {ch.name}")
        out.line(f"dims: {ch.dim_in} -> {ch.dim_out}")
        out.line(f"kraus operators: {len(ch.kraus)}")
        out.line(f"trace-preservation residual: {rep.tp_residual:.3e}")
        out.line(f"min Choi eigenvalue: {rep.min_choi_eigenvalue:.3e}")
        out.line(f"valid: {str(rep.ok).lower()}")
        out.emit()
    if not rep.ok:
        raise InputError("kraus", "; ".join(p.split(": ", 1)[1] for p in rep.problems()))
    return EXIT_OK


def _mi_payload(res: mutinfo.MutualInfoResult):
    return {"value": res.value, "alpha": res.alpha, "converged": res.converged, "restart_spread": res.restart_spread,
            "ladder": [list(x) for x in res.ladder]}


def _cmd_mi(args, cfg, out):
    ch = _channel(args)
    spec = (args.alpha or "2").strip().lower()
    if spec == "max":
        res = mutinfo.channel_mi_max(ch, cfg.settings)
        label = "I_max estimate"
    else:
        try:
            alpha = float(spec)
        except ValueError:
            raise InputError("alpha", f"{args.alpha!r} is not a number or 'max'") from None
        if alpha == 1:
            res, label = mutinfo.channel_mi_vn(ch, cfg.settings), "I"
        elif alpha > 1:
            res, label = mutinfo.channel_mi_alpha(ch, alpha, cfg.settings), "I_alpha"
        else:
            raise InputError("alpha", "must be >= 1")
    if cfg.format == "json":
        _emit_json(out, {"channel": ch.name, **_mi_payload(res)})
    else:
        out.line(f"channel: {ch.name}")
        if res.alpha is not None:
            out.line(f"alpha: {res.alpha:g}")
        out.line(f"quantity: {label}")
        out.line(f"value: {out.num(res.value, 'bits')}")
        out.line(f"converged: {str(res.converged).lower()}")
        out.line(f"restart_spread: {res.restart_spread:.3e} bits")
        if res.maximizer_input is not None:
            w = np.linalg.eigvalsh(res.maximizer_input)
            out.line("maximizer input spectrum: " + " ".join(f"{x:.6f}" for x in w))
        out.emit()
    return EXIT_OK if res.converged else EXIT_NONCONVERGED


def _cmd_critical(args, cfg, out):
    ch = _channel(args)
    prof = ex.ChannelProfile(ch, cfg.settings)
    step = args.step if args.step is not None else 1e-3
    if step <= 0 or step >= 0.5:
        raise InputError("step", "must lie in (0, 0.5)")
    rc = prof.critical_rate(step)
    head = {"I": prof.i_vn().value, "I2": prof.i_alpha(2.0).value, "Imax": prof.i_max().value}
    ok = prof.all_converged() and not rc.flagged
    if cfg.format == "json":
        _emit_json(out, {"channel": ch.name, "Rcrit": rc.value, "uncertainty": rc.uncertainty, "coarse": rc.coarse,
                         "flagged": rc.flagged, **head, "Imax_converged": prof.i_max().converged,
                         "teleport": prof.teleport})
    else:
        out.line(f"channel: {ch.name}")
        out.line(f"R_crit: {out.num(rc.value)} +/- {rc.uncertainty:.3e} bits/use")
        out.line(f"I(N): {out.num(head['I'], 'bits')}")
        out.line(f"I_2(N): {out.num(head['I2'], 'bits')}")
        flag = "" if prof.i_max().converged else " (ladder cap reached; lower estimate)"
        out.line(f"I_max(N): {out.num(head['Imax'], 'bits')}{flag}")
        out.line(f"teleportation boundary: {out.num(prof.teleport, 'bits/use')}")
        out.emit()
    return EXIT_OK if ok else EXIT_NONCONVERGED


def _cmd_curve(args, cfg, out):
    ch = _channel(args)
    for name in ("r_min", "r_max", "steps"):
        if getattr(args, name) is None:
            raise InputError(name.replace("_", "-"), "required")
    prof = ex.ChannelProfile(ch, cfg.settings)
    try:
        pts = ex.curve(ch, args.r_min, args.r_max, args.steps, cfg.settings, prof, quantum=bool(args.quantum))
    except ValueError as exc:
        raise InputError("curve", str(exc)) from None
    if cfg.format == "json":
        _emit_json(out, {"channel": ch.name, "header": ex.curve_header(prof),
                         "points": [{"r": p.r, "e_lower": p.e_lower, "e_upper": p.e_upper, "regime": p.regime}
                                    for p in pts]})
    else:
        out.emit(ex.curve_csv(pts, prof, cfg.precision))
    return EXIT_OK if prof.all_converged() else EXIT_NONCONVERGED


def _cmd_finite_n(args, cfg, out):
    ch = _channel(args)
    if args.rate is None:
        raise InputError("rate", "required")
    if args.n is None:
        raise InputError("n", "required")
    prof = ex.ChannelProfile(ch, cfg.settings)
    try:
        rep = ex.finite_n_bound(ch, args.n, args.rate, cfg.settings, s=args.s, profile=prof)
    except ValueError as exc:
        raise InputError("finite-n", str(exc)) from None
    if cfg.format == "json":
        _emit_json(out, {"channel": ch.name, **{k: getattr(rep, k) for k in rep.__dataclass_fields__}})
    else:
        out.line(f"channel: {ch.name}")
        out.line(f"n: {rep.n}")
        out.line(f"r: {out.num(rep.r, 'bits/use')}")
        out.line(f"s*: {out.num(rep.s_star)}")
        out.line(f"log2 prefactor: {out.num(rep.log2_prefactor, 'bits')}")
        out.line(f"exponent: {out.num(rep.exponent_bits, 'bits/use')}")
        out.line(f"bound: {out.num(rep.bound_value)}")
        out.line(f"clipped: {str(rep.clipped).lower()}")
        out.emit()
    return EXIT_OK if prof.all_converged() else EXIT_NONCONVERGED


def _cmd_delta(args, cfg, out):
    if not args.state:
        raise InputError("state", "required")
    if args.lam is None:
        raise InputError("lambda", "required")
    rho, dims = io.load_state(args.state)
    if len(dims) != 2:
        raise InputError("dims", "state must be bipartite (two subsystem dimensions)")
    try:
        res = smoothing.delta_smooth(rho, dims, args.lam, cfg.settings)
    except ValueError as exc:
        raise InputError("lambda" if args.lam < 0 else "state", str(exc)) from None
    if cfg.format == "json":
        _emit_json(out, {"delta": res.delta, "oracle_gap": res.oracle_gap,
                         "feasibility_residual": res.feasibility_residual, "converged": res.converged,
                         "optimizer_sigma": io.state_to_dict(res.optimizer_sigma, [dims[1]])["matrix"]})
    else:
        out.line(f"lambda: {out.num(args.lam, 'bits')}")
        out.line(f"delta: {out.num(res.delta)} (purified distance)")
        out.line(f"oracle_gap: {res.oracle_gap:.3e}")
        out.line(f"feasibility_residual: {res.feasibility_residual:.3e}")
        out.line("optimizer sigma spectrum: " + " ".join(f"{x:.6f}" for x in np.linalg.eigvalsh(res.optimizer_sigma)))
        out.line(f"converged: {str(res.converged).lower()}")
        out.emit()
    return EXIT_OK if res.converged else EXIT_NONCONVERGED


def _cmd_verify(args, cfg, out):
    names = args.suite or ["all"]
    if "all" in names:
        names = list(verify.SUITES)
    for n in names:
        if n not in verify.SUITES:
            raise InputError("suite", f"unknown suite {n!r}")
    if args.instances is not None and args.instances < 1:
        raise InputError("instances", "must be at least 1")
    cache = verify._Cache(cfg.settings)
    reports = [verify.run_suite(n, cfg.settings, args.instances, cache) for n in names]
    text = verify.reports_json(reports)
    if cfg.out:
        out.emit(text)
        for r in reports:
            sys.stdout.write(f"{r.suite}: {'pass' if r.passed else 'FAIL'} "
                             f"(max violation {r.max_violation:.3e}, tolerance {r.tolerance:g})\n")
    else:
        out.emit(text)
    return EXIT_OK if all(r.passed for r in reports) else EXIT_INVALID


COMMANDS = {
    "chan": _cmd_chan,
    "mi": _cmd_mi,
    "critical": _cmd_critical,
    "curve": _cmd_curve,
    "finite-n": _cmd_finite_n,
    "delta": _cmd_delta,
    "verify": _cmd_verify,
}


def main(argv=None, environ=None) -> int:
    environ = os.environ if environ is None else environ
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise InputError("command", f"expected one of {', '.join(COMMANDS)}")
        _env_fill(parser, args, environ)
        cfg = _config(args)
        return COMMANDS[args.command](args, cfg, _Output(cfg))
    except InputError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INVALID
    except ValueError as exc:
        sys.stderr.write(f"error: input: {exc}\n")
        return EXIT_INVALID


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
