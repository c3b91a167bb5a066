"""Command-line front end: ``qkd-rotsym analyze|simulate|sweep|keyrate|bound|verify``.

Exit codes: 0 ok, 1 verification failure, 2 invalid input or degenerate parameters.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import re
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

from qkd_rotsym import analysis, channel as ch, edp, mc, verify
from qkd_rotsym.errors import DegenerateChannelError, DegenerateParameterError
from qkd_rotsym.protocol import SIFTING_MODES, ProtocolParams

SWEEP_HEADER = [
    "M", "theta", "channel", "param", "p_i", "p_x", "p_y", "p_z",
    "e_b", "e_p", "p_con", "lambda_worst", "rate_eq22", "rate_eq23",
]
SWEEP_KINDS = ("identity", "depolarizing", "unitary_rotation", "amplitude_damping")
POSITIONAL_PARAMS = {
    "identity": (),
    "depolarizing": ("p",),
    "pauli": ("p_i", "p_x", "p_y", "p_z"),
    "unitary_rotation": ("beta",),
    "amplitude_damping": ("gamma",),
}
_PI_TOKEN = re.compile(r"^(-)?(\d+(?:\.\d*)?)?\*?pi(?:/(\d+(?:\.\d*)?))?$")


class ConfigError(ValueError):
    pass


def fmt(x) -> str:
    return f"{x:.12g}"


def parse_angle(text) -> float:
    """Radians, or a pi token such as ``pi/4`` or ``3*pi/8``."""
    if isinstance(text, (int, float)) and not isinstance(text, bool):
        return float(text)
    token = str(text).strip().replace(" ", "")
    m = _PI_TOKEN.match(token)
    if m:
        sign = -1.0 if m.group(1) else 1.0
        num = float(m.group(2)) if m.group(2) else 1.0
        den = float(m.group(3)) if m.group(3) else 1.0
        return sign * num * math.pi / den
    try:
        return float(token)
    except ValueError:
        raise ConfigError(f"cannot parse angle {text!r}") from None


def parse_grid(text: str, angle: bool = False) -> list[float]:
    """``lo:hi:step`` (inclusive of hi), a comma list, or a single value."""
    conv = parse_angle if angle else float
    try:
        if ":" in text:
            parts = text.split(":")
            if len(parts) != 3:
                raise ConfigError(f"grid {text!r} must be lo:hi:step")
            lo, hi, step = conv(parts[0]), conv(parts[1]), conv(parts[2])
            if step <= 0 or hi < lo:
                raise ConfigError(f"grid {text!r} needs step > 0 and hi >= lo")
            count = int(math.floor((hi - lo) / step + 1e-9)) + 1
            return [lo + i * step for i in range(count)]
        values = [conv(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"cannot parse grid {text!r}: {exc}") from None
    if not values:
        raise ConfigError(f"empty grid {text!r}")
    return values


def parse_channel(text: str) -> ch.KrausChannel:
    """``identity``, ``depolarizing:0.1``, ``pauli:0.9,0.1,0,0``, JSON text, or ``@file.json``."""
    text = text.strip()
    if text.startswith("@"):
        return channel_from_json(_load_json(Path(text[1:])), "channel")
    if text.startswith("{"):
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"channel JSON: {exc.msg} at line {exc.lineno} column {exc.colno}") from None
        return channel_from_json(doc, "channel")
    kind, _, rest = text.partition(":")
    if kind not in POSITIONAL_PARAMS:
        raise ConfigError(f"unknown channel {kind!r}; choose from {sorted(POSITIONAL_PARAMS)}")
    names = POSITIONAL_PARAMS[kind]
    values = [v for v in rest.split(",") if v.strip()] if rest else []
    if len(values) != len(names):
        raise ConfigError(f"channel {kind!r} takes {len(names)} parameter(s) {names}, got {len(values)}")
    conv = [parse_angle if n == "beta" else float for n in names]
    try:
        kwargs = {n: c(v) for n, c, v in zip(names, conv, values)}
    except ValueError as exc:
        raise ConfigError(f"channel {kind!r}: {exc}") from None
    return ch.builtin(kind, **kwargs)


def channel_from_json(doc, where: str) -> ch.KrausChannel:
    try:
        return ch.from_json(doc)
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from None


def _load_json(path: Path):
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: {exc.msg} at line {exc.lineno} column {exc.colno}") from None


@dataclass
class RunConfig:
    """Parsed form of the run-config JSON file."""

    params: ProtocolParams
    channel: ch.KrausChannel
    n: int = 100_000
    seed: int = 0
    test_fraction: float = 0.0
    lambda_mode: str = "paper_range"
    extras: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "protocol": {"M": self.params.M, "theta": self.params.theta, "sifting_mode": self.params.sifting_mode},
            "channel": self.channel.to_json(),
            "simulation": {"n": self.n, "seed": self.seed, "test_fraction": self.test_fraction},
            "lambda_mode": self.lambda_mode,
        }


_CONFIG_KEYS = {
    "": {"protocol", "channel", "simulation", "lambda_mode"},
    "protocol": {"M", "theta", "sifting_mode"},
    "simulation": {"n", "seed", "test_fraction"},
}


def _section(doc, name):
    sub = doc.get(name, {})
    if not isinstance(sub, dict):
        raise ConfigError(f"{name}: expected an object")
    unknown = set(sub) - _CONFIG_KEYS[name]
    if unknown:
        raise ConfigError(f"{name}.{sorted(unknown)[0]}: unknown field")
    return sub


def parse_run_config(doc) -> RunConfig:
    """Validate a run-config document; errors name the offending field."""
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(doc) - _CONFIG_KEYS[""]
    if unknown:
        raise ConfigError(f"{sorted(unknown)[0]}: unknown top-level field")
    proto = _section(doc, "protocol")
    sim = _section(doc, "simulation")
    if "M" not in proto or "theta" not in proto:
        raise ConfigError("protocol: fields M and theta are required")
    try:
        M = proto["M"]
        if not isinstance(M, int) or isinstance(M, bool):
            raise ValueError(f"M must be an integer, got {M!r}")
    except ValueError as exc:
        raise ConfigError(f"protocol.M: {exc}") from None
    try:
        theta = parse_angle(proto["theta"])
    except ConfigError as exc:
        raise ConfigError(f"protocol.theta: {exc}") from None
    try:
        params = ProtocolParams(M, theta, proto.get("sifting_mode", "generic"))
    except ValueError as exc:
        raise ConfigError(f"protocol: {exc}") from None
    if "channel" not in doc:
        raise ConfigError("channel: field is required")
    channel = channel_from_json(doc["channel"], "channel")
    out = RunConfig(params, channel)
    for key, typ in (("n", int), ("seed", int), ("test_fraction", float)):
        if key in sim:
            value = sim[key]
            if isinstance(value, bool) or not isinstance(value, (int, float)) or (typ is int and int(value) != value):
                raise ConfigError(f"simulation.{key}: expected {typ.__name__}, got {value!r}")
            setattr(out, key, typ(value))
    mode = doc.get("lambda_mode", "paper_range")
    if mode not in analysis.LAMBDA_MODES:
        raise ConfigError(f"lambda_mode: must be one of {analysis.LAMBDA_MODES}, got {mode!r}")
    out.lambda_mode = mode
    try:
        mc.SimulationConfig(out.params, out.channel, out.n, out.seed, out.test_fraction)
    except ValueError as exc:
        raise ConfigError(f"simulation: {exc}") from None
    return out


def load_run_config(path) -> RunConfig:
    return parse_run_config(_load_json(Path(path)))


def _config_from_args(args) -> RunConfig:
    if getattr(args, "config", None):
        cfg = load_run_config(args.config)
    else:
        if args.M is None or args.theta is None or args.channel is None:
            raise ConfigError("give --config, or all of --M, --theta and --channel")
        try:
            params = ProtocolParams(args.M, parse_angle(args.theta), args.sifting_mode or "generic")
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        cfg = RunConfig(params, parse_channel(args.channel))
    for attr in ("n", "seed", "test_fraction", "lambda_mode"):
        value = getattr(args, attr, None)
        if value is not None:
            setattr(cfg, attr, value)
    return cfg


def _analyze(cfg: RunConfig):
    cfg.params.require_nondegenerate()
    diag = edp.diagnostics(cfg.params, cfg.channel)
    relation = analysis.error_relation(cfg.params)
    rate = analysis.key_rate(cfg.params, diag.e_b, diag.p_con, cfg.lambda_mode)
    return diag, relation, rate


def cmd_analyze(args) -> int:
    cfg = _config_from_args(args)
    diag, relation, rate = _analyze(cfg)
    if args.json:
        doc = {
            "config": cfg.to_json(),
            "diagnostics": diag.as_dict(),
            "relation": asdict(relation),
            "key_rate": rate.as_dict(),
        }
        print(json.dumps(doc, indent=2))
        return 0
    p = cfg.params
    op = "=" if relation.kind == "equality" else "<="
    print(f"protocol    M={p.M} theta={fmt(p.theta)} sifting={p.sifting_mode}")
    print(f"channel     {cfg.channel.label}")
    print(f"bell        p_i={fmt(diag.p_i)} p_x={fmt(diag.p_x)} p_y={fmt(diag.p_y)} p_z={fmt(diag.p_z)}")
    print(f"errors      e_b={fmt(diag.e_b)} e_p={fmt(diag.e_p)}")
    print(f"p_con       {fmt(diag.p_con)}  N'={fmt(diag.N_prime)}")
    print(f"relation    e_p {op} {fmt(relation.slope)} * e_b ({relation.kind})")
    print(f"lambda      [{fmt(rate.lambda_min)}, {fmt(rate.lambda_max)}] worst={fmt(rate.lambda_worst)} ({rate.lambda_mode})")
    print(f"rate_eq22   {fmt(rate.rate_shor_preskill)}")
    print(f"rate_eq23   {fmt(rate.rate_h4)}")
    if rate.abort_recommended:
        print("abort       recommended (no positive key rate)")
    return 0


def cmd_simulate(args) -> int:
    cfg = _config_from_args(args)
    sim = mc.SimulationConfig(cfg.params, cfg.channel, cfg.n, cfg.seed, cfg.test_fraction)
    comp = mc.estimate_vs_analytic(sim)
    s = comp.stats
    if args.json:
        print(json.dumps({"config": cfg.to_json(), "comparison": comp.as_dict()}, indent=2))
        return 0
    print(f"signals     n={s.n_total} basis_matched={s.n_basis_matched} conclusive={s.n_conclusive}")
    print(f"test bits   n_test={s.n_test} errors={s.n_test_errors} key_bits_remaining={s.key_bits_remaining}")
    print(f"e_b_hat     {fmt(s.e_b_hat)} +- {fmt(s.e_b_se)} ({s.e_b_sample}); analytic {fmt(comp.e_b_analytic)}; z={comp.z_e_b:.3f}")
    print(f"p_con_hat   {fmt(s.p_con_hat)} +- {fmt(s.p_con_se)}; analytic {fmt(comp.p_con_analytic)}; z={comp.z_p_con:.3f}")
    return 0


def sweep_rows(Ms, thetas, kind, params_grid, sifting_mode="generic", lambda_mode="paper_range"):
    for M in Ms:
        for theta in thetas:
            params = ProtocolParams(M, theta, sifting_mode)
            for value in params_grid:
                channel = ch.identity() if kind == "identity" else ch.builtin(kind, value)
                cfg = RunConfig(params, channel, lambda_mode=lambda_mode)
                diag, _, rate = _analyze(cfg)
                yield [
                    M, theta, kind, value if kind != "identity" else 0.0,
                    diag.p_i, diag.p_x, diag.p_y, diag.p_z, diag.e_b, diag.e_p,
                    diag.p_con, rate.lambda_worst, rate.rate_shor_preskill, rate.rate_h4,
                ]


def cmd_sweep(args) -> int:
    if args.kind not in SWEEP_KINDS:
        raise ConfigError(f"sweep channel must be one of {SWEEP_KINDS}, got {args.kind!r}")
    Ms = [int(m) for m in str(args.M).split(",")]
    thetas = parse_grid(args.theta_grid, angle=True)
    if args.kind == "identity":
        grid = [0.0]
    else:
        if not args.param_grid:
            raise ConfigError(f"--param-grid is required for channel {args.kind!r}")
        grid = parse_grid(args.param_grid, angle=args.kind == "unitary_rotation")
    rows = list(sweep_rows(Ms, thetas, args.kind, grid, args.sifting_mode, args.lambda_mode))
    try:
        with open(args.out, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(SWEEP_HEADER)
            for row in rows:
                writer.writerow([row[0], fmt(row[1]), row[2]] + [fmt(v) for v in row[3:]])
    except OSError as exc:
        raise ConfigError(f"cannot write {args.out}: {exc.strerror}") from None
    print(f"wrote {len(rows)} rows to {args.out}")
    return 0


def cmd_keyrate(args) -> int:
    params = ProtocolParams(args.M, parse_angle(args.theta), args.sifting_mode)
    p_con = args.p_con if args.p_con is not None else 0.5 * math.sin(params.theta) ** 2
    rate = analysis.key_rate(params, args.e_b, p_con, args.lambda_mode)
    if args.json:
        print(json.dumps(rate.as_dict(), indent=2))
        return 0
    for key, value in rate.as_dict().items():
        print(f"{key:<20}{fmt(value) if isinstance(value, float) else value}")
    return 0


def cmd_bound(args) -> int:
    theta = parse_angle(args.theta)
    sol = analysis.m2_bound(theta, args.e_b)
    doc = asdict(sol)
    if args.oracle_step is not None:
        doc["oracle_e_p_max"] = analysis.m2_bound_oracle(theta, args.e_b, args.oracle_step)
    if args.json:
        print(json.dumps(doc, indent=2))
        return 0
    for key, value in doc.items():
        print(f"{key:<16}{fmt(value) if isinstance(value, float) else value}")
    return 0


def cmd_verify(args) -> int:
    results = verify.run_all(args.trials, args.seed)
    for r in results:
        print(r.line())
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} suites passed (trials={args.trials}, seed={args.seed})")
    return 1 if failed else 0


def _add_protocol_args(p, config=True):
    if config:
        p.add_argument("--config", help="run-config JSON file")
    p.add_argument("--M", type=int)
    p.add_argument("--theta", help="radians or a pi token (pi/2, pi/4, pi/8, pi/3)")
    p.add_argument("--channel", help="identity | depolarizing:P | pauli:PI,PX,PY,PZ | "
                   "unitary_rotation:BETA | amplitude_damping:G | JSON | @file.json")
    p.add_argument("--sifting-mode", choices=SIFTING_MODES, default=None)
    p.add_argument("--lambda-mode", choices=analysis.LAMBDA_MODES, default=None)
    p.add_argument("--json", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qkd-rotsym", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="exact Bell diagnostics, error relation and key rates")
    _add_protocol_args(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("simulate", help="Monte Carlo run scored against the exact values")
    _add_protocol_args(p)
    p.add_argument("--n", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--test-fraction", type=float)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="CSV over theta and channel-parameter grids")
    p.add_argument("--M", default="4", help="basis count, or a comma list")
    p.add_argument("--theta-grid", required=True, help="lo:hi:step, a comma list, or one value")
    p.add_argument("--channel", dest="kind", default="depolarizing", help=f"one of {SWEEP_KINDS}")
    p.add_argument("--param-grid", help="channel parameter grid, lo:hi:step or a comma list")
    p.add_argument("--sifting-mode", choices=SIFTING_MODES, default="generic")
    p.add_argument("--lambda-mode", choices=analysis.LAMBDA_MODES, default="paper_range")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("keyrate", help="key rates for an observed bit error rate")
    p.add_argument("--M", type=int, required=True)
    p.add_argument("--theta", required=True)
    p.add_argument("--e-b", type=float, required=True)
    p.add_argument("--p-con", type=float, help="defaults to the noiseless value sin^2(theta)/2")
    p.add_argument("--sifting-mode", choices=SIFTING_MODES, default="generic")
    p.add_argument("--lambda-mode", choices=analysis.LAMBDA_MODES, default="paper_range")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_keyrate)

    p = sub.add_parser("bound", help="M=2 worst-case phase error for a given bit error")
    p.add_argument("--theta", required=True)
    p.add_argument("--e-b", type=float, required=True)
    p.add_argument("--oracle-step", type=float, help="also run the grid oracle at this step")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("verify", help="run every property suite")
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--seed", type=int, default=7)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, DegenerateChannelError) as exc:
        # DegenerateParameterError and ConfigError are ValueErrors too
        kind = "degenerate parameters" if isinstance(exc, DegenerateParameterError) else "error"
        print(f"{kind}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
