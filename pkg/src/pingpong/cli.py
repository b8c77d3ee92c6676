"""Command-line front end.

Every command reads a JSON config, writes its result to ``--out`` (or
stdout) and exits with 0 when all checks it performs pass, 1 when some
check fails and 2 when the config is invalid. Failures are listed as JSON on
stderr.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import jsonschema

from . import adversary, certify, channels, designs, protocol, stats

SEED_ENV = "PINGPONG_SEED"

_channel = {"type": "object", "required": ["kind"]}
_round = {
    "type": "object",
    "properties": {"memory": _channel, "gate_noise": _channel},
    "additionalProperties": False,
}
_prob = {"type": "number", "minimum": 0, "maximum": 1}
_seed = {"type": "integer", "minimum": 0, "maximum": protocol.MAX_SEED}
_strategy = {
    "type": "object",
    "properties": {
        "m": {"type": "integer", "minimum": 0},
        "send_rounds": {"oneOf": [{"const": "first_m"}, {"type": "array", "items": {"type": "integer"}}]},
        "fallback": {"enum": [f.value for f in adversary.Fallback]},
    },
    "required": ["fallback"],
    "additionalProperties": False,
}

SCHEMAS = {
    "run-test": {
        "type": "object",
        "properties": {
            "k": {"type": "integer", "minimum": 1},
            "n": {"type": "integer", "minimum": 1},
            "seed": _seed,
            "rounds": {"type": "array", "items": _round, "minItems": 1},
            "round": _round,
            "input_noise": _channel,
            "measurement_noise": _channel,
            "timing": {"type": "object"},
            "delta": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        },
        "required": ["k", "n"],
        "additionalProperties": False,
    },
    "certify": {
        "type": "object",
        "properties": {
            "k": {"type": "integer", "minimum": 1},
            "t": _prob,
            "mu_est": _prob,
            "n": {"type": "integer", "minimum": 1},
            "eps": {"type": "number", "minimum": 0},
            "R": _prob,
        },
        "required": ["k", "t", "mu_est", "n", "eps"],
        "additionalProperties": False,
    },
    "consistency": {
        "type": "object",
        "properties": {
            "r_mem": {"type": "array", "items": _prob, "minItems": 1},
            "r_gate": {"type": "array", "items": _prob, "minItems": 1},
            "kappa": {"type": "integer", "minimum": 1},
            "R": _prob,
            "eps": {"type": "number", "minimum": 0},
            "n_mem": {"type": "array", "items": {"type": "integer", "minimum": 1}},
            "n_gate": {"type": "array", "items": {"type": "integer", "minimum": 1}},
            "eps_mem": {"type": "array", "items": {"type": "number", "minimum": 0}},
            "eps_gate": {"type": "array", "items": {"type": "number", "minimum": 0}},
        },
        "required": ["r_mem", "r_gate", "kappa", "R"],
        "additionalProperties": False,
    },
    "bound": {
        "type": "object",
        "properties": {
            "parts": {
                "type": "array",
                "minItems": 1,
                "items": {"type": "array", "prefixItems": [{"type": "integer", "minimum": 1}, _prob, {"type": "number"}],
                          "minItems": 3, "maxItems": 3},
            },
            "d": {"type": "integer", "minimum": 2},
            "cliff_size": {"type": "integer", "minimum": 1},
            "include_cliff_factor": {"type": "boolean"},
            "observed": {"type": "number", "minimum": 0},
        },
        "required": ["parts"],
        "additionalProperties": False,
    },
    "sweep": {
        "type": "object",
        "properties": {
            "kinds": {"type": "array", "items": {"enum": ["depolarizing", "dephasing"]}, "minItems": 1},
            "kappas": {"type": "array", "items": {"enum": [1, 2]}, "minItems": 1},
            "r_grid": {"type": "array", "items": {"type": "number", "minimum": 0.5, "maximum": 1}, "minItems": 1},
            "input_fidelity": {"oneOf": [{"type": "null"}, _prob]},
        },
        "required": ["r_grid"],
        "additionalProperties": False,
    },
    "soundness-sim": {
        "type": "object",
        "properties": {
            "k": {"type": "integer", "minimum": 1},
            "n": {"type": "integer", "minimum": 1},
            "seed": _seed,
            "delta": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
            "strategy": _strategy,
            "strategies": {"type": "array", "items": _strategy, "minItems": 1},
        },
        "required": ["k", "n"],
        "additionalProperties": False,
    },
    "verify-designs": {
        "type": "object",
        "properties": {"probe": _channel},
        "additionalProperties": False,
    },
    "qg-example": {
        "type": "object",
        "properties": {
            "memory_fidelity": _prob,
            "one_minus_R": {"type": "number", "minimum": 0},
        },
        "additionalProperties": False,
    },
}


class ConfigError(Exception):
    pass


class Outcome:
    """What a command produced: the payload to write and any failed checks."""

    def __init__(self, payload: str, failures: list | None = None, side_files: dict | None = None):
        self.payload = payload
        self.failures = failures or []
        self.side_files = side_files or {}


def load_config(path: str | None, command: str) -> dict:
    if path is None:
        cfg = {}
    else:
        try:
            cfg = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
        except OSError as exc:
            raise ConfigError(f"{path}: {exc.strerror}") from None
    errors = sorted(jsonschema.Draft202012Validator(SCHEMAS[command]).iter_errors(cfg), key=lambda e: list(e.path))
    if errors:
        msgs = [f"{'/'.join(str(p) for p in e.path) or '<root>'}: {e.message}" for e in errors]
        raise ConfigError("; ".join(msgs))
    return cfg


def resolve_seed(cli_seed: int | None, cfg: dict) -> int:
    if cli_seed is not None:
        return cli_seed
    if "seed" in cfg:
        return cfg["seed"]
    env = os.environ.get(SEED_ENV)
    if env:
        try:
            return int(env)
        except ValueError:
            raise ConfigError(f"{SEED_ENV}={env!r} is not an integer") from None
    return 0


def dump_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=True) + "\n"


def fmt(x) -> str:
    if isinstance(x, bool):
        return str(x).lower()
    if isinstance(x, float):
        return f"{x:.12g}"
    return str(x)


def reports_as_csv(reports: list[certify.CertificationReport]) -> str:
    lines = ["kind,threshold,observed,verdict,confidence"]
    for r in reports:
        obs = "" if r.observed is None else fmt(float(r.observed))
        conf = "" if r.confidence is None else fmt(float(r.confidence))
        lines.append(f"{r.kind},{fmt(float(r.threshold))},{obs},{fmt(r.verdict)},{conf}")
    return "\n".join(lines) + "\n"


def render_reports(reports: list[certify.CertificationReport], fmt_name: str) -> str:
    if fmt_name == "csv":
        return reports_as_csv(reports)
    return dump_json([r.to_dict() for r in reports])


def _failed(reports: list[certify.CertificationReport]) -> list:
    return [{"kind": r.kind, "threshold": r.threshold, "observed": r.observed} for r in reports if not r.verdict]


# -- commands ---------------------------------------------------------------


def cmd_run_test(cfg: dict, args) -> Outcome:
    delta = cfg.pop("delta", 0.05)
    cfg["seed"] = resolve_seed(args.seed, cfg)
    try:
        test_cfg = protocol.TestConfig.from_dict(cfg)
    except (ValueError, KeyError) as exc:
        raise ConfigError(str(exc)) from None
    transcript = protocol.run_test(test_cfg, jobs=args.jobs)
    confidence = 1 - delta
    overall = stats.rate_overall(transcript, confidence)
    by_depth = {}
    for kap in range(1, test_cfg.k + 1):
        if (transcript.kappa == kap).any():
            est = stats.rate_by_depth(transcript, kap, confidence)
            by_depth[str(kap)] = {"rate": est.rate, "n": est.n_used, "epsilon": est.epsilon}
    summary = {
        "config_digest": transcript.config_digest,
        "seed": test_cfg.seed,
        "k": test_cfg.k,
        "n": test_cfg.n,
        "delta": delta,
        "R": overall.rate,
        "epsilon": overall.epsilon,
        "R_by_depth": by_depth,
        "analytic_success_prob": protocol.analytic_success_prob(test_cfg),
    }
    if args.format == "csv":
        rows = ["depth,rate,n,epsilon", f"all,{fmt(overall.rate)},{overall.n_used},{fmt(overall.epsilon)}"]
        rows += [f"{d},{fmt(v['rate'])},{v['n']},{fmt(v['epsilon'])}" for d, v in by_depth.items()]
        summary_text = "\n".join(rows) + "\n"
    else:
        summary_text = dump_json(summary)
    return Outcome(summary_text, side_files={"transcript": transcript.dumps()})


def cmd_certify(cfg: dict, args) -> Outcome:
    try:
        reports = [certify.completeness_verdict(cfg["mu_est"], cfg["t"], cfg["k"], cfg["n"], cfg["eps"])]
        if "R" in cfg:
            reports.append(certify.soundness_report(cfg["R"], cfg["t"], cfg["k"], cfg["n"], cfg["eps"]))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return Outcome(render_reports(reports, args.format), _failed(reports))


def cmd_consistency(cfg: dict, args) -> Outcome:
    extras = {key: tuple(cfg[key]) for key in ("n_mem", "n_gate", "eps_mem", "eps_gate") if key in cfg}
    try:
        dev = certify.DeviceEstimates(tuple(cfg["r_mem"]), tuple(cfg["r_gate"]), **extras)
        report = certify.consistency_report(dev, cfg["kappa"], cfg["R"], cfg.get("eps", 0.0))
    except certify.BoundInapplicableError as exc:
        return Outcome(dump_json({"kind": "consistency", "inapplicable": str(exc)}), [{"kind": "consistency", "error": str(exc)}])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return Outcome(render_reports([report], args.format), _failed([report]))


def cmd_bound(cfg: dict, args) -> Outcome:
    consts = certify.BoundConstants(d=cfg.get("d", 2), cliff_size=cfg.get("cliff_size", 24))
    parts = [tuple(p) for p in cfg["parts"]]
    try:
        report = certify.performance_report(
            parts, consts, cfg.get("include_cliff_factor", True), cfg.get("observed")
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return Outcome(render_reports([report], args.format), _failed([report]))


SWEEP_COLUMNS = ("kind", "kappa", "r", "test_avg_fidelity", "consistency_bound")


def sweep_rows(kinds, kappas, r_grid, input_fidelity=None) -> list[tuple]:
    """Exact test fidelity and consistency bound for devices of equal fidelity ``r``.

    Memories and gates both get the named noise at fidelity ``r``. The bound
    is NaN where its angle condition fails.
    """
    makers = {"depolarizing": channels.depolarizing_from_fidelity, "dephasing": channels.dephasing_from_fidelity}
    input_noise = None if input_fidelity is None else channels.dephasing_from_fidelity(input_fidelity)
    extra = () if input_fidelity is None else (input_fidelity,)
    rows = []
    for kind in sorted(kinds):
        for kap in sorted(kappas):
            for r in sorted(r_grid):
                noise = makers[kind](r)
                rounds = [protocol.RoundNoise(memory=noise, gate_noise=noise)] * kap
                fid = protocol.exact_depth_fidelity(rounds, kap, input_noise)
                dev = certify.DeviceEstimates((r,) * kap, (r,) * kap)
                try:
                    bound = certify.consistency_threshold(dev, kap, 0.0, extra)
                except certify.BoundInapplicableError:
                    bound = math.nan
                rows.append((kind, kap, r, fid, bound))
    return rows


def sweep_csv(rows: list[tuple]) -> str:
    lines = [",".join(SWEEP_COLUMNS)]
    lines += [",".join(fmt(x) for x in row) for row in rows]
    return "\n".join(lines) + "\n"


def cmd_sweep(cfg: dict, args) -> Outcome:
    rows = sweep_rows(
        cfg.get("kinds", ["depolarizing", "dephasing"]),
        cfg.get("kappas", [1, 2]),
        cfg["r_grid"],
        cfg.get("input_fidelity"),
    )
    failures = [
        {"kind": k, "kappa": kap, "r": r, "test_avg_fidelity": f, "consistency_bound": b}
        for k, kap, r, f, b in rows
        if not math.isnan(b) and f < b
    ]
    if args.format == "json":
        return Outcome(dump_json([dict(zip(SWEEP_COLUMNS, row)) for row in rows]), failures)
    return Outcome(sweep_csv(rows), failures)


def cmd_soundness_sim(cfg: dict, args) -> Outcome:
    seed = resolve_seed(args.seed, cfg)
    strategies = cfg.get("strategies") or ([cfg["strategy"]] if "strategy" in cfg else [])
    if not strategies:
        raise ConfigError("give 'strategy' or 'strategies'")
    delta = cfg.get("delta", 0.01)
    test_cfg = protocol.TestConfig(k=cfg["k"], n=cfg["n"], seed=seed)
    reports = []
    for spec in strategies:
        try:
            strat = adversary.CheatStrategy.from_dict(spec)
            strat.validate_for(test_cfg.k)
        except (ValueError, KeyError) as exc:
            raise ConfigError(f"strategy {spec}: {exc}") from None
        res = adversary.soundness_experiment(test_cfg, strat, delta, jobs=args.jobs)
        reports.append(
            certify.CertificationReport(
                kind="soundness",
                inputs={"k": test_cfg.k, "n": test_cfg.n, "seed": seed, "delta": delta, "strategy": spec},
                threshold=res.bound,
                observed=res.rate,
                verdict=not res.violated,
                confidence=1 - delta,
                details={"epsilon": res.epsilon, "m": strat.m, "violated": res.violated},
            )
        )
    return Outcome(render_reports(reports, args.format), _failed(reports))


def cmd_verify_designs(cfg: dict, args) -> Outcome:
    group = designs.enumerate_cliffords()
    probe = channels.channel_from_literal(cfg.get("probe", {"kind": "dephasing", "q": 0.3}))
    result = {
        "state_2design": designs.verify_state_2design(),
        "unitary_2design": designs.verify_unitary_2design(group, probe),
        "cliff_size": len(group),
    }
    failures = [key for key in ("state_2design", "unitary_2design") if not result[key]]
    if result["cliff_size"] != designs.CLIFFORD_COUNT:
        failures.append("cliff_size")
    return Outcome(dump_json(result), failures)


QG_EXPECTED = {"exact": (6e-5, 1e-9), "bound": (0.7436, 5e-4), "gate_free": (0.0310, 5e-4)}


def cmd_qg_example(cfg: dict, args) -> Outcome:
    custom = bool(cfg)
    result = certify.qg_worked_example(
        cfg.get("memory_fidelity", certify.QG_MEMORY_FIDELITY), cfg.get("one_minus_R", certify.QG_INFIDELITY)
    )
    failures = []
    if not custom:
        for key, (target, tol) in QG_EXPECTED.items():
            if abs(result[key] - target) > tol:
                failures.append({"key": key, "value": result[key], "expected": target, "tol": tol})
    return Outcome(dump_json(result), failures)


COMMANDS = {
    "run-test": cmd_run_test,
    "certify": cmd_certify,
    "consistency": cmd_consistency,
    "bound": cmd_bound,
    "sweep": cmd_sweep,
    "soundness-sim": cmd_soundness_sim,
    "verify-designs": cmd_verify_designs,
    "qg-example": cmd_qg_example,
}
DEFAULT_FORMAT = {"sweep": "csv"}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pingpong", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", help="JSON config file")
    parser.add_argument("--out", help="output file (stdout if omitted)")
    parser.add_argument("--seed", type=int, help=f"seed override; falls back to the config, then ${SEED_ENV}")
    parser.add_argument("--format", choices=["csv", "json"])
    parser.add_argument("--jobs", type=int, default=1, help="worker threads; never changes the output")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    args.format = args.format or DEFAULT_FORMAT.get(args.command, "json")
    if args.jobs < 1:
        args.jobs = 1
    if args.seed is not None and not 0 <= args.seed <= protocol.MAX_SEED:
        print(json.dumps({"ok": False, "failures": ["--seed must be an unsigned 64-bit integer"]}), file=sys.stderr)
        return 2
    try:
        cfg = load_config(args.config, args.command)
        outcome = COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        print(json.dumps({"ok": False, "config_error": str(exc)}), file=sys.stderr)
        return 2

    if args.command == "run-test":
        transcript = outcome.side_files["transcript"]
        if args.out:
            out = Path(args.out)
            out.write_text(transcript, newline="\n")
            summary_path = out.with_name(out.name + (".summary.csv" if args.format == "csv" else ".summary.json"))
            summary_path.write_text(outcome.payload, newline="\n")
        else:
            sys.stdout.write(outcome.payload)
    elif args.out:
        Path(args.out).write_text(outcome.payload, newline="\n")
    else:
        sys.stdout.write(outcome.payload)

    if outcome.failures:
        print(json.dumps({"ok": False, "failures": outcome.failures}, default=str), file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
