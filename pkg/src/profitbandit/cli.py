"""Command-line front end.

Exit codes: 0 success, 1 runtime failure (including failed property
checks), 2 validation failure.  Failures print a JSON object
``{"error": {...}}`` on stderr.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import warnings
from dataclasses import asdict

from . import __version__, harness
from .core import ParameterError, ProfitBanditError
from .environments import LowerBoundEnvironment, verify_lowerbound

EXIT_OK, EXIT_RUNTIME, EXIT_VALIDATION = 0, 1, 2


class ValidationFailure(Exception):
    def __init__(self, message, field=None, **context):
        super().__init__(message)
        self.field = field
        self.context = context


# --- argument helpers ------------------------------------------------------

def parse_seeds(text):
    """``"0-9"``, ``"0,3,7"`` or a mix such as ``"0-4,10"``."""
    seeds = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part[1:]:
            lo, hi = part.split("-", 1) if not part.startswith("-") else (part, part)
            lo, hi = int(lo), int(hi)
            if hi < lo:
                raise argparse.ArgumentTypeError(f"empty seed range {part!r}")
            seeds.extend(range(lo, hi + 1))
        else:
            seeds.append(int(part))
    if not seeds:
        raise argparse.ArgumentTypeError("no seeds given")
    return tuple(seeds)


def parse_int_list(text):
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def load_config(path):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ValidationFailure(f"cannot read config: {exc}", "config") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationFailure(f"invalid JSON: {exc.msg}", "config", line=exc.lineno, column=exc.colno) from exc


def apply_sets(doc, assignments):
    """Apply ``key.sub=value`` overrides; values are parsed as JSON when possible."""
    for item in assignments or ():
        if "=" not in item:
            raise ValidationFailure(f"--set expects key=value, got {item!r}", "set")
        key, raw = item.split("=", 1)
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        target = doc
        parts = key.split(".")
        for part in parts[:-1]:
            target = target.setdefault(part, {})
            if not isinstance(target, dict):
                raise ValidationFailure(f"cannot set {key!r}: {part!r} is not an object", key)
        target[parts[-1]] = value
    return doc


def build_config(args, T_override=None):
    doc = load_config(args.config)
    if not isinstance(doc, dict):
        raise ValidationFailure("configuration must be a JSON object", "config")
    apply_sets(doc, args.set)
    if getattr(args, "seeds", None) is not None:
        doc["seeds"] = list(args.seeds)
    if getattr(args, "constant", None) is not None:
        doc["constant"] = args.constant
    if getattr(args, "variance_reduced", False):
        doc["variance_reduced"] = True
    if T_override is not None:
        doc["T"] = T_override
    return harness.config_from_dict(doc)


def output_dir(base, kind, payload):
    """Directory named by the content hash of the invocation; existing ones are reused, never rewritten."""
    digest = harness.content_hash({"command": kind, "payload": payload, "version": __version__})
    path = os.path.join(base, f"{kind}-{digest[:16]}")
    return path, os.path.isdir(path)


def _emit(doc):
    print(json.dumps(doc, indent=2, sort_keys=True))


# --- subcommands -----------------------------------------------------------

def cmd_run(args):
    config = build_config(args)
    path, exists = output_dir(args.out, "run", config.to_dict())
    result = harness.run(config, args.threads)
    summary = {
        "opt": result.opt, "regret": result.regret, "se": result.se,
        "mean_profit": float(result.profits.mean()), "rows": len(result.episodes), "output": path,
    }
    if not exists:
        os.makedirs(path)
        harness.write_csv(result.rows(), os.path.join(path, "results.csv"))
        harness.write_json({"config": config.to_dict(), "params": asdict(result.params),
                            "content_hash": harness.content_hash(config.to_dict()),
                            "summary": {k: v for k, v in summary.items() if k != "output"},
                            "version": __version__}, os.path.join(path, "run.json"))
    summary["reused_existing_output"] = exists
    _emit(summary)
    return EXIT_OK


def cmd_sweep(args):
    config = build_config(args)
    Ts = args.T or [config.T]
    if any(T < 1 for T in Ts):
        raise ValidationFailure("every horizon must be positive", "T")
    path, exists = output_dir(args.out, "sweep", {"config": config.to_dict(), "T": Ts})
    sweep = harness.sweep_T(config, Ts, threads=args.threads)
    summary = sweep.summary()
    if len(Ts) < 2:
        message = "only one horizon given: no slope fitted"
    elif sweep.fit.slope is None:
        message = f"too few usable points for a fit (excluded T: {sweep.fit.excluded})"
    else:
        ci = sweep.fit.ci()
        ci_text = "" if ci is None else f" (95% CI {ci[0]:.3f} to {ci[1]:.3f})"
        message = f"fitted log-log slope {sweep.fit.slope:.4f}{ci_text}"
    if not exists:
        os.makedirs(path)
        harness.write_csv(sweep.rows(), os.path.join(path, "results.csv"))
        for T, res in zip(Ts, sweep.results):
            harness.write_csv(res.rows(), os.path.join(path, f"T{T}.csv"))
        harness.write_json({"config": config.to_dict(), "T": Ts,
                            "content_hash": harness.content_hash({"config": config.to_dict(), "T": Ts}),
                            "fit": summary, "version": __version__}, os.path.join(path, "sweep.json"))
    print(message, file=sys.stderr)
    _emit({**summary, "message": message, "output": path, "reused_existing_output": exists})
    return EXIT_OK


def _bump_checked(K, bump):
    try:
        LowerBoundEnvironment(1, K, bump)
    except ProfitBanditError as exc:
        raise ValidationFailure(str(exc), "bump", S_bounds="2/5 <= c* <= 9/20, 3/5 <= p* <= 4/5") from exc
    return bump


def cmd_verify_env(args):
    if args.kind == "alternative" and args.bump is None and not args.all_s:
        raise ValidationFailure("alternative environment needs --bump C P or --all-s", "bump")
    if args.kind == "baseline" and (args.bump is not None or args.all_s):
        raise ValidationFailure("baseline environment takes no bump", "bump")
    if args.K < 1:
        raise ValidationFailure("K must be positive", "K")
    if args.kind == "baseline":
        bumps = [None]
    elif args.all_s:
        from .environments import LowerBoundGrids
        bumps = [tuple(b) for b in LowerBoundGrids(args.K).S_values()]
    else:
        bumps = [_bump_checked(args.K, tuple(args.bump))]
    reports = []
    for bump in bumps:
        rep = verify_lowerbound(K=args.K, bump=bump, probes=args.probes)
        reports.append({"bump": None if bump is None else [float(b) for b in bump], "checks": rep})
    ok = all(check["passed"] for rep in reports for check in rep["checks"].values())
    for rep in reports:
        for name, check in rep["checks"].items():
            label = "PASS" if check["passed"] else "FAIL"
            extra = ""
            if name == "item3_profit_at_optimum":
                extra = f" (profit {check['profit']:.6g} >= {check['threshold']:.6g})"
            print(f"{label} {name} bump={rep['bump']}{extra}", file=sys.stderr)
    _emit({"passed": ok, "K": args.K, "reports": reports})
    return EXIT_OK if ok else EXIT_RUNTIME


def cmd_oracle_opt(args):
    config = build_config(args)
    env = harness.build_environment(config.env, config.n, config.T)
    problem = harness.build_problem(config.variant, config.n, config.T)
    resolution = args.resolution or config.resolution
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        opt = harness.estimate_opt(env, config.T, resolution, problem)
    doc = {"opt": opt.value, "price": opt.price, "choices": list(opt.choices),
           "T": config.T, "resolution": resolution,
           "warnings": [str(w.message) for w in caught]}
    if args.K:
        doc["grid_gaps"] = {}
        for K in args.K:
            gap = harness.discretization_gap(env, config.T, K, resolution, problem)
            doc["grid_gaps"][str(K)] = {"gap": gap, "bound": 2 * config.n * config.T / K,
                                        "within_bound": gap <= 2 * config.n * config.T / K}
    _emit(doc)
    return EXIT_OK


def cmd_checkpoint(args):
    if args.action == "save":
        if args.config is None:
            raise ValidationFailure("checkpoint save needs --config", "config")
        config = build_config(args)
        episode = harness.Episode(config, args.seed)
        episode.run(until=args.rounds)
    else:
        if args.input is None:
            raise ValidationFailure(f"checkpoint {args.action} needs --input", "input")
        try:
            with open(args.input) as fh:
                doc = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ValidationFailure(f"cannot read checkpoint: {exc}", "input") from exc
        episode = harness.Episode.from_dict(doc)
        if args.action == "resume":
            episode.run(until=args.rounds)
    state = episode.to_dict()
    if args.file and args.action != "inspect":
        if os.path.exists(args.file):
            raise ValidationFailure(f"refusing to overwrite existing file {args.file}", "file")
        harness.write_json(state, args.file)
    _emit({"seed": episode.seed, "next_round": episode.t, "T": episode.config.T,
           "finished": episode.t > episode.config.T, "profit": episode.profit,
           "policy_kind": state["policy"]["kind"], "written": args.file if args.action != "inspect" else None})
    return EXIT_OK


# --- parser ------------------------------------------------------------------

def _add_config_flags(p, seeds=True):
    p.add_argument("--config", required=True, help="run configuration (JSON)")
    p.add_argument("--set", action="append", metavar="KEY=VALUE",
                   help="override a config field, dotted keys reach nested objects (repeatable)")
    if seeds:
        p.add_argument("--seeds", type=parse_seeds, help="seed list, e.g. 0-9 or 0,4,7")


def _add_run_flags(p):
    p.add_argument("--out", default="results", help="parent directory of the content-hashed output directory")
    p.add_argument("--threads", type=int, default=1,
                   help=f"worker threads over seeds (the {harness.THREADS_ENV} environment variable overrides this)")
    p.add_argument("--constant", type=float, help="multiplier applied to the default K and eta")
    p.add_argument("--variance-reduced", action="store_true",
                   help="average oracle expected profits along the trajectory instead of realized profits")


def build_parser():
    parser = argparse.ArgumentParser(prog="profitbandit", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one configuration over its seeds")
    _add_config_flags(p)
    _add_run_flags(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="run a horizon sweep and fit the log-log regret slope")
    _add_config_flags(p)
    _add_run_flags(p)
    p.add_argument("--T", type=parse_int_list, help="comma-separated horizons, e.g. 1024,2048,4096")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("verify-env", help="check the lower-bound environment properties")
    p.add_argument("--kind", choices=("baseline", "alternative"), required=True)
    p.add_argument("--K", type=int, default=20, help="grid parameter (epsilon = 1/K)")
    p.add_argument("--bump", type=float, nargs=2, metavar=("C", "P"), help="alternative optimum (c*, p*)")
    p.add_argument("--all-s", action="store_true", help="check every alternative in S")
    p.add_argument("--probes", type=int, default=201, help="probe points per axis")
    p.set_defaults(func=cmd_verify_env)

    p = sub.add_parser("oracle-opt", help="compute the hindsight optimum of a configuration")
    _add_config_flags(p, seeds=False)
    p.add_argument("--resolution", type=int, help="grid points per axis (default from config)")
    p.add_argument("--K", type=parse_int_list, help="also report the gap to the {0,1/K,...,1} grid optimum")
    p.set_defaults(func=cmd_oracle_opt)

    p = sub.add_parser("checkpoint", help="save, resume or inspect an episode checkpoint")
    p.add_argument("action", choices=("save", "resume", "inspect"))
    p.add_argument("--config", help="run configuration for 'save'")
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config field for 'save'")
    p.add_argument("--seed", type=int, default=0, help="seed for 'save'")
    p.add_argument("--rounds", type=int, help="stop after this round (default: run to T)")
    p.add_argument("--input", help="checkpoint to resume or inspect")
    p.add_argument("--file", help="where to write the resulting checkpoint (never overwritten)")
    p.set_defaults(func=cmd_checkpoint)
    return parser


def _error(kind, message, code, **extra):
    print(json.dumps({"error": {"type": kind, "message": message, "exit_code": code, **extra}}), file=sys.stderr)
    return code


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0) and EXIT_VALIDATION
    try:
        return args.func(args)
    except ValidationFailure as exc:
        return _error("validation", str(exc), EXIT_VALIDATION, field=exc.field, **exc.context)
    except harness.ConfigError as exc:
        return _error("validation", str(exc), EXIT_VALIDATION, field=exc.field)
    except ParameterError as exc:
        return _error("validation", str(exc), EXIT_VALIDATION)
    except (ProfitBanditError, ValueError, KeyError) as exc:
        return _error(type(exc).__name__, str(exc), EXIT_RUNTIME)
    except Exception as exc:  # noqa: BLE001
        return _error(type(exc).__name__, str(exc), EXIT_RUNTIME)


if __name__ == "__main__":
    sys.exit(main())
