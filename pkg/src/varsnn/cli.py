"""Command-line entry point.

Exit codes: 0 success, 2 configuration error, 3 runtime error, 4 I/O error.
Diagnostics go to stderr; data goes to files or stdout.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import yaml

from .config import CONDITIONS, DEFAULT_CONFIG, Config, load_config
from .errors import ConfigError, VarsnnError

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME, EXIT_IO = 0, 2, 3, 4
RESOLVED_CONFIG = "config.resolved.json"

# experiment flags that map one-to-one onto config keys
EXPERIMENT_FLAGS = {
    "condition": "experiment.condition",
    "generations": "experiment.generations",
    "population_size": "experiment.population_size",
    "repeats": "experiment.repeats",
    "sample_interval": "experiment.sample_interval",
    "seed": "experiment.seed",
    "parallel": "experiment.parallel",
}


def _parse_set(items):
    out = {}
    for item in items or ():
        if "=" not in item:
            raise ConfigError(f"--set expects section.key=value, got {item!r}")
        key, raw = item.split("=", 1)
        try:
            out[key.strip()] = yaml.safe_load(raw)
        except yaml.YAMLError as exc:
            raise ConfigError(f"cannot parse value for {key}: {exc}") from None
    return out


def resolve_config(args) -> Config:
    base = load_config(args.config) if getattr(args, "config", None) else DEFAULT_CONFIG
    overrides = _parse_set(getattr(args, "set", None))
    for flag, key in EXPERIMENT_FLAGS.items():
        v = getattr(args, flag, None)
        if v is not None:
            overrides[key] = v
    return base.with_overrides(overrides) if overrides else base.validate()


def _add_config_args(p):
    p.add_argument("--config", help="complete YAML/JSON config file (default: built-in defaults)")
    p.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE", help="override one config key")


# ---------------------------------------------------------------------------
# subcommands


def cmd_run(args):
    from .experiment import run_experiment

    cfg = resolve_config(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / RESOLVED_CONFIG).write_text(cfg.to_json())
    res = run_experiment(cfg, out, resume=args.resume)
    for r in res.repeats:
        print(f"{r.condition} repeat {r.repeat}: best fitness {r.best.fitness} ({r.trials} trials)")
    if res.errors:
        for r, exc in sorted(res.errors.items()):
            print(f"repeat {r}: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


def cmd_characterize(args):
    from .synapses import profile_sweep

    kind = args.kind
    params = args.s_n if kind == "rsm" else args.beta
    label = "s_n" if kind == "rsm" else "beta"
    if not params:
        raise ConfigError(f"characterize --kind {kind} needs --{label.replace('_', '-')}")
    if len(params) > 1 and not args.out_dir:
        raise ConfigError("several sweep parameters need --out-dir")
    for value in params:
        curve = profile_sweep(kind, value, args.events)
        if args.out_dir:
            d = Path(args.out_dir)
            d.mkdir(parents=True, exist_ok=True)
            with open(d / f"sweep_{kind}_{label}{value:g}.csv", "w", newline="") as fh:
                _write_sweep(fh, kind, label, value, curve)
        else:
            _write_sweep(sys.stdout, kind, label, value, curve)
    return EXIT_OK


def _write_sweep(fh, kind, label, value, curve):
    fh.write(f"# kind={kind} {label}={value:g}\n")
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["event_index", "weight"])
    for i, wgt in curve:
        w.writerow([i, repr(float(wgt))])


def cmd_replay(args):
    from .experiment import count_stdp_events
    from .genome import Genome
    from .world import run_trial, write_trajectory

    doc = json.loads(Path(args.genome).read_text())
    genome = Genome.from_dict(doc)
    if args.config or args.set:
        cfg = resolve_config(args)
    elif "parameters" in doc:
        cfg = Config.from_dict(doc["parameters"])
    else:
        cfg = DEFAULT_CONFIG
    seed = tuple(args.seed) if args.seed else genome.trial_seed
    res = run_trial(genome, cfg, seed, record=bool(args.trajectory), trace=True)
    if args.trajectory:
        write_trajectory(args.trajectory, res.trajectory)
    ev = count_stdp_events(res.trace)
    summary = {
        "fitness": res.fitness,
        "recorded_fitness": genome.fitness,
        "reproduced": genome.fitness is None or genome.fitness == res.fitness,
        "solved": res.solved,
        "reached_r1": res.reached_r1,
        "c1": res.c1,
        "c2": res.c2,
        "bumps": res.bumps,
        "stdp_positive": ev.positive,
        "stdp_negative": ev.negative,
        "switches": ev.switches,
        "seed": list(seed),
    }
    print(json.dumps(summary, indent=1))
    return EXIT_OK if summary["reproduced"] or args.seed else EXIT_RUNTIME


def cmd_report(args):
    from .experiment import report_from_dir

    rep = report_from_dir(args.dir)
    print(f"report: {len(rep.summary)} summary rows, {len(rep.tests)} pairwise tests -> {args.dir}/report.csv")
    return EXIT_OK


def cmd_validate(args):
    cfg = resolve_config(args)
    sys.stdout.write(cfg.to_json())
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser():
    p = argparse.ArgumentParser(prog="varsnn", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="evolve populations and write samples, checkpoints and best genomes")
    _add_config_args(r)
    r.add_argument("--condition", choices=CONDITIONS)
    r.add_argument("--generations", type=int)
    r.add_argument("--population-size", type=int)
    r.add_argument("--repeats", type=int)
    r.add_argument("--sample-interval", type=int)
    r.add_argument("--seed", type=int)
    r.add_argument("--parallel", type=int)
    r.add_argument("--out", default="results", help="output directory")
    r.add_argument("--resume", action="store_true", help="continue from checkpoints in --out")
    r.set_defaults(func=cmd_run)

    c = sub.add_parser("characterize", help="weight trajectory of a device under repeated events")
    c.add_argument("--kind", choices=("hp", "peo", "rsm"), required=True)
    c.add_argument("--beta", type=float, nargs="+")
    c.add_argument("--s-n", type=int, nargs="+")
    c.add_argument("--events", type=int, default=1000)
    c.add_argument("--out-dir")
    c.set_defaults(func=cmd_characterize)

    rp = sub.add_parser("replay", help="re-run one traced trial of a stored genome")
    rp.add_argument("genome")
    _add_config_args(rp)
    rp.add_argument("--seed", type=int, nargs="+", help="trial seed (default: the stored one)")
    rp.add_argument("--trajectory", help="write the trajectory CSV here")
    rp.set_defaults(func=cmd_replay)

    rep = sub.add_parser("report", help="aggregate persisted samples into report.csv and box-plot files")
    rep.add_argument("dir")
    rep.set_defaults(func=cmd_report)

    v = sub.add_parser("validate-config", help="check a config and print it fully resolved")
    v.add_argument("config", nargs="?")
    v.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE")
    v.set_defaults(func=cmd_validate)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (VarsnnError, RuntimeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
