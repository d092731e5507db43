"""Experiment orchestration, population statistics and cross-condition reports.

Output files (all in one directory):

``samples_<condition>_<repeat>.csv``
    one row per sampling point; header documented by :func:`sample_columns`.
``best_<condition>_<repeat>.json``
    best genome of the final population, with its trial seed and the
    resolved parameter block, so ``replay`` reproduces its fitness.
``checkpoint_<condition>_<repeat>.json``
    population plus samples so far; ``resume=True`` continues from it.
``report.csv`` and ``boxplot_<metric>.csv``
    written by :func:`write_report`.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import os
import re
from collections import Counter, defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path
from typing import Optional

from .config import Config
from .errors import StatisticsError, TraceError
from .evolution import Population, TrialEvaluator, combined_beta, evolve_generation, init_population
from .genome import Genome, Layer
from .stats import five_number, welch_t_test
from .synapses import DeviceType, SynapseKind

log = logging.getLogger(__name__)

BASE_COLUMNS = [
    "generation", "best_fitness", "mean_fitness", "solved_count", "connected_hidden", "hidden_neurons",
    "connectivity_pct", "mu", "psi", "omega", "tau", "iota",
    "enabled_connections", "place_input_hidden", "place_hidden_hidden", "place_hidden_output",
]
PLASTIC_COLUMNS = ["stdp_positive", "stdp_negative", "switches"]
MEM_COLUMNS = ["hp_count", "peo_count", "mean_combined_beta",
               "hp_input_hidden", "hp_hidden_hidden", "hp_hidden_output",
               "peo_input_hidden", "peo_hidden_hidden", "peo_hidden_output"]
REPORT_METRICS = ["best_fitness", "mean_fitness", "connected_hidden", "connectivity_pct",
                  "mu", "psi", "omega", "tau", "iota"]
PLACEMENTS = {
    (Layer.INPUT, Layer.HIDDEN): "input_hidden",
    (Layer.HIDDEN, Layer.HIDDEN): "hidden_hidden",
    (Layer.HIDDEN, Layer.OUTPUT): "hidden_output",
}


def sample_columns(condition: str, config: Optional[Config] = None) -> list:
    cols = list(BASE_COLUMNS)
    if condition != "CONST":
        cols += PLASTIC_COLUMNS
    if condition == "MEM":
        cols += MEM_COLUMNS
    if condition == "RSM":
        lo, hi = (2, 6) if config is None else (config.synapse.s_n_min, config.synapse.s_n_max)
        cols += [f"s_n_{k}" for k in range(lo, hi + 1)]
    return cols


# ---------------------------------------------------------------------------
# per-genome and per-population measurements


def connected_hidden(genome: Genome) -> int:
    """Hidden neurons with at least one enabled incident connection."""
    touched = set()
    for c in genome.enabled_connections():
        touched.update((c.pre, c.post))
    return sum(1 for n in genome.hidden() if n.uid in touched)


def connectivity_pct(genome: Genome) -> float:
    slots = genome.n_feasible()
    return 100.0 * len(genome.enabled_connections()) / slots if slots else 0.0


def sample_population(pop: Population, config: Config) -> dict:
    gs = pop.genomes
    n = len(gs)
    row = {
        "generation": pop.generation,
        "best_fitness": min(g.fitness for g in gs),
        "mean_fitness": sum(g.fitness for g in gs) / n,
        "solved_count": sum(1 for g in gs if g.solved),
        "connected_hidden": sum(connected_hidden(g) for g in gs) / n,
        "hidden_neurons": sum(len(g.hidden()) for g in gs) / n,
        "connectivity_pct": sum(connectivity_pct(g) for g in gs) / n,
    }
    for name in ("mu", "psi", "omega", "tau", "iota"):
        row[name] = sum(getattr(g.params, name) for g in gs) / n
    place = Counter()
    by_type = Counter()
    betas = []
    s_n = Counter()
    for g in gs:
        layer_of = g.layer_of()
        for c in g.enabled_connections():
            where = PLACEMENTS[(layer_of[c.pre], layer_of[c.post])]
            place[where] += 1
            if c.kind == SynapseKind.VMEM:
                t = "hp" if c.device_type == DeviceType.HP else "peo"
                by_type[t] += 1
                by_type[f"{t}_{where}"] += 1
                betas.append(combined_beta(c.beta, c.device_type, config))
            elif c.kind == SynapseKind.RSM:
                s_n[c.s_n] += 1
    row["enabled_connections"] = sum(place.values())
    for where in PLACEMENTS.values():
        row[f"place_{where}"] = place[where]
    if pop.condition != "CONST":
        for k in PLASTIC_COLUMNS:
            row[k] = sum(g.trial_stats.get(k, 0) for g in gs) / n
    if pop.condition == "MEM":
        for t in ("hp", "peo"):
            row[f"{t}_count"] = by_type[t]
            for where in PLACEMENTS.values():
                row[f"{t}_{where}"] = by_type[f"{t}_{where}"]
        row["mean_combined_beta"] = sum(betas) / len(betas) if betas else float("nan")
    if pop.condition == "RSM":
        for k in range(config.synapse.s_n_min, config.synapse.s_n_max + 1):
            row[f"s_n_{k}"] = s_n[k]
    return row


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return str(v)


def samples_csv(rows, columns) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r[c]) for c in columns])
    return buf.getvalue()


def _write_atomic(path: Path, text: str):
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


# ---------------------------------------------------------------------------
# runs


@dataclass
class RepeatResult:
    condition: str
    repeat: int
    samples: list
    best: Genome
    trials: int = 0


@dataclass
class ExperimentResult:
    condition: str
    repeats: list = field(default_factory=list)
    errors: dict = field(default_factory=dict)


def run_repeat(config: Config, repeat: int, out_dir=None, parallel: int = 1, resume: bool = False,
               on_generation=None) -> RepeatResult:
    """One evolutionary run; writes its files if ``out_dir`` is given."""
    x = config.experiment
    cond = x.condition
    cols = sample_columns(cond, config)
    out = Path(out_dir) if out_dir is not None else None
    ckpt = out / f"checkpoint_{cond}_{repeat}.json" if out else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
    with TrialEvaluator(config, parallel) as ev:
        samples = []
        if resume and ckpt is not None and ckpt.exists():
            doc = json.loads(ckpt.read_text())
            pop = Population.from_dict(doc["population"])
            samples = doc["samples"]
            log.info("resuming %s repeat %d at generation %d", cond, repeat, pop.generation)
        else:
            pop = init_population(config, ev, repeat=repeat)
        while pop.generation < x.generations:
            evolve_generation(pop, ev, config)
            if on_generation is not None:
                on_generation(pop)
            if pop.generation % x.sample_interval == 0 or pop.generation == x.generations:
                samples.append(sample_population(pop, config))
                if out is not None:
                    _write_atomic(out / f"samples_{cond}_{repeat}.csv", samples_csv(samples, cols))
                    ckpt_doc = {"population": pop.to_dict(), "samples": samples}
                    _write_atomic(ckpt, json.dumps(ckpt_doc, sort_keys=True) + "\n")
        best = pop.best()
        if out is not None:
            _write_atomic(out / f"samples_{cond}_{repeat}.csv", samples_csv(samples, cols))
            # parallelism never changes results, so it is left out of the stored parameters
            params = config.with_overrides({"experiment.parallel": 1}).to_dict()
            _write_atomic(out / f"best_{cond}_{repeat}.json", best.to_json(params))
        return RepeatResult(cond, repeat, samples, best, ev.trials)


def run_experiment(config: Config, out_dir=None, parallel: Optional[int] = None, resume: bool = False,
                   on_generation=None) -> ExperimentResult:
    """All repeats of one condition.

    Repeats run concurrently when ``parallel`` allows it, otherwise the
    trials of a repeat are spread over the workers.  An I/O failure in one
    repeat is logged and recorded in ``errors`` without stopping the others.
    """
    x = config.experiment
    parallel = x.parallel if parallel is None else max(int(parallel), 1)
    if out_dir is not None:
        Path(out_dir).mkdir(parents=True, exist_ok=True)
    outer = min(parallel, x.repeats)
    inner = max(parallel // outer, 1)
    result = ExperimentResult(x.condition)

    def one(r):
        try:
            return r, run_repeat(config, r, out_dir, inner, resume, on_generation)
        except OSError as exc:
            log.error("repeat %d failed: %s", r, exc)
            return r, exc

    if outer > 1:
        with ThreadPoolExecutor(outer) as pool:
            done = list(pool.map(one, range(x.repeats)))
    else:
        done = [one(r) for r in range(x.repeats)]
    for r, res in done:
        if isinstance(res, Exception):
            result.errors[r] = res
        else:
            result.repeats.append(res)
    return result


# ---------------------------------------------------------------------------
# reports

_SAMPLES_RE = re.compile(r"samples_([A-Z]+)_(\d+)\.csv$")


def load_final_samples(out_dir) -> dict:
    """``{condition: [final sample row per repeat]}`` from persisted CSVs."""
    found = defaultdict(list)
    for p in sorted(Path(out_dir).glob("samples_*_*.csv")):
        m = _SAMPLES_RE.search(p.name)
        if not m:
            continue
        with open(p, newline="") as fh:
            rows = list(csv.DictReader(fh))
        if rows:
            found[m.group(1)].append((int(m.group(2)), {k: float(v) for k, v in rows[-1].items()}))
    return {c: [row for _, row in sorted(v, key=lambda t: t[0])] for c, v in sorted(found.items())}


@dataclass
class Report:
    summary: list   # (metric, condition, n, mean, min, q1, median, q3, max)
    tests: list     # (metric, condition_a, condition_b, t, p)


def aggregate_and_compare(results: dict, metrics=REPORT_METRICS) -> Report:
    """Cross-condition means, five-number summaries and pairwise Welch tests.

    ``results`` maps condition to a list of per-repeat final sample rows.
    """
    conds = sorted(results)
    if not conds:
        raise StatisticsError("no results to aggregate")
    counts = {len(results[c]) for c in conds}
    if len(counts) > 1:
        raise StatisticsError(f"conditions have different repeat counts: "
                              f"{ {c: len(results[c]) for c in conds} }")
    summary, tests = [], []
    for m in metrics:
        values = {c: [float(r[m]) for r in results[c]] for c in conds}
        for c in conds:
            v = values[c]
            summary.append((m, c, len(v), sum(v) / len(v), *five_number(v)))
        for a, b in combinations(conds, 2):
            try:
                t, p = welch_t_test(values[a], values[b])
            except StatisticsError:
                t, p = float("nan"), float("nan")
            tests.append((m, a, b, t, p))
    return Report(summary, tests)


def write_report(report: Report, out_dir):
    out = Path(out_dir)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["kind", "metric", "condition", "other", "n", "mean", "min", "q1", "median", "q3", "max", "t", "p"])
    for m, c, n, mean, *five in report.summary:
        w.writerow(["summary", m, c, "", n, _fmt(mean), *map(_fmt, five), "", ""])
    for m, a, b, t, p in report.tests:
        w.writerow(["welch", m, a, b, "", "", "", "", "", "", "", _fmt(t), _fmt(p)])
    _write_atomic(out / "report.csv", buf.getvalue())
    by_metric = defaultdict(list)
    for m, c, n, mean, *five in report.summary:
        by_metric[m].append((c, *five))
    for m, rows in by_metric.items():
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["condition", "min", "q1", "median", "q3", "max"])
        for c, *five in rows:
            w.writerow([c, *map(_fmt, five)])
        _write_atomic(out / f"boxplot_{m}.csv", buf.getvalue())


def report_from_dir(out_dir) -> Report:
    rep = aggregate_and_compare(load_final_samples(out_dir))
    write_report(rep, out_dir)
    return rep


# ---------------------------------------------------------------------------
# plasticity tallies


@dataclass
class EventCounts:
    positive: int
    negative: int
    switches: int
    switch_frequency_by_s_n: dict     # s_n -> mean switches per synapse
    by_group: dict                    # (kind/type, placement) -> (pos, neg, switches)


def count_stdp_events(trace) -> EventCounts:
    """Aggregate the per-synapse tallies of a traced trial."""
    if trace is None:
        raise TraceError("trial was run without event tracing")
    per_sn = defaultdict(list)
    groups = defaultdict(lambda: [0, 0, 0])
    layer_of = getattr(trace, "layer_of", None)
    for k, c in enumerate(trace.genes):
        pos, neg, sw = int(trace.positive[k]), int(trace.negative[k]), int(trace.switches[k])
        if c.kind == SynapseKind.RSM:
            per_sn[c.s_n].append(sw)
            label = f"RSM{c.s_n}"
        elif c.kind.is_memristor:
            label = "HP" if c.device_type == DeviceType.HP else "PEO_PANI"
        else:
            label = "CONST"
        where = PLACEMENTS.get((layer_of[c.pre], layer_of[c.post])) if layer_of else "all"
        g = groups[(label, where)]
        g[0] += pos
        g[1] += neg
        g[2] += sw
    return EventCounts(
        positive=int(sum(trace.positive)),
        negative=int(sum(trace.negative)),
        switches=int(sum(trace.switches)),
        switch_frequency_by_s_n={k: sum(v) / len(v) for k, v in sorted(per_sn.items())},
        by_group={k: tuple(v) for k, v in sorted(groups.items())},
    )

