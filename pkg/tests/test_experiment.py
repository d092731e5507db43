import csv

import numpy as np
import pytest

from conftest import hid, make_genome
from varsnn.errors import StatisticsError, TraceError
from varsnn.experiment import (
    MEM_COLUMNS,
    PLACEMENTS,
    aggregate_and_compare,
    count_stdp_events,
    load_final_samples,
    report_from_dir,
    run_experiment,
    run_repeat,
    sample_columns,
)
from varsnn.network import Network
from varsnn.synapses import Direction
from varsnn.world import TrialTrace, run_trial


def tiny(small_config, **kw):
    over = {"experiment.generations": 40, "experiment.sample_interval": 20, "experiment.repeats": 2}
    over.update({f"experiment.{k}": v for k, v in kw.items()})
    return small_config.with_overrides(over)


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_files_and_sample_counts(tmp_path, small_config):
    cfg = tiny(small_config)
    res = run_experiment(cfg, tmp_path)
    assert not res.errors and len(res.repeats) == 2
    for r in range(2):
        rows = read_csv(tmp_path / f"samples_MEM_{r}.csv")
        assert [int(x["generation"]) for x in rows] == [20, 40]
        assert (tmp_path / f"best_MEM_{r}.json").exists()
    assert len(list(tmp_path.glob("samples_*.csv"))) == 2
    assert len(list(tmp_path.glob("best_*.json"))) == 2


def test_reruns_are_byte_identical(tmp_path, small_config):
    cfg = tiny(small_config, repeats=1)
    run_experiment(cfg, tmp_path / "a")
    run_experiment(cfg, tmp_path / "b", parallel=3)
    for name in ("samples_MEM_0.csv", "best_MEM_0.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_schema_mem_vs_const(tmp_path, small_config):
    run_experiment(tiny(small_config, repeats=1, generations=20), tmp_path)
    run_experiment(tiny(small_config, repeats=1, generations=20, condition="CONST"), tmp_path)
    mem = read_csv(tmp_path / "samples_MEM_0.csv")[0]
    const = read_csv(tmp_path / "samples_CONST_0.csv")[0]
    assert set(MEM_COLUMNS) <= set(mem)
    assert not set(MEM_COLUMNS) & set(const)
    assert "stdp_positive" in mem and "stdp_positive" not in const


def test_rsm_has_s_n_histogram():
    cols = sample_columns("RSM")
    assert [c for c in cols if c.startswith("s_n_")] == ["s_n_2", "s_n_3", "s_n_4", "s_n_5", "s_n_6"]


def test_sampling_does_not_perturb_evolution(small_config):
    every = run_repeat(tiny(small_config, sample_interval=1, generations=30), 0)
    sparse = run_repeat(tiny(small_config, sample_interval=20, generations=30), 0)
    assert len(every.samples) == 30 and len(sparse.samples) == 2
    assert every.best.to_json() == sparse.best.to_json()
    assert every.samples[-1] == sparse.samples[-1]


def test_sample_invariants(small_config):
    res = run_repeat(tiny(small_config, sample_interval=1, generations=15, condition="MEM"), 0)
    for row in res.samples:
        assert 0 <= row["connectivity_pct"] <= 100
        places = sum(row[f"place_{w}"] for w in PLACEMENTS.values())
        assert places == row["enabled_connections"]
        assert row["hp_count"] + row["peo_count"] == row["enabled_connections"]
        assert all(row[k] >= 0 for k in row if isinstance(row[k], int))


def test_resume_matches_uninterrupted(tmp_path, small_config):
    full = run_repeat(tiny(small_config, generations=40), 0, tmp_path / "full")
    run_repeat(tiny(small_config, generations=20), 0, tmp_path / "cut")
    resumed = run_repeat(tiny(small_config, generations=40), 0, tmp_path / "cut", resume=True)
    assert full.best.to_json() == resumed.best.to_json()
    assert (tmp_path / "full" / "samples_MEM_0.csv").read_bytes() == \
        (tmp_path / "cut" / "samples_MEM_0.csv").read_bytes()


def test_io_failure_is_per_repeat(tmp_path, small_config):
    cfg = tiny(small_config, generations=20)
    # a directory where repeat 1's samples file should go makes only that repeat fail
    (tmp_path / "samples_MEM_1.csv").mkdir()
    res = run_experiment(cfg, tmp_path)
    assert [r.repeat for r in res.repeats] == [0] and list(res.errors) == [1]


def test_report_regeneration_is_idempotent(tmp_path, small_config):
    for cond in ("MEM", "CONST"):
        run_experiment(tiny(small_config, generations=20, condition=cond), tmp_path)
    report_from_dir(tmp_path)
    first = {p.name: p.read_bytes() for p in tmp_path.glob("*.csv")}
    report_from_dir(tmp_path)
    second = {p.name: p.read_bytes() for p in tmp_path.glob("*.csv")}
    assert first == second and "report.csv" in first and "boxplot_best_fitness.csv" in first
    loaded = load_final_samples(tmp_path)
    assert sorted(loaded) == ["CONST", "MEM"] and len(loaded["MEM"]) == 2


# -- aggregation --------------------------------------------------------------


def rows(values, metric="best_fitness"):
    return [{metric: v} for v in values]


def test_single_condition_has_no_tests():
    rep = aggregate_and_compare({"MEM": rows([1.0, 2.0, 3.0])}, ["best_fitness"])
    assert rep.tests == []
    (m, c, n, mean, lo, q1, med, q3, hi), = rep.summary
    assert (c, n, mean, lo, med, hi) == ("MEM", 3, 2.0, 1.0, 2.0, 3.0)


def test_identical_conditions_give_p_one():
    v = [5.0, 7.0, 9.0, 4.0]
    rep = aggregate_and_compare({"MEM": rows(v), "RSM": rows(v), "HP": rows(v)}, ["best_fitness"])
    assert len(rep.tests) == 3 and all(p == 1.0 for *_, p in rep.tests)


def test_separated_distributions_significant():
    a = np.random.default_rng(0).normal(0, 1, 30)
    rep = aggregate_and_compare({"A": rows(a), "B": rows(a + 10)}, ["best_fitness"])
    assert rep.tests[0][4] < 0.001


def test_mismatched_repeat_counts_rejected():
    with pytest.raises(StatisticsError):
        aggregate_and_compare({"A": rows([1.0, 2.0]), "B": rows([1.0, 2.0, 3.0])}, ["best_fitness"])


def test_degenerate_pair_reported_as_nan():
    rep = aggregate_and_compare({"A": rows([1.0, 1.0]), "B": rows([2.0, 2.0])}, ["best_fitness"])
    assert np.isnan(rep.tests[0][4])


# -- event tallies ------------------------------------------------------------


def trace_of(net, genome):
    ev = net.event_counts()
    return TrialTrace(net.genes, ev["positive"], ev["negative"], ev["switches"], genome.layer_of())


def test_const_genome_counts_zero():
    g = make_genome(2, [(0, hid(0)), (hid(0), hid(1)), (hid(1), 6)], condition="CONST")
    r = run_trial(g, seed=0, trace=True)
    ev = count_stdp_events(r.trace)
    assert (ev.positive, ev.negative, ev.switches) == (0, 0, 0)


def test_untraced_trial_rejected():
    r = run_trial(make_genome(1), seed=0)
    with pytest.raises(TraceError):
        count_stdp_events(r.trace)


def test_rsm_forced_events_switch_every_s_n():
    g = make_genome(2, [(hid(0), hid(1))], condition="RSM", s_n=4)
    net = Network(g)
    pre, post = net.uids.index(hid(0)), net.uids.index(hid(1))
    for _ in range(20):
        net.ls[pre], net.ls[post] = 2, 3
        net.apply_stdp()
    ev = count_stdp_events(trace_of(net, g))
    assert ev.switches == 5 and ev.positive == 20
    assert ev.switch_frequency_by_s_n == {4: 5.0}
    assert ev.by_group == {("RSM4", "hidden_hidden"): (20, 0, 5)}


def test_memristor_counts_conserve_detected_events():
    g = make_genome(3, [(0, hid(0)), (hid(0), hid(1)), (hid(1), hid(2)), (hid(2), 7)], condition="MEM")
    net = Network(g)
    rng = np.random.default_rng(4)
    detected = 0
    for _ in range(500):
        net.ls[:] = rng.integers(0, 4, net.n_neurons)
        detected += sum(1 for _, d in net.detect_stdp() if d != Direction.NONE)
        net.apply_stdp()
    ev = count_stdp_events(trace_of(net, g))
    assert ev.positive + ev.negative == detected > 0


def test_traced_trial_tallies_consistent():
    from conftest import some_genome

    r = run_trial(some_genome("RSM", 3), seed=1, trace=True)
    ev = count_stdp_events(r.trace)
    assert sum(v[2] for v in ev.by_group.values()) == ev.switches
    assert sum(v[0] + v[1] for v in ev.by_group.values()) == ev.positive + ev.negative
