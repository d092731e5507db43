"""Steady-state genetic algorithm with self-adaptive mutation.

Each generation draws two parents by roulette on ``1/fitness``, mutates a
copy of each (no crossover), trials the two offspring and deletes the two
worst of the enlarged population.  All randomness comes from counter-based
streams keyed on ``(seed, repeat, generation, index, tag)``, so a run is
reproducible regardless of evaluation order, thread count or resumption
from a checkpoint.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .config import DEFAULT_CONFIG, Config
from .errors import ConfigError, StateError
from .genome import (
    CONDITION_KIND,
    N_INPUTS,
    N_OUTPUTS,
    ConnectionGene,
    Genome,
    Layer,
    NeuronGene,
    Polarity,
    SelfAdaptiveParams,
    feasible,
)
from .synapses import DeviceType, SynapseKind

TAG_TRIAL = 1
TAG_SELECT = 2
TAG_MUTATE = 3
TAG_INIT = 4

CHECKPOINT_FORMAT = "varsnn-population/1"


def stream(seed, repeat, generation, index, tag) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(repeat), int(generation), int(index), tag]))


def trial_seed(seed, repeat, generation, index):
    return (int(seed), int(repeat), int(generation), int(index), TAG_TRIAL)


# ---------------------------------------------------------------------------
# elementary operators


def self_adapt(value, rng=None, n=None, floor=1e-6):
    """``value * exp(N(0, 1))`` clamped to ``[floor, 1]``."""
    if n is None:
        n = rng.standard_normal()
    return min(max(value * math.exp(n), floor), 1.0)


def combined_beta(beta, device_type, config: Config = DEFAULT_CONFIG) -> float:
    """Position on the joint HP/PEO-PANI scale (PEO-PANI is offset by the HP maximum)."""
    if DeviceType(device_type) == DeviceType.HP:
        return float(beta)
    return config.synapse.beta_max_hp + float(beta)


def from_combined(value, config: Config = DEFAULT_CONFIG):
    """Inverse of :func:`combined_beta` after wrapping onto the joint scale.

    The scale is treated as circular: moving past the top of the PEO-PANI
    range re-enters HP at its bottom and vice versa.  Values in the gap
    between the HP maximum and the first PEO-PANI position snap to the
    nearer endpoint.
    """
    s = config.synapse
    lo = s.beta_min
    hp_hi = s.beta_max_hp
    peo_lo = hp_hi + s.beta_min
    top = hp_hi + s.beta_max_peo
    period = top - lo
    v = float(value)
    while v < lo:
        v += period
    while v > top:
        v -= period
    if v <= hp_hi:
        return max(v, lo), DeviceType.HP
    if v < peo_lo:
        if v - hp_hi <= peo_lo - v:
            return hp_hi, DeviceType.HP
        return s.beta_min, DeviceType.PEO_PANI
    return v - hp_hi, DeviceType.PEO_PANI


def mutate_beta(beta, device_type, rng=None, sign=None, config: Config = DEFAULT_CONFIG):
    """Shift beta by 10% of the total range (199) with a random sign."""
    s = config.synapse
    if sign is None:
        sign = 1 if rng.random() < 0.5 else -1
    delta = sign * s.beta_step_fraction * s.beta_total_range
    return from_combined(combined_beta(beta, device_type, config) + delta, config)


def mutate_s_n(s_n, rng=None, sign=None, config: Config = DEFAULT_CONFIG):
    if sign is None:
        sign = 1 if rng.random() < 0.5 else -1
    return int(min(max(s_n + sign, config.synapse.s_n_min), config.synapse.s_n_max))


def select_parents(genomes, rng):
    """Two independent roulette draws weighted by ``1 / fitness``."""
    inv = np.empty(len(genomes))
    for i, g in enumerate(genomes):
        if g.fitness is None:
            raise StateError("cannot select parents from an unevaluated population")
        if g.fitness <= 0:
            raise StateError(f"fitness must be positive for 1/f selection, got {g.fitness}")
        inv[i] = 1.0 / g.fitness
    cdf = np.cumsum(inv)
    u = rng.random(2) * cdf[-1]
    i, j = np.searchsorted(cdf, u, side="right")
    n = len(genomes) - 1
    return genomes[min(i, n)], genomes[min(j, n)]


# ---------------------------------------------------------------------------
# genome construction and mutation


def new_connection(pre, post, kind: SynapseKind, rng, config: Config = DEFAULT_CONFIG) -> ConnectionGene:
    s = config.synapse
    if kind == SynapseKind.CONST:
        return ConnectionGene(pre, post, kind, float(rng.random()))
    if kind == SynapseKind.RSM:
        return ConnectionGene(pre, post, kind, s.lrs_weight, s_n=int(rng.integers(s.s_n_min, s.s_n_max + 1)))
    if kind == SynapseKind.VMEM:
        if rng.random() < 0.5:
            dtype, hi = DeviceType.HP, s.beta_max_hp
        else:
            dtype, hi = DeviceType.PEO_PANI, s.beta_max_peo
        return ConnectionGene(pre, post, kind, s.memristor_init_weight, device_type=dtype,
                              beta=float(rng.uniform(s.beta_min, hi)))
    dtype = DeviceType.HP if kind == SynapseKind.HP else DeviceType.PEO_PANI
    return ConnectionGene(pre, post, kind, s.memristor_init_weight, device_type=dtype, beta=1.0)


def random_genome(condition, rng, config: Config = DEFAULT_CONFIG) -> Genome:
    if condition not in CONDITION_KIND:
        raise ConfigError(f"unknown condition {condition!r}")
    ev, n_hidden = config.evolution, config.network.initial_hidden
    kind = CONDITION_KIND[condition]
    inputs = [NeuronGene(i, Layer.INPUT) for i in range(N_INPUTS)]
    outputs = [NeuronGene(N_INPUTS + i, Layer.OUTPUT) for i in range(N_OUTPUTS)]
    first = N_INPUTS + N_OUTPUTS
    hidden = [NeuronGene(first + i, Layer.HIDDEN, _polarity(rng, ev.excitatory_probability))
              for i in range(n_hidden)]
    floor = ev.rate_floor
    params = SelfAdaptiveParams(*(max(float(rng.uniform(0.0, m)), floor) for m in (
        ev.mu_init_max, ev.psi_init_max, ev.omega_init_max, ev.tau_init_max, ev.iota_init_max)))
    g = Genome(inputs + hidden + outputs, [], params, condition, next_uid=first + n_hidden)
    for pre, post in g.feasible_slots():
        if rng.random() < ev.connection_probability:
            g.connections.append(new_connection(pre, post, kind, rng, config))
    return g


def _polarity(rng, p_exc):
    return Polarity.EXCITATORY if rng.random() < p_exc else Polarity.INHIBITORY


def _add_neuron(g: Genome, rng, config: Config):
    ev = config.evolution
    uid = g.next_uid
    g.next_uid += 1
    hidden_idx = [i for i, n in enumerate(g.neurons) if n.layer == Layer.HIDDEN]
    slot = int(rng.integers(0, len(hidden_idx) + 1))
    at = hidden_idx[slot] if slot < len(hidden_idx) else hidden_idx[-1] + 1
    g.neurons.insert(at, NeuronGene(uid, Layer.HIDDEN, _polarity(rng, ev.excitatory_probability)))
    layer_of = g.layer_of()
    for other in g.neurons:
        if other.uid == uid:
            continue
        for pre, post in ((other.uid, uid), (uid, other.uid)):
            if feasible(layer_of[pre], layer_of[post]) and rng.random() < ev.connection_probability:
                g.connections.append(new_connection(pre, post, g.kind, rng, config))


def _remove_neuron(g: Genome, rng):
    hidden = g.hidden()
    if len(hidden) <= 1:
        return
    victim = hidden[int(rng.integers(0, len(hidden)))].uid
    g.neurons = [n for n in g.neurons if n.uid != victim]
    g.connections = [c for c in g.connections if victim not in (c.pre, c.post)]


def mutate(parent: Genome, rng, config: Config = DEFAULT_CONFIG) -> Genome:
    """Self-adapt the rates, then mutate the offspring with the new rates."""
    ev = config.evolution
    g = parent.copy()
    g.fitness = None
    g.solved = False
    g.trial_stats = {}
    p = g.params
    for name in SelfAdaptiveParams.NAMES:
        setattr(p, name, self_adapt(getattr(p, name), rng, floor=ev.rate_floor))

    for n in g.neurons:
        if n.layer == Layer.HIDDEN and rng.random() < p.mu:
            n.polarity = Polarity(-n.polarity)

    kind = g.kind
    for c in g.connections:
        if kind == SynapseKind.CONST:
            if rng.random() < p.mu:
                c.weight = min(max(c.weight + rng.uniform(-ev.weight_perturb, ev.weight_perturb), 0.0), 1.0)
        elif kind == SynapseKind.VMEM:
            if rng.random() < p.iota:
                c.beta, c.device_type = mutate_beta(c.beta, c.device_type, rng, config=config)
        elif kind == SynapseKind.RSM:
            if rng.random() < p.iota:
                c.s_n = mutate_s_n(c.s_n, rng, config=config)

    if rng.random() < p.psi:
        if rng.random() < p.omega:
            _add_neuron(g, rng, config)
        else:
            _remove_neuron(g, rng)

    existing = {c.key: c for c in g.connections}
    for pre, post in g.feasible_slots():
        if rng.random() < p.tau:
            c = existing.get((pre, post))
            if c is None:
                g.connections.append(new_connection(pre, post, kind, rng, config))
            else:
                c.enabled = not c.enabled
    return g


# ---------------------------------------------------------------------------
# evaluation


class TrialEvaluator:
    """Trials genomes on the T-maze, optionally on several threads.

    The compiled trial releases the GIL, so threads give real parallelism
    while results stay independent of the worker count.
    """

    def __init__(self, config: Config = DEFAULT_CONFIG, parallel: int = 1):
        self.config = config
        self.parallel = max(int(parallel), 1)
        self.trials = 0
        self._pool = ThreadPoolExecutor(self.parallel) if self.parallel > 1 else None

    def _one(self, genome: Genome):
        from .world import run_trial

        return run_trial(genome, self.config, genome.trial_seed, trace=True)

    def __call__(self, genomes):
        genomes = list(genomes)
        if self._pool is None:
            results = [self._one(g) for g in genomes]
        else:
            results = list(self._pool.map(self._one, genomes))
        for g, r in zip(genomes, results):
            g.fitness = r.fitness
            g.solved = r.solved
            stats = r.stats()
            stats["stdp_positive"] = int(r.trace.positive.sum())
            stats["stdp_negative"] = int(r.trace.negative.sum())
            stats["switches"] = int(r.trace.switches.sum())
            g.trial_stats = stats
        self.trials += len(genomes)
        return genomes

    def close(self):
        if self._pool is not None:
            self._pool.shutdown()
            self._pool = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


@dataclass
class Population:
    genomes: list
    generation: int = 0
    seed: int = 0
    repeat: int = 0
    condition: str = "MEM"

    def __len__(self):
        return len(self.genomes)

    def best(self) -> Genome:
        return min(self.genomes, key=lambda g: (g.fitness, g.birth))

    @property
    def best_fitness(self) -> int:
        return self.best().fitness

    def to_dict(self) -> dict:
        return {
            "format": CHECKPOINT_FORMAT,
            "generation": self.generation,
            "seed": self.seed,
            "repeat": self.repeat,
            "condition": self.condition,
            "rng_streams": {"select": TAG_SELECT, "mutate": TAG_MUTATE, "trial": TAG_TRIAL, "init": TAG_INIT},
            "genomes": [g.to_dict() for g in self.genomes],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, doc) -> "Population":
        if doc.get("format") != CHECKPOINT_FORMAT:
            raise ConfigError("not a population checkpoint")
        return cls([Genome.from_dict(g) for g in doc["genomes"]], int(doc["generation"]), int(doc["seed"]),
                   int(doc["repeat"]), doc["condition"])

    @classmethod
    def from_json(cls, text) -> "Population":
        return cls.from_dict(json.loads(text))


def init_population(config: Config = DEFAULT_CONFIG, evaluator: Optional[Callable] = None, repeat: int = 0,
                    condition: Optional[str] = None) -> Population:
    x = config.experiment
    condition = condition or x.condition
    genomes = []
    for i in range(x.population_size):
        g = random_genome(condition, stream(x.seed, repeat, 0, i, TAG_INIT), config)
        g.birth = 0
        g.trial_seed = trial_seed(x.seed, repeat, 0, i)
        genomes.append(g)
    evaluator = evaluator or TrialEvaluator(config)
    evaluator(genomes)
    return Population(genomes, 0, x.seed, repeat, condition)


def evolve_generation(pop: Population, evaluator: Callable, config: Config = DEFAULT_CONFIG) -> Population:
    """Advance ``pop`` by one steady-state generation, in place."""
    gen = pop.generation + 1
    a, b = select_parents(pop.genomes, stream(pop.seed, pop.repeat, gen, 0, TAG_SELECT))
    kids = []
    for i, parent in enumerate((a, b)):
        child = mutate(parent, stream(pop.seed, pop.repeat, gen, i, TAG_MUTATE), config)
        child.birth = gen
        child.trial_seed = trial_seed(pop.seed, pop.repeat, gen, i)
        kids.append(child)
    evaluator(kids)
    pool = pop.genomes + kids
    # worst first: highest fitness, then oldest, then lowest index
    order = sorted(range(len(pool)), key=lambda k: (-pool[k].fitness, pool[k].birth, k))
    doomed = set(order[:len(kids)])
    pop.genomes = [g for k, g in enumerate(pool) if k not in doomed]
    pop.generation = gen
    return pop
