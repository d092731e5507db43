"""Leaky integrate-and-fire network built from a genome.

The network owns flat state arrays that the compiled kernels update in
place.  Processing inside one timestep runs, for each of the 21 steps:

1. integrate ``y <- y + (I + a - b*y)`` (floored at 0) and fire if ``y > theta_y``;
2. push ``+-w`` onto each postsynaptic delay line (hidden-to-hidden
   connections arrive one extra step late per hidden neuron in between);
3. plasticity from the summed last-spike values of each plastic synapse;
4. decrement every last-spike value towards 0.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import IntEnum

import numpy as np

from . import kernels as K
from .config import DEFAULT_CONFIG, Config
from .errors import ConfigError
from .genome import N_INPUTS, Genome, Layer, Polarity
from .synapses import DeviceType, Direction, SynapseKind, memristor_charge_from_weight, MemristorParams


class Action(IntEnum):
    FORWARD = K.FORWARD
    TURN_LEFT = K.TURN_LEFT
    TURN_RIGHT = K.TURN_RIGHT


@dataclass(frozen=True)
class NeuronState:
    y: float = 0.0
    ls: int = 0
    polarity: Polarity = Polarity.EXCITATORY
    layer: Layer = Layer.HIDDEN


def neuron_step(neuron: NeuronState, current: float, params=None) -> tuple[NeuronState, bool]:
    p = (params or DEFAULT_CONFIG.network)
    _, y, spiked = K.neuron_update(neuron.y, current, p.a, p.b, p.c, p.theta_y)
    ls = p.ls_on_spike if spiked else neuron.ls
    return replace(neuron, y=y, ls=ls), bool(spiked)


def membrane_trace(n_steps: int, current: float = 0.0, y0: float = 0.0, params=None):
    """Potentials before reset and spike flags of an isolated neuron."""
    p = (params or DEFAULT_CONFIG.network)
    y, vs, spikes = y0, [], []
    for _ in range(n_steps):
        v, y, s = K.neuron_update(y, current, p.a, p.b, p.c, p.theta_y)
        vs.append(v)
        spikes.append(bool(s))
    return vs, spikes


def decode_outputs(left_count: int, right_count: int, steps: int = 21) -> Action:
    high = steps // 2 + 1
    return Action(K.decode_action(left_count >= high, right_count >= high))


def network_params(config: Config) -> np.ndarray:
    n = config.network
    out = np.zeros(K.NP)
    out[K.P_A] = n.a
    out[K.P_B] = n.b
    out[K.P_C] = n.c
    out[K.P_THETA] = n.theta_y
    out[K.P_LS_ON] = n.ls_on_spike
    out[K.P_THETA_LS] = n.theta_ls
    out[K.P_STEPS] = n.steps_per_timestep
    out[K.P_HIGH] = n.high_spike_count
    return out


def device_params(config: Config) -> np.ndarray:
    s = config.synapse
    out = np.zeros(K.ND)
    out[K.D_RON] = s.r_on
    out[K.D_ROFF] = s.r_off
    out[K.D_QMIN] = s.q_min
    out[K.D_LRS] = s.lrs_weight
    out[K.D_HRS] = s.hrs_weight
    return out


class Network:
    """Runtime network compiled from the enabled genes of a genome."""

    def __init__(self, genome: Genome, config: Config = DEFAULT_CONFIG):
        self.config = config
        self.condition = genome.condition
        neurons = genome.neurons
        self.uids = [n.uid for n in neurons]
        index = {uid: i for i, uid in enumerate(self.uids)}
        n = len(neurons)
        hidden_pos = {}
        for i, nrn in enumerate(neurons):
            if nrn.layer == Layer.HIDDEN:
                hidden_pos[i] = len(hidden_pos)
        self.n_hidden = len(hidden_pos)
        self.layer = np.array([int(x.layer) for x in neurons], dtype=np.int64)
        self.sign = np.array([float(x.polarity) for x in neurons])
        self.depth = max(self.n_hidden, 1) + 2

        genes = sorted(genome.enabled_connections(), key=lambda c: (index[c.pre], index[c.post]))
        self.genes = genes
        m = len(genes)
        self.syn_f = np.zeros((m, K.NF))
        self.syn_i = np.zeros((m, K.NI), dtype=np.int64)
        s = config.synapse
        base = MemristorParams(r_on=s.r_on, r_off=s.r_off, q_min=s.q_min, big_l=s.big_l)
        for k, c in enumerate(genes):
            pre, post = index[c.pre], index[c.post]
            self.syn_i[k, K.I_PRE] = pre
            self.syn_i[k, K.I_POST] = post
            if pre in hidden_pos and post in hidden_pos:
                self.syn_i[k, K.I_DELAY] = abs(hidden_pos[pre] - hidden_pos[post]) - 1
            if c.kind.is_memristor:
                dtype, beta = _device_of(c)
                p = base.with_beta(beta)
                sf1, sf2 = p.scale_factors(dtype)
                self.syn_i[k, K.I_KIND] = K.K_MEM
                self.syn_i[k, K.I_DTYPE] = int(dtype)
                self.syn_f[k, K.F_BETA] = beta
                self.syn_f[k, K.F_QMAX] = p.q_max
                self.syn_f[k, K.F_DQ] = p.delta_q
                self.syn_f[k, K.F_SF1] = sf1
                self.syn_f[k, K.F_SF2] = sf2
                self.syn_f[k, K.F_W0] = s.memristor_init_weight
                self.syn_f[k, K.F_Q] = memristor_charge_from_weight(s.memristor_init_weight, params=p,
                                                                    device_type=dtype)
            elif c.kind == SynapseKind.RSM:
                self.syn_i[k, K.I_KIND] = K.K_RSM
                self.syn_i[k, K.I_SN] = c.s_n
                self.syn_f[k, K.F_W0] = s.lrs_weight
            else:
                self.syn_i[k, K.I_KIND] = K.K_CONST
                self.syn_f[k, K.F_W0] = c.weight
        self._q0 = self.syn_f[:, K.F_Q].copy()
        pres = self.syn_i[:, K.I_PRE]
        self.out_start = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(pres, minlength=n), out=self.out_start[1:])
        self.nparams = network_params(config)
        self.dev = device_params(config)
        self.y = np.zeros(n)
        self.ls = np.zeros(n, dtype=np.int64)
        self.buf = np.zeros((n, self.depth))
        self.clock = np.zeros(1, dtype=np.int64)
        self.out_counts = np.zeros(2, dtype=np.int64)
        self._spiked = np.zeros(n, dtype=np.bool_)
        self.reset()

    # -- state --------------------------------------------------------------

    def reset(self):
        """Restore initial synapse weights and clear all neural state."""
        self.syn_f[:, K.F_W] = self.syn_f[:, K.F_W0]
        self.syn_f[:, K.F_Q] = self._q0
        self.syn_i[:, K.I_SC] = 0
        self.syn_i[:, K.I_NPOS:K.I_NSW + 1] = 0
        self.y[:] = self.config.network.c
        self.ls[:] = 0
        self.buf[:] = 0.0
        self.clock[0] = 0
        self.out_counts[:] = 0

    @property
    def n_neurons(self) -> int:
        return self.y.shape[0]

    @property
    def weights(self) -> np.ndarray:
        return self.syn_f[:, K.F_W].copy()

    def pending(self, neuron: int):
        """Queued (arrival_step, signed value) contributions for a neuron."""
        t = int(self.clock[0])
        out = []
        for dt in range(self.depth):
            v = self.buf[neuron, (t + dt) % self.depth]
            if v != 0.0:
                out.append((t + dt, float(v)))
        return out

    # -- processing ---------------------------------------------------------

    def _sensors(self, sensors):
        s = np.asarray(sensors, dtype=np.float64)
        if s.shape != (N_INPUTS,):
            raise ConfigError(f"sensor vector must have {N_INPUTS} components, got shape {s.shape}")
        full = np.zeros(self.n_neurons)
        full[:N_INPUTS] = s
        return full

    def run_timestep(self, sensors) -> Action:
        full = self._sensors(sensors)
        a = K.snn_timestep(full, self.layer, self.sign, self.y, self.ls, self.buf, self.clock, self.out_start,
                           self.syn_f, self.syn_i, self.nparams, self.dev, self.out_counts)
        return Action(a)

    def step(self, sensors) -> np.ndarray:
        """Single processing step; returns the spike flags."""
        full = self._sensors(sensors)
        K.snn_step(full, self.layer, self.sign, self.y, self.ls, self.buf, self.clock, self.out_start,
                   self.syn_f, self.syn_i, self.nparams, self.dev, self._spiked)
        return self._spiked.copy()

    def propagate_spike(self, neuron: int) -> int:
        """Enqueue a spike from ``neuron``; returns the number of contributions."""
        return int(K.propagate(neuron, self.sign, self.out_start, self.syn_f, self.syn_i, self.buf, self.clock))

    def detect_stdp(self):
        """``(connection index, Direction)`` for every plastic connection.

        RSM connections report POSITIVE for any event since their switching
        ignores polarity.
        """
        theta = self.config.network.theta_ls
        out = []
        for k in range(self.syn_i.shape[0]):
            kind = self.syn_i[k, K.I_KIND]
            if kind == K.K_CONST:
                continue
            d = K.stdp_direction(self.ls[self.syn_i[k, K.I_PRE]], self.ls[self.syn_i[k, K.I_POST]], theta)
            if kind == K.K_RSM and d != 0:
                d = 1
            out.append((k, Direction(d)))
        return out

    def apply_stdp(self):
        K.apply_plasticity(self.ls, self.syn_f, self.syn_i, self.config.network.theta_ls, self.dev)

    def decay_ls(self):
        K.decay_ls(self.ls)

    # -- tallies ------------------------------------------------------------

    def event_counts(self) -> dict:
        """Per-connection plasticity tallies accumulated since the last reset."""
        return {
            "positive": self.syn_i[:, K.I_NPOS].copy(),
            "negative": self.syn_i[:, K.I_NNEG].copy(),
            "switches": self.syn_i[:, K.I_NSW].copy(),
        }


def _device_of(c):
    if c.kind == SynapseKind.HP:
        return DeviceType.HP, 1.0
    if c.kind == SynapseKind.PEO:
        return DeviceType.PEO_PANI, 1.0
    return c.device_type, c.beta


def reset_network(network: Network) -> Network:
    network.reset()
    return network
