import pytest

from varsnn.config import DEFAULT_CONFIG
from varsnn.evolution import random_genome, stream
from varsnn.genome import (
    N_INPUTS,
    N_OUTPUTS,
    ConnectionGene,
    Genome,
    Layer,
    NeuronGene,
    Polarity,
    SelfAdaptiveParams,
)
from varsnn.synapses import DeviceType, SynapseKind

FIRST_HIDDEN = N_INPUTS + N_OUTPUTS
OUT_LEFT, OUT_RIGHT = N_INPUTS, N_INPUTS + 1

ACCEPTANCE_LINES = []


def hid(i):
    return FIRST_HIDDEN + i


def make_genome(n_hidden=2, conns=(), condition="CONST", polarities=None, weight=0.5, s_n=3,
                device_type=DeviceType.HP, beta=1.0):
    """Hand-built genome; ``conns`` holds (pre_uid, post_uid) pairs."""
    pol = polarities or [Polarity.EXCITATORY] * n_hidden
    neurons = [NeuronGene(i, Layer.INPUT) for i in range(N_INPUTS)]
    neurons += [NeuronGene(hid(i), Layer.HIDDEN, pol[i]) for i in range(n_hidden)]
    neurons += [NeuronGene(N_INPUTS + i, Layer.OUTPUT) for i in range(N_OUTPUTS)]
    kind = {"CONST": SynapseKind.CONST, "RSM": SynapseKind.RSM, "MEM": SynapseKind.VMEM,
            "HP": SynapseKind.HP, "PEO": SynapseKind.PEO}[condition]
    if kind == SynapseKind.RSM:
        weight = 0.9
    cs = [ConnectionGene(a, b, kind, weight, device_type=device_type, beta=beta, s_n=s_n) for a, b in conns]
    g = Genome(neurons, cs, SelfAdaptiveParams(0.1, 0.1, 0.5, 0.1, 0.1), condition,
               next_uid=FIRST_HIDDEN + n_hidden)
    g.check()
    return g


def some_genome(condition="MEM", index=0, seed=0, config=DEFAULT_CONFIG):
    return random_genome(condition, stream(seed, 0, 0, index, 99), config)


@pytest.fixture
def small_config():
    return DEFAULT_CONFIG.with_overrides({"trial.phase_budget": 300, "experiment.population_size": 6})


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
