"""Genome representation and its JSON document form.

A genome is two variable-length vectors (neurons, connections) plus five
self-adaptive rates.  Neurons are kept in network order: the six inputs,
the hidden layer in hidden-layer order, then the two outputs.  Connections
refer to neurons by a stable ``uid`` so hidden neurons can be inserted or
removed without renumbering.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Optional

from .errors import ConfigError
from .synapses import DeviceType, SynapseKind

N_INPUTS = 6
N_OUTPUTS = 2
FORMAT = "varsnn-genome/1"

# synapse kind used by each experimental condition
CONDITION_KIND = {
    "MEM": SynapseKind.VMEM,
    "RSM": SynapseKind.RSM,
    "HP": SynapseKind.HP,
    "PEO": SynapseKind.PEO,
    "CONST": SynapseKind.CONST,
}


class Layer(IntEnum):
    INPUT = 0
    HIDDEN = 1
    OUTPUT = 2


class Polarity(IntEnum):
    INHIBITORY = -1
    EXCITATORY = 1


@dataclass
class NeuronGene:
    uid: int
    layer: Layer
    polarity: Polarity = Polarity.EXCITATORY


@dataclass
class ConnectionGene:
    pre: int
    post: int
    kind: SynapseKind
    weight: float
    enabled: bool = True
    device_type: DeviceType = DeviceType.HP
    beta: float = 1.0
    s_n: int = 0

    @property
    def key(self):
        return self.pre, self.post


@dataclass
class SelfAdaptiveParams:
    mu: float
    psi: float
    omega: float
    tau: float
    iota: float

    NAMES = ("mu", "psi", "omega", "tau", "iota")

    def as_dict(self):
        return {n: getattr(self, n) for n in self.NAMES}


def feasible(pre_layer, post_layer):
    return (pre_layer, post_layer) in (
        (Layer.INPUT, Layer.HIDDEN),
        (Layer.HIDDEN, Layer.HIDDEN),
        (Layer.HIDDEN, Layer.OUTPUT),
    )


@dataclass
class Genome:
    neurons: list
    connections: list
    params: SelfAdaptiveParams
    condition: str
    fitness: Optional[int] = None
    birth: int = 0
    trial_seed: tuple = ()
    next_uid: int = 0
    solved: bool = False
    trial_stats: dict = field(default_factory=dict)

    # -- structure ------------------------------------------------------------

    @property
    def kind(self) -> SynapseKind:
        return CONDITION_KIND[self.condition]

    @property
    def evaluated(self) -> bool:
        return self.fitness is not None

    def hidden(self):
        return [n for n in self.neurons if n.layer == Layer.HIDDEN]

    def layer_of(self):
        return {n.uid: n.layer for n in self.neurons}

    def feasible_slots(self):
        """All ordered (pre, post) uid pairs a connection may occupy."""
        ins = [n.uid for n in self.neurons if n.layer == Layer.INPUT]
        hid = [n.uid for n in self.hidden()]
        outs = [n.uid for n in self.neurons if n.layer == Layer.OUTPUT]
        slots = [(i, h) for i in ins for h in hid]
        slots += [(a, b) for a in hid for b in hid if a != b]
        slots += [(h, o) for h in hid for o in outs]
        return slots

    def n_feasible(self) -> int:
        h = len(self.hidden())
        return N_INPUTS * h + h * (h - 1) + h * N_OUTPUTS

    def enabled_connections(self):
        return [c for c in self.connections if c.enabled]

    def check(self):
        """Raise AssertionError if any structural invariant is broken."""
        uids = [n.uid for n in self.neurons]
        assert len(set(uids)) == len(uids), "duplicate neuron uid"
        layers = [n.layer for n in self.neurons]
        assert layers[:N_INPUTS] == [Layer.INPUT] * N_INPUTS
        assert layers[-N_OUTPUTS:] == [Layer.OUTPUT] * N_OUTPUTS
        assert layers.count(Layer.INPUT) == N_INPUTS and layers.count(Layer.OUTPUT) == N_OUTPUTS
        assert len(self.hidden()) >= 1, "hidden layer empty"
        for n in self.neurons:
            if n.layer != Layer.HIDDEN:
                assert n.polarity == Polarity.EXCITATORY
        layer_of = self.layer_of()
        keys = set()
        for c in self.connections:
            assert c.pre in layer_of and c.post in layer_of, "dangling connection"
            assert c.pre != c.post
            assert feasible(layer_of[c.pre], layer_of[c.post]), "infeasible connection"
            assert c.key not in keys, "duplicate connection"
            keys.add(c.key)
        assert max(uids) < self.next_uid

    def copy(self) -> "Genome":
        return copy.deepcopy(self)

    # -- document form --------------------------------------------------------

    def to_dict(self, parameters: Optional[dict] = None) -> dict:
        conns = []
        for c in self.connections:
            d = {"pre": c.pre, "post": c.post, "kind": c.kind.name, "weight": c.weight, "enabled": c.enabled}
            if c.kind.is_memristor:
                d["device_type"] = c.device_type.name
                d["beta"] = c.beta
            elif c.kind == SynapseKind.RSM:
                d["s_n"] = c.s_n
            conns.append(d)
        doc = {
            "format": FORMAT,
            "condition": self.condition,
            "neurons": [{"uid": n.uid, "layer": n.layer.name, "polarity": n.polarity.name} for n in self.neurons],
            "connections": conns,
            "self_adaptive": self.params.as_dict(),
            "fitness": self.fitness,
            "solved": self.solved,
            "birth": self.birth,
            "trial_seed": list(self.trial_seed),
            "next_uid": self.next_uid,
            "trial_stats": dict(self.trial_stats),
        }
        if parameters is not None:
            doc["parameters"] = parameters
        return doc

    def to_json(self, parameters: Optional[dict] = None) -> str:
        return json.dumps(self.to_dict(parameters), indent=1, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, doc: dict) -> "Genome":
        try:
            if doc.get("format") != FORMAT:
                raise ConfigError(f"not a genome document (format={doc.get('format')!r})")
            neurons = [NeuronGene(int(n["uid"]), Layer[n["layer"]], Polarity[n["polarity"]]) for n in doc["neurons"]]
            conns = []
            for c in doc["connections"]:
                kind = SynapseKind[c["kind"]]
                conns.append(ConnectionGene(
                    pre=int(c["pre"]), post=int(c["post"]), kind=kind, weight=float(c["weight"]),
                    enabled=bool(c["enabled"]),
                    device_type=DeviceType[c.get("device_type", "HP")],
                    beta=float(c.get("beta", 1.0)), s_n=int(c.get("s_n", 0)),
                ))
            sa = doc["self_adaptive"]
            g = cls(
                neurons=neurons,
                connections=conns,
                params=SelfAdaptiveParams(*(float(sa[n]) for n in SelfAdaptiveParams.NAMES)),
                condition=doc["condition"],
                fitness=None if doc.get("fitness") is None else int(doc["fitness"]),
                birth=int(doc.get("birth", 0)),
                trial_seed=tuple(int(v) for v in doc.get("trial_seed", ())),
                next_uid=int(doc["next_uid"]),
                solved=bool(doc.get("solved", False)),
                trial_stats={k: int(v) for k, v in doc.get("trial_stats", {}).items()},
            )
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"malformed genome document: {exc!r}") from exc
        if g.condition not in CONDITION_KIND:
            raise ConfigError(f"unknown condition {g.condition!r} in genome document")
        try:
            g.check()
        except AssertionError as exc:
            raise ConfigError(f"inconsistent genome document: {exc}") from exc
        return g

    @classmethod
    def from_json(cls, text: str) -> "Genome":
        return cls.from_dict(json.loads(text))
