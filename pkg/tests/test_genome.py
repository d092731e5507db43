import json

import pytest

from conftest import hid, make_genome, some_genome
from varsnn.errors import ConfigError
from varsnn.genome import Genome, Layer, feasible


@pytest.mark.parametrize("condition", ["MEM", "RSM", "HP", "PEO", "CONST"])
def test_json_roundtrip_exact(condition):
    g = some_genome(condition, 2)
    g.fitness = 4321
    g.trial_seed = (1, 2, 3, 4, 1)
    back = Genome.from_json(g.to_json({"note": 1}))
    assert back == g
    assert back.to_json() == g.to_json()


def test_document_fields():
    doc = some_genome("MEM").to_dict({"network": {"a": 0.3}})
    assert {"neurons", "connections", "self_adaptive", "parameters", "fitness"} <= set(doc)
    c = doc["connections"][0]
    assert {"pre", "post", "kind", "beta", "device_type", "weight", "enabled"} <= set(c)
    rsm = some_genome("RSM").to_dict()["connections"][0]
    assert "s_n" in rsm and "beta" not in rsm


def test_reals_survive_17_digits():
    g = some_genome("CONST")
    g.connections[0].weight = 0.1 + 0.2
    assert Genome.from_json(g.to_json()).connections[0].weight == 0.1 + 0.2


@pytest.mark.parametrize("mangle", [
    lambda d: d.pop("neurons"),
    lambda d: d.update(format="other"),
    lambda d: d["connections"].append({"pre": 0, "post": 1, "kind": "CONST", "weight": 0.1, "enabled": True}),
    lambda d: d["connections"].append(dict(d["connections"][0])),
    lambda d: d.update(condition="XYZ"),
    lambda d: d["neurons"][0].update(layer="SIDEWAYS"),
])
def test_bad_documents_rejected(mangle):
    d = json.loads(some_genome("CONST").to_json())
    mangle(d)
    with pytest.raises(ConfigError):
        Genome.from_dict(d)


def test_feasible_pairs():
    assert feasible(Layer.INPUT, Layer.HIDDEN)
    assert feasible(Layer.HIDDEN, Layer.HIDDEN)
    assert feasible(Layer.HIDDEN, Layer.OUTPUT)
    assert not feasible(Layer.INPUT, Layer.OUTPUT)
    assert not feasible(Layer.OUTPUT, Layer.HIDDEN)


def test_feasible_slot_count():
    g = make_genome(4)
    assert len(g.feasible_slots()) == g.n_feasible() == 6 * 4 + 4 * 3 + 4 * 2


def test_check_catches_self_loop():
    g = make_genome(2, [(hid(0), hid(1))])
    g.connections[0].post = hid(0)
    with pytest.raises(AssertionError):
        g.check()
