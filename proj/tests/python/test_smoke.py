"""Smoke tests for the Python module; the heavy coverage lives in the C++ suites."""

import _cyberneuron as cn
import pytest


def test_train_evaluate_classify():
    neuron = cn.CyberNeuron(6, 2)
    outcome = neuron.train_add([1, 3, 0, 1, 2, 1])
    assert outcome.status == cn.TrainStatus.Converged
    assert outcome.rounds == 17

    output, active = neuron.evaluate([1, 3, 0, 1, 2, 1])
    assert output == 100
    assert active == [1, 3, 0, 1, 2, 1]
    assert neuron.classify(output) == cn.Classification.Known

    probe = neuron.output([1, 3, 2, 0, 2, 1])
    assert 66 <= probe <= 68
    assert neuron.classify(probe) == cn.Classification.Partial


def test_random_strategy_is_seeded():
    a = cn.CyberNeuron(8, 8)
    b = cn.CyberNeuron(8, 8)
    pattern = list(range(8))
    a.train_add(pattern, cn.Strategy.Random, seed=9)
    b.train_add(pattern, cn.Strategy.Random, seed=9)
    assert a == b
    assert a.output(pattern) >= 100


def test_serialization_roundtrip(tmp_path):
    neuron = cn.CyberNeuron(4, 4)
    neuron.train_add([1, 2, 3, 4])
    blob = neuron.serialize()
    assert cn.CyberNeuron.deserialize(blob) == neuron

    path = tmp_path / "trained.cnr"
    neuron.save(path)
    assert cn.CyberNeuron.load(path) == neuron


def test_bad_pattern_raises():
    neuron = cn.CyberNeuron(4, 4)
    with pytest.raises(ValueError):
        neuron.evaluate([1, 2, 3])


def test_capacity_experiment_reaches_full_recall():
    rows = cn.capacity_experiment(8, 8, 50, 8, 4, 20, 500, 7)
    assert rows[-1][2] == 1.0


def test_sigdb_and_scan_pipeline(tmp_path):
    db = tmp_path / "sigs.db"
    db.write_text(
        "Phantom.4=0190e800005e56ba4c0881ea000183ee\n"
        "W32.Short=414243\n"
    )
    loaded = cn.load_database([db])
    assert loaded.report.loaded == 2
    assert loaded.report.extracted == 1
    assert loaded.report.fragments == 6
    assert loaded.fragments.entry_count == 6

    prefilter = cn.Prefilter.build(loaded.fragments)
    assert prefilter.nonzero_cells <= 12

    window = loaded.windows[0].bytes
    assert window == bytes.fromhex("0190e800005e56ba4c0881")
    assert prefilter.fire(window[:6])

    precise = cn.build_precise(loaded.windows)
    data = bytearray(b"\x55" * 4096)
    data[100:111] = window
    report = cn.scan(bytes(data), prefilter, precise)
    hits = report["hits"]
    assert any(h["name"] == "Phantom.4" and h["offset"] == 100 and h["kind"] == "exact"
               for h in hits)

    pf_path = tmp_path / "pf.cpf"
    prefilter.save(pf_path)
    again = cn.Prefilter.load(pf_path)
    assert cn.scan(bytes(data), again, precise)["candidates"] == report["candidates"]


def test_fp_rate_of_empty_data_is_zero():
    db_rows = cn.gen_patterns(3, 8, 8, 1)
    assert len(db_rows) == 3
    neuron = cn.CyberNeuron(8, 8)
    assert cn.false_recognition_rate(neuron, db_rows, 1000, 2) == 0.0
