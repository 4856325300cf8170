import numpy as np
import pytest
import torch

from erupoint.data.micro_scenes import generate_micro_benchmark
from erupoint.errors import NumericError
from erupoint.evaluation.benchmark import benchmark_table
from erupoint.fusion.features import build_examples, synthetic_example
from erupoint.fusion.model import build_model
from erupoint.fusion.training import (
    MIN_TRAINING_EXAMPLES,
    grad_check,
    model_accuracy,
    split_examples,
    train_toy,
)

TINY = dict(hidden_size=8, vocab_size=64, embed_dim=8, n_centroids=8)


@pytest.fixture(scope="module")
def toy_examples():
    model = build_model(seed=0, **TINY)
    return [
        synthetic_example(model, seed=s, n_proposals=3, n_tokens=4, n_points=64)
        for s in range(MIN_TRAINING_EXAMPLES)
    ]


def test_grad_check_tiny(tiny_model):
    batch = [
        synthetic_example(
            tiny_model, seed=s, n_proposals=3, n_tokens=4, n_points=64,
            points_per_box=8,
        )
        for s in range(2)
    ]
    error = grad_check(tiny_model, batch, fraction=0.0, min_entries=2)
    assert error < 1e-4


def test_grad_check_requires_float64(tiny_model, tiny_example):
    with pytest.raises(ValueError):
        grad_check(tiny_model, [])
    tiny_model.to(torch.float32)
    with pytest.raises(ValueError):
        grad_check(tiny_model, [tiny_example])


@pytest.mark.slow
@pytest.mark.parametrize("hidden_size", [16, 32])
@pytest.mark.parametrize("seed", range(5))
def test_grad_check_toy_dims(hidden_size, seed):
    model = build_model(seed=seed, hidden_size=hidden_size)
    batch = [
        synthetic_example(model, seed=100 * seed + i, n_proposals=8, n_tokens=12)
        for i in range(2)
    ]
    assert grad_check(model, batch, seed=seed) < 1e-4


def test_split_examples_is_scene_disjoint(toy_examples):
    train, held_out = split_examples(toy_examples, 0.25, seed=0)
    assert len(train) + len(held_out) == len(toy_examples)
    assert {e.scene_id for e in train}.isdisjoint(e.scene_id for e in held_out)
    assert len(held_out) > 0


def test_train_toy_requires_enough_examples(toy_examples):
    model = build_model(seed=0, **TINY)
    with pytest.raises(ValueError):
        train_toy(toy_examples[:10], model, steps=1, seed=0)
    with pytest.raises(ValueError):
        train_toy(toy_examples, model, steps=-1, seed=0)


def test_zero_steps_keeps_the_untrained_model(toy_examples):
    model = build_model(seed=0, **TINY)
    before = [p.detach().clone() for p in model.parameters()]
    model, trace = train_toy(toy_examples, model, steps=0, seed=1)

    assert trace.losses == []
    assert len(trace.epochs) == 1
    assert all(torch.equal(a, b) for a, b in zip(before, model.parameters()))
    _, held_out = split_examples(toy_examples, 0.2, seed=1)
    assert trace.epochs[0].accuracy == model_accuracy(model, held_out)


def test_training_is_deterministic(toy_examples):
    traces = []
    for _ in range(2):
        model = build_model(seed=0, **TINY)
        _, trace = train_toy(
            toy_examples, model, steps=8, seed=2, batch_size=4
        )
        traces.append(trace.to_dict())
    assert traces[0] == traces[1]
    assert len(traces[0]["losses"]) == 8
    assert all(np.isfinite(traces[0]["losses"]))
    assert traces[0]["epochs"][-1]["step"] == 8


def test_epoch_boundaries_are_recorded(toy_examples):
    model = build_model(seed=0, **TINY)
    _, trace = train_toy(toy_examples, model, steps=30, seed=0, batch_size=8)
    steps = [e.step for e in trace.epochs]
    assert steps[0] == 0
    assert steps[-1] == 30
    assert steps == sorted(steps)
    assert [e.epoch for e in trace.epochs] == list(range(len(trace.epochs)))
    assert len(trace.epochs) >= 3


def test_divergence_aborts_with_the_trace(toy_examples):
    model = build_model(seed=0, **TINY)
    with pytest.raises(NumericError) as e:
        train_toy(toy_examples, model, steps=50, seed=0, learning_rate=1e300)
    assert all(np.isfinite(e.value.trace))


@pytest.mark.slow
def test_training_learns_the_pointing(pool, lexicons):
    bench = generate_micro_benchmark(200, pool, seed=5, k_values=(2, 3, 4))
    model = build_model(seed=0)
    examples = build_examples(bench.samples, bench.scenes, pool, model)
    model, trace = train_toy(examples, model, steps=500, seed=0)

    assert np.mean(trace.losses[-25:]) < np.mean(trace.losses[:25])
    untrained = trace.epochs[0].accuracy[0.25]
    trained = trace.epochs[-1].accuracy[0.25]
    assert trained >= untrained + 0.2

    _, held_out = split_examples(examples, 0.2, seed=0)
    held_out_ids = {e.sample.sample_id for e in held_out}
    table = benchmark_table(bench, pool, lexicons)
    lang = table[(table["mode"] == "lang") & table["sample_id"].isin(held_out_ids)]
    assert trained > lang[0.25].mean()
