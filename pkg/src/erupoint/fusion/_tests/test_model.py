import numpy as np
import pytest
import torch
from torch import nn

from erupoint.config import Config
from erupoint.fusion.features import synthetic_example
from erupoint.fusion.model import (
    N_CLASSES,
    N_SIZE_CLASSES,
    FusionNet,
    build_model,
    encode_gesture,
    encode_language,
    encode_proposals,
    fuse,
)
from erupoint.geometry.point_cloud import PointCloud


def test_forward_shapes(tiny_model, tiny_example):
    output = tiny_model(tiny_example.inputs)
    assert output.confidences.shape == (4,)
    assert output.confidences.dtype == torch.float64
    assert torch.all(output.confidences >= 0)
    assert float(output.confidences.sum()) == pytest.approx(1.0, abs=1e-6)

    features = output.features
    assert features.F_p.shape == (4, 8)
    assert features.F_g.shape == (4, 8)
    assert features.F_l.shape == (5, 8)
    assert features.F_l_global.shape == (1, 8)
    assert features.F_p_ges.shape == (4, 8)
    torch.testing.assert_close(
        features.attention.sum(dim=1), torch.ones(5, dtype=torch.float64)
    )

    aux = output.aux
    assert aux.objectness.shape == (4, 2)
    assert aux.sem_cls.shape == (4, N_CLASSES)
    assert aux.center_offset.shape == (4, 3)
    assert aux.size_cls.shape == (4, N_SIZE_CLASSES)
    assert aux.size_residual.shape == (4, 3)
    assert aux.lang_cls.shape == (N_CLASSES,)


def test_single_proposal_gets_all_confidence(tiny_model):
    F_p = torch.randn(1, 8, dtype=torch.float64)
    F_g = torch.randn(1, 8, dtype=torch.float64)
    F_l = torch.randn(3, 8, dtype=torch.float64)
    with torch.no_grad():
        assert float(fuse(F_p, F_g, F_l, tiny_model)[0]) == 1.0


def test_fusion_is_proposal_permutation_equivariant(tiny_model):
    generator = torch.Generator().manual_seed(2)
    F_p = torch.randn(6, 8, dtype=torch.float64, generator=generator)
    F_g = torch.randn(1, 8, dtype=torch.float64, generator=generator)
    F_l = torch.randn(5, 8, dtype=torch.float64, generator=generator)
    order = torch.randperm(6, generator=generator)
    with torch.no_grad():
        confidences = tiny_model.fuse(F_p, F_g, F_l)
        shuffled = tiny_model.fuse(F_p[order], F_g, F_l)
    torch.testing.assert_close(shuffled, confidences[order])


@pytest.mark.parametrize(
    "shapes",
    [
        ((4, 6), (1, 8), (3, 8)),
        ((4, 8), (1, 7), (3, 8)),
        ((4, 8), (1, 8), (3, 9)),
        ((0, 8), (1, 8), (3, 8)),
        ((4, 8), (2, 8), (3, 8)),
        ((4, 8), (8,), (3, 8)),
    ],
)
def test_fuse_rejects_mismatched_dims(tiny_model, shapes):
    tensors = [torch.zeros(s, dtype=torch.float64) for s in shapes]
    with pytest.raises(ValueError):
        tiny_model.fuse(*tensors)


def test_layer_norm_outputs_are_normalized(tiny_model, tiny_example):
    outputs = []
    hooks = [
        module.register_forward_hook(lambda m, i, o: outputs.append(o))
        for module in tiny_model.decoder.modules()
        if isinstance(module, nn.LayerNorm)
    ]
    with torch.no_grad():
        tiny_model(tiny_example.inputs)
    for hook in hooks:
        hook.remove()

    assert len(outputs) == 3 * tiny_model.hparams["n_layers"]
    for output in outputs:
        mean = output.mean(dim=-1)
        var = output.var(dim=-1, unbiased=False)
        assert torch.all(mean.abs() <= 1e-5)
        assert torch.all((var - 1).abs() <= 1e-3)


def test_branch_functions(tiny_model, tiny_example):
    rng = np.random.default_rng(0)
    agent = PointCloud(points=rng.uniform(0, 1, (120, 3)))
    with torch.no_grad():
        F_g = encode_gesture(agent, tiny_model)
        F_l, F_l_global = encode_language(["the", "red", "chair"], tiny_model)
        F_p = encode_proposals(
            PointCloud(points=rng.uniform(0, 1, (50, 3))),
            tiny_example.boxes,
            tiny_model,
        )
        confidences = fuse(F_p, F_g, F_l, tiny_model)
    assert F_g.shape == (1, 8)
    assert F_l.shape == (3, 8)
    assert F_l_global.shape == (1, 8)
    assert F_p.shape == (len(tiny_example.boxes), 8)
    assert confidences.shape == (len(tiny_example.boxes),)


def test_build_model_is_seeded():
    a = build_model(seed=3, hidden_size=8, vocab_size=32, embed_dim=4)
    b = build_model(seed=3, hidden_size=8, vocab_size=32, embed_dim=4)
    c = build_model(seed=4, hidden_size=8, vocab_size=32, embed_dim=4)
    for (name, p), q, r in zip(
        a.named_parameters(), b.parameters(), c.parameters()
    ):
        assert torch.equal(p, q), name
    assert not all(
        torch.equal(p, r) for p, r in zip(a.parameters(), c.parameters())
    )


def test_from_config():
    config = Config(hidden_size=16, num_heads=2, vocab_size=128, embed_dim=8)
    model = FusionNet.from_config(config, n_layers=1)
    assert model.hparams["hidden_size"] == 16
    assert model.hparams["num_heads"] == 2
    assert model.hparams["n_layers"] == 1
    assert len(model.decoder) == 1
    assert model.dtype == torch.float64
    model = FusionNet.from_config(config, hidden_size=32)
    assert model.hparams["hidden_size"] == 32
    with pytest.raises(ValueError):
        FusionNet(hidden_size=10, num_heads=3)


def test_model_runs_on_larger_examples():
    model = build_model(seed=0, hidden_size=16, num_heads=2, vocab_size=256)
    example = synthetic_example(model, seed=0)
    with torch.no_grad():
        confidences = model(example.inputs).confidences
    assert confidences.shape == (8,)
    assert torch.all(torch.isfinite(confidences))
