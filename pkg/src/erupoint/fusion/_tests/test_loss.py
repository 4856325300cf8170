import numpy as np
import pytest
import torch

from erupoint.fusion.features import LossTargets, semantic_class, size_class
from erupoint.fusion.loss import (
    compose_box,
    compose_det,
    compose_total,
    compute_loss,
)
from erupoint.fusion.model import AuxPredictions


def test_loss_weights():
    assert compose_total(1.0, 2.0, 3.0) == pytest.approx(20.6, abs=1e-12)
    assert compose_det(0.0, 1.0, 1.0, 1.0) == pytest.approx(1.2, abs=1e-12)
    assert compose_box(1.0, 1.0, 1.0) == pytest.approx(2.1, abs=1e-12)


def test_loss_composition_identities():
    rng = np.random.default_rng(0)
    for values in rng.uniform(0, 10, size=(100, 8)):
        loc, cls, vote, objn, sem, center, size_cls, size_reg = values
        box = compose_box(center, size_cls, size_reg)
        det = compose_det(vote, objn, sem, box)
        total = compose_total(loc, det, cls)
        assert box == pytest.approx(center + 0.1 * size_cls + size_reg, abs=1e-9)
        assert det == pytest.approx(vote + 0.1 * objn + 0.1 * sem + box, abs=1e-9)
        assert total == pytest.approx(0.3 * loc + 10 * det + 0.1 * cls, abs=1e-9)


def test_compute_loss_decomposes(tiny_model, tiny_example):
    output = tiny_model(tiny_example.inputs)
    loss = compute_loss(
        output.confidences, tiny_example.gt_index, output.aux, tiny_example.targets
    )
    values = loss.to_dict()
    assert set(values) == {
        "L_total", "L_loc", "L_det", "L_cls", "L_vote_reg", "L_objn_cls",
        "L_sem_cls", "L_box", "L_center_reg", "L_size_cls", "L_size_reg",
    }
    assert all(v >= 0 for v in values.values())
    assert values["L_vote_reg"] == 0.0
    assert values["L_box"] == pytest.approx(
        values["L_center_reg"] + 0.1 * values["L_size_cls"] + values["L_size_reg"],
        abs=1e-9,
    )
    assert values["L_det"] == pytest.approx(
        0.1 * values["L_objn_cls"] + 0.1 * values["L_sem_cls"] + values["L_box"],
        abs=1e-9,
    )
    assert values["L_total"] == pytest.approx(
        0.3 * values["L_loc"] + 10 * values["L_det"] + 0.1 * values["L_cls"],
        abs=1e-9,
    )
    assert values["L_loc"] == pytest.approx(
        -np.log(float(output.confidences[tiny_example.gt_index]))
    )


def _one_hot(index, n):
    probabilities = torch.zeros(n, dtype=torch.float64)
    probabilities[index] = 1.0
    return probabilities


def test_perfect_prediction_has_no_localization_or_box_loss():
    n = 3
    targets = LossTargets(
        objectness=torch.ones(n, dtype=torch.long),
        sem_cls=torch.tensor([0, 2, 1]),
        center_offset=torch.zeros((n, 3), dtype=torch.float64),
        size_cls=torch.tensor([1, 1, 0]),
        size_residual=torch.full((n, 3), 0.2, dtype=torch.float64),
        target_class=2,
    )
    aux = AuxPredictions(
        objectness=torch.stack([_one_hot(1, 2)] * n),
        sem_cls=torch.stack([_one_hot(c, 4) for c in (0, 2, 1)]),
        center_offset=torch.zeros((n, 3), dtype=torch.float64),
        size_cls=torch.stack([_one_hot(c, 2) for c in (1, 1, 0)]),
        size_residual=torch.full((n, 3), 0.2, dtype=torch.float64),
        lang_cls=_one_hot(2, 4),
    )
    loss = compute_loss(_one_hot(1, n), 1, aux, targets)
    assert float(loss.L_loc) == 0.0
    assert float(loss.L_box) == 0.0
    assert float(loss.L_total) == 0.0


def test_compute_loss_rejects_bad_index(tiny_model, tiny_example):
    output = tiny_model(tiny_example.inputs)
    for index in (-1, len(output.confidences)):
        with pytest.raises(ValueError):
            compute_loss(output.confidences, index, output.aux, tiny_example.targets)


def test_confidence_logit_gradients_sum_to_zero(tiny_model, tiny_example):
    output = tiny_model(tiny_example.inputs)
    loss = compute_loss(
        output.confidences, tiny_example.gt_index, output.aux, tiny_example.targets
    )
    loss.L_loc.backward()
    # a shift shared by every logit leaves the softmax unchanged
    bias = tiny_model.confidence_head[-1].bias
    assert abs(float(bias.grad)) < 1e-10

    logits = torch.randn(5, dtype=torch.float64, requires_grad=True)
    (-torch.log_softmax(logits, dim=0)[2]).backward()
    assert abs(float(logits.grad.sum())) < 1e-12


def test_target_classes():
    assert semantic_class("Chair", 18) == semantic_class("chair", 18)
    assert 0 <= semantic_class("lamp", 18) < 18

    c, residual = size_class(np.array([0.5, 0.5, 0.9]), 8)
    assert c == 2
    np.testing.assert_allclose(residual, np.array([0.5, 0.5, 0.9]) - 0.125 * 2**2.5)
    assert size_class(np.array([0.01, 0.01, 0.01]), 8)[0] == 0
    assert size_class(np.array([100.0, 1, 1]), 8)[0] == 7
