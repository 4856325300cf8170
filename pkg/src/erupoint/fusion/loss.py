"""Loss of the fusion network.

The localization loss is the cross-entropy of the proposal confidences
against the ground-truth proposal. Proposals are ground-truth boxes, so
there is no voting stage and the vote regression term is zero.
"""
from dataclasses import dataclass, fields
from typing import Dict

import torch
import torch.nn.functional as F

from erupoint.fusion.features import LossTargets
from erupoint.fusion.model import AuxPredictions

# floor on probabilities before taking logs
_EPS = 1e-12


def compose_box(center_reg, size_cls, size_reg):
    return center_reg + 0.1 * size_cls + size_reg


def compose_det(vote_reg, objn_cls, sem_cls, box):
    return vote_reg + 0.1 * objn_cls + 0.1 * sem_cls + box


def compose_total(loc, det, cls):
    return 0.3 * loc + 10.0 * det + 0.1 * cls


@dataclass(frozen=True)
class LossBreakdown:
    L_total: torch.Tensor
    L_loc: torch.Tensor
    L_det: torch.Tensor
    L_cls: torch.Tensor
    L_vote_reg: torch.Tensor
    L_objn_cls: torch.Tensor
    L_sem_cls: torch.Tensor
    L_box: torch.Tensor
    L_center_reg: torch.Tensor
    L_size_cls: torch.Tensor
    L_size_reg: torch.Tensor

    def to_dict(self) -> Dict[str, float]:
        return {f.name: float(getattr(self, f.name)) for f in fields(self)}


def _nll(probabilities: torch.Tensor, target: torch.Tensor) -> torch.Tensor:
    """Mean negative log-likelihood of class indices under probabilities."""
    return F.nll_loss(torch.log(probabilities.clamp_min(_EPS)), target)


def _smooth_l1(prediction: torch.Tensor, target: torch.Tensor):
    """Smooth L1 summed over xyz and averaged over proposals."""
    return F.smooth_l1_loss(prediction, target, reduction="sum") / len(
        prediction
    )


def compute_loss(
    confidences: torch.Tensor,
    gt_index: int,
    aux: AuxPredictions,
    targets: LossTargets,
) -> LossBreakdown:
    """Weighted training loss of one example.

    L_total = 0.3 L_loc + 10 L_det + 0.1 L_cls, where L_loc is the
    cross-entropy of the confidences against the ground-truth proposal,
    L_det the detection terms of the auxiliary heads and L_cls the
    cross-entropy of the language classifier against the target class.

    Parameters
    ----------
    confidences : torch.Tensor
        (M,) softmax confidences over the proposals.
    gt_index : int
        Index of the ground-truth proposal.
    aux : AuxPredictions
        Auxiliary head outputs.
    targets : LossTargets
        Per-proposal targets of the auxiliary heads.

    Returns
    -------
    losses : LossBreakdown
        Every term, each a differentiable scalar tensor.

    Raises
    ------
    ValueError
        When gt_index is out of range or the targets do not have one row
        per proposal.
    """
    n_proposals = len(confidences)
    if not 0 <= gt_index < n_proposals:
        raise ValueError(
            f"gt_index {gt_index} out of range for {n_proposals} proposals"
        )
    if len(targets.sem_cls) != n_proposals:
        raise ValueError("targets must have one row per proposal")

    L_loc = -torch.log(confidences[gt_index].clamp_min(_EPS))
    L_objn_cls = _nll(aux.objectness, targets.objectness)
    L_sem_cls = _nll(aux.sem_cls, targets.sem_cls)
    L_center_reg = _smooth_l1(aux.center_offset, targets.center_offset)
    L_size_cls = _nll(aux.size_cls, targets.size_cls)
    L_size_reg = _smooth_l1(aux.size_residual, targets.size_residual)
    L_vote_reg = torch.zeros((), dtype=confidences.dtype)
    L_cls = -torch.log(aux.lang_cls[targets.target_class].clamp_min(_EPS))

    L_box = compose_box(L_center_reg, L_size_cls, L_size_reg)
    L_det = compose_det(L_vote_reg, L_objn_cls, L_sem_cls, L_box)
    return LossBreakdown(
        L_total=compose_total(L_loc, L_det, L_cls),
        L_loc=L_loc,
        L_det=L_det,
        L_cls=L_cls,
        L_vote_reg=L_vote_reg,
        L_objn_cls=L_objn_cls,
        L_sem_cls=L_sem_cls,
        L_box=L_box,
        L_center_reg=L_center_reg,
        L_size_cls=L_size_cls,
        L_size_reg=L_size_reg,
    )
