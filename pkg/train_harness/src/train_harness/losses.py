"""Focal loss for the heavily imbalanced road/background split."""

from __future__ import annotations

import torch

PROB_EPS = 1e-7


def focal_loss(p, y, gamma: float = 2.0, valid=None):
    """Mean of -(1 - p_t)^gamma * log(p_t), p_t = p where y=1 else 1-p.

    ``p`` are predicted road probabilities, clamped away from {0, 1} so the
    log stays finite. ``valid`` restricts the mean to labeled pixels; with no
    valid pixel the loss is 0 (nothing to supervise).
    """
    p = torch.clamp(p, PROB_EPS, 1.0 - PROB_EPS)
    y = y.to(p.dtype)
    p_t = torch.where(y > 0.5, p, 1.0 - p)
    loss = -((1.0 - p_t) ** gamma) * torch.log(p_t)
    if valid is None:
        return loss.mean()
    valid = valid.to(p.dtype)
    total = valid.sum()
    if total == 0:
        return loss.sum() * 0.0
    return (loss * valid).sum() / total
