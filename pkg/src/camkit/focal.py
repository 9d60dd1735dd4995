"""Binary focal loss: probability form, numerically stable logit form, and
the analytic logit-space gradient.

L(y, p) = -alpha * y * (1-p)^gamma * log(p) - (1-alpha) * (1-y) * p^gamma * log(1-p)

Natural log throughout, 64-bit scalar arithmetic. gamma = 0 reduces the loss
to alpha-weighted binary cross-entropy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


class FocalDomainError(ValueError):
    """Inputs outside the valid domain (label, probability, or logit)."""


@dataclass(frozen=True)
class FocalParams:
    alpha: float = 0.25
    gamma: float = 2.0

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise FocalDomainError(f"alpha must be in [0, 1], got {self.alpha}")
        if self.gamma < 0.0:
            raise FocalDomainError(f"gamma must be >= 0, got {self.gamma}")


def _check_label(y) -> int:
    if y not in (0, 1):
        raise FocalDomainError(f"label must be 0 or 1, got {y!r}")
    return int(y)


def _softplus(x: float) -> float:
    # log(1 + exp(x)) without overflow for large |x|
    if x > 0:
        return x + math.log1p(math.exp(-x))
    return math.log1p(math.exp(x))


def sigmoid(z: float) -> float:
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-z))
    e = math.exp(z)
    return e / (1.0 + e)


def focal_loss(y, p_hat: float, params: FocalParams) -> float:
    """Probability-form focal loss. Requires 0 < p_hat < 1; use the logit form
    for saturated predictions."""
    y = _check_label(y)
    if not 0.0 < p_hat < 1.0:
        raise FocalDomainError(
            f"p_hat must lie strictly inside (0, 1), got {p_hat!r};"
            " use focal_loss_logit for saturated values"
        )
    if y == 1:
        return -params.alpha * (1.0 - p_hat) ** params.gamma * math.log(p_hat)
    return -(1.0 - params.alpha) * p_hat ** params.gamma * math.log(1.0 - p_hat)


def focal_loss_logit(y, z: float, params: FocalParams) -> float:
    """Focal loss from a raw logit z, equal to focal_loss(y, sigmoid(z)) but
    finite and accurate for |z| up to several hundred."""
    y = _check_label(y)
    if not math.isfinite(z):
        raise FocalDomainError(f"logit must be finite, got {z!r}")
    sp_pos = _softplus(-z)  # -log sigmoid(z)
    sp_neg = _softplus(z)   # -log(1 - sigmoid(z))
    if y == 1:
        # (1-p)^gamma = exp(-gamma * softplus(z))
        return params.alpha * math.exp(-params.gamma * sp_neg) * sp_pos
    return (1.0 - params.alpha) * math.exp(-params.gamma * sp_pos) * sp_neg


def focal_grad_logit(y, z: float, params: FocalParams) -> float:
    """Analytic d(loss)/dz of focal_loss_logit.

    y=1: -alpha   * (1-p)^gamma * (gamma * p * (-log p)     + (1-p))
    y=0: (1-alpha) *    p^gamma * (gamma * (1-p) * (-log(1-p)) + p)
    """
    y = _check_label(y)
    if not math.isfinite(z):
        raise FocalDomainError(f"logit must be finite, got {z!r}")
    p = sigmoid(z)
    q = sigmoid(-z)  # 1 - p, accurate when p saturates
    sp_pos = _softplus(-z)
    sp_neg = _softplus(z)
    if y == 1:
        return -params.alpha * math.exp(-params.gamma * sp_neg) * (params.gamma * p * sp_pos + q)
    return (1.0 - params.alpha) * math.exp(-params.gamma * sp_pos) * (params.gamma * q * sp_neg + p)


def finite_difference_grad(y, z: float, params: FocalParams, h: float = 1e-5) -> float:
    """Central-difference gradient of the logit-form loss; the independent
    check behind the loss-check verification table."""
    return (focal_loss_logit(y, z + h, params) - focal_loss_logit(y, z - h, params)) / (2.0 * h)
