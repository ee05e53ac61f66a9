"""Attraction-based action choice and the reinforcement update."""

from __future__ import annotations

import numpy as np
from scipy.special import expit

from .params import LearningParams


def choice_probs(attractions, beta: float) -> np.ndarray:
    """Softmax probabilities over actions, safe for beta up to 1e3.

    Works on a single attraction vector or a batch with actions on the
    last axis.  The maximum is subtracted before exponentiating so large
    beta*A cannot overflow.
    """
    a = np.asarray(attractions, dtype=float)
    scaled = beta * a
    scaled = scaled - scaled.max(axis=-1, keepdims=True)
    e = np.exp(scaled)
    return e / e.sum(axis=-1, keepdims=True)


def choice_prob_market1(delta, beta: float):
    """Logistic probability of picking market 1 given Delta = A1 - A2."""
    return expit(beta * np.asarray(delta, dtype=float))


def update_attractions(attractions, chosen: int, score: float,
                       p: LearningParams) -> np.ndarray:
    """One reinforcement step: the played action moves toward its score,
    unplayed actions are forgotten at rate alpha*r."""
    a = np.asarray(attractions, dtype=float)
    out = (1.0 - p.alpha * p.r) * a
    out[..., chosen] = (1.0 - p.r) * a[..., chosen] + p.r * score
    return out
