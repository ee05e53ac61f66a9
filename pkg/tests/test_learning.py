"""Softmax choice, reinforcement updates and the reduced-model identity."""

import numpy as np
import pytest

from twinmarket.learning import (choice_prob_market1, choice_probs,
                                 update_attractions)
from twinmarket.params import LearningParams


def test_softmax_uniform_at_beta_zero():
    p = choice_probs(np.array([3.0, -1.0, 0.5, 2.0]), 0.0)
    assert np.allclose(p, 0.25, atol=1e-14)


def test_softmax_sharp_at_large_beta():
    p = choice_probs(np.array([1.0, 0.0, 0.0, 0.0]), 1e3)
    assert p[0] > 1 - 1e-12
    assert np.all(np.isfinite(p))


def test_softmax_shift_invariance():
    a = np.array([0.3, -0.2, 1.1, 0.0])
    for c in (-5.0, 7.5, 1e3):
        assert np.allclose(choice_probs(a, 2.0), choice_probs(a + c, 2.0),
                           atol=1e-12)


def test_softmax_normalization_and_batching():
    rng = np.random.default_rng(0)
    batch = rng.normal(size=(50, 4))
    p = choice_probs(batch, 7.0)
    assert np.allclose(p.sum(axis=1), 1.0, atol=1e-12)
    assert p.shape == (50, 4)


def test_softmax_monotonicity():
    a = np.array([0.2, 0.1, 0.0, -0.1])
    p0 = choice_probs(a, 3.0)
    a2 = a.copy()
    a2[1] += 0.05
    p1 = choice_probs(a2, 3.0)
    assert p1[1] > p0[1]
    for k in (0, 2, 3):
        assert p1[k] < p0[k]


def test_update_played_and_unplayed():
    p = LearningParams(beta=1.0, r=0.1, alpha=1.0)
    a = update_attractions(np.zeros(4), 0, 1.0, p)
    assert a[0] == pytest.approx(0.1)
    a = update_attractions(np.ones(4), 0, 0.0, p)
    assert a[1] == pytest.approx(0.9)


def test_update_alpha_zero_keeps_unplayed():
    p = LearningParams(beta=1.0, r=0.1, alpha=0.0)
    a = update_attractions(np.ones(4), 2, 0.5, p)
    assert a[0] == 1.0 and a[1] == 1.0 and a[3] == 1.0
    assert a[2] == pytest.approx(0.9 * 1.0 + 0.1 * 0.5)


def test_geometric_memory_limit():
    p = LearningParams(beta=1.0, r=0.2)
    a = np.zeros(4)
    for n in (1, 2, 5, 20, 200):
        a = np.zeros(4)
        for _ in range(n):
            a = update_attractions(a, 1, 2.0, p)
        assert a[1] == pytest.approx(2.0 * (1 - (1 - p.r) ** n), rel=1e-12)
    assert a[1] == pytest.approx(2.0, rel=1e-12)


def test_market_choice_logistic():
    assert choice_prob_market1(0.0, 5.0) == pytest.approx(0.5)
    assert choice_prob_market1(np.log(3.0), 1.0) == pytest.approx(0.75)
    assert choice_prob_market1(-1e4, 1.0) == 0.0
    assert choice_prob_market1(1e4, 1.0) == 1.0


def test_reduced_delta_update_matches_two_attraction_update():
    # with alpha = 1 the relative attraction evolves autonomously
    rng = np.random.default_rng(4)
    p = LearningParams(beta=1.0, r=0.13)
    a = rng.normal(size=2)
    delta = a[0] - a[1]
    for _ in range(200):
        market = rng.integers(0, 2)
        score = rng.exponential(0.5)
        a = update_attractions(a, market, score, p)
        sign = 1.0 if market == 0 else -1.0
        delta = (1 - p.r) * delta + p.r * sign * score
        assert delta == pytest.approx(a[0] - a[1], abs=1e-12)
