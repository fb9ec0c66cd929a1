"""Shared builders for randomized test items and synthetic patterns."""

from __future__ import annotations

import numpy as np

from irtimpute.models import (
    Binary2PL,
    GradedItem,
    ItemModel,
    NominalItem,
    item_param_vector,
    item_with_params,
    pattern_loglik,
)


def random_item(rng: np.random.Generator, family: str, m: int = 4,
                min_gap: float = 0.3) -> ItemModel:
    """One random item with well-separated parameters.

    Slopes land in [0.8, 2]; locations in [-2, 2].  Graded boundaries keep
    at least ``min_gap`` between neighbors so small finite-difference
    perturbations cannot reorder them.
    """
    a = float(rng.uniform(0.8, 2.0))
    if family == "2pl":
        return ItemModel("x", Binary2PL(a, float(rng.uniform(-2, 2))))
    if family == "grm":
        gaps = rng.uniform(min_gap, 1.0, size=m - 2)
        b1 = float(rng.uniform(-2.0, 0.0))
        bounds = b1 + np.concatenate([[0.0], np.cumsum(gaps)])
        return ItemModel("x", GradedItem(a, tuple(bounds)))
    if family == "nrm":
        slopes = (0.0, *rng.uniform(-2.0, 2.0, size=m - 1))
        intercepts = (0.0, *rng.uniform(-2.0, 2.0, size=m - 1))
        return ItemModel("x", NominalItem(slopes, intercepts))
    raise ValueError(family)


def random_items(rng: np.random.Generator, family: str, n_items: int,
                 m: int = 4) -> tuple[ItemModel, ...]:
    items = []
    for i in range(n_items):
        item = random_item(rng, family, m)
        items.append(ItemModel(f"item{i:02d}", item.params))
    return tuple(items)


def random_pattern(rng: np.random.Generator, items, missing_rate: float = 0.3):
    """A response pattern with codes in range and some cells missing."""
    pattern = []
    for item in items:
        if rng.uniform() < missing_rate:
            pattern.append(-1)
        else:
            pattern.append(int(rng.integers(item.n_categories)))
    return pattern


def finite_difference_score(pattern, items, theta, h=1e-5):
    """Central-difference gradient of pattern_loglik (test oracle)."""
    d_theta = (pattern_loglik(pattern, items, theta + h)
               - pattern_loglik(pattern, items, theta - h)) / (2 * h)
    d_items = []
    for idx, item in enumerate(items):
        vec = item_param_vector(item)
        grad = np.zeros_like(vec)
        for p in range(vec.size):
            hi, lo = vec.copy(), vec.copy()
            hi[p] += h
            lo[p] -= h
            up = list(items)
            up[idx] = item_with_params(item, hi)
            f_hi = pattern_loglik(pattern, tuple(up), theta)
            up[idx] = item_with_params(item, lo)
            f_lo = pattern_loglik(pattern, tuple(up), theta)
            grad[p] = (f_hi - f_lo) / (2 * h)
        d_items.append(grad)
    return d_theta, d_items
