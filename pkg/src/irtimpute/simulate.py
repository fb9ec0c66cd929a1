"""Synthetic data generation from known item parameters.

Used by the benchmark pipeline, the test suite's parameter-recovery
checks, and the demo scripts: draw traits from the standard normal prior,
then sample each response from its item's category distribution.
"""

from __future__ import annotations

import numpy as np

from .data import CategoricalDataset, ColumnSchema
from .errors import DataError
from .models import (
    Binary2PL,
    GradedItem,
    ItemModel,
    NominalItem,
    category_probs,
)

__all__ = ["simulate_items", "simulate_responses", "simulate_dataset"]

_FAMILY_TO_KIND = {"2pl": "binary", "grm": "ordinal", "nrm": "nominal"}


def simulate_items(
    family: str,
    n_items: int,
    rng: np.random.Generator,
    n_categories: int = 4,
    slope_range: tuple[float, float] = (0.8, 2.0),
    location_range: tuple[float, float] = (-2.0, 2.0),
    name_prefix: str = "item",
) -> tuple[ItemModel, ...]:
    """Random items with slopes and locations drawn uniformly.

    Graded boundaries are sorted draws from the location range; nominal
    free slopes come from the slope range and free intercepts from the
    location range (category 0 stays anchored at zero).
    """
    if family not in _FAMILY_TO_KIND:
        raise DataError(f"unknown family {family!r}")
    items = []
    for i in range(n_items):
        a = float(rng.uniform(*slope_range))
        if family == "2pl":
            params: Binary2PL | GradedItem | NominalItem = Binary2PL(
                a, float(rng.uniform(*location_range))
            )
        elif family == "grm":
            bs = np.sort(rng.uniform(*location_range, size=n_categories - 1))
            # keep boundaries separated so every category carries real mass
            for k in range(1, bs.size):
                bs[k] = max(bs[k], bs[k - 1] + 0.15)
            params = GradedItem(a, tuple(bs))
        else:
            slopes = (0.0, *rng.uniform(*slope_range, size=n_categories - 1))
            intercepts = (0.0, *rng.uniform(*location_range,
                                            size=n_categories - 1))
            params = NominalItem(slopes, intercepts)
        items.append(ItemModel(f"{name_prefix}{i:02d}", params))
    return tuple(items)


def simulate_responses(
    items: tuple[ItemModel, ...],
    thetas: np.ndarray,
    rng: np.random.Generator,
) -> np.ndarray:
    """Sample one code per (case, item) from the model probabilities."""
    thetas = np.asarray(thetas, dtype=np.float64)
    codes = np.empty((thetas.size, len(items)), dtype=np.int64)
    for i, item in enumerate(items):
        probs = category_probs(thetas, item)
        cumulative = np.cumsum(probs, axis=1)
        draws = rng.uniform(size=thetas.size)
        codes[:, i] = np.minimum(
            (draws[:, None] > cumulative).sum(axis=1), item.n_categories - 1
        )
    return codes


def simulate_dataset(
    items: tuple[ItemModel, ...],
    n_cases: int,
    seed: int,
) -> CategoricalDataset:
    """Complete synthetic dataset drawn from the given items.

    Column kinds follow the item families (binary / ordinal / nominal);
    every column is a feature.  Traits are standard normal.
    """
    rng = np.random.default_rng(seed)
    thetas = rng.standard_normal(n_cases)
    codes = simulate_responses(items, thetas, rng)
    schemas = tuple(
        ColumnSchema(item.column, _FAMILY_TO_KIND[item.family],
                     arity=item.n_categories)
        for item in items
    )
    return CategoricalDataset(schemas, codes.astype(np.float64))
