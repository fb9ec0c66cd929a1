"""Controlled missingness injection and Little's MCAR test.

Two injection mechanisms produce benchmark datasets with known ground
truth: completely-at-random deletion of a fixed cell count in one column,
and at-random deletion driven by a fully observed conditional column (the
rows with the largest — or smallest — conditional values lose their
target value, deterministically).

Little's test compares per-pattern observed means against the maximum
likelihood estimates under multivariate normality; a small p-value rejects
the completely-at-random hypothesis.  Category codes enter as plain
numbers, a deliberate approximation for categorical data (the test is a
mean-comparison screen, not a distributional fit).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.stats import chi2

from .data import MISSING, CategoricalDataset
from .errors import DataError, SingularCovariance

__all__ = ["LittleTestResult", "inject_mcar", "inject_mar", "littles_test"]


# ---------------------------------------------------------------------------
# Injection
# ---------------------------------------------------------------------------

def _target_index(data: CategoricalDataset, target: str) -> int:
    j = data.column_index(target)
    if np.any(data.cells[:, j] == MISSING):
        raise DataError(
            f"target column {target!r} already has missing cells"
        )
    return j


def _n_cells(data: CategoricalDataset, fraction: float) -> int:
    if not 0.0 < fraction < 1.0:
        raise DataError(f"fraction must be in (0, 1), got {fraction}")
    count = int(np.floor(fraction * data.n_rows))
    if count < 1:
        raise DataError(
            f"fraction {fraction} of {data.n_rows} rows removes no cells"
        )
    return count


def inject_mcar(data: CategoricalDataset, target: str, fraction: float,
                seed: int) -> CategoricalDataset:
    """Blank ``floor(fraction * N)`` uniformly random cells of one column."""
    j = _target_index(data, target)
    count = _n_cells(data, fraction)
    rng = np.random.default_rng(seed)
    rows = rng.choice(data.n_rows, size=count, replace=False)
    cells = np.array(data.cells, copy=True)
    cells[rows, j] = MISSING
    return data.with_cells(cells)


def inject_mar(data: CategoricalDataset, target: str, conditional: str,
               fraction: float, direction: str = "top") -> CategoricalDataset:
    """Blank the target in the rows with the most extreme conditional values.

    ``direction="top"`` removes the target from the ``floor(fraction * N)``
    rows with the *largest* conditional values; ``"bottom"`` from the
    smallest.  Ties break by original row order, so the operation is fully
    deterministic.  Row order of the output matches the input.
    """
    j = _target_index(data, target)
    c = data.column_index(conditional)
    if c == j:
        raise DataError("conditional column must differ from the target")
    if direction not in ("top", "bottom"):
        raise DataError(f"direction must be 'top' or 'bottom', got {direction!r}")
    values = data.cells[:, c]
    if np.any(values == MISSING):
        raise DataError(
            f"conditional column {conditional!r} must be fully observed"
        )
    if np.all(values == values[0]):
        warnings.warn(
            f"conditional column {conditional!r} is constant; the selection "
            "degenerates to the first rows in file order",
            stacklevel=2,
        )
    count = _n_cells(data, fraction)
    keys = -values if direction == "top" else values
    order = np.lexsort((np.arange(data.n_rows), keys))
    cells = np.array(data.cells, copy=True)
    cells[order[:count], j] = MISSING
    return data.with_cells(cells)


# ---------------------------------------------------------------------------
# Little's MCAR test
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LittleTestResult:
    statistic: float
    df: int
    p_value: float
    n_patterns: int


def _solve_observed(cov: np.ndarray, rhs: np.ndarray, what: str) -> np.ndarray:
    """Solve ``cov @ x = rhs`` with one ridge retry on singularity."""
    try:
        return np.linalg.solve(cov, rhs)
    except np.linalg.LinAlgError:
        pass
    ridge = 1e-8 * np.trace(cov) / cov.shape[0]
    try:
        return np.linalg.solve(cov + ridge * np.eye(cov.shape[0]), rhs)
    except np.linalg.LinAlgError:
        raise SingularCovariance(
            f"{what}: observed-block covariance is singular even after "
            "ridge regularization"
        ) from None


def _em_normal(y: np.ndarray, tol: float, max_iter: int,
               patterns: list[tuple[np.ndarray, np.ndarray]]
               ) -> tuple[np.ndarray, np.ndarray]:
    """ML mean and covariance of a normal model with missing entries."""
    n, p = y.shape
    mean = np.nanmean(y, axis=0)
    variance = np.nanvar(y, axis=0)
    variance = np.where(variance > 0, variance, 1.0)
    cov = np.diag(variance)
    for _ in range(max_iter):
        sum1 = np.zeros(p)
        sum2 = np.zeros((p, p))
        for observed, rows in patterns:
            block = y[rows]
            miss = ~observed
            if miss.any():
                obs_idx = np.flatnonzero(observed)
                mis_idx = np.flatnonzero(miss)
                coef = _solve_observed(
                    cov[np.ix_(obs_idx, obs_idx)],
                    cov[np.ix_(obs_idx, mis_idx)],
                    "EM step",
                )
                centered = block[:, obs_idx] - mean[obs_idx]
                predicted = mean[mis_idx] + centered @ coef
                resid_cov = (cov[np.ix_(mis_idx, mis_idx)]
                             - cov[np.ix_(mis_idx, obs_idx)] @ coef)
                completed = np.empty_like(block)
                completed[:, obs_idx] = block[:, obs_idx]
                completed[:, mis_idx] = predicted
                sum2[np.ix_(mis_idx, mis_idx)] += len(rows) * resid_cov
            else:
                completed = block
            sum1 += completed.sum(axis=0)
            sum2 += completed.T @ completed
        new_mean = sum1 / n
        new_cov = sum2 / n - np.outer(new_mean, new_mean)
        new_cov = 0.5 * (new_cov + new_cov.T)
        change = max(float(np.max(np.abs(new_mean - mean))),
                     float(np.max(np.abs(new_cov - cov))))
        mean, cov = new_mean, new_cov
        if change < tol:
            break
    return mean, cov


def littles_test(y: np.ndarray, em_tol: float = 1e-6,
                 em_max_iter: int = 200) -> LittleTestResult:
    """Little's completely-at-random test on a numeric matrix.

    ``y`` holds one row per case with NaN marking missing entries.  Rows
    with no observed entries are dropped (they carry no moments).  The
    statistic sums, over missingness patterns, the Mahalanobis distance of
    the pattern's observed means from the EM estimates; under MCAR it is
    asymptotically chi-square with ``sum(p_j) - p`` degrees of freedom.
    """
    y = np.asarray(y, dtype=np.float64)
    if y.ndim != 2 or y.shape[1] < 2:
        raise DataError("need a 2-D matrix with at least two columns")
    observed = ~np.isnan(y)
    keep = observed.any(axis=1)
    y = y[keep]
    observed = observed[keep]
    if y.shape[0] < 2:
        raise DataError("need at least two rows with observed values")
    if not observed.any(axis=0).all():
        empty = int(np.flatnonzero(~observed.any(axis=0))[0])
        raise DataError(f"column {empty} has no observed values")

    # group rows by missingness pattern, first-appearance order
    pattern_rows: dict[bytes, list[int]] = {}
    for i, row in enumerate(observed):
        pattern_rows.setdefault(row.tobytes(), []).append(i)
    patterns = [
        (np.frombuffer(key, dtype=bool), np.asarray(rows))
        for key, rows in pattern_rows.items()
    ]
    if len(patterns) == 1:
        return LittleTestResult(0.0, 0, 1.0, 1)

    mean, cov = _em_normal(y, em_tol, em_max_iter, patterns)

    statistic = 0.0
    df = -y.shape[1]
    for pattern, rows in patterns:
        obs_idx = np.flatnonzero(pattern)
        df += obs_idx.size
        diff = y[np.ix_(rows, obs_idx)].mean(axis=0) - mean[obs_idx]
        solved = _solve_observed(cov[np.ix_(obs_idx, obs_idx)], diff,
                                 "test statistic")
        statistic += rows.size * float(diff @ solved)
    if df <= 0:
        return LittleTestResult(float(statistic), 0, 1.0, len(patterns))
    p_value = float(chi2.sf(statistic, df))
    return LittleTestResult(float(statistic), int(df), p_value, len(patterns))
