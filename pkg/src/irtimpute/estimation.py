"""Marginal maximum-likelihood fitting and latent-trait scoring.

The latent trait is integrated out over a fixed, equally spaced quadrature
grid carrying standard-normal prior weights.  Fitting alternates:

* E-step: each case's posterior over grid nodes (prior weight times the
  pattern likelihood, normalized), accumulated into expected response
  counts per item, node, and category;
* M-step: per-item Newton–Raphson with step-halving on the expected
  complete-data log-likelihood, in a parameterization where the structural
  constraints (positive slopes, ordered boundaries, anchored zero category)
  cannot be violated.

Convergence is declared on the maximum absolute parameter change, not the
log-likelihood change.  Scoring is the posterior mean (and SD) of the trait
on the same grid; missing cells simply drop out of the pattern likelihood.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import logsumexp
from scipy.stats import norm

from .data import CategoricalDataset, ColumnSchema
from .errors import (
    CodeOutOfRange,
    DataError,
    EmptyCategory,
    InsufficientData,
    NewtonDiverged,
    NumericalFailure,
    UnobservedCategory,
)
from .models import (
    Binary2PL,
    GradedItem,
    ItemModel,
    NominalItem,
    grad_log_probs,
    item_from_dict,
    item_param_vector,
    item_to_dict,
    log_category_probs,
)

SLOPE_BOUNDS = (1e-3, 50.0)
LOCATION_BOUND = 50.0
COUNT_FLOOR = 1e-10
_GAP_MIN = 1e-6

MODEL_FORMAT = "irtimpute-model"
MODEL_VERSION = 1


# ---------------------------------------------------------------------------
# Grid and configuration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class QuadratureGrid:
    """Trait nodes with their (normalized) prior weights."""

    nodes: tuple[float, ...]
    weights: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "nodes", tuple(float(v) for v in self.nodes))
        object.__setattr__(self, "weights", tuple(float(v) for v in self.weights))
        nodes = np.asarray(self.nodes)
        weights = np.asarray(self.weights)
        if nodes.size != weights.size or nodes.size == 0:
            raise DataError("grid nodes and weights must align")
        if np.any(np.diff(nodes) <= 0):
            raise DataError("grid nodes must be strictly increasing")
        if np.any(weights <= 0):
            raise DataError("grid weights must be strictly positive")
        if abs(weights.sum() - 1.0) > 1e-12:
            raise DataError("grid weights must sum to 1")

    @property
    def size(self) -> int:
        return len(self.nodes)

    def node_array(self) -> np.ndarray:
        return np.asarray(self.nodes)

    def weight_array(self) -> np.ndarray:
        return np.asarray(self.weights)


def build_grid(size: int = 61, grid_range: tuple[float, float] = (-6.0, 6.0)
               ) -> QuadratureGrid:
    """Equally spaced nodes with standard-normal weights normalized to 1."""
    lo, hi = grid_range
    if size < 11:
        raise DataError("grid size must be at least 11")
    if not lo < hi:
        raise DataError(f"invalid grid range [{lo}, {hi}]")
    nodes = np.linspace(lo, hi, size)
    weights = norm.pdf(nodes)
    weights /= weights.sum()
    return QuadratureGrid(tuple(nodes), tuple(weights))


@dataclass(frozen=True)
class FitConfig:
    grid_size: int = 61
    grid_range: tuple[float, float] = (-6.0, 6.0)
    max_iter: int = 500
    tol: float = 1e-4
    newton_max_iter: int = 20
    newton_tol: float = 1e-8
    seed: int = 0

    def __post_init__(self) -> None:
        if self.grid_size < 11:
            raise DataError("grid size must be at least 11")
        if self.tol <= 0 or self.newton_tol <= 0:
            raise DataError("tolerances must be positive")
        if self.max_iter < 1 or self.newton_max_iter < 1:
            raise DataError("iteration caps must be at least 1")
        lo, hi = self.grid_range
        if not lo < hi:
            raise DataError(f"invalid grid range [{lo}, {hi}]")


@dataclass(frozen=True)
class FittedModel:
    items: tuple[ItemModel, ...]
    grid: QuadratureGrid
    converged: bool
    iterations: int
    final_loglik: float
    loglik_trace: tuple[float, ...]
    clamp_events: tuple[str, ...] = ()


@dataclass(frozen=True)
class ThetaEstimate:
    eap_mean: float
    posterior_sd: float


# ---------------------------------------------------------------------------
# Vectorized likelihood core
# ---------------------------------------------------------------------------

def _log_prob_tables(items: tuple[ItemModel, ...], nodes: np.ndarray
                     ) -> list[np.ndarray]:
    """Per item, the (grid size, categories) table of log probabilities."""
    return [log_category_probs(nodes, item) for item in items]


def _case_log_joint(codes: np.ndarray, tables: list[np.ndarray],
                    log_weights: np.ndarray) -> np.ndarray:
    """(cases, nodes) matrix of log prior + log pattern likelihood.

    ``codes`` is an integer matrix aligned with the tables; -1 marks a
    missing cell, which contributes nothing to the sum.
    """
    n = codes.shape[0]
    total = np.tile(log_weights, (n, 1))
    for i, table in enumerate(tables):
        col = codes[:, i]
        observed = col >= 0
        if observed.any():
            total[observed] += table[:, col[observed]].T
    return total


def _posteriors_and_loglik(log_joint: np.ndarray
                           ) -> tuple[np.ndarray, np.ndarray]:
    case_loglik = logsumexp(log_joint, axis=1)
    if not np.all(np.isfinite(case_loglik)):
        raise NumericalFailure(
            "a response pattern has zero likelihood at every grid node"
        )
    posterior = np.exp(log_joint - case_loglik[:, None])
    return posterior, case_loglik


def _codes_matrix(data: CategoricalDataset, items: tuple[ItemModel, ...]
                  ) -> np.ndarray:
    """Integer code matrix for the item-bound columns, validated."""
    cols = []
    for item in items:
        schema = data.schema_for(item.column)
        if not schema.is_categorical:
            raise DataError(
                f"column {item.column!r} is not categorical; discretize first"
            )
        if schema.arity != item.n_categories:
            raise DataError(
                f"column {item.column!r} has arity {schema.arity} but the "
                f"item models {item.n_categories} categories"
            )
        cols.append(data.codes(item.column))
    return np.column_stack(cols) if cols else np.empty((data.n_rows, 0), int)


@dataclass(frozen=True)
class EStepResult:
    """Expected counts per item plus posterior bookkeeping."""

    expected_counts: tuple[np.ndarray, ...]
    node_masses: np.ndarray
    marginal_loglik: float
    posteriors: np.ndarray = field(repr=False)


def e_step(data: CategoricalDataset, items: tuple[ItemModel, ...],
           grid: QuadratureGrid) -> EStepResult:
    """Posterior-weighted response counts r[i][node, category].

    Every feature column of ``data`` must be bound to exactly one item, in
    column order.
    """
    feature_names = [data.schemas[j].name for j in data.feature_indices]
    if [item.column for item in items] != feature_names:
        raise DataError(
            f"items are bound to {[i.column for i in items]!r} but the "
            f"feature columns are {feature_names!r}"
        )
    codes = _codes_matrix(data, tuple(items))
    return _e_step_core(codes, tuple(items), grid)


def _e_step_core(codes: np.ndarray, items: tuple[ItemModel, ...],
                 grid: QuadratureGrid) -> EStepResult:
    nodes = grid.node_array()
    log_w = np.log(grid.weight_array())
    tables = _log_prob_tables(items, nodes)
    log_joint = _case_log_joint(codes, tables, log_w)
    posterior, case_loglik = _posteriors_and_loglik(log_joint)
    counts = []
    for i, item in enumerate(items):
        col = codes[:, i]
        r = np.zeros((grid.size, item.n_categories))
        for k in range(item.n_categories):
            rows = col == k
            if rows.any():
                r[:, k] = posterior[rows].sum(axis=0)
        counts.append(r)
    return EStepResult(
        expected_counts=tuple(counts),
        node_masses=posterior.sum(axis=0),
        marginal_loglik=float(case_loglik.sum()),
        posteriors=posterior,
    )


# ---------------------------------------------------------------------------
# M-step: Newton–Raphson with step-halving in a constraint-free space
# ---------------------------------------------------------------------------
#
# Optimization coordinates per family ("x-space"):
#   2pl:  [log a, b]
#   grm:  [log a, b_1, log(b_2 - b_1), ..., log(b_{m-1} - b_{m-2})]
#   nrm:  [a_1..a_{m-1}, c_1..c_{m-1}]
# Slope positivity and boundary ordering hold by construction; the parameter
# boxes are enforced by projecting each iterate.

def _to_x(item: ItemModel) -> np.ndarray:
    p = item.params
    if isinstance(p, Binary2PL):
        return np.array([np.log(p.a), p.b])
    if isinstance(p, GradedItem):
        bs = np.asarray(p.boundaries)
        return np.concatenate([[np.log(p.a), bs[0]], np.log(np.diff(bs))])
    return item_param_vector(p)


def _from_x(item: ItemModel, x: np.ndarray) -> ItemModel:
    p = item.params
    if isinstance(p, Binary2PL):
        return ItemModel(item.column, Binary2PL(float(np.exp(x[0])), float(x[1])))
    if isinstance(p, GradedItem):
        bs = x[1] + np.concatenate([[0.0], np.cumsum(np.exp(x[2:]))])
        return ItemModel(
            item.column, GradedItem(float(np.exp(x[0])), tuple(bs))
        )
    m = len(p.slopes)
    return ItemModel(item.column, NominalItem(
        (0.0, *x[: m - 1]), (0.0, *x[m - 1:])
    ))


def _clamp_x(item: ItemModel, x: np.ndarray) -> np.ndarray:
    """Project an iterate into the parameter boxes, preserving structure."""
    p = item.params
    x = np.array(x, dtype=np.float64)
    if isinstance(p, Binary2PL):
        x[0] = np.clip(x[0], np.log(SLOPE_BOUNDS[0]), np.log(SLOPE_BOUNDS[1]))
        x[1] = np.clip(x[1], -LOCATION_BOUND, LOCATION_BOUND)
        return x
    if isinstance(p, GradedItem):
        x[0] = np.clip(x[0], np.log(SLOPE_BOUNDS[0]), np.log(SLOPE_BOUNDS[1]))
        bs = x[1] + np.concatenate([[0.0], np.cumsum(np.exp(x[2:]))])
        bs = np.clip(bs, -LOCATION_BOUND, LOCATION_BOUND)
        # clipping can collapse neighbors; restore a strict minimal gap
        for j in range(1, bs.size):
            bs[j] = max(bs[j], bs[j - 1] + _GAP_MIN)
        x[1] = bs[0]
        x[2:] = np.log(np.diff(bs))
        return x
    return np.clip(x, -LOCATION_BOUND, LOCATION_BOUND)


def _chain_gradient(item: ItemModel, x: np.ndarray, g_nat: np.ndarray
                    ) -> np.ndarray:
    """Natural-space gradient pulled back to x-space."""
    p = item.params
    if isinstance(p, Binary2PL):
        return np.array([np.exp(x[0]) * g_nat[0], g_nat[1]])
    if isinstance(p, GradedItem):
        g_b = g_nat[1:]
        # every boundary moves with b_1; boundary j moves with gap k<=j
        suffix = np.cumsum(g_b[::-1])[::-1]
        return np.concatenate([
            [np.exp(x[0]) * g_nat[0], suffix[0]],
            np.exp(x[2:]) * suffix[1:],
        ])
    return g_nat


def _make_objective(item: ItemModel, r: np.ndarray, nodes: np.ndarray):
    def fg(x: np.ndarray) -> tuple[float, np.ndarray]:
        candidate = _from_x(item, x)
        logpi = log_category_probs(nodes, candidate)
        f = float(np.sum(r * logpi))
        _, d_params = grad_log_probs(candidate.params, nodes)
        g_nat = np.einsum("qk,qkp->p", r, d_params)
        return f, _chain_gradient(item, x, g_nat)

    return fg


def _fd_hessian(fg, x: np.ndarray) -> np.ndarray:
    n = x.size
    hess = np.empty((n, n))
    for p in range(n):
        h = 1e-6 * max(1.0, abs(float(x[p])))
        probe = np.zeros(n)
        probe[p] = h
        _, g_hi = fg(x + probe)
        _, g_lo = fg(x - probe)
        hess[:, p] = (g_hi - g_lo) / (2.0 * h)
    return 0.5 * (hess + hess.T)


def _newton_maximize(fg, clamp, x0: np.ndarray, max_iter: int, tol: float,
                     context: str) -> np.ndarray:
    x = clamp(x0)
    f, g = fg(x)
    if not (np.isfinite(f) and np.all(np.isfinite(g))):
        raise NumericalFailure(f"{context}: non-finite objective at start")
    for _ in range(max_iter):
        scale = max(1.0, abs(f))
        if np.max(np.abs(g)) <= tol * scale:
            break
        hess = _fd_hessian(fg, x)
        delta = None
        try:
            candidate = np.linalg.solve(-hess, g)
            if np.all(np.isfinite(candidate)) and float(g @ candidate) > 0:
                delta = candidate
        except np.linalg.LinAlgError:
            delta = None
        if delta is None:
            # fall back to a conservatively scaled ascent step
            curvature = max(1.0, float(np.abs(np.diag(hess)).max()))
            delta = g / curvature
        step = 1.0
        improved = False
        for _ in range(60):
            x_new = clamp(x + step * delta)
            f_new, g_new = fg(x_new)
            if np.isfinite(f_new) and f_new > f:
                x, f, g = x_new, f_new, g_new
                improved = True
                break
            step *= 0.5
        if not improved:
            # flat to machine precision along every probe: either we are at
            # the optimum (possibly pressed against a bound) or genuinely
            # stuck with a large gradient
            if np.max(np.abs(g)) > 1e3 * tol * scale and not _at_bound(x, clamp):
                raise NewtonDiverged(
                    f"{context}: no improving step with gradient "
                    f"{np.max(np.abs(g)):.3e}"
                )
            break
    return x


def _at_bound(x: np.ndarray, clamp) -> bool:
    """True when the projection is actively holding some coordinate."""
    for sign in (1.0, -1.0):
        probe = x + sign * 1e-9
        if np.any(np.abs(clamp(probe) - probe) > 1e-12):
            return True
    return False


def _bound_events(item: ItemModel) -> list[str]:
    events = []
    p = item.params
    if isinstance(p, (Binary2PL, GradedItem)):
        if p.a <= SLOPE_BOUNDS[0] or p.a >= SLOPE_BOUNDS[1]:
            events.append(f"{item.column}: slope clamped at {p.a:g}")
        locs = [p.b] if isinstance(p, Binary2PL) else list(p.boundaries)
    else:
        locs = list(p.slopes[1:]) + list(p.intercepts[1:])
    if any(abs(v) >= LOCATION_BOUND for v in locs):
        events.append(f"{item.column}: location clamped at magnitude "
                      f"{LOCATION_BOUND:g}")
    return events


def m_step_item(item: ItemModel, expected_counts: np.ndarray,
                grid: QuadratureGrid, config: FitConfig | None = None
                ) -> ItemModel:
    """Improve one item's parameters against its expected counts."""
    updated, _ = _m_step(item, expected_counts, grid, config or FitConfig())
    return updated


def _m_step(item: ItemModel, expected_counts: np.ndarray,
            grid: QuadratureGrid, config: FitConfig
            ) -> tuple[ItemModel, list[str]]:
    r = np.asarray(expected_counts, dtype=np.float64)
    if r.shape != (grid.size, item.n_categories):
        raise DataError(
            f"expected counts for {item.column!r} must have shape "
            f"{(grid.size, item.n_categories)}, got {r.shape}"
        )
    if np.any(r < 0):
        raise DataError("expected counts must be nonnegative")
    totals = r.sum(axis=0)
    zeros = np.flatnonzero(totals == 0)
    if zeros.size:
        raise EmptyCategory(
            f"column {item.column!r}: category {int(zeros[0])} has zero "
            "expected count"
        )
    r = np.maximum(r, COUNT_FLOOR)
    fg = _make_objective(item, r, grid.node_array())
    x = _newton_maximize(
        fg, lambda v: _clamp_x(item, v), _to_x(item),
        config.newton_max_iter, config.newton_tol,
        context=f"item {item.column!r}",
    )
    updated = _from_x(item, x)
    return updated, _bound_events(updated)


# ---------------------------------------------------------------------------
# Full fit
# ---------------------------------------------------------------------------

def _initial_items(data: CategoricalDataset, config: FitConfig
                   ) -> tuple[ItemModel, ...]:
    """Starting parameters from observed category proportions.

    Slopes start at 1; boundary locations at the inverse-normal transform
    of the cumulative observed proportions; nominal parameters at zero with
    a seeded +-0.01 jitter to break the symmetry of the anchored softmax.
    """
    rng = np.random.default_rng(config.seed)
    items = []
    for j in data.feature_indices:
        schema = data.schemas[j]
        codes = data.codes(j)
        observed = codes[codes >= 0]
        assert schema.arity is not None
        counts = np.bincount(observed, minlength=schema.arity)
        proportions = counts / counts.sum()
        if schema.kind == "binary":
            p0 = float(np.clip(proportions[0], 1e-3, 1 - 1e-3))
            items.append(ItemModel(schema.name,
                                   Binary2PL(1.0, float(norm.ppf(p0)))))
        elif schema.kind == "ordinal":
            cum = np.clip(np.cumsum(proportions)[:-1], 1e-3, 1 - 1e-3)
            bs = norm.ppf(cum)
            for k in range(1, bs.size):
                bs[k] = max(bs[k], bs[k - 1] + 1e-3)
            items.append(ItemModel(schema.name, GradedItem(1.0, tuple(bs))))
        else:
            free = rng.uniform(-0.01, 0.01, size=2 * (schema.arity - 1))
            items.append(ItemModel(schema.name, NominalItem(
                (0.0, *free[: schema.arity - 1]),
                (0.0, *free[schema.arity - 1:]),
            )))
    return tuple(items)


def _check_fit_preconditions(data: CategoricalDataset) -> None:
    features = data.feature_indices
    if not features:
        raise DataError("dataset has no feature columns")
    max_arity = 2
    for j in features:
        schema = data.schemas[j]
        if not schema.is_categorical:
            raise DataError(
                f"feature column {schema.name!r} is continuous; "
                "discretize it before fitting"
            )
        assert schema.arity is not None
        max_arity = max(max_arity, schema.arity)
        codes = data.codes(j)
        observed = codes[codes >= 0]
        if observed.size == 0:
            raise UnobservedCategory(
                f"column {schema.name!r} has no observed values"
            )
        present = np.bincount(observed, minlength=schema.arity) > 0
        if not present.all():
            missing_code = int(np.flatnonzero(~present)[0])
            raise UnobservedCategory(
                f"column {schema.name!r}: category code {missing_code} "
                "never observed"
            )
    if data.n_rows < 10 * max_arity:
        raise InsufficientData(
            f"{data.n_rows} cases cannot support items with up to "
            f"{max_arity} categories (need at least {10 * max_arity})"
        )


def _canonicalize_orientation(items: tuple[ItemModel, ...]
                              ) -> tuple[ItemModel, ...]:
    """Fix the trait's sign when nothing in the model pins it.

    A model made purely of nominal items is invariant under jointly negating
    the trait and every slope (the prior is symmetric), so the two mirrored
    solutions fit identically.  Binary/graded items break the tie via their
    positive-slope constraint; when none are present, orient the fit so the
    summed slopes are nonnegative.
    """
    if not items or not all(isinstance(i.params, NominalItem) for i in items):
        return items
    total = sum(sum(item.params.slopes) for item in items)
    if total >= 0:
        return items
    return tuple(
        ItemModel(item.column, NominalItem(
            tuple(-s for s in item.params.slopes), item.params.intercepts
        ))
        for item in items
    )


def fit(data: CategoricalDataset, config: FitConfig | None = None
        ) -> FittedModel:
    """Fit all feature columns by EM over the quadrature grid."""
    config = config or FitConfig()
    _check_fit_preconditions(data)
    grid = build_grid(config.grid_size, config.grid_range)
    items = _initial_items(data, config)
    codes = _codes_matrix(data, items)
    trace: list[float] = []
    clamp_events: list[str] = []
    converged = False
    iterations = 0
    for _ in range(config.max_iter):
        iterations += 1
        es = _e_step_core(codes, items, grid)
        trace.append(es.marginal_loglik)
        new_items = []
        events: list[str] = []
        for i, item in enumerate(items):
            updated, item_events = _m_step(item, es.expected_counts[i],
                                           grid, config)
            new_items.append(updated)
            events.extend(item_events)
        delta = max(
            float(np.max(np.abs(item_param_vector(new) - item_param_vector(old))))
            for new, old in zip(new_items, items)
        )
        items = tuple(new_items)
        clamp_events = events  # keep the final iteration's active clamps
        if delta < config.tol:
            converged = True
            break
    items = _canonicalize_orientation(items)
    final = _e_step_core(codes, items, grid)
    trace.append(final.marginal_loglik)
    return FittedModel(
        items=items,
        grid=grid,
        converged=converged,
        iterations=iterations,
        final_loglik=final.marginal_loglik,
        loglik_trace=tuple(trace),
        clamp_events=tuple(clamp_events),
    )


# ---------------------------------------------------------------------------
# EAP scoring
# ---------------------------------------------------------------------------

def _eap_from_log_joint(log_joint: np.ndarray, nodes: np.ndarray
                        ) -> tuple[np.ndarray, np.ndarray]:
    posterior, _ = _posteriors_and_loglik(log_joint)
    means = posterior @ nodes
    second = posterior @ (nodes ** 2)
    variances = np.maximum(second - means ** 2, 0.0)
    return means, np.sqrt(variances)


def eap_score(pattern, model: FittedModel) -> ThetaEstimate:
    """Posterior mean and SD of the trait for one response pattern."""
    pattern = np.asarray(pattern, dtype=np.int64)
    if pattern.shape != (len(model.items),):
        raise DataError(
            f"pattern has {pattern.size} entries for {len(model.items)} items"
        )
    for code, item in zip(pattern, model.items):
        if code < -1 or code >= item.n_categories:
            raise CodeOutOfRange(
                f"code {int(code)} out of range for column {item.column!r}"
            )
    nodes = model.grid.node_array()
    tables = _log_prob_tables(model.items, nodes)
    log_joint = _case_log_joint(pattern[None, :], tables,
                                np.log(model.grid.weight_array()))
    means, sds = _eap_from_log_joint(log_joint, nodes)
    return ThetaEstimate(float(means[0]), float(sds[0]))


def eap_scores(data: CategoricalDataset, model: FittedModel
               ) -> tuple[np.ndarray, np.ndarray]:
    """EAP mean and posterior SD for every case in the dataset."""
    codes = _codes_matrix(data, model.items)
    nodes = model.grid.node_array()
    tables = _log_prob_tables(model.items, nodes)
    log_joint = _case_log_joint(codes, tables,
                                np.log(model.grid.weight_array()))
    return _eap_from_log_joint(log_joint, nodes)


# ---------------------------------------------------------------------------
# Persistence and diagnostics
# ---------------------------------------------------------------------------

def save_model(model: FittedModel, path: str | Path) -> None:
    """Write a fitted model to a versioned, human-readable JSON file."""
    payload = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "grid": {"nodes": list(model.grid.nodes),
                 "weights": list(model.grid.weights)},
        "items": [item_to_dict(item) for item in model.items],
        "converged": model.converged,
        "iterations": model.iterations,
        "final_loglik": model.final_loglik,
        "loglik_trace": list(model.loglik_trace),
        "clamp_events": list(model.clamp_events),
    }
    with open(path, "w") as handle:
        json.dump(payload, handle, indent=2, sort_keys=True)
        handle.write("\n")


def load_model(path: str | Path) -> FittedModel:
    try:
        payload = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: not a valid model file ({exc})") from None
    if not isinstance(payload, dict) or payload.get("format") != MODEL_FORMAT:
        raise DataError(f"{path}: not a model file")
    if payload.get("version") != MODEL_VERSION:
        raise DataError(
            f"{path}: unsupported model version {payload.get('version')!r}"
        )
    try:
        grid = QuadratureGrid(tuple(payload["grid"]["nodes"]),
                              tuple(payload["grid"]["weights"]))
        items = tuple(item_from_dict(entry) for entry in payload["items"])
        return FittedModel(
            items=items,
            grid=grid,
            converged=bool(payload["converged"]),
            iterations=int(payload["iterations"]),
            final_loglik=float(payload["final_loglik"]),
            loglik_trace=tuple(float(v) for v in payload["loglik_trace"]),
            clamp_events=tuple(str(v) for v in payload["clamp_events"]),
        )
    except KeyError as exc:
        raise DataError(f"{path}: model file missing key {exc}") from None


def _format_params(item: ItemModel) -> str:
    p = item.params
    if isinstance(p, Binary2PL):
        return f"a={p.a:.6f} b={p.b:.6f}"
    if isinstance(p, GradedItem):
        bs = " ".join(f"{b:.6f}" for b in p.boundaries)
        return f"a={p.a:.6f} b=[{bs}]"
    sl = " ".join(f"{v:.6f}" for v in p.slopes)
    ic = " ".join(f"{v:.6f}" for v in p.intercepts)
    return f"a=[{sl}] c=[{ic}]"


def diagnostics_report(model: FittedModel) -> str:
    """Structured text summary of a fit."""
    lines = [
        f"converged: {'yes' if model.converged else 'NO'} "
        f"({model.iterations} iterations)",
        f"final marginal log-likelihood: {model.final_loglik:.6f}",
        f"grid: {model.grid.size} nodes on "
        f"[{model.grid.nodes[0]:g}, {model.grid.nodes[-1]:g}]",
        f"items: {len(model.items)}",
    ]
    for item in model.items:
        lines.append(f"  {item.column} ({item.family}): {_format_params(item)}")
    if model.clamp_events:
        lines.append("clamping events:")
        lines.extend(f"  {event}" for event in model.clamp_events)
    else:
        lines.append("clamping events: none")
    return "\n".join(lines) + "\n"
