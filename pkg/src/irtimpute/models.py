"""Item response models for binary, ordinal, and nominal columns.

Three families, all in the logistic metric (no normal-ogive scaling
constant anywhere):

* binary two-parameter logistic: ``P(u=1 | t) = sigmoid(a * (t - b))``
* graded (cumulative-boundary) model for ordinal columns: boundary curves
  ``P*_k(t) = sigmoid(a * (t - b_k))`` with ``b_1 < ... < b_{m-1}``; the
  probability of category ``k`` is the difference ``P*_k - P*_{k+1}``
  (``P*_0 = 1``, ``P*_m = 0``)
* nominal divide-by-total model: ``P(k | t) = softmax_k(a_k * t + c_k)``
  with category 0 anchored at ``a_0 = c_0 = 0``

Probability evaluation is overflow-safe for arbitrarily large logits
(sign-split logistic, max-subtracted softmax).  Log-probabilities are
computed directly in log space so that tail categories stay accurate far
into the extremes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit, log_expit, logsumexp

from .errors import CodeOutOfRange, DataError

__all__ = [
    "Binary2PL",
    "GradedItem",
    "NominalItem",
    "ItemModel",
    "PatternScore",
    "prob_2pl",
    "prob_grm_boundary",
    "prob_grm_categories",
    "prob_nrm_categories",
    "category_probs",
    "log_category_probs",
    "pattern_loglik",
    "pattern_score",
    "item_param_vector",
    "item_with_params",
    "item_to_dict",
    "item_from_dict",
    "family_for_kind",
]


def _check_finite(name: str, values) -> None:
    if not np.all(np.isfinite(values)):
        raise DataError(f"{name} must be finite")


@dataclass(frozen=True)
class Binary2PL:
    """Slope ``a > 0`` and location ``b`` of a binary item."""

    a: float
    b: float

    def __post_init__(self) -> None:
        _check_finite("2PL parameters", [self.a, self.b])
        if self.a <= 0:
            raise DataError(f"2PL slope must be positive, got {self.a}")


@dataclass(frozen=True)
class GradedItem:
    """Slope ``a > 0`` and strictly increasing boundary locations.

    ``m - 1`` boundaries define ``m`` ordered categories.
    """

    a: float
    boundaries: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "boundaries", tuple(float(b) for b in self.boundaries)
        )
        _check_finite("graded parameters", (self.a, *self.boundaries))
        if self.a <= 0:
            raise DataError(f"graded slope must be positive, got {self.a}")
        if len(self.boundaries) < 1:
            raise DataError("graded item needs at least one boundary")
        if np.any(np.diff(self.boundaries) <= 0):
            raise DataError(
                f"boundaries must be strictly increasing, got "
                f"{self.boundaries}"
            )


@dataclass(frozen=True)
class NominalItem:
    """Per-category slopes and intercepts, category 0 anchored at zero."""

    slopes: tuple[float, ...]
    intercepts: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "slopes", tuple(float(v) for v in self.slopes))
        object.__setattr__(
            self, "intercepts", tuple(float(v) for v in self.intercepts)
        )
        _check_finite("nominal parameters", (*self.slopes, *self.intercepts))
        if len(self.slopes) != len(self.intercepts):
            raise DataError("slopes and intercepts must have equal length")
        if len(self.slopes) < 2:
            raise DataError("nominal item needs at least two categories")
        if self.slopes[0] != 0.0 or self.intercepts[0] != 0.0:
            raise DataError("category 0 must be anchored at slope 0, intercept 0")


ItemParams = Binary2PL | GradedItem | NominalItem

_FAMILY_BY_TYPE = {Binary2PL: "2pl", GradedItem: "grm", NominalItem: "nrm"}
_KIND_TO_FAMILY = {"binary": "2pl", "ordinal": "grm", "nominal": "nrm"}


def family_for_kind(kind: str) -> str:
    """Model family fitted to a column kind (binary/ordinal/nominal)."""
    try:
        return _KIND_TO_FAMILY[kind]
    except KeyError:
        raise DataError(f"no item family models columns of kind {kind!r}") from None


@dataclass(frozen=True)
class ItemModel:
    """A fitted (or hand-set) item: a column name plus family parameters."""

    column: str
    params: ItemParams

    @property
    def family(self) -> str:
        return _FAMILY_BY_TYPE[type(self.params)]

    @property
    def n_categories(self) -> int:
        p = self.params
        if isinstance(p, Binary2PL):
            return 2
        if isinstance(p, GradedItem):
            return len(p.boundaries) + 1
        return len(p.slopes)


# ---------------------------------------------------------------------------
# Probability functions
# ---------------------------------------------------------------------------

def prob_2pl(theta, a: float, b: float):
    """P(u = 1 | theta) for a binary two-parameter logistic item."""
    theta = np.asarray(theta, dtype=np.float64)
    out = expit(a * (theta - b))
    return float(out) if out.ndim == 0 else out


def prob_grm_boundary(theta, a: float, b_k: float):
    """Boundary curve P(X >= k | theta) = sigmoid(a * (theta - b_k))."""
    theta = np.asarray(theta, dtype=np.float64)
    out = expit(a * (theta - b_k))
    return float(out) if out.ndim == 0 else out


def _grm_pstar(theta: np.ndarray, item: GradedItem) -> np.ndarray:
    """Boundary probabilities with the fixed end columns 1 and 0 attached.

    Shape ``theta.shape + (m + 1,)``.
    """
    z = item.a * (theta[..., None] - np.asarray(item.boundaries))
    pstar = np.empty(theta.shape + (len(item.boundaries) + 2,))
    pstar[..., 0] = 1.0
    pstar[..., -1] = 0.0
    pstar[..., 1:-1] = expit(z)
    return pstar


def prob_grm_categories(theta, item: GradedItem):
    """Category probabilities of a graded item; shape ``(..., m)``.

    Adjacent boundary differences: nonnegative by monotonicity of the
    logistic, summing to 1 exactly up to float addition.
    """
    theta = np.asarray(theta, dtype=np.float64)
    pstar = _grm_pstar(theta, item)
    return pstar[..., :-1] - pstar[..., 1:]


def prob_nrm_categories(theta, item: NominalItem):
    """Category probabilities of a nominal item; shape ``(..., m)``."""
    theta = np.asarray(theta, dtype=np.float64)
    logits = (
        theta[..., None] * np.asarray(item.slopes)
        + np.asarray(item.intercepts)
    )
    logits -= logits.max(axis=-1, keepdims=True)
    np.exp(logits, out=logits)
    logits /= logits.sum(axis=-1, keepdims=True)
    return logits


def category_probs(theta, item: ItemModel | ItemParams):
    """Probability of every category at ``theta``; shape ``(..., m)``."""
    p = item.params if isinstance(item, ItemModel) else item
    if isinstance(p, Binary2PL):
        theta = np.asarray(theta, dtype=np.float64)
        z = p.a * (theta[..., None] - p.b)
        return np.concatenate([expit(-z), expit(z)], axis=-1)
    if isinstance(p, GradedItem):
        return prob_grm_categories(theta, p)
    return prob_nrm_categories(theta, p)


def log_category_probs(theta, item: ItemModel | ItemParams):
    """``log`` of :func:`category_probs`, evaluated directly in log space.

    A category whose probability underflows to zero yields ``-inf`` rather
    than a spurious finite value.
    """
    p = item.params if isinstance(item, ItemModel) else item
    theta = np.asarray(theta, dtype=np.float64)
    if isinstance(p, Binary2PL):
        z = p.a * (theta[..., None] - p.b)
        return np.concatenate([log_expit(-z), log_expit(z)], axis=-1)
    if isinstance(p, GradedItem):
        bs = np.asarray(p.boundaries)
        z = p.a * (theta[..., None] - bs)
        m = len(bs) + 1
        out = np.empty(theta.shape + (m,))
        out[..., 0] = log_expit(-z[..., 0])
        out[..., m - 1] = log_expit(z[..., m - 2])
        if m > 2:
            # log(sigmoid(x) - sigmoid(y)) for x > y, rearranged so each
            # factor is evaluated in log space:
            #   sigmoid(x) - sigmoid(y) = sigmoid(x) sigmoid(-y) (1 - e^(y-x))
            x = z[..., :-1]
            y = z[..., 1:]
            with np.errstate(divide="ignore"):
                out[..., 1:-1] = (
                    log_expit(x) + log_expit(-y) + np.log1p(-np.exp(y - x))
                )
        return out
    logits = (
        theta[..., None] * np.asarray(p.slopes) + np.asarray(p.intercepts)
    )
    return logits - logsumexp(logits, axis=-1, keepdims=True)


# ---------------------------------------------------------------------------
# Free-parameter vectors
#
# Every routine that views an item as a flat vector uses the same layout:
#   2pl:  [a, b]
#   grm:  [a, b_1, ..., b_{m-1}]
#   nrm:  [a_1, ..., a_{m-1}, c_1, ..., c_{m-1}]   (anchored zeros excluded)
# ---------------------------------------------------------------------------

def item_param_vector(item: ItemModel | ItemParams) -> np.ndarray:
    p = item.params if isinstance(item, ItemModel) else item
    if isinstance(p, Binary2PL):
        return np.array([p.a, p.b])
    if isinstance(p, GradedItem):
        return np.array([p.a, *p.boundaries])
    return np.array([*p.slopes[1:], *p.intercepts[1:]])


def item_with_params(item: ItemModel, vector: np.ndarray) -> ItemModel:
    """Rebuild an item of the same family/column from a flat vector."""
    vector = np.asarray(vector, dtype=np.float64)
    p = item.params
    if isinstance(p, Binary2PL):
        params: ItemParams = Binary2PL(float(vector[0]), float(vector[1]))
    elif isinstance(p, GradedItem):
        params = GradedItem(float(vector[0]), tuple(vector[1:]))
    else:
        m = len(p.slopes)
        params = NominalItem(
            (0.0, *vector[: m - 1]), (0.0, *vector[m - 1 :])
        )
    return ItemModel(item.column, params)


# ---------------------------------------------------------------------------
# Pattern likelihood and analytic score
# ---------------------------------------------------------------------------

def _check_code(code: int, item: ItemModel) -> None:
    if code < -1 or code >= item.n_categories:
        raise CodeOutOfRange(
            f"code {code} out of range for column {item.column!r} with "
            f"{item.n_categories} categories"
        )


def pattern_loglik(pattern, items: tuple[ItemModel, ...], theta: float) -> float:
    """Log-likelihood of one response pattern at a fixed trait value.

    ``pattern`` is a code vector aligned with ``items``; missing cells
    (code -1) contribute nothing — they are marginalized out.
    """
    total = 0.0
    for code, item in zip(pattern, items, strict=True):
        code = int(code)
        _check_code(code, item)
        if code == -1:
            continue
        total += float(log_category_probs(theta, item)[code])
    return total


def grad_log_probs(
    params: ItemParams, theta: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Derivatives of the log category probabilities at each theta.

    Returns ``(d_theta, d_params)`` with shapes ``(T, m)`` and ``(T, m, P)``
    where ``P`` is the free-parameter count: the gradient of
    ``log P(category k | theta_t)`` with respect to theta and to the item's
    parameter vector (layout of :func:`item_param_vector`).
    """
    theta = np.atleast_1d(np.asarray(theta, dtype=np.float64))
    T = theta.shape[0]
    if isinstance(params, Binary2PL):
        z = params.a * (theta - params.b)
        prob1 = expit(z)
        # d log P(k)/dz = k - P(1); chain through z = a (theta - b)
        resid = np.stack([-prob1, 1.0 - prob1], axis=1)
        d_theta = params.a * resid
        d_params = np.empty((T, 2, 2))
        d_params[:, :, 0] = resid * (theta - params.b)[:, None]
        d_params[:, :, 1] = -params.a * resid
        return d_theta, d_params
    if isinstance(params, GradedItem):
        bs = np.asarray(params.boundaries)
        m = len(bs) + 1
        pstar = _grm_pstar(theta, params)
        pi = pstar[:, :-1] - pstar[:, 1:]
        # density of each boundary curve, with flat virtual boundaries at
        # the ends (s_0 = s_m = 0)
        s = pstar * (1.0 - pstar)
        s[:, 0] = 0.0
        s[:, -1] = 0.0
        tb = np.zeros((T, m + 1))
        tb[:, 1:-1] = (theta[:, None] - bs) * s[:, 1:-1]
        with np.errstate(divide="ignore", invalid="ignore"):
            inv_pi = np.where(pi > 0, 1.0 / np.maximum(pi, 1e-300), 0.0)
        d_theta = params.a * (s[:, :-1] - s[:, 1:]) * inv_pi
        d_params = np.zeros((T, m, m))
        d_params[:, :, 0] = (tb[:, :-1] - tb[:, 1:]) * inv_pi
        ks = np.arange(1, m)
        # d pi_k / d b_j is nonzero only for j = k (-a s_j) and j = k+1 (+a s_j)
        d_params[:, ks, ks] = -params.a * s[:, 1:-1] * inv_pi[:, 1:]
        d_params[:, ks - 1, ks] = params.a * s[:, 1:-1] * inv_pi[:, :-1]
        return d_theta, d_params
    slopes = np.asarray(params.slopes)
    m = len(slopes)
    pi = prob_nrm_categories(theta, params)
    d_theta = slopes[None, :] - (pi @ slopes)[:, None]
    delta = np.eye(m)[None, :, 1:] - pi[:, None, 1:]
    d_params = np.concatenate([theta[:, None, None] * delta, delta], axis=2)
    return d_theta, d_params


@dataclass(frozen=True)
class PatternScore:
    """Analytic gradient of a pattern's log-likelihood.

    ``theta`` is the derivative with respect to the trait; ``items`` holds
    one gradient vector per item (parameter layout of
    :func:`item_param_vector`), zero for items with a missing response.
    """

    theta: float
    items: tuple[np.ndarray, ...]


def pattern_score(
    pattern, items: tuple[ItemModel, ...], theta: float
) -> PatternScore:
    """Gradient of :func:`pattern_loglik` in theta and all item parameters."""
    theta_arr = np.array([float(theta)])
    total_dtheta = 0.0
    grads: list[np.ndarray] = []
    for code, item in zip(pattern, items, strict=True):
        code = int(code)
        _check_code(code, item)
        n_free = item_param_vector(item).shape[0]
        if code == -1:
            grads.append(np.zeros(n_free))
            continue
        d_theta, d_params = grad_log_probs(item.params, theta_arr)
        total_dtheta += float(d_theta[0, code])
        grads.append(d_params[0, code].copy())
    return PatternScore(total_dtheta, tuple(grads))


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def item_to_dict(item: ItemModel) -> dict:
    p = item.params
    if isinstance(p, Binary2PL):
        body: dict = {"a": p.a, "b": p.b}
    elif isinstance(p, GradedItem):
        body = {"a": p.a, "boundaries": list(p.boundaries)}
    else:
        body = {"slopes": list(p.slopes), "intercepts": list(p.intercepts)}
    return {"column": item.column, "family": item.family, **body}


def item_from_dict(entry: dict) -> ItemModel:
    try:
        family = entry["family"]
        column = entry["column"]
        if family == "2pl":
            params: ItemParams = Binary2PL(entry["a"], entry["b"])
        elif family == "grm":
            params = GradedItem(entry["a"], tuple(entry["boundaries"]))
        elif family == "nrm":
            params = NominalItem(
                tuple(entry["slopes"]), tuple(entry["intercepts"])
            )
        else:
            raise DataError(f"unknown item family {family!r}")
    except KeyError as exc:
        raise DataError(f"item entry missing key {exc}") from None
    return ItemModel(column, params)
