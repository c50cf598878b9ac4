"""Core value types: allocations, cost models, performances, utilities.

Everything here is an immutable value object; the operations are pure
functions of their inputs, so they are safe to share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError, DomainError

__all__ = [
    "Allocation",
    "CostModel",
    "PerformanceVector",
    "UtilitySpec",
    "FEASIBILITY_RTOL",
    "check_feasible",
    "utility_eval",
    "realize_allocation",
]

# Relative slack so that allocations costing exactly the budget stay
# feasible under floating-point accumulation.
FEASIBILITY_RTOL = 1e-9


def _as_readonly(values, name: str) -> np.ndarray:
    arr = np.array(values, dtype=float)  # copy: freezing must not alias the input
    if arr.ndim != 1:
        raise DomainError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if arr.size < 1:
        raise DomainError(f"{name} must have at least one entry")
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} contains non-finite entries")
    arr.flags.writeable = False
    return arr


def _check_k(expected: int, actual: int, what: str) -> None:
    if expected != actual:
        raise DimensionMismatchError(expected, actual, what)


@dataclass(frozen=True)
class Allocation:
    """Per-group sample counts; fractional entries are allowed.

    A fractional count ``u + v`` (``0 < v < 1``) means: collect ``u``
    samples, then one more with probability ``v``.  See
    :func:`realize_allocation`.
    """

    counts: np.ndarray

    def __post_init__(self):
        arr = _as_readonly(self.counts, "counts")
        if np.any(arr < 0):
            raise DomainError("counts must be non-negative")
        object.__setattr__(self, "counts", arr)

    @property
    def num_groups(self) -> int:
        return self.counts.size

    def add(self, group: int, amount: float) -> "Allocation":
        """Return a new allocation with ``amount`` more samples in ``group``."""
        counts = self.counts.copy()
        counts[group] += amount
        return Allocation(counts)

    @staticmethod
    def zeros(num_groups: int) -> "Allocation":
        return Allocation(np.zeros(num_groups))

    def to_dict(self) -> dict:
        return {"counts": [float(x) for x in self.counts]}

    @staticmethod
    def from_dict(doc: dict) -> "Allocation":
        return Allocation(doc["counts"])


@dataclass(frozen=True)
class CostModel:
    """Per-sample costs and the total acquisition budget.

    The budget may be zero, in which case only the empty allocation is
    feasible.
    """

    costs: np.ndarray
    budget: float

    def __post_init__(self):
        arr = _as_readonly(self.costs, "costs")
        if np.any(arr <= 0):
            raise DomainError("costs must be strictly positive")
        if not np.isfinite(self.budget) or self.budget < 0:
            raise DomainError("budget must be a non-negative finite number")
        object.__setattr__(self, "costs", arr)
        object.__setattr__(self, "budget", float(self.budget))

    @property
    def num_groups(self) -> int:
        return self.costs.size

    def spend(self, alloc: Allocation) -> float:
        """Total cost of an allocation."""
        _check_k(self.num_groups, alloc.num_groups, "allocation")
        return float(self.costs @ alloc.counts)

    def to_dict(self) -> dict:
        return {"costs": [float(x) for x in self.costs], "budget": self.budget}

    @staticmethod
    def from_dict(doc: dict) -> "CostModel":
        return CostModel(doc["costs"], doc["budget"])


@dataclass(frozen=True)
class PerformanceVector:
    """Group-level expected model performances, one entry per group."""

    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _as_readonly(self.values, "values"))

    @property
    def num_groups(self) -> int:
        return self.values.size


@dataclass(frozen=True)
class UtilitySpec:
    """Scalar preference over the vector of group performances.

    Evaluates ``sum_k a_k * t(M_k) - b * sum_k |t(M_k) - mean(t(M))|``
    where ``t`` is the identity or elementwise log transform, with an
    optional division by ``sum_k a_k``.  The parity penalty sums the
    per-group deviation terms over k.
    """

    weights: np.ndarray
    parity_penalty: float = 0.0
    transform: str = "identity"
    normalize: bool = False

    def __post_init__(self):
        arr = _as_readonly(self.weights, "weights")
        if np.any(arr < 0):
            raise DomainError("weights must be non-negative")
        if not np.any(arr > 0):
            raise DomainError("at least one weight must be positive")
        if self.transform not in ("identity", "log"):
            raise DomainError(f"unknown transform {self.transform!r}")
        if not np.isfinite(self.parity_penalty) or self.parity_penalty < 0:
            raise DomainError("parity_penalty must be non-negative")
        object.__setattr__(self, "weights", arr)
        object.__setattr__(self, "parity_penalty", float(self.parity_penalty))

    @property
    def num_groups(self) -> int:
        return self.weights.size

    @property
    def is_concave_monotone(self) -> bool:
        """True when the utility is concave and nondecreasing in M."""
        return self.parity_penalty == 0.0

    def to_dict(self) -> dict:
        return {
            "weights": [float(x) for x in self.weights],
            "parity_penalty": self.parity_penalty,
            "transform": self.transform,
            "normalize": self.normalize,
        }

    @staticmethod
    def from_dict(doc: dict) -> "UtilitySpec":
        return UtilitySpec(
            weights=doc["weights"],
            parity_penalty=doc.get("parity_penalty", 0.0),
            transform=doc.get("transform", "identity"),
            normalize=doc.get("normalize", False),
        )


def check_feasible(alloc: Allocation, cost: CostModel) -> bool:
    """True iff the allocation's total cost is within budget.

    Uses a relative slack of ``FEASIBILITY_RTOL`` so exact-budget
    allocations survive floating-point arithmetic.
    """
    spend = cost.spend(alloc)
    return spend <= cost.budget + FEASIBILITY_RTOL * max(cost.budget, 1.0)


def transform_values(spec: UtilitySpec, values: np.ndarray) -> np.ndarray:
    """Apply the spec's elementwise transform to raw performances."""
    if spec.transform == "log":
        if np.any(values <= 0):
            raise DomainError(
                "log transform requires strictly positive performances"
            )
        return np.log(values)
    return np.asarray(values, dtype=float)


def utility_eval(spec: UtilitySpec, perf: PerformanceVector) -> float:
    """Evaluate the utility of a performance vector.

    With ``parity_penalty == 0`` and the identity transform this is a
    plain weighted sum (a weighted mean when ``normalize`` is set).
    """
    _check_k(spec.num_groups, perf.num_groups, "performance vector")
    t = transform_values(spec, perf.values)
    value = float(spec.weights @ t)
    if spec.parity_penalty > 0:
        value -= spec.parity_penalty * float(np.sum(np.abs(t - t.mean())))
    if spec.normalize:
        value /= float(spec.weights.sum())
    return value


def realize_allocation(alloc: Allocation, rng_seed: int) -> np.ndarray:
    """Round a fractional allocation to integer counts, probabilistically.

    Entry k becomes ``floor(n_k) + Bernoulli(frac(n_k))``, so its
    expectation over seeds equals ``n_k``.  Deterministic given the seed.
    """
    rng = np.random.default_rng(rng_seed)
    base = np.floor(alloc.counts)
    frac = alloc.counts - base
    extra = rng.random(alloc.num_groups) < frac
    return (base + extra).astype(int)
