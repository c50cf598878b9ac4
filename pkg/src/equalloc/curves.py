"""Analytic group-level learning curves.

A curve maps an allocation ``n`` to expected group performances via
``M_k = f(offset + sum_j gamma[k, j] * n_j)`` for a concave nondecreasing
``f``.  These serve as ground truth in experiments and as the substrate
for the batch-marginal accounting used by the greedy optimality tests.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Allocation, CostModel, PerformanceVector, UtilitySpec, utility_eval
from .errors import DomainError

__all__ = [
    "AnalyticCurve",
    "BatchLedger",
    "eval_perf",
    "marginal_batch",
    "is_separable",
    "build_batch_ledger",
    "batch_utilities",
]

_FORMS = ("sqrt", "log1p", "power")


@dataclass(frozen=True)
class AnalyticCurve:
    """Concave analytic learning curve with cross-group data weights.

    ``gamma[k, j]`` is the weight of group j's samples toward group k's
    performance; each row needs at least one positive entry.  ``form``
    picks the concave transform: sqrt, log1p, or ``x**power_exponent``
    with an exponent in (0, 1).
    """

    gamma: np.ndarray
    form: str = "sqrt"
    power_exponent: float = 0.5
    offset: float = 0.0

    def __post_init__(self):
        g = np.array(self.gamma, dtype=float)
        if g.ndim != 2 or g.shape[0] != g.shape[1]:
            raise DomainError(f"gamma must be square, got shape {g.shape}")
        if np.any(g < 0) or not np.all(np.isfinite(g)):
            raise DomainError("gamma entries must be finite and non-negative")
        if not np.all(g.max(axis=1) > 0):
            raise DomainError("every gamma row needs at least one positive entry")
        if self.form not in _FORMS:
            raise DomainError(f"unknown curve form {self.form!r}")
        if self.form == "power" and not 0.0 < self.power_exponent < 1.0:
            raise DomainError("power_exponent must lie in (0, 1)")
        if self.offset < 0:
            raise DomainError("offset must be non-negative")
        g.flags.writeable = False
        object.__setattr__(self, "gamma", g)
        object.__setattr__(self, "offset", float(self.offset))

    @property
    def num_groups(self) -> int:
        return self.gamma.shape[0]

    def transform(self, x: np.ndarray) -> np.ndarray:
        """Apply the concave form f elementwise."""
        if self.form == "sqrt":
            return np.sqrt(x)
        if self.form == "log1p":
            return np.log1p(x)
        return np.power(x, self.power_exponent)

    def perf_values(self, counts: np.ndarray) -> np.ndarray:
        """Raw performance array for a counts vector (no type wrapping)."""
        return self.transform(self.offset + self.gamma @ counts)

    def to_dict(self) -> dict:
        doc = {
            "gamma": [[float(x) for x in row] for row in self.gamma],
            "form": self.form,
            "offset": self.offset,
        }
        if self.form == "power":
            doc["power_exponent"] = self.power_exponent
        return doc

    @staticmethod
    def from_dict(doc: dict) -> "AnalyticCurve":
        return AnalyticCurve(
            gamma=doc["gamma"],
            form=doc.get("form", "sqrt"),
            power_exponent=doc.get("power_exponent", 0.5),
            offset=doc.get("offset", 0.0),
        )


def eval_perf(curve: AnalyticCurve, alloc: Allocation) -> PerformanceVector:
    """Expected group performances for an allocation."""
    if alloc.num_groups != curve.num_groups:
        raise DomainError(
            f"allocation has {alloc.num_groups} groups, curve has {curve.num_groups}"
        )
    return PerformanceVector(curve.perf_values(alloc.counts))


def marginal_batch(
    curve: AnalyticCurve,
    utility: UtilitySpec,
    alloc: Allocation,
    group: int,
    step_cost: float,
    cost: CostModel,
) -> float:
    """Utility gain from spending one more batch of ``step_cost`` on a group.

    The batch buys ``step_cost / costs[group]`` samples, so groups with
    expensive samples see smaller gains at equal spend.
    """
    if step_cost <= 0:
        raise DomainError("step_cost must be positive")
    if not 0 <= group < curve.num_groups:
        raise DomainError(f"group index {group} out of range [0, {curve.num_groups})")
    before = utility_eval(utility, eval_perf(curve, alloc))
    bumped = alloc.add(group, step_cost / cost.costs[group])
    after = utility_eval(utility, eval_perf(curve, bumped))
    return after - before


def batch_utilities(
    curve: AnalyticCurve,
    utility: UtilitySpec,
    counts_matrix: np.ndarray,
) -> np.ndarray:
    """Utilities for many allocations at once; ``counts_matrix`` is K x P.

    With the log transform, allocations where any performance is
    non-positive evaluate to -inf (the limit of the transform) instead of
    raising, so vectorized scans can skip them.
    """
    z = curve.offset + curve.gamma @ counts_matrix
    m = curve.transform(z)
    if utility.transform == "log":
        with np.errstate(divide="ignore", invalid="ignore"):
            t = np.where(m > 0, np.log(np.maximum(m, 1e-300)), -np.inf)
    else:
        t = m
    u = utility.weights @ t
    if utility.parity_penalty > 0:
        dev = np.abs(t - t.mean(axis=0, keepdims=True)).sum(axis=0)
        u = u - utility.parity_penalty * dev
    if utility.normalize:
        u = u / utility.weights.sum()
    return u


def is_separable(curve: AnalyticCurve) -> bool:
    """True iff gamma is diagonal, so no group's data affects another's curve.

    This is the sufficient condition under which the greedy algorithm is
    exactly optimal over batch-multiple allocations; non-diagonal
    interactions with allocation-independent partials would also qualify
    but are not detected here.
    """
    off_diag = curve.gamma - np.diag(np.diag(curve.gamma))
    return not np.any(off_diag != 0)


@dataclass(frozen=True)
class BatchLedger:
    """Marginal utility of the j-th batch from each group, at fixed spend.

    ``marginals[i][j-1]`` is the utility gain of group i's j-th batch,
    holding every other group at zero.  For separable concave curves each
    row is nonincreasing, which is the accounting fact behind the greedy
    optimality argument.
    """

    step_cost: float
    marginals: tuple

    def row(self, group: int) -> np.ndarray:
        return np.asarray(self.marginals[group])


def build_batch_ledger(
    curve: AnalyticCurve,
    utility: UtilitySpec,
    cost: CostModel,
    step_cost: float,
    num_batches: int,
) -> BatchLedger:
    """Tabulate per-group batch marginals m[i, j] for j = 1..num_batches."""
    if step_cost <= 0:
        raise DomainError("step_cost must be positive")
    rows = []
    for i in range(curve.num_groups):
        alloc = Allocation.zeros(curve.num_groups)
        row = []
        for _ in range(num_batches):
            gain = marginal_batch(curve, utility, alloc, i, step_cost, cost)
            row.append(gain)
            alloc = alloc.add(i, step_cost / cost.costs[i])
        rows.append(tuple(row))
    return BatchLedger(step_cost=float(step_cost), marginals=tuple(rows))
