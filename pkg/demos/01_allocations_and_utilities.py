"""
Allocations, budgets, and utilities
===================================

The core vocabulary: an Allocation says how many training samples each
group gets, a CostModel prices them against a budget, and a UtilitySpec
turns the resulting per-group performances into a single number the
model-builder wants to maximize.
"""

import numpy as np

from equalloc import (
    Allocation,
    CostModel,
    PerformanceVector,
    UtilitySpec,
    check_feasible,
    realize_allocation,
    utility_eval,
)

# Four groups; group 2 is twice as expensive to sample.
cost = CostModel(costs=[1.0, 1.0, 2.0, 1.0], budget=1000.0)

equal_counts = Allocation([200, 200, 200, 200])
print("equal counts feasible:", check_feasible(equal_counts, cost))
print("spend:", cost.spend(equal_counts))

# Spending the same budget on fewer, cheaper groups buys more samples.
concentrated = Allocation([500, 0, 0, 500])
print("concentrated feasible:", check_feasible(concentrated, cost))

# Fractional counts are fine: they mean "one more sample with this
# probability", and realization matches the expectation over seeds.
fractional = Allocation([2.25, 0.5])
draws = np.array([realize_allocation(fractional, seed) for seed in range(2000)])
print("fractional counts:", fractional.counts, "-> mean realized:", draws.mean(axis=0))

# A utility is a weighted view of per-group performances.
perf = PerformanceVector([25.5, 17.3, 17.3, 25.5])
u_mean = UtilitySpec(weights=[1, 1, 1, 1], normalize=True)
u_tilted = UtilitySpec(weights=[1, 1, 1, 1.5], normalize=True)
print("average performance:", round(utility_eval(u_mean, perf), 2))
print("group-3-tilted:", round(utility_eval(u_tilted, perf), 2))

# Penalizing performance spread directly can backfire: a vector that is
# better for EVERY group can score lower once the penalty is large.
u_parity = UtilitySpec(weights=[1, 1, 1], parity_penalty=10.0)
flat = PerformanceVector([1, 1, 1])
better = PerformanceVector([2, 3, 4])
print("flat scores", utility_eval(u_parity, flat),
      "vs dominated-but-balanced", utility_eval(u_parity, better))

# A concave transform is the gentler way to prefer balance: log utility
# still rewards every Pareto improvement.
u_log = UtilitySpec(weights=[1, 1, 1], transform="log")
print("log utility favors the better vector:",
      utility_eval(u_log, better) > utility_eval(u_log, flat))
