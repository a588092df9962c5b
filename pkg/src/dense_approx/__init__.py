"""Approximation schemes for Partition and Knapsack, with exact oracles."""

from .core import (
    ApproxQuality,
    ApproxSet,
    IntegerMultiset,
    KnapsackInstance,
    KnapsackItem,
    OracleBudgetExceeded,
    StepFunction,
    exact_knapsack,
    exact_subset_sums,
    pointwise_max,
    pointwise_min,
    round_step_down,
)

__version__ = "0.1.0"
