from .base import Environment, MeanFunctionEnvironment, draw_demands
from .lowerbound import (
    LowerBoundEnvironment,
    LowerBoundGrids,
    g_of_c,
    kl_bernoulli,
    kl_sum,
    verify_lowerbound,
)
from .synthetic import LinearMonotone, LogisticPrice, MarketingAlternatives, Schedule, SqrtConcave

__all__ = [
    "Environment", "MeanFunctionEnvironment", "draw_demands",
    "LowerBoundEnvironment", "LowerBoundGrids", "g_of_c", "kl_bernoulli", "kl_sum",
    "verify_lowerbound", "LinearMonotone", "LogisticPrice", "MarketingAlternatives", "Schedule", "SqrtConcave",
]
