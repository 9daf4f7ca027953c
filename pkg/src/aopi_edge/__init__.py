"""Age-of-processed-information analysis and online control for edge video analytics."""

from .analytics import (
    aopi,
    aopi_fcfs,
    aopi_lcfsp,
    best_policy,
    min_lambda_for_target,
    min_mu_for_target,
    optimal_lambda_fcfs,
    policy_threshold,
)
from .model import AopiInputs, Policy, VideoConfig

__version__ = "0.1.0"
