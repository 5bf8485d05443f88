"""
Core services: logging, optimization, random streams, worker pool.
"""

from .logging import get_logger, setup_logging
from .optim import OptimResult, covariance_from_hessian, hessian_from_score, maximize
from .parallel import parallel_map
from .random import make_rng, replicate_streams

__all__ = [
    "OptimResult",
    "covariance_from_hessian",
    "get_logger",
    "hessian_from_score",
    "make_rng",
    "maximize",
    "parallel_map",
    "replicate_streams",
    "setup_logging",
]
