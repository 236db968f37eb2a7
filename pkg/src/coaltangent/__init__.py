"""Lambda-coalescents near time zero: simulation, limit objects and GH machinery."""

from .errors import DomainError, NumericError
from .lambda_core import (
    LambdaModel,
    RateTable,
    cdi_constant,
    gamma_rate,
    lambda_rate,
    limit_jump_rate,
    total_rate,
)
from .coalescent import (
    CoalescentHistory,
    JumpPath,
    block_count,
    evans_space,
    extract_Z,
    frequency_of_one,
    simulate,
)
from .dendrogram import Dendrogram
from .ghp import gh_bounds, gh_exact, pointed_gh, pointed_ghp, prokhorov

__all__ = [
    "DomainError",
    "NumericError",
    "LambdaModel",
    "RateTable",
    "cdi_constant",
    "gamma_rate",
    "lambda_rate",
    "limit_jump_rate",
    "total_rate",
    "CoalescentHistory",
    "JumpPath",
    "block_count",
    "evans_space",
    "extract_Z",
    "frequency_of_one",
    "simulate",
    "Dendrogram",
    "gh_bounds",
    "gh_exact",
    "pointed_gh",
    "pointed_ghp",
    "prokhorov",
]

__version__ = "0.1.0"
