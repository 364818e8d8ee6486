from .space import ParamSpace, Parameter
from .gp import GpError, GpSurrogate
from .acquisition import expected_improvement
from .pareto import dominates, hypervolume_2d, non_dominated_indices, pareto_front
from .mobo import MoboConfig, MultiObjectiveBO, scalarize, suggest
from .results import ResultsFile, Trial

__all__ = [
    "GpError",
    "GpSurrogate",
    "MoboConfig",
    "MultiObjectiveBO",
    "ParamSpace",
    "Parameter",
    "ResultsFile",
    "Trial",
    "dominates",
    "expected_improvement",
    "hypervolume_2d",
    "non_dominated_indices",
    "pareto_front",
    "scalarize",
    "suggest",
]
