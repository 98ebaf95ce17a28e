"""Frank-Wolfe methods for constraints of the form T + S (a subspace plus a bounded set)."""

from .core import (
    ActiveVertexSet,
    IterationRecord,
    NumericalFailure,
    SolveResult,
    StepKind,
    StepRule,
    TerminationReason,
    UfwConfig,
    UnsupportedRegion,
    compute_gaps,
    primal_gap_bound,
    uafw_solve,
    ufw_solve,
)
from .nucnorm import GenNucNormRegion, leading_singular_pair, lmo_nucnorm, pseudo_inverse
from .objective import LeastSquaresObjective, MaskedFrobeniusObjective, estimate_step_eta
from .region import DecomposedRegion, FullSpaceRegion, L1BallRegion, VertexHandle
from .synth import MatrixGenSpec, TrendGenSpec, gen_matrix_instance, gen_trend_instance
from .trendfilter import TrendFilterRegion, lmo_trend

__version__ = "0.1.0"
