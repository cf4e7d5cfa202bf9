"""Multi-level transfer subspace learning for temporal segmentation.

Deep NMF stacks for a labelled source sequence and an unlabelled target
sequence are coupled through per-layer self-representation coefficients,
solved with ADMM, fused into one affinity matrix and clustered.
"""

from cdms.admm import SolverOutput, TransferProblem, make_problem, solve
from cdms.clustering import fuse_affinity, normalized_cuts
from cdms.exceptions import ConfigError, DivergenceError, LoadError
from cdms.metrics import EvalReport, acc, evaluate, nmi
from cdms.tensor_io import SolverConfig

__all__ = [
    "ConfigError",
    "DivergenceError",
    "EvalReport",
    "LoadError",
    "SolverConfig",
    "SolverOutput",
    "TransferProblem",
    "acc",
    "evaluate",
    "fuse_affinity",
    "make_problem",
    "nmi",
    "normalized_cuts",
    "solve",
]

__version__ = "0.1.0"
