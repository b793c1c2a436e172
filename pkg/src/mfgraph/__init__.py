"""Mean-field jump processes on graphs with dynamically recolored edges:
finite n-particle simulator, limit solvers/samplers, and a statistical
verification harness for convergence rates and fluctuation laws."""

__version__ = "0.1.0"

from .backend import active_backend  # noqa: F401
from .model import (  # noqa: F401
    BaseMeasure,
    BetaSchedule,
    CltExampleSpec,
    EdgeKernel,
    ModelSpec,
    NodeKernel,
    StateSpaces,
    ValidationReport,
    aggregate_rate,
    build_clt_model,
    validate,
)
from .prm import PrmStream, StreamFamily, StreamId, thin  # noqa: F401
