"""Reduction and reconstruction of invariant second-order dynamics on U x G."""
from . import bundle, integrate, lie, mechanical, reconstruction, reduction
from .bundle import ConnectionData, connection_form, curvature
from .errors import (ChartExitError, DecompositionError, DriftError, InputError,
                     NonFiniteError, RepresentationError, SymredError)
from .integrate import IntegratorConfig, integrate_full, integrate_reduced
from .mechanical import scenario_library
from .reconstruction import reconstruct
from .reduction import FullState, InvariantSODE, ReducedState

__version__ = "0.1.0"
