"""Exact and Monte Carlo verification of Burkholder-Davis-Gundy inequalities."""

from .errors import (
    BdgError,
    CapacityError,
    ConfigError,
    DomainError,
    StructuralError,
    UnsupportedError,
    ValidationError,
)
from .prob_space import (
    FilteredSpace,
    JumpLaw,
    MartingaleSpec,
    Process,
    StoppingTime,
    cond_expect,
    generate_martingale,
    is_martingale,
    stop_process,
)
from .reports import InequalityReport, to_csv, to_json

__version__ = "0.1.0"
