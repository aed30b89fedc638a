"""Exact arithmetic for the sequence U(n) = r U(n-1) + U(n-2) and weighted-sum identities over it."""

from .errors import UsageError
from .identities import (
    IdentityId,
    IdentityInstance,
    IdentityReport,
    SweepConfig,
    SweepSummary,
    evaluate,
    lhs_master,
    rhs_master,
    sweep,
)
from .sequences import (
    FIBONACCI,
    LUCAS,
    PELL,
    PELL_LUCAS,
    Family,
    SequenceParams,
    resolve,
    term,
    term_fast,
    term_range,
)

__version__ = "0.1.0"
