"""
Exception hierarchy for panova
Every failure raised by the library derives from PanovaError so callers
(and the CLI exit-code mapping) can tell input problems from numerical ones.

File location: ./panova/errors.py
"""

# imports
from typing import Any, Dict, List, Optional


class PanovaError(Exception):
    """Base class for all panova failures"""


class InvalidInputError(PanovaError):
    """Inputs violate a documented invariant (simplex weights, ragged trees, empty mixtures, ...)"""


class ConfigError(PanovaError):
    """Run configuration or scenario file is unusable"""


class NumericalError(PanovaError):
    """
    A numerical procedure failed.

    Carries an optional iteration trace (IRLS deviance / score history) so the
    caller can log it or decide on a fallback.
    """

    def __init__(self, message: str, trace: Optional[List[Dict[str, Any]]] = None):
        super().__init__(message)
        self.trace = trace or []


class ReplicateError(PanovaError):
    """A bootstrap replicate could not be produced within the redraw budget"""

    def __init__(self, message: str, replicate_log: Optional[List[Dict[str, Any]]] = None):
        super().__init__(message)
        self.replicate_log = replicate_log or []
