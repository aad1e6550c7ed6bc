"""Exception hierarchy shared across the package.

The CLI maps these onto distinct exit codes, so raising the right class
matters: validation problems (bad parameters, schema violations, broken
invariants) are :class:`ValidationError`; a diverging integration is
:class:`SimulationAbort`; plain I/O failures stay ``OSError``.
"""


class PvfreqError(Exception):
    """Base class for all package-specific errors."""


class ValidationError(PvfreqError, ValueError):
    """Input, parameter, or config-file contents violate a stated invariant."""


class SimulationAbort(PvfreqError, RuntimeError):
    """The integration blew up (frequency left the plausible band)."""
