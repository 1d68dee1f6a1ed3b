"""Errors raised by the reconstruction toolkit."""


class SmsfpError(Exception):
    """Base class for toolkit errors."""


class InvalidInputError(SmsfpError, ValueError):
    """Input rasters, parameters or files violate a documented precondition."""


class SolverError(SmsfpError):
    """The height system is singular beyond its gauge, or the solve diverged."""
