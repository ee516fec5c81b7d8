"""Exception types shared across the package.

Each class carries the CLI exit code it maps to.
"""


class PrivReleaseError(Exception):
    exit_code = 1


class InvalidInputError(PrivReleaseError, ValueError):
    exit_code = 2


class NotFoundError(PrivReleaseError, LookupError):
    exit_code = 2


class ResourceLimitError(PrivReleaseError):
    exit_code = 3


class NumericError(PrivReleaseError, ArithmeticError):
    exit_code = 4
