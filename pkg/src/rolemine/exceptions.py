"""Exception types raised across the package."""


class RoleMiningError(Exception):
    """Base class for all errors raised by rolemine."""


class InstanceFormatError(RoleMiningError, ValueError):
    """An input file does not match the expected layout."""

    def __init__(self, message, line=None, path=None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}"
        if line is not None:
            where += f":{line}"
        super().__init__(f"{where}: {message}" if where else message)


class EmptyInstanceError(RoleMiningError, ValueError):
    """The instance contains no edges."""


class PolicyReferenceError(RoleMiningError, KeyError):
    """A policy names a user or permission that is not in the matrix."""

    def __str__(self):
        return str(self.args[0]) if self.args else "unresolvable identifier"


class ContractError(RoleMiningError, ValueError):
    """A documented precondition was violated by the caller."""


class UnsoundPolicyError(RoleMiningError):
    """A mined policy failed verification against its access matrix."""


class HardInstanceError(RoleMiningError):
    """The instance has more maximal bicliques than the exact path allows.

    Use the hard-instance pipeline instead.
    """

    def __init__(self, threshold):
        self.threshold = threshold
        super().__init__(
            f"more than {threshold:,} maximal bicliques; use mine_hard for this instance"
        )
