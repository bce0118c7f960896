"""Exception types raised by rescode."""


class RescodeError(Exception):
    """Base class for numerical-domain failures (CLI exit code 1)."""


class InvalidStateError(RescodeError, ValueError):
    pass


class InvalidChannelError(RescodeError, ValueError):
    pass


class SupportError(RescodeError, ValueError):
    """supp(rho) is not contained in supp(sigma)."""


class BracketError(RescodeError, ValueError):
    """A root/threshold search could not bracket its target."""


class MonotonicityError(RescodeError):
    """A function assumed monotone was observed to decrease."""


class ClosureError(RescodeError, ValueError):
    """A list of unitaries is not closed under multiplication."""


class SizeGuardError(RescodeError, ValueError):
    """Requested problem size exceeds a desk-scale guard."""
