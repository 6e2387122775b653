"""Exception hierarchy shared by every module."""


class QidmError(Exception):
    """Base class for all errors raised by qidm."""


class ValidationError(QidmError, ValueError):
    """Malformed input: bad levels, foreign atoms, negative probabilities, ..."""


class NotARingMember(ValidationError):
    pass


class SignedInputError(ValidationError):
    pass


class AbsoluteContinuityError(ValidationError):
    def __init__(self, atom):
        self.atom = atom
        super().__init__(f"measure is not absolutely continuous at atom {atom!r}")


class InstanceTooLarge(ValidationError):
    pass


class NotAKernelError(ValidationError):
    pass


class InconclusiveError(QidmError):
    """The zero test landed in the band floats cannot decide, or no criterion applies."""

    def __init__(self, min_modulus, theta, reason=None):
        self.min_modulus = min_modulus
        self.theta = theta
        super().__init__(
            reason
            or f"minimum cf modulus {min_modulus:.3e} at theta={theta:.6f} is inconclusive; increase precision"
        )


class NotQidError(ValidationError):
    pass


class BranchTrackingError(QidmError):
    pass


class VariationUnboundedError(ValidationError):
    pass


class NotQidCandidateError(ValidationError):
    def __init__(self, member, theta, detail=""):
        self.member = member
        self.theta = theta
        msg = f"triplet of {sorted(member)!r} fails the cf screen at theta={theta!r}"
        super().__init__(msg + (f": {detail}" if detail else ""))


class ChainNotDecreasing(ValidationError):
    pass


class NotAPmfError(ValidationError):
    pass


class OverlapError(ValidationError):
    pass
