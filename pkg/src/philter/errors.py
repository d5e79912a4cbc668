"""Exception types shared across the package."""


class CapacityError(ValueError):
    """Requested register sizes exceed what the dense simulator will allocate."""


class SpectrumRangeError(ValueError):
    """Scaled eigenvalues fall outside the injective phase range (-2*pi, 0]."""


class NotHermitianError(ValueError):
    pass


class InsufficientPrecisionError(ValueError):
    """The energy register is too small for the estimated success probability."""


class NoOverlapDetected(RuntimeError):
    """Amplitude estimation returned zero; the ansatz shows no resolvable overlap."""


class ProtocolFailure(RuntimeError):
    """A sampling protocol exhausted its retries or iteration guard."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report
