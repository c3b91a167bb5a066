class DegenerateParameterError(ValueError):
    """Raised for protocol parameters at which no security statement exists (M=2, theta=pi/2)."""


class DegenerateChannelError(ValueError):
    """Raised when a channel annihilates every signal after Bob's filter."""
