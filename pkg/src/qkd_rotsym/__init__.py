"""Generalized M-basis / theta-angle QKD protocol family (BB84, SARG04 and relatives).

Exact bit/phase error statistics for arbitrary single-qubit Kraus channels,
key-rate formulas, and a Monte Carlo executor of the prepare-and-measure
protocol.
"""

from qkd_rotsym.errors import DegenerateChannelError, DegenerateParameterError
from qkd_rotsym.protocol import ProtocolParams
from qkd_rotsym.channel import KrausChannel

__all__ = [
    "DegenerateChannelError",
    "DegenerateParameterError",
    "KrausChannel",
    "ProtocolParams",
]

__version__ = "0.1.0"
