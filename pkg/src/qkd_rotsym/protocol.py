"""The protocol family: rotations, the 2M signal states, Bob's filters and measurements.

Everything is written in the x-basis working representation, ``|0_x> = e0`` and
``|1_x> = e1``.  In it the rotation ``R_beta = exp(-i beta sigma_y)`` is the real
SO(2) matrix and ``|0_z>, |1_z> = (|0_x> +- |1_x>) / sqrt(2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np

from qkd_rotsym import linalg
from qkd_rotsym.errors import DegenerateParameterError

if TYPE_CHECKING:
    from qkd_rotsym.channel import KrausChannel

SIFTING_MODES = ("generic", "basis_free")

KET_0X = np.array([1.0, 0.0], dtype=complex)
KET_1X = np.array([0.0, 1.0], dtype=complex)
KET_0Z = (KET_0X + KET_1X) / math.sqrt(2)
KET_1Z = (KET_0X - KET_1X) / math.sqrt(2)
for _k in (KET_0X, KET_1X, KET_0Z, KET_1Z):
    _k.flags.writeable = False


@dataclass(frozen=True)
class ProtocolParams:
    """One member of the family: ``M`` basis pairs separated by angle ``theta``."""

    M: int
    theta: float
    sifting_mode: str = "generic"

    def __post_init__(self):
        if isinstance(self.M, bool) or int(self.M) != self.M:
            raise ValueError(f"M must be an integer, got {self.M!r}")
        object.__setattr__(self, "M", int(self.M))
        object.__setattr__(self, "theta", float(self.theta))
        if self.M < 2:
            raise ValueError(f"M must be >= 2, got {self.M}")
        if not (0.0 < self.theta <= math.pi / 2 + 1e-12):
            raise ValueError(f"theta must lie in (0, pi/2], got {self.theta}")
        if self.sifting_mode not in SIFTING_MODES:
            raise ValueError(f"sifting_mode must be one of {SIFTING_MODES}, got {self.sifting_mode!r}")

    @property
    def degenerate(self) -> bool:
        """M=2 at theta=pi/2: both bases carry the same two orthogonal states."""
        return self.M == 2 and math.isclose(self.theta, math.pi / 2, abs_tol=1e-12)

    def require_nondegenerate(self):
        if self.degenerate:
            raise DegenerateParameterError(
                "M=2 with theta=pi/2 is degenerate: the phase error rate e_p goes to "
                "infinity and QKD cannot be performed"
            )

    def check_basis(self, m: int) -> int:
        if isinstance(m, bool) or int(m) != m or not (0 <= m < self.M):
            raise ValueError(f"basis index must be in [0, {self.M}), got {m!r}")
        return int(m)


@dataclass(frozen=True)
class SignalState:
    basis_index: int
    bit: int
    ket: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class FilterOperator:
    basis_index: int
    matrix: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class MeasurementSetup:
    """One of Bob's two projective measurements for basis ``k``.

    ``outcomes`` pairs each orthonormal ket with its interpretation: ``None`` for
    inconclusive, otherwise the concluded bit.
    """

    basis_index: int
    choice: str
    outcomes: tuple

    def projectors(self) -> list[np.ndarray]:
        return [linalg.projector(ket) for ket, _ in self.outcomes]

    @property
    def conclusive_ket(self) -> np.ndarray:
        return next(ket for ket, result in self.outcomes if result is not None)

    @property
    def conclusive_bit(self) -> int:
        return next(result for _, result in self.outcomes if result is not None)


def rotation(beta: float) -> np.ndarray:
    """``R_beta = exp(-i beta sigma_y)``; rotation(pi/2) maps |0_x> to |1_x>."""
    c, s = math.cos(beta), math.sin(beta)
    return np.array([[c, -s], [s, c]], dtype=complex)


def base_ket(theta: float, bit: int) -> np.ndarray:
    sign = 1.0 if bit == 0 else -1.0
    return math.cos(theta / 2) * KET_0X + sign * math.sin(theta / 2) * KET_1X


def prepare_state(params: ProtocolParams, m: int, bit: int) -> SignalState:
    """Alice's state ``|phi_{+m}>`` (bit 0) or ``|phi_{-m}>`` (bit 1)."""
    m = params.check_basis(m)
    if bit not in (0, 1):
        raise ValueError(f"bit must be 0 or 1, got {bit!r}")
    ket = linalg.multiply(rotation(m * math.pi / params.M), base_ket(params.theta, bit))
    return SignalState(m, int(bit), ket)


def base_filter(theta: float) -> np.ndarray:
    """F0 = sin(theta/2)|0_x><0_x| + cos(theta/2)|1_x><1_x|."""
    return np.diag([math.sin(theta / 2), math.cos(theta / 2)]).astype(complex)


def filter_operator(params: ProtocolParams, l: int) -> FilterOperator:
    """Bob's rotated filter ``F_l = F0 R_{-l pi / M}``."""
    l = params.check_basis(l)
    mat = linalg.multiply(base_filter(params.theta), rotation(-l * math.pi / params.M))
    return FilterOperator(l, mat)


def measurement_setups(params: ProtocolParams, k: int) -> list[MeasurementSetup]:
    """The two projective measurements Bob may pick in basis ``k``.

    Outcome ``R_{pi/2}|phi_k>`` rules out ``|phi_k>`` and so concludes bit 1;
    outcome ``R_{pi/2}|phi_{-k}>`` concludes bit 0.
    """
    k = params.check_basis(k)
    quarter = rotation(math.pi / 2)
    plus = prepare_state(params, k, 0).ket
    minus = prepare_state(params, k, 1).ket
    return [
        MeasurementSetup(k, "plus", ((plus, None), (quarter @ plus, 1))),
        MeasurementSetup(k, "minus", ((minus, None), (quarter @ minus, 0))),
    ]


def outcome_probabilities(params: ProtocolParams, channel: "KrausChannel"):
    """Exact (p_conclusive, p_conclusive_and_wrong) by enumeration.

    Averages uniformly over Alice's (m, bit) and Bob's setup, with Bob in the
    matching basis.  Used as the brute-force POVM reference.
    """
    weight = 1.0 / (2 * params.M * 2)
    p_con = 0.0
    p_err = 0.0
    for m in range(params.M):
        setups = measurement_setups(params, m)
        for bit in (0, 1):
            ket = prepare_state(params, m, bit).ket
            for E in channel.operators:
                out = E @ ket
                for setup in setups:
                    for proj_ket, result in setup.outcomes:
                        if result is None:
                            continue
                        prob = abs(np.vdot(proj_ket, out)) ** 2
                        p_con += weight * prob
                        if result != bit:
                            p_err += weight * prob
    return p_con, p_err


def conclusive_probability(params: ProtocolParams, channel: "KrausChannel") -> float:
    """Probability that a basis-matched signal gives a conclusive result."""
    return outcome_probabilities(params, channel)[0]
