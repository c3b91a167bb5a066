"""Entanglement-distillation picture of the protocol.

Builds the sifted, filtered bipartite state rho_AB, the rotation-averaged
operator Phi, and the Bell-diagonal probabilities, both from the numerical state
and from the closed-form expressions in the Pauli weights.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from qkd_rotsym import linalg
from qkd_rotsym.channel import KrausChannel, PauliCoefficients, decompose
from qkd_rotsym.errors import DegenerateChannelError
from qkd_rotsym.protocol import (
    KET_0Z,
    KET_1Z,
    ProtocolParams,
    base_filter,
    prepare_state,
    rotation,
)

DEGENERATE_TRACE = 1e-14

BELL_KETS = {
    "i": (np.kron(KET_0Z, KET_0Z) + np.kron(KET_1Z, KET_1Z)) / math.sqrt(2),  # Phi+
    "x": (np.kron(KET_0Z, KET_1Z) + np.kron(KET_1Z, KET_0Z)) / math.sqrt(2),  # Psi+
    "y": (np.kron(KET_0Z, KET_1Z) - np.kron(KET_1Z, KET_0Z)) / math.sqrt(2),  # Psi-
    "z": (np.kron(KET_0Z, KET_0Z) - np.kron(KET_1Z, KET_1Z)) / math.sqrt(2),  # Phi-
}


@dataclass(frozen=True)
class BipartiteState:
    matrix: np.ndarray = field(repr=False)
    norm_constant: float
    source: str
    M: int


@dataclass(frozen=True)
class BellDiagnostics:
    p_i: float
    p_x: float
    p_y: float
    p_z: float
    e_b: float
    e_p: float
    N_prime: float
    p_con: float

    @classmethod
    def from_probabilities(cls, p_i, p_x, p_y, p_z, N_prime, p_con):
        return cls(
            float(p_i), float(p_x), float(p_y), float(p_z),
            e_b=float(p_x + p_y), e_p=float(p_y + p_z),
            N_prime=float(N_prime), p_con=float(p_con),
        )

    def probabilities(self) -> np.ndarray:
        return np.array([self.p_i, self.p_x, self.p_y, self.p_z])

    def as_dict(self) -> dict:
        return {
            "p_i": self.p_i, "p_x": self.p_x, "p_y": self.p_y, "p_z": self.p_z,
            "e_b": self.e_b, "e_p": self.e_p, "N_prime": self.N_prime, "p_con": self.p_con,
        }


def _normalization_scale(M: int) -> float:
    # N' = 4 tr(unnormalized rho_AB) for M > 2 and N'' = 2 tr(...) for M = 2
    return 2.0 if M == 2 else 4.0


def psi_l(params: ProtocolParams, l: int) -> np.ndarray:
    """(|0_z>|phi_l> + |1_z>|phi_{-l}>) / sqrt(2)."""
    l = params.check_basis(l)
    plus = prepare_state(params, l, 0).ket
    minus = prepare_state(params, l, 1).ket
    return (linalg.tensor_product(KET_0Z, plus) + linalg.tensor_product(KET_1Z, minus)) / math.sqrt(2)


def _sandwich_b(op: np.ndarray, ket: np.ndarray) -> np.ndarray:
    """(I_A x op_B) applied to a 4-d ket."""
    return linalg.tensor_product(linalg.I2, op) @ ket


def _finish(unnormalized: np.ndarray, M: int, source: str) -> BipartiteState:
    trace = float(np.trace(unnormalized).real)
    if trace < DEGENERATE_TRACE:
        raise DegenerateChannelError(
            f"filtered state has trace {trace:.3e}: the channel annihilates every signal"
        )
    rho = unnormalized / trace
    rho = 0.5 * (rho + rho.conj().T)
    return BipartiteState(rho, trace, source, M)


def rho_ab_numerical(params: ProtocolParams, channel: KrausChannel) -> BipartiteState:
    """Average over the M bases and the Kraus operators of the filtered projector."""
    psi0 = psi_l(params, 0).reshape(2, 2)  # rows: A index, cols: B index
    f0 = base_filter(params.theta)
    angles = np.arange(params.M) * math.pi / params.M
    fwd = np.array([rotation(a) for a in angles])
    back = fwd.transpose(0, 2, 1)
    ops = np.array(channel.operators)
    # B-register operators F0 R_{-l pi/M} E_j R_{l pi/M}, batched over (l, j)
    kb = np.einsum("ab,lbc,jcd,lde->ljae", f0, back, ops, fwd).reshape(-1, 2, 2)
    # (I x K) psi, reshaped: psi[a, b] -> sum_c K[b, c] psi[a, c]
    vecs = np.einsum("nbc,ac->nab", kb, psi0).reshape(-1, 4)
    acc = vecs.T @ vecs.conj() / params.M
    return _finish(acc, params.M, "numerical")


def phi_operator(params: ProtocolParams) -> np.ndarray:
    """(1/M) sum_l P[(I x R_{2 l pi / M}) psi0], by direct averaging."""
    psi0 = psi_l(params, 0)
    acc = np.zeros((4, 4), dtype=complex)
    for l in range(params.M):
        acc += linalg.projector(_sandwich_b(rotation(2 * l * math.pi / params.M), psi0))
    return acc / params.M


def phi_closed_form(params: ProtocolParams) -> np.ndarray:
    """Closed form of Phi.

    For M > 2 the rotation average of |phi_+><phi_-| is R_theta / 2, giving
    ``(I x I + |0_z><1_z| x R_theta + |1_z><0_z| x R_-theta) / 4`` (unit trace).
    For M = 2 the average collapses to the pure projector on psi0.
    """
    if params.M == 2:
        return linalg.projector(psi_l(params, 0))
    th = params.theta
    return 0.25 * (
        linalg.I4
        + linalg.tensor_product(np.outer(KET_0Z, KET_1Z.conj()), rotation(th))
        + linalg.tensor_product(np.outer(KET_1Z, KET_0Z.conj()), rotation(-th))
    )


def rho_ab_closed_form(params: ProtocolParams, channel: KrausChannel) -> BipartiteState:
    """F0 sum_j [U_j P(psi0) U_j^dag + V_j Phi V_j^dag] F0^dag, acting on B."""
    coeffs = decompose(channel)
    psi0 = psi_l(params, 0)
    phi = phi_closed_form(params)
    f0 = linalg.tensor_product(linalg.I2, base_filter(params.theta))
    acc = np.zeros((4, 4), dtype=complex)
    for j in range(len(channel.operators)):
        u = linalg.tensor_product(linalg.I2, coeffs.commuting_part(j))
        v = linalg.tensor_product(linalg.I2, coeffs.anticommuting_part(j))
        acc += linalg.projector(u @ psi0) + v @ phi @ v.conj().T
    return _finish(f0 @ acc @ f0.conj().T, params.M, "closed_form")


def bell_diagnostics_numerical(state: BipartiteState) -> BellDiagnostics:
    """Bell-basis projections of a normalized rho_AB."""
    rho = state.matrix
    p = {k: float(np.vdot(v, rho @ v).real) for k, v in BELL_KETS.items()}
    return BellDiagnostics.from_probabilities(
        p["i"], p["x"], p["y"], p["z"],
        N_prime=_normalization_scale(state.M) * state.norm_constant,
        p_con=state.norm_constant,
    )


def bell_diagnostics_closed_form(params: ProtocolParams, coeffs: PauliCoefficients) -> BellDiagnostics:
    """Bell-diagonal probabilities straight from the Pauli weights.

    M > 2 and M = 2 are separate formulas; only sums of |a_r^j|^2 enter.
    """
    w = coeffs.weights()
    ai, ax, ay, az = w["i"], w["x"], w["y"], w["z"]
    s2 = math.sin(params.theta) ** 2
    c2 = math.cos(params.theta) ** 2
    if params.M > 2:
        norm = 2 * (s2 * ai + ax + (1 + c2) * ay + az)
        if norm < DEGENERATE_TRACE:
            raise DegenerateChannelError(f"normalization N' = {norm:.3e} vanishes")
        p_i = 2 * ai * s2 / norm
        p_x = s2 * (ax + az) / norm
        p_y = (2 * ay + c2 * (ax + az)) / norm
        p_z = (ax + az + 2 * c2 * ay) / norm
    else:
        norm = s2 * (ai + ax) + (1 + c2) * (ay + az)
        if norm < DEGENERATE_TRACE:
            raise DegenerateChannelError(f"normalization N'' = {norm:.3e} vanishes")
        p_i = ai * s2 / norm
        p_x = ax * s2 / norm
        p_y = (ay + az * c2) / norm
        p_z = (az + ay * c2) / norm
    return BellDiagnostics.from_probabilities(
        p_i, p_x, p_y, p_z, N_prime=norm, p_con=norm / _normalization_scale(params.M)
    )


def diagnostics(params: ProtocolParams, channel: KrausChannel, source: str = "closed_form") -> BellDiagnostics:
    if source == "closed_form":
        return bell_diagnostics_closed_form(params, decompose(channel))
    if source == "numerical":
        return bell_diagnostics_numerical(rho_ab_numerical(params, channel))
    raise ValueError(f"unknown diagnostics source {source!r}")


@dataclass(frozen=True)
class LemmaReport:
    M: int
    cos2_avg: float
    sin2_avg: float
    cross_avg: float
    rotation_sum_max: float

    @property
    def average_deviation(self) -> float:
        return max(abs(self.cos2_avg - 0.5), abs(self.sin2_avg - 0.5), abs(self.cross_avg))


def spherical_average_lemma_check(M: int) -> LemmaReport:
    """Discrete averages of cos^2, sin^2, cos*sin over angles 2 l pi / M, plus |sum_l R_{2 l pi/M}|."""
    if M < 2:
        raise ValueError(f"M must be >= 2, got {M}")
    angles = 2 * np.pi * np.arange(M) / M
    c, s = np.cos(angles), np.sin(angles)
    rot_sum = sum(rotation(a) for a in angles)
    return LemmaReport(
        M=M,
        cos2_avg=float(np.mean(c * c)),
        sin2_avg=float(np.mean(s * s)),
        cross_avg=float(np.mean(c * s)),
        rotation_sum_max=linalg.max_abs(rot_sum),
    )
