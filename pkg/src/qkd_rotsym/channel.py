"""Single-qubit Kraus channels, their Pauli decomposition and standard instances.

Pauli operators are the physical ones written in the x-basis working
representation: sigma_x is diagonal there (its eigenkets are |0_x>, |1_x>),
sigma_z has eigenkets |0_z>, |1_z>, and sigma_y = i(|1_x><0_x| - |0_x><1_x|).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from qkd_rotsym import linalg
from qkd_rotsym.protocol import KET_0Z, KET_1Z, rotation

COMPLETENESS_TOL = 1e-10
MAX_RESAMPLES = 32

SIGMA_I = np.eye(2, dtype=complex)
SIGMA_X = np.array([[1, 0], [0, -1]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_LABELS = ("i", "x", "y", "z")


def pauli_basis() -> tuple[np.ndarray, ...]:
    # looked up at call time so tests can swap a basis element
    return (SIGMA_I, SIGMA_X, SIGMA_Y, SIGMA_Z)


@dataclass(frozen=True)
class KrausChannel:
    operators: tuple
    label: str = "custom"
    spec: dict | None = field(default=None, compare=False)

    def __post_init__(self):
        ops = tuple(linalg.as_matrix(E) for E in self.operators)
        if not ops:
            raise ValueError("a channel needs at least one Kraus operator")
        for E in ops:
            if E.shape != (2, 2):
                raise ValueError(f"Kraus operators must be 2x2, got {E.shape}")
            E.flags.writeable = False
        object.__setattr__(self, "operators", ops)
        residual = self.completeness_residual()
        if residual > COMPLETENESS_TOL:
            raise ValueError(
                f"channel {self.label!r} is not trace preserving: "
                f"|sum E^dag E - I|_max = {residual:.3e}"
            )

    def completeness_residual(self) -> float:
        total = sum(E.conj().T @ E for E in self.operators)
        return linalg.max_abs(total - SIGMA_I)

    def conjugated(self, beta: float) -> "KrausChannel":
        """The channel {R_{-beta} E_j R_beta}."""
        r, r_inv = rotation(beta), rotation(-beta)
        return KrausChannel(
            tuple(r_inv @ E @ r for E in self.operators), label=f"{self.label}@rot({beta:g})"
        )

    def apply(self, rho: np.ndarray) -> np.ndarray:
        return sum(E @ rho @ E.conj().T for E in self.operators)

    def to_json(self) -> dict:
        if self.spec is not None:
            return dict(self.spec)
        return {
            "type": "custom",
            "kraus": [
                [[[float(z.real), float(z.imag)] for z in row] for row in E]
                for E in self.operators
            ],
        }


@dataclass(frozen=True)
class PauliCoefficients:
    """Row j holds (a_i, a_x, a_y, a_z) for Kraus operator j."""

    coeffs: np.ndarray

    def weights(self) -> dict[str, float]:
        """Summed squared moduli sum_j |a_r^j|^2 keyed by r."""
        w = np.sum(np.abs(self.coeffs) ** 2, axis=0)
        return dict(zip(PAULI_LABELS, (float(v) for v in w)))

    def reconstruct(self, j: int) -> np.ndarray:
        return sum(a * s for a, s in zip(self.coeffs[j], pauli_basis()))

    def commuting_part(self, j: int) -> np.ndarray:
        """U_j = a_i I + a_y sigma_y."""
        a = self.coeffs[j]
        return a[0] * SIGMA_I + a[2] * pauli_basis()[2]

    def anticommuting_part(self, j: int) -> np.ndarray:
        """V_j = a_x sigma_x + a_z sigma_z."""
        a = self.coeffs[j]
        basis = pauli_basis()
        return a[1] * basis[1] + a[3] * basis[3]


def decompose(channel: KrausChannel) -> PauliCoefficients:
    basis = pauli_basis()
    rows = [[linalg.trace_inner(s, E) / 2 for s in basis] for E in channel.operators]
    return PauliCoefficients(np.array(rows, dtype=complex))


def _check_prob(name, p):
    p = float(p)
    if not (0.0 <= p <= 1.0):
        raise ValueError(f"{name} must lie in [0, 1], got {p}")
    return p


def identity() -> KrausChannel:
    return KrausChannel((SIGMA_I,), label="identity", spec={"type": "identity"})


def depolarizing(p: float) -> KrausChannel:
    p = _check_prob("p", p)
    ops = (
        math.sqrt(1 - 3 * p / 4) * SIGMA_I,
        math.sqrt(p / 4) * SIGMA_X,
        math.sqrt(p / 4) * SIGMA_Y,
        math.sqrt(p / 4) * SIGMA_Z,
    )
    return KrausChannel(ops, label=f"depolarizing({p:g})", spec={"type": "depolarizing", "p": p})


def pauli(p_i: float, p_x: float, p_y: float, p_z: float) -> KrausChannel:
    probs = [_check_prob(n, v) for n, v in zip(("p_i", "p_x", "p_y", "p_z"), (p_i, p_x, p_y, p_z))]
    if abs(sum(probs) - 1.0) > 1e-12:
        raise ValueError(f"Pauli probabilities must sum to 1, got {sum(probs)}")
    ops = tuple(math.sqrt(p) * s for p, s in zip(probs, pauli_basis()) if p > 0)
    spec = {"type": "pauli", "p_i": probs[0], "p_x": probs[1], "p_y": probs[2], "p_z": probs[3]}
    return KrausChannel(ops, label="pauli({:g},{:g},{:g},{:g})".format(*probs), spec=spec)


def unitary_rotation(beta: float) -> KrausChannel:
    beta = float(beta)
    if not math.isfinite(beta):
        raise ValueError("beta must be finite")
    return KrausChannel(
        (rotation(beta),), label=f"unitary_rotation({beta:g})",
        spec={"type": "unitary_rotation", "beta": beta},
    )


def amplitude_damping(gamma: float) -> KrausChannel:
    """Decay |1_z> -> |0_z> with probability gamma."""
    gamma = _check_prob("gamma", gamma)
    p0 = linalg.projector(KET_0Z)
    p1 = linalg.projector(KET_1Z)
    lower = np.outer(KET_0Z, KET_1Z.conj())
    ops = (p0 + math.sqrt(1 - gamma) * p1, math.sqrt(gamma) * lower)
    return KrausChannel(
        ops, label=f"amplitude_damping({gamma:g})",
        spec={"type": "amplitude_damping", "gamma": gamma},
    )


BUILTINS = {
    "identity": identity,
    "depolarizing": depolarizing,
    "pauli": pauli,
    "unitary_rotation": unitary_rotation,
    "amplitude_damping": amplitude_damping,
}


def builtin(kind: str, *args, **kwargs) -> KrausChannel:
    try:
        factory = BUILTINS[kind]
    except KeyError:
        raise ValueError(f"unknown channel kind {kind!r}; known: {sorted(BUILTINS)}") from None
    return factory(*args, **kwargs)


def _generator(seed: int, stream: int) -> np.random.Generator:
    if seed < 0:
        raise ValueError(f"seed must be non-negative, got {seed}")
    key = np.array([seed & 0xFFFFFFFFFFFFFFFF, stream], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def random_channel(seed: int, num_kraus: int = 2) -> KrausChannel:
    """Random trace-preserving channel: E_j = G_j S^{-1/2} with Gaussian G_j."""
    if not (1 <= num_kraus <= 4):
        raise ValueError(f"num_kraus must be in 1..4, got {num_kraus}")
    for attempt in range(MAX_RESAMPLES):
        rng = _generator(int(seed), attempt)
        g = rng.standard_normal((num_kraus, 2, 2)) + 1j * rng.standard_normal((num_kraus, 2, 2))
        s = np.einsum("jki,jkl->il", g.conj(), g)
        tr = s[0, 0].real + s[1, 1].real
        det = (s[0, 0] * s[1, 1] - s[0, 1] * s[1, 0]).real
        lam_min = 0.5 * (tr - math.sqrt(max(tr * tr - 4 * det, 0.0)))
        if lam_min < 1e-8:
            continue
        root_inv = linalg.hermitian_sqrt_inv(s)
        return KrausChannel(tuple(G @ root_inv for G in g), label=f"random(seed={seed},k={num_kraus})")
    raise RuntimeError(f"could not draw a well-conditioned channel for seed {seed}")


def from_json(doc: dict) -> KrausChannel:
    """Build a channel from its JSON spec, e.g. ``{"type": "depolarizing", "p": 0.1}``."""
    if not isinstance(doc, dict) or "type" not in doc:
        raise ValueError("channel spec must be an object with a 'type' field")
    kind = doc["type"]
    params = {k: v for k, v in doc.items() if k != "type"}
    if kind == "custom":
        try:
            mats = [
                np.array([[complex(re, im) for re, im in row] for row in E], dtype=complex)
                for E in params["kraus"]
            ]
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"malformed custom kraus list: {exc}") from None
        return KrausChannel(tuple(mats), label=params.get("label", "custom"))
    if kind not in BUILTINS:
        raise ValueError(f"unknown channel type {kind!r}")
    try:
        return builtin(kind, **params)
    except TypeError as exc:
        raise ValueError(f"bad parameters for channel {kind!r}: {exc}") from None
