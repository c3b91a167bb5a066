"""Monte Carlo executor of the prepare-and-measure protocol.

Signals are simulated in fixed blocks of ``CHUNK`` signals; block ``c`` draws
from a Philox stream keyed by ``(seed, c)``, so results do not depend on how
many worker threads process the blocks.
"""

from __future__ import annotations

import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from qkd_rotsym.channel import KrausChannel, decompose
from qkd_rotsym.edp import bell_diagnostics_closed_form
from qkd_rotsym.protocol import ProtocolParams, conclusive_probability, measurement_setups, prepare_state

CHUNK = 1 << 16
SHUFFLE_STREAM = 1 << 63
THREADS_ENV = "QKD_ROTSYM_THREADS"


@dataclass(frozen=True)
class SimulationConfig:
    params: ProtocolParams
    channel: KrausChannel
    n: int
    seed: int = 0
    test_fraction: float = 0.0

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n}")
        if int(self.seed) != self.seed or not (0 <= self.seed < 2**64):
            raise ValueError(f"seed must be a 64-bit non-negative integer, got {self.seed}")
        if not (0.0 <= self.test_fraction < 1.0):
            raise ValueError(f"test_fraction must lie in [0, 1), got {self.test_fraction}")


@dataclass(frozen=True)
class TranscriptStats:
    n_total: int
    n_basis_matched: int
    n_conclusive: int
    n_conclusive_errors: int
    n_test: int
    n_test_errors: int
    e_b_hat: float
    e_b_se: float
    e_b_sample: str  # "test" or "all_sifted"
    p_con_hat: float
    p_con_se: float
    key_bits_remaining: int

    def as_dict(self) -> dict:
        return asdict(self)


def _generator(seed: int, stream: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=np.array([seed, stream], dtype=np.uint64)))


class _Tables:
    """Everything per-signal sampling needs, indexed by (l, bit, j) and (k, setup)."""

    def __init__(self, params: ProtocolParams, channel: KrausChannel):
        M, J = params.M, len(channel.operators)
        ops = np.array(channel.operators)
        kets = np.array([[prepare_state(params, m, b).ket for b in (0, 1)] for m in range(M)])
        out = np.einsum("jab,mnb->mnja", ops, kets)
        probs = np.sum(np.abs(out) ** 2, axis=-1)
        norms = np.sqrt(np.where(probs > 0, probs, 1.0))
        self.post = out / norms[..., None]
        self.cum = np.cumsum(probs / probs.sum(axis=-1, keepdims=True), axis=-1)
        self.n_kraus = J
        self.M = M
        setups = [measurement_setups(params, k) for k in range(M)]
        self.conclusive = np.array([[s.conclusive_ket for s in row] for row in setups])
        self.conclusive_bit = np.array([s.conclusive_bit for s in setups[0]])


def _simulate_chunk(tables: _Tables, seed: int, chunk: int, count: int):
    u = _generator(seed, chunk).random((count, 6))
    M = tables.M
    l = np.minimum((u[:, 0] * M).astype(np.int64), M - 1)
    bit = (u[:, 1] < 0.5).astype(np.int64)
    cum = tables.cum[l, bit]
    j = np.minimum((u[:, 2:3] >= cum).sum(axis=1), tables.n_kraus - 1)
    psi = tables.post[l, bit, j]
    k = np.minimum((u[:, 3] * M).astype(np.int64), M - 1)
    setup = (u[:, 4] < 0.5).astype(np.int64)
    vec = tables.conclusive[k, setup]
    p_conclusive = np.abs(np.einsum("na,na->n", vec.conj(), psi)) ** 2
    conclusive = u[:, 5] < p_conclusive
    matched = k == l
    sifted = matched & conclusive
    errors = tables.conclusive_bit[setup[sifted]] != bit[sifted]
    return int(matched.sum()), errors


def _worker_count(workers: int | None) -> int:
    if workers is not None:
        return max(1, int(workers))
    env = os.environ.get(THREADS_ENV)
    if env:
        return max(1, int(env))
    return min(4, os.cpu_count() or 1)


def _rate(hits: int, total: int) -> tuple[float, float]:
    if total == 0:
        return 0.0, 0.0
    p = hits / total
    return p, math.sqrt(p * (1 - p) / total)


def run(config: SimulationConfig, workers: int | None = None) -> TranscriptStats:
    """Simulate ``config.n`` signals through preparation, channel, measurement and sifting."""
    tables = _Tables(config.params, config.channel)
    n_chunks = -(-config.n // CHUNK)
    sizes = [min(CHUNK, config.n - c * CHUNK) for c in range(n_chunks)]
    with ThreadPoolExecutor(max_workers=_worker_count(workers)) as pool:
        parts = list(pool.map(lambda c: _simulate_chunk(tables, config.seed, c, sizes[c]), range(n_chunks)))
    n_matched = sum(p[0] for p in parts)
    errors = np.concatenate([p[1] for p in parts])
    n_con = int(errors.size)

    t = config.test_fraction
    if t > 0 and config.n * t < 1:
        warnings.warn(f"n*t = {config.n * t:.3g} < 1: no test bits reserved", RuntimeWarning, stacklevel=2)
        n_test = 0
    else:
        n_test = math.ceil(t * n_con) if t > 0 else 0
    test_idx = _generator(config.seed, SHUFFLE_STREAM).permutation(n_con)[:n_test]
    n_test_errors = int(errors[test_idx].sum())
    n_con_errors = int(errors.sum())

    if n_test > 0:
        e_b, e_b_se = _rate(n_test_errors, n_test)
        sample = "test"
    else:
        e_b, e_b_se = _rate(n_con_errors, n_con)
        sample = "all_sifted"
    p_con, p_con_se = _rate(n_con, n_matched)
    return TranscriptStats(
        n_total=config.n, n_basis_matched=n_matched, n_conclusive=n_con,
        n_conclusive_errors=n_con_errors, n_test=n_test, n_test_errors=n_test_errors,
        e_b_hat=e_b, e_b_se=e_b_se, e_b_sample=sample,
        p_con_hat=p_con, p_con_se=p_con_se, key_bits_remaining=n_con - n_test,
    )


@dataclass(frozen=True)
class Comparison:
    stats: TranscriptStats
    e_b_analytic: float
    p_con_analytic: float
    e_b_sigma: float
    p_con_sigma: float
    z_e_b: float
    z_p_con: float

    @property
    def max_abs_z(self) -> float:
        return max(abs(self.z_e_b), abs(self.z_p_con))

    def as_dict(self) -> dict:
        d = asdict(self)
        d["stats"] = self.stats.as_dict()
        return d


def _z(estimate: float, truth: float, sigma: float) -> float:
    if sigma > 0:
        return (estimate - truth) / sigma
    return 0.0 if math.isclose(estimate, truth, abs_tol=1e-12) else math.copysign(math.inf, estimate - truth)


def estimate_vs_analytic(config: SimulationConfig, workers: int | None = None) -> Comparison:
    """Run the simulation and score its estimates against the exact values.

    Sigmas are binomial standard errors evaluated at the analytic rates and the
    sample sizes actually used by each estimator.
    """
    stats = run(config, workers)
    e_b = bell_diagnostics_closed_form(config.params, decompose(config.channel)).e_b
    p_con = conclusive_probability(config.params, config.channel)
    n_eb = stats.n_test if stats.e_b_sample == "test" else stats.n_conclusive
    sig_eb = math.sqrt(e_b * (1 - e_b) / n_eb) if n_eb else 0.0
    sig_pc = math.sqrt(p_con * (1 - p_con) / stats.n_basis_matched) if stats.n_basis_matched else 0.0
    return Comparison(
        stats=stats, e_b_analytic=e_b, p_con_analytic=p_con,
        e_b_sigma=sig_eb, p_con_sigma=sig_pc,
        z_e_b=_z(stats.e_b_hat, e_b, sig_eb), z_p_con=_z(stats.p_con_hat, p_con, sig_pc),
    )
