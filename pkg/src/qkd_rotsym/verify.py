"""Property suites run by ``qkd-rotsym verify``.

Each suite returns a :class:`SuiteResult` with the largest deviation it saw and,
on failure, the parameters needed to replay the offending case.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from qkd_rotsym import analysis, channel as ch, edp, linalg
from qkd_rotsym.protocol import ProtocolParams, rotation

THETAS = (0.3, math.pi / 4, 1.2, math.pi / 2)
M_VALUES = (3, 4, 5, 8)


@dataclass
class SuiteResult:
    name: str
    passed: bool
    max_deviation: float
    tolerance: float
    failure: str | None = None

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        text = f"{status}  {self.name:<22} max_dev={self.max_deviation:.3e}  tol={self.tolerance:.0e}"
        if self.failure:
            text += f"  [{self.failure}]"
        return text


class _Tracker:
    """Running maximum of a deviation plus the first case that broke tolerance."""

    def __init__(self, name, tol, larger_is_worse=True):
        self.name, self.tol = name, tol
        self.worst = 0.0
        self.failure = None

    def record(self, dev: float, case: str):
        self.worst = max(self.worst, dev)
        if dev > self.tol and self.failure is None:
            self.failure = case

    def fail(self, case: str):
        if self.failure is None:
            self.failure = case

    def result(self) -> SuiteResult:
        return SuiteResult(self.name, self.failure is None, self.worst, self.tol, self.failure)


def _channel_for(seed: int, i: int) -> ch.KrausChannel:
    return ch.random_channel(seed + i, num_kraus=1 + i % 4)


def lemma_suite() -> SuiteResult:
    t = _Tracker("spherical_lemma", 1e-12)
    for M in range(2, 13):
        rep = edp.spherical_average_lemma_check(M)
        if M > 2:
            t.record(rep.average_deviation, f"averages M={M}")
        t.record(rep.rotation_sum_max, f"rotation sum M={M}")
    return t.result()


def phi_suite(seed: int) -> SuiteResult:
    t = _Tracker("phi_closed_form", 1e-12)
    rng = np.random.default_rng(seed)
    for M in M_VALUES:
        for theta in THETAS:
            params = ProtocolParams(M, theta)
            phi = edp.phi_operator(params)
            t.record(linalg.max_abs(phi - edp.phi_closed_form(params)), f"M={M} theta={theta}")
            for beta in rng.uniform(-math.pi, math.pi, 10):
                rb = linalg.tensor_product(linalg.I2, rotation(beta))
                t.record(linalg.max_abs(phi @ rb - rb @ phi), f"commute M={M} theta={theta} beta={beta}")
    params = ProtocolParams(2, math.pi / 4)
    t.record(linalg.max_abs(edp.phi_operator(params) - linalg.projector(edp.psi_l(params, 0))), "M=2")
    return t.result()


def oracle_equivalence_suite(trials: int, seed: int) -> tuple[SuiteResult, SuiteResult]:
    """Closed forms vs Bell projections of the numerical state, plus the M>2 e_p law."""
    eq = _Tracker("oracle_equivalence", 1e-9)
    law = _Tracker("eq14_law", 1e-9)
    for i in range(trials):
        channel = _channel_for(seed, i)
        coeffs = ch.decompose(channel)
        for M in (2,) + M_VALUES:
            for theta in THETAS:
                params = ProtocolParams(M, theta)
                case = f"seed={seed + i} kraus={len(channel.operators)} M={M} theta={theta}"
                num = edp.bell_diagnostics_numerical(edp.rho_ab_numerical(params, channel))
                closed = edp.bell_diagnostics_closed_form(params, coeffs)
                eq.record(float(np.max(np.abs(num.probabilities() - closed.probabilities()))), case)
                if M > 2 and num.e_b > 1e-12:
                    law.record(abs(num.e_p - num.e_b * (1 + math.cos(theta) ** 2)), case)
    return eq.result(), law.result()


def m_independence_suite(trials: int, seed: int) -> SuiteResult:
    t = _Tracker("m_independence", 1e-10)
    for i in range(trials):
        channel = _channel_for(seed, i)
        for theta in THETAS:
            ref = edp.rho_ab_numerical(ProtocolParams(3, theta), channel).matrix
            for M in (5, 8):
                other = edp.rho_ab_numerical(ProtocolParams(M, theta), channel).matrix
                t.record(linalg.max_abs(ref - other), f"seed={seed + i} M=3 vs {M} theta={theta}")
    return t.result()


def covariance_suite(trials: int, seed: int) -> tuple[SuiteResult, SuiteResult]:
    t = _Tracker("rotation_covariance", 1e-10)
    rng = np.random.default_rng(seed + 1)
    for i in range(trials):
        channel = _channel_for(seed, i)
        beta = float(rng.uniform(-math.pi, math.pi))
        turned = channel.conjugated(beta)
        for M in M_VALUES:
            for theta in THETAS:
                params = ProtocolParams(M, theta)
                a = edp.rho_ab_numerical(params, channel).matrix
                b = edp.rho_ab_numerical(params, turned).matrix
                t.record(linalg.max_abs(a - b), f"seed={seed + i} beta={beta} M={M} theta={theta}")
    witness = m2_witness_deviation()
    w = SuiteResult("m2_noninvariance", witness > 1e-3, witness, 1e-3,
                    None if witness > 1e-3 else "M=2 witness unchanged by rotation")
    return t.result(), w


def m2_witness_deviation(theta: float = math.pi / 4, beta: float = math.pi / 8) -> float:
    """Change of rho_AB at M=2 when a sigma_x Pauli channel is conjugated by R_beta."""
    channel = ch.pauli(0.9, 0.1, 0.0, 0.0)
    params = ProtocolParams(2, theta)
    a = edp.rho_ab_numerical(params, channel).matrix
    b = edp.rho_ab_numerical(params, channel.conjugated(beta)).matrix
    return linalg.max_abs(a - b)


M2_THETAS = (0.4, math.pi / 4, 1.0, 1.3)


def m2_grid(theta: float) -> list[float]:
    A = analysis.m2_bound(theta, 0.0).A
    return [0.01, 0.05, 0.1, A / 2, 0.9 * A]


def m2_bound_suite(trials: int, seed: int) -> tuple[SuiteResult, SuiteResult, SuiteResult]:
    bound = _Tracker("m2_bound_respected", 1e-9)
    for i in range(trials):
        channel = _channel_for(seed, i)
        coeffs = ch.decompose(channel)
        for theta in (0.3, math.pi / 4, 1.2):
            params = ProtocolParams(2, theta)
            d = edp.bell_diagnostics_closed_form(params, coeffs)
            slope = analysis.error_relation(params).slope
            bound.record(max(0.0, d.e_p - slope * d.e_b), f"seed={seed + i} theta={theta}")
    sat = _Tracker("m2_saturation", 1e-9)
    for theta in (0.3, math.pi / 4, 1.0, 1.3):
        params = ProtocolParams(2, theta)
        slope = analysis.error_relation(params).slope
        for p in (0.01, 0.05, 0.1, 0.3):
            d = edp.diagnostics(params, phase_flip_channel(p), source="numerical")
            sat.record(abs(d.e_p - slope * d.e_b), f"theta={theta} p={p}")
    grid = _Tracker("m2_bound_vs_oracle", 2e-3)
    for theta in M2_THETAS:
        for e_b in m2_grid(theta):
            exact = analysis.m2_bound(theta, e_b).e_p_max
            grid.record(abs(exact - analysis.m2_bound_oracle(theta, e_b, 1e-3)), f"theta={theta} e_b={e_b}")
    return bound.result(), sat.result(), grid.result()


def phase_flip_channel(p: float) -> ch.KrausChannel:
    """{sqrt(1-p) I, sqrt(p) sigma_z}: saturates the M=2 bound."""
    return ch.KrausChannel((math.sqrt(1 - p) * ch.SIGMA_I, math.sqrt(p) * ch.SIGMA_Z), label=f"phase_flip({p:g})")


def sarg04_suite() -> SuiteResult:
    t = _Tracker("sarg04_point", 1e-12)
    params = ProtocolParams(4, math.pi / 4)
    t.record(abs(analysis.error_relation(params).slope - 1.5), "slope")
    for e_b in np.linspace(0.0, 0.33, 34):
        lam = analysis.lambda_worst_case(params, e_b, 1.5 * e_b)
        t.record(abs(lam.lambda_worst - e_b / 2), f"e_b={e_b}")
    return t.result()


def bb84_threshold(lo: float = 0.01, hi: float = 0.4, iters: int = 200) -> float:
    """Zero of 1 - 2 H2(e) by bisection."""
    f = lambda e: 1.0 - 2.0 * analysis.entropy_h2(e)  # noqa: E731
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if f(mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def key_rate_suite() -> SuiteResult:
    t = _Tracker("key_rate_reduction", 1e-12)
    for M, theta in ((4, math.pi / 4), (4, math.pi / 2), (3, 1.0), (2, math.pi / 4)):
        params = ProtocolParams(M, theta)
        for e_b in np.linspace(0.0, 0.2, 21):
            e_p = analysis.inferred_phase_error(params, e_b)
            w = e_b * e_p
            h4 = 1 - analysis.entropy_h4(1 - e_b - e_p + w, e_b - w, w, e_p - w)
            h2 = 1 - analysis.entropy_h2(e_b) - analysis.entropy_h2(e_p)
            t.record(abs(h4 - h2), f"M={M} theta={theta} e_b={e_b}")
    thr = bb84_threshold()
    t.record(0.0 if abs(thr - 0.110028) <= 1e-5 else abs(thr - 0.110028), f"bb84 threshold {thr}")
    return t.result()


def run_all(trials: int = 200, seed: int = 7) -> list[SuiteResult]:
    if trials < 1:
        raise ValueError("trials must be >= 1")
    results = [lemma_suite(), phi_suite(seed)]
    results.extend(oracle_equivalence_suite(trials, seed))
    results.append(m_independence_suite(trials, seed))
    results.extend(covariance_suite(trials, seed))
    results.extend(m2_bound_suite(trials, seed))
    results.append(sarg04_suite())
    results.append(key_rate_suite())
    return results
