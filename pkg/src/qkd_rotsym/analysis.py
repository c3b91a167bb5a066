"""Error-rate relations, the M=2 phase-error bound, entropies and key rates."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from qkd_rotsym.errors import DegenerateParameterError
from qkd_rotsym.protocol import ProtocolParams

LAMBDA_MODES = ("paper_range", "pessimistic")
PROB_TOL = 1e-12
FEASIBILITY_TOL = 1e-12


@dataclass(frozen=True)
class ErrorRelation:
    """e_p = slope * e_b (``equality``) or e_p <= slope * e_b (``upper_bound``)."""

    M: int
    theta: float
    slope: float
    kind: str


@dataclass(frozen=True)
class M2BoundSolution:
    e_p_max: float
    maximizer_ai2: float
    maximizer_ax2: float
    A: float
    B: float
    feasible: bool


@dataclass(frozen=True)
class LambdaRange:
    lambda_min: float
    lambda_max: float
    lambda_worst: float


@dataclass(frozen=True)
class KeyRateReport:
    e_b: float
    e_p: float
    lambda_min: float
    lambda_max: float
    lambda_worst: float
    rate_shor_preskill: float
    rate_h4: float
    p_con: float
    sift_factor: float
    lambda_mode: str
    abort_recommended: bool

    @property
    def bracket_shor_preskill(self) -> float:
        return 1.0 - entropy_h2(self.e_b) - entropy_h2(self.e_p)

    @property
    def bracket_h4(self) -> float:
        return self.rate_h4 / self.sift_factor

    def as_dict(self) -> dict:
        return asdict(self)


def error_relation(params: ProtocolParams) -> ErrorRelation:
    c2 = math.cos(params.theta) ** 2
    if params.M > 2:
        return ErrorRelation(params.M, params.theta, 1.0 + c2, "equality")
    params.require_nondegenerate()
    return ErrorRelation(params.M, params.theta, (1.0 + c2) / c2, "upper_bound")


def _m2_constants(theta: float):
    if not (0.0 < theta < math.pi / 2) or math.isclose(theta, math.pi / 2, abs_tol=1e-12):
        raise DegenerateParameterError(
            f"the M=2 bound needs 0 < theta < pi/2 (got {theta}); at theta=pi/2 the "
            "phase error rate e_p goes to infinity"
        )
    s2, c2 = math.sin(theta) ** 2, math.cos(theta) ** 2
    B = 1.0 / (1.0 + c2)
    return s2, c2, B * c2, B


def _m2_slack(theta_consts, e_b, ai2, ax2):
    """(|a_y|^2, |a_z|^2) solving the two equality constraints."""
    s2, c2, _, _ = theta_consts
    total_yz = (1.0 - (ai2 + ax2) * s2) / (1.0 + c2)
    ay2 = (e_b - ax2 * s2 - total_yz * c2) / s2
    return ay2, total_yz - ay2


def m2_bound(theta: float, e_b: float) -> M2BoundSolution:
    """Largest phase error compatible with bit error ``e_b`` at M = 2.

    The two-variable LP over (|a_i|^2, |a_x|^2) is solved at its vertex
    ``((A - e_b) / (A sin^2 theta), 0)``.  Beyond ``e_b = A`` the value is
    clamped to 1.
    """
    consts = _m2_constants(theta)
    s2, c2, A, B = consts
    if not (0.0 <= e_b <= 1.0):
        raise ValueError(f"e_b must lie in [0, 1], got {e_b}")
    if e_b <= A:
        ai2, ax2 = (A - e_b) / (A * s2), 0.0
        e_p = e_b * (1.0 + c2) / c2
    else:
        ai2, ax2 = 0.0, 0.0
        e_p = 1.0
    ay2, az2 = _m2_slack(consts, e_b, ai2, ax2)
    feasible = min(ay2, az2) >= -1e-12
    return M2BoundSolution(min(e_p, 1.0), ai2, ax2, A, B, bool(feasible))


def m2_bound_oracle(theta: float, e_b: float, grid_step: float = 1e-3) -> float:
    """Grid search over (|a_i|^2, |a_x|^2) for the M = 2 LP; test-time reference only.

    |a_y|^2 and |a_z|^2 follow from the two equality constraints, so only the
    non-negativity constraints are checked on the grid (to roundoff).
    """
    if not (0.0 < grid_step <= 0.01):
        raise ValueError(f"grid_step must lie in (0, 0.01], got {grid_step}")
    consts = _m2_constants(theta)
    s2, c2, _, _ = consts
    hi = 1.0 / s2
    ai = np.linspace(0.0, hi, int(math.ceil(hi / grid_step)) + 1)
    ax_hi = min(hi, e_b / s2)
    ax = np.linspace(0.0, ax_hi, int(math.ceil(ax_hi / grid_step)) + 1)
    best = -math.inf
    for start in range(0, ax.size, 256):
        grid_ai, grid_ax = np.meshgrid(ai, ax[start:start + 256])
        ay2, az2 = _m2_slack(consts, e_b, grid_ai, grid_ax)
        ok = (ay2 >= -FEASIBILITY_TOL) & (az2 >= -FEASIBILITY_TOL)
        if ok.any():
            e_p = (ay2 + az2)[ok] * (1.0 + c2)
            best = max(best, float(e_p.max()))
    if best == -math.inf:
        raise ValueError(f"no feasible grid point for theta={theta}, e_b={e_b}")
    return best


def _check_rate(name: str, x: float) -> float:
    x = float(x)
    if not (-PROB_TOL <= x <= 1.0 + PROB_TOL):
        raise ValueError(f"{name} must lie in [0, 1], got {x}")
    return min(max(x, 0.0), 1.0)


def _plogp(x: float) -> float:
    return 0.0 if x == 0.0 else -x * math.log2(x)


def entropy_h2(p: float) -> float:
    p = _check_rate("p", p)
    return _plogp(p) + _plogp(1.0 - p)


def entropy_h4(x1: float, x2: float, x3: float, x4: float) -> float:
    xs = [_check_rate(f"x{i}", x) for i, x in enumerate((x1, x2, x3, x4), 1)]
    if abs(sum(xs) - 1.0) > 1e-9:
        raise ValueError(f"H4 arguments must sum to 1, got {sum(xs)}")
    return sum(_plogp(x) for x in xs)


def lambda_worst_case(
    params: ProtocolParams, e_b: float, e_p: float, mode: str = "paper_range"
) -> LambdaRange:
    """Admissible range of lambda = p_y and the value minimizing the key rate.

    ``paper_range`` (M > 2 only) restricts lambda to [e_b cos^2 theta, e_b];
    ``pessimistic`` allows [0, e_b], whose worst case is the product e_b e_p.
    M = 2 always uses the pessimistic range.
    """
    if mode not in LAMBDA_MODES:
        raise ValueError(f"lambda mode must be one of {LAMBDA_MODES}, got {mode!r}")
    e_b, e_p = _check_rate("e_b", e_b), _check_rate("e_p", e_p)
    c2 = math.cos(params.theta) ** 2
    if params.M > 2 and mode == "paper_range":
        lo, hi = e_b * c2, e_b
        worst = lo if e_b < c2 / (1.0 + c2) else e_b * e_p
    else:
        lo, hi = 0.0, e_b
        worst = e_b * e_p
    if e_b - worst < -PROB_TOL or e_p - worst < -PROB_TOL:
        raise RuntimeError(
            f"inconsistent lambda={worst} for e_b={e_b}, e_p={e_p}: p_x or p_z would be negative"
        )
    return LambdaRange(lo, hi, worst)


def sift_factor(params: ProtocolParams, p_con: float) -> float:
    return p_con / params.M if params.sifting_mode == "generic" else p_con


def inferred_phase_error(params: ProtocolParams, e_b: float) -> float:
    """Phase error implied by ``e_b``: exact for M > 2, worst case for M = 2."""
    if params.M == 2:
        params.require_nondegenerate()
        return m2_bound(params.theta, e_b).e_p_max
    e_p = error_relation(params).slope * e_b
    if e_p > 1.0 + PROB_TOL:
        raise ValueError(
            f"e_b={e_b} is unphysical at theta={params.theta}: inferred e_p={e_p} exceeds 1"
        )
    return min(e_p, 1.0)


def key_rate(
    params: ProtocolParams, e_b: float, p_con: float, lambda_mode: str = "paper_range"
) -> KeyRateReport:
    """Shor-Preskill rate and the H4 rate with worst-case lambda.

    Negative rates are reported unclamped; ``abort_recommended`` is set when
    no positive rate is available.
    """
    params.require_nondegenerate()
    if not (0.0 <= e_b < 1.0):
        raise ValueError(f"e_b must lie in [0, 1), got {e_b}")
    if not (0.0 < p_con <= 1.0):
        raise ValueError(f"p_con must lie in (0, 1], got {p_con}")
    e_p = inferred_phase_error(params, e_b)
    lam = lambda_worst_case(params, e_b, e_p, lambda_mode)
    factor = sift_factor(params, p_con)
    w = lam.lambda_worst
    bracket_sp = 1.0 - entropy_h2(e_b) - entropy_h2(e_p)
    bracket_h4 = 1.0 - entropy_h4(1.0 - e_b - e_p + w, e_b - w, w, e_p - w)
    rate_sp, rate_h4 = factor * bracket_sp, factor * bracket_h4
    return KeyRateReport(
        e_b=float(e_b), e_p=float(e_p),
        lambda_min=lam.lambda_min, lambda_max=lam.lambda_max, lambda_worst=w,
        rate_shor_preskill=rate_sp, rate_h4=rate_h4,
        p_con=float(p_con), sift_factor=factor, lambda_mode=lambda_mode,
        abort_recommended=max(rate_sp, rate_h4) <= 0.0,
    )
