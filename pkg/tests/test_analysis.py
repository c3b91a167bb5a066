import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.optimize import brentq

from qkd_rotsym import analysis as an, channel as ch, edp
from qkd_rotsym.errors import DegenerateParameterError
from qkd_rotsym.protocol import ProtocolParams

SARG = ProtocolParams(4, math.pi / 4)
BB84 = ProtocolParams(4, math.pi / 2)


@pytest.mark.parametrize(
    "M, theta, slope, kind",
    [(4, math.pi / 4, 1.5, "equality"), (4, math.pi / 2, 1.0, "equality"), (2, math.pi / 3, 5.0, "upper_bound")],
)
def test_error_relation_examples(M, theta, slope, kind):
    rel = an.error_relation(ProtocolParams(M, theta))
    assert rel.slope == pytest.approx(slope, abs=1e-12)
    assert rel.kind == kind


def test_error_relation_refuses_m2_bb84_angle():
    with pytest.raises(DegenerateParameterError, match="infinity"):
        an.error_relation(ProtocolParams(2, math.pi / 2))


@given(st.integers(3, 12), st.floats(1e-3, math.pi / 2 - 1e-3))
def test_slope_range(M, theta):
    s = an.error_relation(ProtocolParams(M, theta)).slope
    assert 1.0 < s <= 2.0


def test_slope_monotone_decreasing():
    thetas = np.linspace(1e-3, math.pi / 2, 500)
    slopes = [an.error_relation(ProtocolParams(5, t)).slope for t in thetas]
    assert np.all(np.diff(slopes) < 0)


def test_m2_bound_examples():
    t = math.pi / 4
    at_a = an.m2_bound(t, 1 / 3)
    assert at_a.A == pytest.approx(1 / 3, abs=1e-15)
    assert at_a.e_p_max == pytest.approx(1.0, abs=1e-12)
    assert at_a.maximizer_ai2 == pytest.approx(0.0, abs=1e-12)
    mid = an.m2_bound(t, 0.1)
    assert mid.e_p_max == pytest.approx(0.3, abs=1e-12)
    assert mid.maximizer_ai2 == pytest.approx(1.4, abs=1e-12)
    assert mid.maximizer_ax2 == 0.0 and mid.feasible
    zero = an.m2_bound(t, 0.0)
    assert zero.e_p_max == 0.0
    assert zero.maximizer_ai2 == pytest.approx(1 / math.sin(t) ** 2, abs=1e-12)


def test_m2_bound_clamps_beyond_a():
    sol = an.m2_bound(math.pi / 4, 0.5)
    assert sol.e_p_max == 1.0


@pytest.mark.parametrize("theta", [0.0, math.pi / 2, 2.0])
def test_m2_bound_refuses_bad_theta(theta):
    with pytest.raises(DegenerateParameterError):
        an.m2_bound(theta, 0.1)


def test_m2_bound_refuses_bad_rate():
    with pytest.raises(ValueError):
        an.m2_bound(0.5, 1.5)


@pytest.mark.parametrize("theta, e_b", [(math.pi / 4, 0.1), (1.0, 0.05)])
def test_oracle_examples(theta, e_b):
    assert abs(an.m2_bound_oracle(theta, e_b) - an.m2_bound(theta, e_b).e_p_max) <= 2e-3


def test_oracle_noiseless():
    assert abs(an.m2_bound_oracle(0.7, 0.0)) <= 1e-9


def test_oracle_rejects_coarse_grid():
    with pytest.raises(ValueError):
        an.m2_bound_oracle(0.7, 0.1, grid_step=0.1)


@pytest.mark.parametrize("p", [0.01, 0.1, 0.3])
@pytest.mark.parametrize("theta", [0.4, math.pi / 4, 1.0, 1.3])
def test_phase_flip_saturates_m2_bound(p, theta):
    chan = ch.KrausChannel((math.sqrt(1 - p) * ch.SIGMA_I, math.sqrt(p) * ch.SIGMA_Z))
    d = edp.diagnostics(ProtocolParams(2, theta), chan, source="closed_form")
    c2 = math.cos(theta) ** 2
    assert abs(d.e_p / d.e_b - (1 + c2) / c2) <= 1e-9


def test_entropy_examples():
    assert an.entropy_h2(0.5) == 1.0
    assert an.entropy_h2(0.0) == 0.0 and an.entropy_h2(1.0) == 0.0
    assert an.entropy_h4(0.25, 0.25, 0.25, 0.25) == pytest.approx(2.0, abs=1e-15)
    assert an.entropy_h4(1, 0, 0, 0) == 0.0


@pytest.mark.parametrize("args", [(-0.1,), (1.1,)])
def test_entropy_h2_domain(args):
    with pytest.raises(ValueError):
        an.entropy_h2(*args)


def test_entropy_h4_sum_check():
    with pytest.raises(ValueError):
        an.entropy_h4(0.5, 0.5, 0.5, 0.0)


@given(st.floats(0, 1))
def test_h2_symmetric(p):
    assert an.entropy_h2(p) == pytest.approx(an.entropy_h2(1 - p), abs=1e-12)


def test_lambda_examples():
    assert an.lambda_worst_case(SARG, 0.06, 0.09).lambda_worst == pytest.approx(0.03, abs=1e-15)
    assert an.lambda_worst_case(SARG, 0.4, 0.6).lambda_worst == pytest.approx(0.24, abs=1e-15)
    lam = an.lambda_worst_case(BB84, 0.05, 0.05)
    assert (lam.lambda_min, lam.lambda_max) == (pytest.approx(0.0, abs=1e-18), 0.05)
    assert lam.lambda_worst == pytest.approx(0.05 ** 2, abs=1e-15)


def test_lambda_pessimistic_mode():
    lam = an.lambda_worst_case(SARG, 0.06, 0.09, mode="pessimistic")
    assert lam.lambda_min == 0.0 and lam.lambda_worst == pytest.approx(0.06 * 0.09)
    with pytest.raises(ValueError):
        an.lambda_worst_case(SARG, 0.06, 0.09, mode="optimistic")


def test_lambda_inconsistency_detected():
    # e_p below the lower end of the admissible lambda range makes p_z negative
    with pytest.raises(RuntimeError):
        an.lambda_worst_case(SARG, 0.3, 0.01)


def test_key_rate_bb84_noiseless():
    r = an.key_rate(BB84, 0.0, 0.5)
    assert r.bracket_shor_preskill == 1.0
    assert r.rate_shor_preskill == pytest.approx(0.5 / 4)
    basis_free = an.key_rate(ProtocolParams(4, math.pi / 2, "basis_free"), 0.0, 0.5)
    assert basis_free.rate_shor_preskill == pytest.approx(0.5)
    assert not r.abort_recommended


def test_key_rate_sarg04_example():
    r = an.key_rate(SARG, 0.06, 0.275)
    assert r.e_p == pytest.approx(0.09, abs=1e-15)
    assert r.lambda_worst == pytest.approx(0.03, abs=1e-15)
    assert r.bracket_h4 >= r.bracket_shor_preskill
    assert r.rate_h4 == pytest.approx(r.bracket_h4 * 0.275 / 4, abs=1e-15)


def test_key_rate_negative_reported_with_abort():
    r = an.key_rate(SARG, 0.3, 0.275)
    assert r.rate_shor_preskill < 0 and r.rate_h4 < 0
    assert r.abort_recommended


def test_key_rate_rejects_unphysical_and_degenerate():
    with pytest.raises(ValueError):
        an.key_rate(ProtocolParams(4, 0.3), 0.9, 0.2)
    with pytest.raises(DegenerateParameterError):
        an.key_rate(ProtocolParams(2, math.pi / 2), 0.01, 0.2)
    with pytest.raises(ValueError):
        an.key_rate(SARG, 1.0, 0.2)
    with pytest.raises(ValueError):
        an.key_rate(SARG, 0.1, 0.0)


def test_key_rate_m2_uses_bound():
    p = ProtocolParams(2, math.pi / 4)
    r = an.key_rate(p, 0.1, 0.3)
    assert r.e_p == pytest.approx(0.3, abs=1e-12)
    assert r.lambda_worst == pytest.approx(0.03, abs=1e-15)
    assert r.sift_factor == pytest.approx(0.15)


@given(st.floats(0, 0.15), st.sampled_from([0.3, math.pi / 4, 1.2, math.pi / 2]))
def test_h4_reduces_to_shor_preskill(e_b, theta):
    p = ProtocolParams(4, theta)
    e_p = an.error_relation(p).slope * e_b
    w = e_b * e_p
    h4 = 1 - an.entropy_h4(1 - e_b - e_p + w, e_b - w, w, e_p - w)
    sp = 1 - an.entropy_h2(e_b) - an.entropy_h2(e_p)
    assert abs(h4 - sp) <= 1e-12


def test_bb84_threshold_independent_root():
    root = brentq(lambda e: 1 - 2 * an.entropy_h2(e), 0.01, 0.4, xtol=1e-14)
    assert abs(root - 0.110028) <= 1e-5
    r = an.key_rate(BB84, root - 1e-6, 1.0)
    assert r.bracket_shor_preskill > 0


@pytest.mark.parametrize("params", [BB84, SARG, ProtocolParams(6, 1.0)])
def test_bracket_monotone_dense_grid(params):
    e = np.linspace(1e-6, 0.1, 2000)
    b = [an.key_rate(params, x, 0.5).bracket_shor_preskill for x in e]
    assert np.all(np.diff(b) < 0)


@pytest.mark.parametrize("e_b, feasible", [(0.2, True), (0.34, True), (0.6, True), (0.9, False)])
def test_m2_bound_feasibility_flag(e_b, feasible):
    # at theta = pi/4: A = 1/3, B = 2/3
    assert an.m2_bound(math.pi / 4, e_b).feasible is feasible
