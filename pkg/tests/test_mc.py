import math
import warnings

import pytest

from qkd_rotsym import channel as ch, mc
from qkd_rotsym.protocol import ProtocolParams

SARG = ProtocolParams(4, math.pi / 4)


def cfg(channel=None, n=200_000, **kw):
    return mc.SimulationConfig(kw.pop("params", SARG), channel or ch.identity(), n, **kw)


@pytest.mark.parametrize("theta", [0.4, math.pi / 4, math.pi / 2])
def test_identity_has_no_errors(theta):
    c = mc.estimate_vs_analytic(cfg(params=ProtocolParams(3, theta)))
    assert c.stats.e_b_hat == 0.0 and c.stats.n_conclusive_errors == 0
    assert c.p_con_analytic == pytest.approx(0.5 * math.sin(theta) ** 2, abs=1e-12)
    assert abs(c.z_p_con) <= 4


def test_deterministic_across_workers():
    c = cfg(ch.depolarizing(0.2), n=300_001, seed=11, test_fraction=0.1)
    ref = mc.run(c, workers=1)
    for w in (2, 3, 8):
        assert mc.run(c, workers=w) == ref


def test_seed_changes_transcript():
    a = mc.run(cfg(ch.depolarizing(0.2), seed=1))
    b = mc.run(cfg(ch.depolarizing(0.2), seed=2))
    assert a != b


def test_thread_env(monkeypatch):
    monkeypatch.setenv(mc.THREADS_ENV, "3")
    assert mc._worker_count(None) == 3
    monkeypatch.delenv(mc.THREADS_ENV)
    assert 1 <= mc._worker_count(None) <= 4
    assert mc._worker_count(0) == 1


def test_single_signal():
    s = mc.run(cfg(n=1))
    assert s.n_total == 1 and s.n_basis_matched in (0, 1)
    assert s.n_conclusive <= s.n_basis_matched


@pytest.mark.parametrize("M", [2, 4, 7])
def test_sifting_ratio(M):
    n = 200_000
    s = mc.run(cfg(n=n, params=ProtocolParams(M, 0.9)))
    p = 1 / M
    assert abs(s.n_basis_matched / n - p) <= 4 * math.sqrt(p * (1 - p) / n)


@pytest.mark.parametrize(
    "channel, params",
    [
        (ch.depolarizing(0.1), SARG),
        (ch.unitary_rotation(0.1), SARG),
        (ch.amplitude_damping(0.2), ProtocolParams(3, 1.0)),
        (ch.pauli(0.9, 0.1, 0, 0), ProtocolParams(2, math.pi / 4)),
    ],
)
def test_estimates_match_analytic(channel, params):
    c = mc.estimate_vs_analytic(cfg(channel, n=400_000, params=params, seed=5))
    assert c.max_abs_z <= 4


def test_standard_error_scaling():
    small = mc.run(cfg(ch.depolarizing(0.1), n=100_000, seed=3))
    big = mc.run(cfg(ch.depolarizing(0.1), n=400_000, seed=3))
    ratio = small.e_b_se / big.e_b_se
    assert 2 / 1.2 <= ratio <= 2 * 1.2


def test_test_fraction_sample():
    s = mc.run(cfg(ch.depolarizing(0.1), test_fraction=0.25, seed=4))
    assert s.e_b_sample == "test"
    assert s.n_test == math.ceil(0.25 * s.n_conclusive)
    assert s.key_bits_remaining == s.n_conclusive - s.n_test
    assert s.n_test_errors <= s.n_conclusive_errors
    c = mc.estimate_vs_analytic(cfg(ch.depolarizing(0.1), test_fraction=0.25, seed=4))
    assert abs(c.z_e_b) <= 4


def test_tiny_test_fraction_warns():
    with pytest.warns(RuntimeWarning, match="no test bits"):
        s = mc.run(cfg(n=10, test_fraction=0.01))
    assert s.n_test == 0 and s.e_b_sample == "all_sifted"


def test_no_warning_without_test_fraction():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        mc.run(cfg(n=10))


@pytest.mark.parametrize("kw", [dict(n=0), dict(n=10, seed=-1), dict(n=10, test_fraction=1.0)])
def test_invalid_config(kw):
    with pytest.raises(ValueError):
        cfg(**kw)
