import math

import numpy as np
import pytest
from hypothesis import given, settings

from qkd_rotsym import channel as ch, linalg
from qkd_rotsym.protocol import rotation

from conftest import angles, kraus_counts, seeds


def test_identity_decomposition():
    c = ch.decompose(ch.identity()).coeffs
    assert np.allclose(c, [[1, 0, 0, 0]], atol=0)


def test_two_operator_decomposition():
    chan = ch.KrausChannel((math.sqrt(0.9) * ch.SIGMA_I, math.sqrt(0.1) * ch.SIGMA_Z))
    c = np.abs(ch.decompose(chan).coeffs) ** 2
    assert abs(c[0, 0] - 0.9) <= 1e-15
    assert abs(c[1, 3] - 0.1) <= 1e-15


def test_pauli_basis_conventions():
    # sigma_x diagonal in the x basis, sigma_z has the z kets as eigenvectors
    from qkd_rotsym.protocol import KET_0X, KET_0Z, KET_1Z

    assert np.allclose(ch.SIGMA_X @ KET_0X, KET_0X)
    assert np.allclose(ch.SIGMA_Z @ KET_0Z, KET_0Z)
    assert np.allclose(ch.SIGMA_Z @ KET_1Z, -KET_1Z)
    for s in (ch.SIGMA_X, ch.SIGMA_Y, ch.SIGMA_Z):
        assert np.allclose(s @ s, np.eye(2))
        assert abs(np.trace(s)) == 0
    # rotation is exp(-i beta sigma_y)
    beta = 0.3
    expected = math.cos(beta) * np.eye(2) - 1j * math.sin(beta) * ch.SIGMA_Y
    assert linalg.max_abs(rotation(beta) - expected) <= 1e-15


@given(seeds, kraus_counts, angles)
@settings(max_examples=50)
def test_decomposition_split(seed, k, beta):
    coeffs = ch.decompose(ch.random_channel(seed, k))
    r = rotation(beta)
    for j in range(k):
        u, v = coeffs.commuting_part(j), coeffs.anticommuting_part(j)
        assert linalg.max_abs(u @ r - r @ u) <= 1e-12
        assert linalg.max_abs(v @ ch.SIGMA_Y + ch.SIGMA_Y @ v) <= 1e-12


@pytest.mark.parametrize("factory,args", [
    (ch.depolarizing, (0.0,)), (ch.pauli, (1, 0, 0, 0)),
])
def test_builtins_reduce_to_identity(factory, args):
    chan = factory(*args)
    rho = np.array([[0.7, 0.2 - 0.1j], [0.2 + 0.1j, 0.3]])
    assert linalg.max_abs(chan.apply(rho) - rho) <= 1e-15


def test_depolarizing_completeness_and_action():
    chan = ch.depolarizing(0.1)
    assert chan.completeness_residual() <= 1e-15
    rho = np.array([[1, 0], [0, 0]], dtype=complex)
    assert linalg.max_abs(chan.apply(rho) - (0.9 * rho + 0.05 * np.eye(2))) <= 1e-15


def test_amplitude_damping_decays_to_zero_z():
    from qkd_rotsym.protocol import KET_0Z, KET_1Z

    chan = ch.amplitude_damping(1.0)
    out = chan.apply(linalg.projector(KET_1Z))
    assert linalg.max_abs(out - linalg.projector(KET_0Z)) <= 1e-15
    assert ch.amplitude_damping(0.3).completeness_residual() <= 1e-15


@pytest.mark.parametrize("call", [
    lambda: ch.depolarizing(1.2), lambda: ch.pauli(0.5, 0.5, 0.5, 0.0),
    lambda: ch.amplitude_damping(-0.1), lambda: ch.builtin("erasure", 0.1),
    lambda: ch.KrausChannel((2 * np.eye(2),)), lambda: ch.KrausChannel(()),
    lambda: ch.random_channel(1, 5), lambda: ch.random_channel(-1, 2),
])
def test_invalid_channels(call):
    with pytest.raises(ValueError):
        call()


@given(seeds, kraus_counts)
def test_random_channel_complete_and_deterministic(seed, k):
    a, b = ch.random_channel(seed, k), ch.random_channel(seed, k)
    assert a.completeness_residual() <= 1e-10
    assert all(np.array_equal(x, y) for x, y in zip(a.operators, b.operators))


def test_round_trip_200_seeds():
    worst = 0.0
    for seed in range(200):
        chan = ch.random_channel(seed, 1 + seed % 4)
        coeffs = ch.decompose(chan)
        for j, E in enumerate(chan.operators):
            worst = max(worst, linalg.max_abs(coeffs.reconstruct(j) - E))
        assert abs(sum(coeffs.weights().values()) - 1) <= 1e-10
    assert worst <= 1e-12


@given(seeds, kraus_counts, angles)
@settings(max_examples=50)
def test_conjugation_rotates_xz_plane(seed, k, beta):
    chan = ch.random_channel(seed, k)
    before = ch.decompose(chan).coeffs
    after = ch.decompose(chan.conjugated(beta)).coeffs
    c, s = math.cos(2 * beta), math.sin(2 * beta)
    assert np.max(np.abs(after[:, [0, 2]] - before[:, [0, 2]])) <= 1e-12
    ax, az = before[:, 1], before[:, 3]
    assert np.max(np.abs(after[:, 1] - (c * ax + s * az))) <= 1e-12
    assert np.max(np.abs(after[:, 3] - (-s * ax + c * az))) <= 1e-12


@pytest.mark.parametrize("doc", [
    {"type": "depolarizing", "p": 0.1}, {"type": "identity"},
    {"type": "pauli", "p_i": 0.7, "p_x": 0.1, "p_y": 0.1, "p_z": 0.1},
    {"type": "unitary_rotation", "beta": 0.2}, {"type": "amplitude_damping", "gamma": 0.25},
])
def test_json_round_trip_builtin(doc):
    chan = ch.from_json(doc)
    again = ch.from_json(chan.to_json())
    assert all(np.array_equal(x, y) for x, y in zip(chan.operators, again.operators))


def test_json_custom_round_trip():
    chan = ch.random_channel(3, 3)
    doc = chan.to_json()
    assert doc["type"] == "custom" and len(doc["kraus"]) == 3
    again = ch.from_json(doc)
    assert all(np.array_equal(x, y) for x, y in zip(chan.operators, again.operators))


def test_json_custom_with_decimal_rounding():
    s = round(math.sqrt(0.5), 11)
    doc = {"type": "custom", "kraus": [[[[s, 0], [0, 0]], [[0, 0], [s, 0]]], [[[s, 0], [0, 0]], [[0, 0], [-s, 0]]]]}
    assert ch.from_json(doc).completeness_residual() <= 1e-10


@pytest.mark.parametrize("doc", [{}, {"type": "nope"}, {"type": "custom"}, {"type": "depolarizing", "q": 1}, []])
def test_json_errors(doc):
    with pytest.raises(ValueError):
        ch.from_json(doc)
