import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ci_lab.noise import (ETA_VALUES, NoiseSpec, PauliChannel, bit_phase_flip, couplings, depolarizing,
                          eta_distribution, parse_noise)

probs = st.floats(0.0, 1.0, allow_nan=False)


def test_bit_phase_flip_examples():
    assert bit_phase_flip(0.0).probs.tolist() == [1.0, 0.0, 0.0, 0.0]
    c = bit_phase_flip(0.5)
    assert (c.p_x, c.p_y, c.p_z) == (0.25, 0.25, 0.25)
    assert c.is_independent


def test_asymmetric_bit_phase_flip():
    c = bit_phase_flip(0.1, 0.3)
    assert c.flip_x == pytest.approx(0.1) and c.flip_z == pytest.approx(0.3)
    assert c.p_y == pytest.approx(0.03)
    assert c.is_independent


def test_depolarizing_examples():
    assert depolarizing(0.0).p == 0.0
    j = couplings(depolarizing(0.75))
    assert max(abs(j.J_x), abs(j.J_z), abs(j.J_1)) < 1e-12
    j = couplings(depolarizing(0.3))
    assert math.exp(j.J_x) == pytest.approx(7.0)
    assert j.J_x == pytest.approx(j.J_z) and j.J_x == pytest.approx(j.J_1)


@pytest.mark.parametrize("bad", [-0.1, 1.1, float("nan")])
def test_out_of_range(bad):
    with pytest.raises(ValueError):
        bit_phase_flip(bad)
    with pytest.raises(ValueError):
        depolarizing(bad)
    with pytest.raises(ValueError):
        NoiseSpec(depolarizing(0.1), bad)


def test_total_probability_checked():
    with pytest.raises(ValueError):
        PauliChannel(0.5, 0.4, 0.3)


def test_couplings_zero_component():
    with pytest.raises(ValueError):
        couplings(depolarizing(0.0))
    with pytest.raises(ValueError):
        couplings(PauliChannel(0.1, 0.0, 0.1))


@given(st.floats(1e-6, 1 - 1e-6))
def test_bit_phase_flip_has_no_y_coupling(p1):
    assert abs(couplings(bit_phase_flip(p1)).J_1) < 1e-12


def test_eta_distribution_examples():
    vals, m = eta_distribution(NoiseSpec(depolarizing(0.3), 1.0))
    assert m.tolist() == [0.0, 0.0, 0.0, 0.0, 1.0]
    assert tuple(vals[4]) == (0, 0)
    _, m = eta_distribution(NoiseSpec(depolarizing(0.3), 0.2))
    assert m == pytest.approx([0.56, 0.08, 0.08, 0.08, 0.2])
    c = bit_phase_flip(0.1)
    _, m = eta_distribution(NoiseSpec(c, 0.0))
    assert m == pytest.approx([0.81, 0.09, 0.01, 0.09, 0.0], abs=1e-15)


def test_eta_labels():
    # I, X, Y, Z as (eta_x, eta_z): X flips eta_x, Z flips eta_z
    assert ETA_VALUES.tolist() == [[1, 1], [-1, 1], [-1, -1], [1, -1], [0, 0]]


@given(probs, probs, probs)
def test_masses_sum_to_one(p, e, p2):
    for c in (bit_phase_flip(p, p2), depolarizing(p)):
        _, m = eta_distribution(NoiseSpec(c, e))
        assert abs(m.sum() - 1.0) < 1e-15 * 4
        assert (m >= 0).all()


def test_sampling_reproduces_masses():
    _, m = eta_distribution(NoiseSpec(bit_phase_flip(0.2, 0.1), 0.15))
    n = 10 ** 6
    counts = np.bincount(np.random.default_rng(5).choice(5, size=n, p=m), minlength=5)
    sigma = np.sqrt(n * m * (1 - m))
    assert (np.abs(counts - n * m) <= 5 * sigma).all()


@pytest.mark.parametrize("text,expected", [
    ("bf:0.1", (0.09, 0.01, 0.09)),
    ("depol:0.3", (0.1, 0.1, 0.1)),
    ("bf:0.1,0.2", (0.08, 0.02, 0.18)),
])
def test_parse_noise(text, expected):
    c = parse_noise(text)
    assert (c.p_x, c.p_y, c.p_z) == pytest.approx(expected)


@pytest.mark.parametrize("text", ["amp:0.1", "depol:0.1,0.2", "bf:", "bf:2"])
def test_parse_noise_errors(text):
    with pytest.raises(ValueError):
        parse_noise(text)
