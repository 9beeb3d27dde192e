import functools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import expm as scipy_expm

from dynmap.errors import ConfigError, ExpmOverflow, NonFiniteMatrix
from dynmap.models import analytic_liouvillian, eval_family, make_family
from dynmap.propagate import (
    TimeGrid,
    ajl_check,
    expm,
    one_norm,
    time_split_forward,
    time_split_inverse,
)
from dynmap.superop import determinant, max_norm

AD = make_family("amplitude-damping", gamma=1.0, t_max=3.0)
DEPHASING = make_family("dephasing", preset="invertible", t_max=3.0)
MIXED = make_family("mixed-pauli", a=0.5, r=1.0, t_max=5.0)


def generator(f):
    return functools.partial(analytic_liouvillian, f)


def test_expm_trivial_cases():
    assert np.array_equal(expm(np.zeros((4, 4))), np.eye(4))
    D = np.diag([0, -1, -1, -2])
    assert np.allclose(expm(D), np.diag(np.exp([0, -1, -1, -2])), atol=1e-14)


def test_expm_of_amplitude_damping_generator():
    L = analytic_liouvillian(AD, 0.0)
    assert max_norm(expm(0.5 * L) - eval_family(AD, 0.5).mat) < 1e-10


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.floats(0.01, 10.0))
def test_expm_agrees_with_scipy_and_inverts(seed, norm):
    rng = np.random.default_rng(seed)
    M = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    M *= norm / one_norm(M)
    E = expm(M)
    assert max_norm(E - scipy_expm(M)) <= 1e-10 * max(1.0, max_norm(E))
    assert max_norm(E @ expm(-M) - np.eye(4)) < 1e-10 * math.exp(norm)


def test_expm_guards():
    with pytest.raises(ExpmOverflow):
        expm(np.full((2, 2), 1e9))
    with pytest.raises(NonFiniteMatrix):
        expm(np.array([[np.nan, 0], [0, 0]]))


def test_time_grid_validation():
    grid = TimeGrid(0.0, 1.0, 4)
    assert len(grid) == 5
    assert grid.dt == 0.25
    assert grid.points[-1] == 1.0
    with pytest.raises(ConfigError):
        TimeGrid(1.0, 1.0, 4)
    with pytest.raises(ConfigError):
        TimeGrid(0.0, 1.0, 0)


def test_constant_generator_is_independent_of_step_count():
    L = analytic_liouvillian(AD, 0.0)
    exact = expm(2.0 * L)
    for n in (1, 7, 50):
        P = time_split_forward(lambda t: L, TimeGrid(0.0, 2.0, n))
        assert P.direction == "forward"
        assert max_norm(P.mat.mat - exact) < 1e-12
        Q = time_split_inverse(lambda t: L, TimeGrid(0.0, 2.0, n))
        assert max_norm(Q.mat.mat - expm(-2.0 * L)) < 1e-11


def test_forward_product_reproduces_amplitude_damping():
    P = time_split_forward(generator(AD), TimeGrid(0.0, 1.0, 1000))
    assert max_norm(P.mat.mat - eval_family(AD, 1.0).mat) < 1e-5


def test_forward_error_halves_with_doubled_steps():
    exact = eval_family(MIXED, 1.0).mat
    errors = [max_norm(time_split_forward(generator(MIXED), TimeGrid(0.0, 1.0, n)).mat.mat - exact)
              for n in (100, 200, 400)]
    assert errors[0] > errors[1] > errors[2]
    assert 1.7 < errors[0] / errors[1] < 2.3
    assert 1.7 < errors[1] / errors[2] < 2.3


@pytest.mark.parametrize("f, t1, n, bound", [(AD, 1.0, 1000, 1e-9), (DEPHASING, 2.0, 2000, 1e-8)],
                         ids=["amplitude-damping", "dephasing"])
def test_forward_times_inverse_is_identity(f, t1, n, bound):
    grid = TimeGrid(0.0, t1, n)
    fwd = time_split_forward(generator(f), grid).mat
    inv = time_split_inverse(generator(f), grid).mat
    assert max_norm((fwd @ inv).mat - np.eye(4)) < bound
    assert max_norm((inv @ fwd).mat - np.eye(4)) < bound


def test_discrete_determinant_identity():
    grid = TimeGrid(0.0, 2.0, 64)
    gen = generator(MIXED)
    P = time_split_forward(gen, grid).mat.mat
    expected = np.exp(sum(np.trace(gen(t)) for t in grid.points[:-1]) * grid.dt)
    assert abs(determinant(P) - expected) <= 1e-9 * abs(expected)


def test_ajl_amplitude_damping_and_dephasing():
    rng = np.random.default_rng(3)
    for f in (AD, DEPHASING):
        for _ in range(10):
            s, t = sorted(rng.uniform(0.0, f.t_max, size=2))
            assert ajl_check(f, t, s) < 1e-8
    assert ajl_check(AD, 2.0, 0.5) < 1e-10


def test_ajl_smooth_time_dependent_family():
    assert ajl_check(MIXED, 3.0, 0.5, n=128) < 1e-8


def test_ajl_constant_generator_provider():
    L = analytic_liouvillian(AD, 0.0) + np.diag([0, -2j, 2j, 0])
    for s, t in ((0.0, 1.0), (0.3, 0.9), (1.0, 2.5)):
        assert ajl_check(lambda u: L, t, s, n=32) < 1e-12


def test_ajl_trivial_and_invalid():
    assert ajl_check(AD, 1.0, 1.0) == 0.0
    with pytest.raises(ConfigError):
        ajl_check(AD, 0.5, 1.0)
