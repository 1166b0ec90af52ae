import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.linalg import expm, fractional_matrix_power, logm

from cqexp.divergences import (d_alpha_flat, d_alpha_petz, flat_delta_ladder, golden_thompson_gap,
                               q_alpha_flat, q_alpha_petz, relative_entropy, relative_variance,
                               supports_contained)
from cqexp.errors import InvalidParameter, NumericalFailure

from conftest import rand_density

seeds = st.integers(0, 2 ** 31 - 1)
alphas = st.floats(0.02, 0.98)


def petz_ref(rho, sigma, a):
    return np.trace(fractional_matrix_power(rho, a) @ fractional_matrix_power(sigma, 1 - a)).real


def flat_ref(rho, sigma, a):
    return np.trace(expm(a * logm(rho) + (1 - a) * logm(sigma))).real


@given(seeds, alphas)
def test_petz_matches_scipy(seed, a):
    rng = np.random.default_rng(seed)
    rho, sigma = rand_density(2, rng), rand_density(2, rng)
    assert abs(q_alpha_petz(rho, sigma, a) - petz_ref(rho, sigma, a)) <= 1e-9


@given(seeds, alphas)
def test_flat_matches_scipy(seed, a):
    rng = np.random.default_rng(seed)
    rho, sigma = rand_density(3, rng), rand_density(3, rng)
    assert abs(q_alpha_flat(rho, sigma, a) - flat_ref(rho, sigma, a)) <= 1e-8


@given(seeds, st.integers(2, 3))
def test_golden_thompson(seed, d):
    rng = np.random.default_rng(seed)
    rho, sigma = rand_density(d, rng), rand_density(d, rng)
    for a in np.linspace(0.05, 0.95, 7):
        assert golden_thompson_gap(rho, sigma, a) >= -1e-9


@given(seeds)
def test_monotone_in_alpha(seed):
    rng = np.random.default_rng(seed)
    rho, sigma = rand_density(2, rng), rand_density(2, rng)
    grid = np.linspace(0.02, 0.98, 50)
    for f in (d_alpha_petz, d_alpha_flat):
        vals = [float(f(rho, sigma, a)) for a in grid]
        assert np.all(np.diff(vals) >= -1e-9)


@given(seeds)
def test_log_q_convex(seed):
    rng = np.random.default_rng(seed)
    rho, sigma = rand_density(2, rng), rand_density(2, rng)
    grid = np.linspace(0.02, 0.98, 30)
    for f in (q_alpha_petz, q_alpha_flat):
        L = np.log([f(rho, sigma, a) for a in grid])
        assert np.all(L[1:-1] <= 0.5 * (L[:-2] + L[2:]) + 1e-8)


@given(seeds, alphas)
def test_commuting_reduces_to_classical(seed, a):
    rng = np.random.default_rng(seed)
    U, _ = np.linalg.qr(rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3)))
    p, q = rng.dirichlet(np.ones(3)), rng.dirichlet(np.ones(3))
    rho, sigma = (U * p) @ U.conj().T, (U * q) @ U.conj().T
    ref = math.log(np.sum(p ** a * q ** (1 - a))) / (a - 1)
    assert abs(float(d_alpha_petz(rho, sigma, a)) - ref) <= 1e-10
    assert abs(float(d_alpha_flat(rho, sigma, a)) - ref) <= 1e-10


@given(seeds, alphas)
def test_additive_under_tensor(seed, a):
    rng = np.random.default_rng(seed)
    r1, s1, r2, s2 = (rand_density(2, rng) for _ in range(4))
    for f in (d_alpha_petz, d_alpha_flat):
        lhs = float(f(np.kron(r1, r2), np.kron(s1, s2), a))
        assert abs(lhs - float(f(r1, s1, a)) - float(f(r2, s2, a))) <= 1e-9


def test_identical_states_zero(rng):
    rho = rand_density(3, rng)
    for a in (0.2, 0.7):
        assert abs(float(d_alpha_petz(rho, rho, a))) <= 1e-12
        assert abs(float(d_alpha_flat(rho, rho, a))) <= 1e-12
    assert abs(float(relative_entropy(rho, rho))) <= 1e-12


def test_relative_entropy_and_variance(rng):
    rho, sigma = rand_density(2, rng), rand_density(2, rng)
    D = np.trace(rho @ (logm(rho) - logm(sigma))).real
    assert abs(float(relative_entropy(rho, sigma)) - D) <= 1e-10
    L = logm(rho) - logm(sigma)
    V = np.trace(rho @ L @ L).real - D ** 2
    assert abs(float(relative_variance(rho, sigma)) - V) <= 1e-9
    # D_alpha -> D as alpha -> 1
    assert abs(float(d_alpha_petz(rho, sigma, 1 - 1e-6)) - D) <= 1e-5


def test_support_violation_is_infinite():
    rho = np.diag([0.5, 0.5])
    sigma = np.diag([1.0, 0.0])
    assert not supports_contained(rho, sigma)
    assert math.isinf(relative_entropy(rho, sigma))
    assert math.isfinite(d_alpha_petz(rho, sigma, 0.5))


def test_orthogonal_states_infinite():
    rho, sigma = np.diag([1.0, 0.0]), np.diag([0.0, 1.0])
    assert math.isinf(d_alpha_petz(rho, sigma, 0.5))


def test_flat_rank_deficient_closed_form_commuting():
    p, q = np.array([0.6, 0.4, 0.0]), np.array([0.2, 0.3, 0.5])
    for a in (0.3, 0.8):
        ref = np.sum(p[:2] ** a * q[:2] ** (1 - a))
        assert abs(q_alpha_flat(np.diag(p), np.diag(q), a) - ref) <= 1e-12


def test_flat_ladder_flags_slow_convergence():
    rng = np.random.default_rng(3)
    rho, sigma = rand_density(3, rng, rank=2), rand_density(3, rng)
    with pytest.raises(NumericalFailure):
        flat_delta_ladder(rho, sigma, 0.4)
    rep = flat_delta_ladder(rho, sigma, 0.4, deltas=(1e-4, 1e-8, 1e-16), raise_on_failure=False)
    gaps = [abs(v - rep["closed_form"]) for v in rep["values"]]
    assert not rep["converged"]
    assert gaps[0] > gaps[1] > gaps[2]


def test_flat_ladder_converges_full_rank(rng):
    rho, sigma = rand_density(2, rng), rand_density(2, rng)
    rep = flat_delta_ladder(rho, sigma, 0.5)
    assert rep["converged"]
    assert abs(rep["extrapolants"][-1] - rep["closed_form"]) <= 1e-9


def test_alpha_out_of_range(rng):
    rho = rand_density(2, rng)
    with pytest.raises(InvalidParameter):
        d_alpha_petz(rho, rho, 1.5)
