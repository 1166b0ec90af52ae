import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.linalg import fractional_matrix_power
from scipy.optimize import minimize, minimize_scalar

from cqexp.channels import (CQChannel, as_prior, capacity, i_alpha_1, i_alpha_2, inner_min_sigma,
                            mutual_information, r_infinity, renyi_radius, sibson_sigma)
from cqexp.errors import InvalidChannel, InvalidParameter

from conftest import rand_density

seeds = st.integers(0, 2 ** 31 - 1)


def bloch(v):
    x, y, z = v
    r = math.sqrt(x * x + y * y + z * z)
    if r > 1:
        x, y, z = x / r * 0.999999, y / r * 0.999999, z / r * 0.999999
    return 0.5 * np.array([[1 + z, x - 1j * y], [x + 1j * y, 1 - z]])


def augustin_brute(P, W, a):
    """min over qubit sigma of sum_x P(x) D_alpha(W_x||sigma) by Nelder-Mead on the Bloch ball."""
    def f(v):
        s = bloch(v)
        tot = 0.0
        for p, Wx in zip(P, W):
            Q = np.trace(fractional_matrix_power(Wx.matrix, a) @ fractional_matrix_power(s, 1 - a)).real
            tot += p * math.log(Q) / (a - 1)
        return tot
    best = min((minimize(f, x0, method="Nelder-Mead",
                         options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 4000})
                for x0 in ([0, 0, 0], [0.3, 0, 0.3])), key=lambda r: r.fun)
    return best.fun


def blahut_arimoto(Wc, iters=5000):
    """Classical capacity (nats) of a row-stochastic matrix."""
    P = np.full(Wc.shape[0], 1.0 / Wc.shape[0])
    for _ in range(iters):
        q = P @ Wc
        D = np.sum(np.where(Wc > 0, Wc * np.log(Wc / q), 0.0), axis=1)
        P = P * np.exp(D)
        P /= P.sum()
    q = P @ Wc
    return float(P @ np.sum(np.where(Wc > 0, Wc * np.log(Wc / q), 0.0), axis=1))


def test_channel_validation():
    with pytest.raises(InvalidChannel):
        CQChannel([np.eye(2) / 2, np.eye(3) / 3])
    W = CQChannel([np.eye(2) / 2, np.diag([1.0, 0.0])])
    assert W.size == 2 and W.dim == 2 and W.is_commuting() and W.is_classical()
    with pytest.raises(InvalidParameter):
        as_prior([0.5, 0.6])


def test_holevo_information(qubit_channel):
    P = np.array([0.3, 0.7])
    M = qubit_channel.mixture(P)
    S = lambda A: -sum(w * math.log(w) for w in np.linalg.eigvalsh(A) if w > 0)
    ref = S(M) - sum(p * S(Wx.matrix) for p, Wx in zip(P, qubit_channel))
    assert abs(mutual_information(P, qubit_channel) - ref) <= 1e-12


def test_capacity_classical_matches_blahut_arimoto():
    Wc = np.array([[0.85, 0.15], [0.25, 0.75]])
    W = CQChannel([np.diag(r) for r in Wc])
    assert abs(capacity(W) - blahut_arimoto(Wc)) <= 1e-8


def test_sibson_closed_form_is_minimiser(qubit_channel):
    P, a = np.array([0.4, 0.6]), 0.6
    sig = sibson_sigma(P, qubit_channel, a)
    def obj(s):
        # D_alpha(P∘W || P⊗sigma) = 1/(a-1) log sum_x P(x) Q_a(W_x||sigma)
        Q = sum(p * np.trace(fractional_matrix_power(Wx.matrix, a) @ fractional_matrix_power(s, 1 - a)).real
                for p, Wx in zip(P, qubit_channel))
        return math.log(Q) / (a - 1)
    assert abs(obj(sig) - i_alpha_1(P, qubit_channel, a)) <= 1e-10
    rng = np.random.default_rng(0)
    for _ in range(20):
        assert obj(rand_density(2, rng)) >= i_alpha_1(P, qubit_channel, a) - 1e-12


@pytest.mark.parametrize("a", [0.3, 0.7])
def test_augustin_matches_brute_force(qubit_channel, a):
    P = np.array([0.35, 0.65])
    val, sigma = i_alpha_2(P, qubit_channel, a)
    assert abs(val - augustin_brute(P, qubit_channel, a)) <= 1e-7
    assert abs(np.trace(sigma) - 1) <= 1e-12


@given(seeds, st.floats(0.05, 0.95))
def test_jensen_ordering(seed, a):
    rng = np.random.default_rng(seed)
    W = CQChannel([rand_density(2, rng) for _ in range(2)])
    P = rng.dirichlet([1, 1])
    assert i_alpha_1(P, W, a) <= i_alpha_2(P, W, a)[0] + 1e-9


def test_monotone_in_alpha(qubit_channel):
    P = np.array([0.5, 0.5])
    grid = np.linspace(0.05, 1.0, 15)
    i2 = [i_alpha_2(P, qubit_channel, a)[0] for a in grid]
    ca = [renyi_radius(qubit_channel, a)[0] for a in grid[::3]]
    assert np.all(np.diff(i2) >= -1e-9) and np.all(np.diff(ca) >= -1e-9)


def test_scaled_augustin_concave_in_s(qubit_channel):
    P = np.array([0.5, 0.5])
    s = np.linspace(0.1, 5, 20)
    g = np.array([x * i_alpha_2(P, qubit_channel, 1 / (1 + x))[0] for x in s])
    assert np.all(g[1:-1] >= 0.5 * (g[:-2] + g[2:]) - 1e-8)


def test_scaled_augustin_not_concave_in_alpha():
    # (1-a)/a I_a is convex in a on this binary asymmetric channel
    W = CQChannel([np.diag([0.9, 0.1]), np.diag([0.2, 0.8])])
    P = np.array([0.5, 0.5])
    a = np.linspace(0.05, 0.95, 19)
    g = np.array([(1 - x) / x * i_alpha_2(P, W, x)[0] for x in a])
    assert np.all(g[1:-1] < 0.5 * (g[:-2] + g[2:]))


@pytest.mark.parametrize("a", [0.3, 0.6, 0.9])
def test_radius_equality(qubit_channel, a):
    C = renyi_radius(qubit_channel, a)[0]
    res = minimize_scalar(lambda t: -i_alpha_2([t, 1 - t], qubit_channel, a)[0], bounds=(0, 1),
                          method="bounded", options={"xatol": 1e-10})
    assert abs(C + res.fun) <= 1e-6


def test_continuity_in_prior(qubit_channel):
    base = i_alpha_2([0.5, 0.5], qubit_channel, 0.5)[0]
    eps = np.array([0.1, 0.05, 0.025, 0.0125])
    d = np.array([abs(i_alpha_2([0.5 + e, 0.5 - e], qubit_channel, 0.5)[0] - base) for e in eps])
    assert np.all(np.diff(d) < 0)
    assert np.all(d <= (d[0] / eps[0]) * eps + 1e-12)


def test_r_infinity_full_rank_is_zero(qubit_channel):
    assert r_infinity(qubit_channel) == 0.0


def test_r_infinity_pure_states():
    k0 = np.array([1.0, 0.0])
    k1 = np.array([1.0, 1.0]) / math.sqrt(2)
    W = CQChannel([np.outer(k0, k0), np.outer(k1, k1)])
    # C_0 = max_P -log lambda_max(sum_x P(x) |x><x|); optimum at P uniform
    M = 0.5 * (np.outer(k0, k0) + np.outer(k1, k1))
    ref = -math.log(np.linalg.eigvalsh(M)[-1])
    assert abs(r_infinity(W) - ref) <= 1e-6


def test_inner_min_reports_foc(qubit_channel):
    res = inner_min_sigma(qubit_channel, [0.5, 0.5], 0.5)
    assert res.foc_residual <= 1e-7
