import math

import numpy as np
import pytest
from scipy.optimize import brentq

from cqexp.channels import CQChannel
from cqexp.converse import (Code, best_code_error, blahut_converse, build_symmetric,
                            channel_summary, chebyshev_converse, decode_error,
                            exact_symmetric_bound, general_code_bound, meta_converse,
                            one_shot_hoeffding, refined_sp_bound, sharp_converse,
                            simplex_grid, symmetric_exponent_check, symmetric_sigma_check,
                            uniform_optimality_check)
from cqexp.errors import ConditionNotMet, InvalidRate, InvalidSymmetry
from cqexp.ht_oracle import alpha_hat, product_oracle
from cqexp.sphere_packing import saddle_solve

from conftest import rand_density

CLASSICAL = CQChannel([np.diag([0.9, 0.1]), np.diag([0.2, 0.8])], name="bsc-like")


def _check_report(rep):
    if rep.log_value == -math.inf:
        assert rep.value == 0.0
        return
    assert abs(rep.log_value - (rep.log_prefactor - rep.n * rep.exponent)) <= 1e-12 * max(1, abs(rep.log_value))
    if rep.log_value > -700:
        ref = rep.prefactor * math.exp(-rep.n * rep.exponent)
        assert abs(rep.value - ref) <= 1e-12 * max(ref, 1e-300)
    assert 0.0 <= rep.value <= 1.0
    row = rep.to_row()
    assert row["bound"] == rep.name and row["valid"] == int(rep.valid)


def test_simplex_grid():
    g = simplex_grid(2, 21)
    assert len(g) == 21 and all(abs(p.sum() - 1) < 1e-15 for p in g)
    g3 = simplex_grid(3, 21)
    assert all(np.all(p >= 0) for p in g3) and len(g3) == 21


def test_one_shot_identical_states(rng):
    rho = rand_density(2, rng)
    nu = 3.0
    rep = one_shot_hoeffding(rho, rho, 0.1, nu)
    # K = 0 and phi = 0 so the bound is exp(-nu)/4
    assert abs(rep.value - 0.25 * math.exp(-nu)) <= 1e-12
    _check_report(rep)


@pytest.mark.parametrize("r", [0.05, 0.2, 0.6])
def test_one_shot_is_sound(rng, r):
    rho, sigma = rand_density(2, rng), rand_density(2, rng)
    for nu in (1.0, 2.0, 4.0):
        rep = one_shot_hoeffding(rho, sigma, r, nu)
        _check_report(rep)
        mu = rep.constants["mu"]
        assert rep.value <= alpha_hat(rho, sigma, mu) + 1e-12


def test_one_shot_disjoint_is_trivial():
    rep = one_shot_hoeffding(np.diag([1.0, 0.0]), np.diag([0.0, 1.0]), 0.1, 1.0)
    assert rep.value == 0.0 and not rep.valid


@pytest.mark.parametrize("frac", [0.6, 0.85])
@pytest.mark.parametrize("n", [40, 100, 300])
def test_bounds_below_product_oracle(frac, n):
    W = CLASSICAL
    R = frac * channel_summary(W)["capacity"]
    P = np.array([0.5, 0.5])
    sig = saddle_solve(R, P, W).sigma_star
    xs = [0] * (n // 2) + [1] * (n - n // 2)
    oracle = product_oracle([W[x] for x in xs], sig, math.exp(-n * R))
    for rep in (blahut_converse(W, P, R, n), chebyshev_converse(W, P, R, n)):
        _check_report(rep)
        assert rep.log_value <= math.log(oracle) + 1e-9
    nu = 0.5 * saddle_solve(R, P, W).value
    sh = sharp_converse(W, P, R, n, nu)
    _check_report(sh)
    assert not sh.flags["sqrt_n_condition"]
    # the closed form is still below the oracle here
    assert sh.log_value <= math.log(oracle) + 1e-9


def test_quantum_bounds_below_oracle(qubit_channel):
    W = qubit_channel
    R = 0.6 * channel_summary(W)["capacity"]
    P = np.array([0.5, 0.5])
    sig = saddle_solve(R, P, W).sigma_star
    for n in (6, 8):
        xs = [0] * (n // 2) + [1] * (n // 2)
        oracle = product_oracle([W[x] for x in xs], sig, math.exp(-n * R))
        for rep in (blahut_converse(W, P, R, n), chebyshev_converse(W, P, R, n)):
            assert rep.value <= oracle + 1e-12


def test_blahut_vacuous_flag():
    W = CLASSICAL
    R = 0.6 * channel_summary(W)["capacity"]
    rep = blahut_converse(W, [0.5, 0.5], R, 5)
    assert rep.value == 0.0 and not rep.flags["non_vacuous"]


def test_chebyshev_kappa2_identity():
    W = CLASSICAL
    R = 0.85 * channel_summary(W)["capacity"]
    n = 4000
    rep = chebyshev_converse(W, [0.5, 0.5], R, n)
    k = rep.constants
    lhs = k["kappa2"] * math.sqrt(n)
    rhs = math.sqrt(4 * n * k["V_max"]) + n * k["gamma_n"] * k["Upsilon"]
    assert abs(lhs - rhs) <= 1e-9 * rhs
    assert rep.flags["R_n>=R0"]
    assert abs(rep.log_value - k["log_closed_form"]) <= 1e-9


def test_sharp_condition_and_rate_errors(qubit_channel):
    W = qubit_channel
    C = channel_summary(W)["capacity"]
    with pytest.raises(ConditionNotMet):
        sharp_converse(W, [0.5, 0.5], 0.6 * C, 100, nu=10.0)
    with pytest.raises(InvalidRate):
        chebyshev_converse(W, [0.5, 0.5], 1.01 * C, 100)
    with pytest.raises(InvalidRate):
        blahut_converse(W, [0.5, 0.5], 0.0, 100)


def test_sharp_constants(qubit_channel):
    W = qubit_channel
    R = 0.6 * channel_summary(W)["capacity"]
    rep = sharp_converse(W, [0.5, 0.5], R, 1000, nu=0.005)
    k = rep.constants
    assert abs(k["A"] - math.exp(-k["K_max"]) / (4 * math.sqrt(2 * math.pi * k["V_max"]))) <= 1e-15
    gam = math.log(1000) / 2000 + k["x"] / 1000
    assert abs(k["gamma_n"] - gam) <= 1e-15
    assert abs(k["ell_n"] - (k["x"] * k["s_star"] + 1000 * gam ** 2 * k["Upsilon"] / 2)) <= 1e-12
    assert k["N_threshold"] > 1000 and not rep.flags["sqrt_n_condition"]


def test_refined_gamma_monotone(qubit_channel):
    W = qubit_channel
    R = 0.6 * channel_summary(W)["capacity"]
    vals = [refined_sp_bound(W, R, 500, [0.5, 0.5], g).log_value for g in (0.0, 0.5, 1.0)]
    assert vals[0] >= vals[1] >= vals[2]


def test_general_code_exponent_of_n(qubit_channel):
    W = qubit_channel
    R = 0.6 * channel_summary(W)["capacity"]
    rep = general_code_bound(W, R, 500)
    _check_report(rep)
    assert rep.constants["t"] >= 0.5 * (1 + rep.constants["s_star"])
    assert abs(rep.constants["rate_penalty"] - 2 * math.log(500) / 500) <= 1e-15


def test_symmetric_channel_checks(pauli_channel):
    W = pauli_channel
    for s in (0.3, 1.0, 2.0):
        assert uniform_optimality_check(W, s)["passed"]
    R = 0.6 * channel_summary(W)["capacity"]
    assert symmetric_sigma_check(W, R)["passed"]
    chk = symmetric_exponent_check(W, R, [[0.5, 0.5], [0.8, 0.2], [0.1, 0.9]])
    assert chk["max_error"] <= 1e-6
    rep = exact_symmetric_bound(W, R, 200)
    _check_report(rep)
    assert rep.name == "exact_symmetric_bound"


def test_non_symmetric_fails_uniform_check():
    W = CQChannel([np.diag([0.99, 0.01]), np.diag([0.4, 0.6])])
    # s = 1 cannot separate binary inputs; other orders do
    assert uniform_optimality_check(W, 1.0)["passed"]
    assert not uniform_optimality_check(W, 0.5)["passed"]
    with pytest.raises(InvalidSymmetry):
        exact_symmetric_bound(W, 0.1, 100)


def test_build_symmetric_validation():
    W1 = np.diag([0.7, 0.3])
    with pytest.raises(InvalidSymmetry):
        build_symmetric(W1, np.array([[1, 1], [0, 1]]), 2)
    with pytest.raises(InvalidSymmetry):
        build_symmetric(W1, np.diag([1, 1j]), 2)
    W = build_symmetric(W1, np.diag([1, 1j]), 4)
    assert W.size == 4


def test_meta_converse_edges(qubit_channel):
    W = qubit_channel
    assert meta_converse(W, Code([[0, 1, 0]])).value == 0.0
    # n = 1, M = 2: the bound is on the maximal error, so compare with the
    # minimax two-state error, where alpha_hat(W0 || W1, mu) = mu
    rep = meta_converse(W, Code([[0], [1]]))
    minimax = brentq(lambda m: alpha_hat(W[0], W[1], m) - m, 0.0, 1.0, xtol=1e-14)
    assert rep.value <= minimax + 1e-12
    assert rep.value > 0
    hel = decode_error([W[0], W[1]], method="helstrom")
    assert hel["average"] <= minimax + 1e-12


def test_code_oracle_dominates_bounds(qubit_channel):
    W = qubit_channel
    n, M = 6, 2
    res = best_code_error(W, n, M)
    assert res["exhaustive"]
    code = res["code"]
    assert code.is_constant_composition
    assert meta_converse(W, code).value <= res["error"] + 1e-12
    R = math.log(M) / n
    if channel_summary(W)["r_inf"] < R < channel_summary(W)["capacity"]:
        for rep in (blahut_converse(W, code.composition, R, n),
                    chebyshev_converse(W, code.composition, R, n)):
            assert rep.value <= res["error"] + 1e-12


def test_helstrom_beats_pgm(rng):
    states = [rand_density(2, rng) for _ in range(2)]
    assert decode_error(states, "helstrom")["average"] <= decode_error(states, "pgm")["average"] + 1e-12
