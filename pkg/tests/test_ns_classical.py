import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.linalg import fractional_matrix_power
from scipy.stats import binom

from cqexp.divergences import d_alpha_petz, supports_contained
from cqexp.errors import ConditionNotMet, DisjointSupport, InfeasibleRate
from cqexp.ns_classical import (Factor, bahadur_ranga_rao, brr_bound, cgf_build, classical_kl,
                                classical_renyi, e0_two, exact_tail, find_tilt, legendre_fenchel,
                                ns_distributions, phi_n, regularity_suite, tensor_pairs, tilted)
from cqexp.sphere_packing import saddle_solve

from conftest import rand_density

seeds = st.integers(0, 2 ** 31 - 1)


@given(seeds, st.floats(0.02, 0.98))
def test_ns_preserves_petz(seed, a):
    rng = np.random.default_rng(seed)
    rho, sigma = rand_density(3, rng), rand_density(3, rng)
    pr = ns_distributions(rho, sigma)
    Q = np.trace(fractional_matrix_power(rho, a) @ fractional_matrix_power(sigma, 1 - a)).real
    assert abs(classical_renyi(pr.p, pr.q, a) - math.log(Q) / (a - 1)) <= 1e-9
    assert abs(pr.p.sum() - 1) <= 1e-12 and abs(pr.q.sum() - 1) <= 1e-12


@given(seeds)
def test_ns_tensorization(seed):
    rng = np.random.default_rng(seed)
    r1, s1, r2, s2 = (rand_density(2, rng) for _ in range(4))
    joint = ns_distributions(np.kron(r1, r2), np.kron(s1, s2))
    prod = tensor_pairs(ns_distributions(r1, s1), ns_distributions(r2, s2))
    for a in (0.25, 0.75):
        assert abs(classical_renyi(joint.p, joint.q, a) - classical_renyi(prod.p, prod.q, a)) <= 1e-9
    assert abs(classical_kl(joint.p, joint.q) - classical_kl(prod.p, prod.q)) <= 1e-9


@given(seeds, st.integers(1, 3), st.integers(1, 3))
def test_support_equivalence(seed, rk_rho, rk_sigma):
    rng = np.random.default_rng(seed)
    rho, sigma = rand_density(3, rng, rk_rho), rand_density(3, rng, rk_sigma)
    pr = ns_distributions(rho, sigma)
    assert supports_contained(rho, sigma) == bool(np.all(pr.q[pr.p > 0] > 0))


def test_tilted_family_endpoints():
    p, q = np.array([0.5, 0.3, 0.2]), np.array([0.2, 0.2, 0.6])
    assert np.allclose(tilted(p, q, 0.0), p) and np.allclose(tilted(p, q, 1.0), q)
    t = 0.3
    ref = p ** (1 - t) * q ** t
    assert np.allclose(tilted(p, q, t), ref / ref.sum())
    with pytest.raises(DisjointSupport):
        tilted([1.0, 0.0], [0.0, 1.0], 0.5)


def test_find_tilt_solves_constraint():
    p, q = np.array([0.5, 0.3, 0.2]), np.array([0.2, 0.2, 0.6])
    r = 0.5 * classical_kl(p, q)
    t, qt, phi = find_tilt(p, q, r)
    assert abs(classical_kl(qt, q) - r) <= 1e-12
    assert abs(phi - classical_kl(qt, p)) <= 1e-15
    with pytest.raises(InfeasibleRate):
        find_tilt(p, q, 10.0)


def test_phi_matches_grid_supremum():
    p, q = np.array([0.5, 0.3, 0.2]), np.array([0.2, 0.2, 0.6])
    r = 0.05
    a = np.linspace(1e-4, 1, 200001)
    vals = [(1 - x) / x * (classical_renyi(p, q, x) - r) for x in a[::50]]
    grid = max(vals)
    assert abs(phi_n(r, [(p, q)]) - grid) <= 1e-6
    assert phi_n(10.0, [(p, q)]) == 0.0


def test_phi_infinite_below_d0():
    p, q = np.array([0.5, 0.5, 0.0]), np.array([0.2, 0.2, 0.6])
    D0 = -math.log(0.4)
    assert math.isinf(phi_n(0.5 * D0, [(p, q)]))
    assert math.isfinite(phi_n(1.5 * D0, [(p, q)]))


def test_legendre_transform_biconjugate():
    rec = cgf_build([(np.array([0.5, 0.3, 0.2]), np.array([0.2, 0.2, 0.6]))], [1.0])
    for t in (0.2, 0.5, 0.8):
        z = rec.dlam0(t)
        val, ts, in_range = legendre_fenchel(rec, 0, z)
        assert in_range and abs(ts - t) <= 1e-8
        assert abs(val - (t * z - rec.lam0(t))) <= 1e-10
    # Lambda_1(t) = Lambda_0(1-t)
    assert abs(rec.lam1(0.3) - rec.lam0(0.7)) <= 1e-14


def test_regularity_on_qubit_instance(qubit_channel):
    P = np.array([0.5, 0.5])
    for R in (0.08, 0.15):
        sad = saddle_solve(R, P, qubit_channel)
        from cqexp.operators import DensityOperator
        sigma = DensityOperator(sad.sigma_star, normalize=True)
        pairs = [ns_distributions(W, sigma) for W in qubit_channel]
        rep = regularity_suite(pairs, P, R)
        assert rep["passed"], rep
        # phi at the saddle-point state equals E2(R,P)
        assert abs(rep["phi"] - float(sad.value)) <= 1e-7


def test_e0_two_forms_agree(qubit_channel):
    sigma = qubit_channel.mixture([0.5, 0.5])
    rec = cgf_build([ns_distributions(W, sigma) for W in qubit_channel], [0.5, 0.5])
    for s in (0.2, 1.0, 3.0):
        a, b = e0_two(s, rec)
        assert abs(a - b) <= 1e-10


def _binary_instance(n):
    p, q = np.array([0.3, 0.7]), np.array([0.6, 0.4])
    u = np.log(q / p)
    z = 0.5 * (float(p @ u) + float(q @ u))
    return p, u, z


@pytest.mark.parametrize("n", [100, 250, 500, 1000])
def test_brr_below_exact_binomial(n):
    p, u, z = _binary_instance(n)
    b, diag = brr_bound([Factor(u, p, n)], z, check_guard=False)
    # exact tail: k copies of u[0], n-k of u[1]; sum >= n z
    k = np.arange(n + 1)
    hit = k * u[0] + (n - k) * u[1] >= n * z - 1e-10 * n
    exact = float(binom.pmf(k[hit], n, p[0]).sum())
    assert abs(exact_tail([Factor(u, p, n)], z) - exact) <= 1e-12 + 1e-9 * exact
    assert b <= exact
    assert not diag["guard"]


def test_brr_guard_raises():
    p, u, z = _binary_instance(100)
    with pytest.raises(ConditionNotMet):
        brr_bound([Factor(u, p, 100)], z)


def test_brr_on_qubit_products(qubit_channel):
    sigma = qubit_channel.mixture([0.5, 0.5])
    rec = cgf_build([ns_distributions(W, sigma) for W in qubit_channel], [0.5, 0.5])
    for n in (4, 8, 12):
        z = 0.5 * rec.dlam0(0.5)
        b, _ = bahadur_ranga_rao(rec, z, n, check_guard=False)
        from cqexp.ns_classical import _factors_from_record
        assert b <= exact_tail(_factors_from_record(rec, 0, n), z)
