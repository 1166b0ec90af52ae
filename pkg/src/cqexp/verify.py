"""Property-verification battery.

Each check evaluates one invariant on seeded random or fixed instances and
returns a :class:`CheckResult`.  Checks are grouped into suites named after the
modules they exercise; :func:`run_suites` runs a selection and
:func:`format_report` renders the pass/fail listing used by ``cqexp verify``.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from . import channels as ch
from . import divergences as dv
from . import ht_oracle as ho
from . import ns_classical as ns
from . import operators as op
from . import sphere_packing as sp
from .errors import CapacityExceeded, ConditionNotMet

__all__ = ["CheckResult", "SUITES", "run_suites", "format_report", "random_density",
           "random_channel"]


@dataclass
class CheckResult:
    suite: str
    anchor: str
    passed: bool
    detail: str = ""
    count: int = 0
    skipped: bool = False
    seconds: float = 0.0

    @property
    def status(self) -> str:
        if self.skipped:
            return "SKIP"
        return "PASS" if self.passed else "FAIL"


# ---------------------------------------------------------------------------
# random instances


def random_density(d, rng, rank=None, real=False):
    rank = d if rank is None else rank
    G = rng.normal(size=(d, rank))
    if not real:
        G = G + 1j * rng.normal(size=(d, rank))
    rho = G @ G.conj().T
    return rho / np.real(np.trace(rho))


def random_channel(size, d, rng, rank=None):
    return ch.CQChannel([random_density(d, rng, rank) for _ in range(size)])


def random_hermitian(d, rng):
    G = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return 0.5 * (G + G.conj().T)


def _commuting_pair(d, rng):
    U, _ = np.linalg.qr(rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d)))
    p, q = rng.dirichlet(np.ones(d)), rng.dirichlet(np.ones(d))
    return (U * p) @ U.conj().T, (U * q) @ U.conj().T, p, q


# ---------------------------------------------------------------------------
# operator-core


def _op_reconstruction(rng, W):
    worst = 0.0
    for _ in range(50):
        A = random_hermitian(int(rng.integers(2, 6)), rng)
        w, V = op.spectral_decompose(A)
        worst = max(worst, np.linalg.norm((V * w) @ V.conj().T - A) / np.linalg.norm(A))
    return worst <= 1e-10, f"max relative residual {worst:.2e}", 50


def _op_power(rng, W):
    worst = 0.0
    for _ in range(50):
        d = int(rng.integers(2, 5))
        A = random_density(d, rng, rank=int(rng.integers(1, d + 1)))
        p, q = rng.uniform(-1.5, 2.0, size=2)
        lhs = op.mat_power(A, p) @ op.mat_power(A, q)
        worst = max(worst, np.max(np.abs(lhs - op.mat_power(A, p + q))))
    return worst <= 1e-9, f"max entry error {worst:.2e}", 50


def _op_projector(rng, W):
    worst = 0.0
    for _ in range(50):
        d = int(rng.integers(2, 5))
        A = random_density(d, rng, rank=int(rng.integers(1, d + 1)))
        P0 = op.mat_power(A, 0)
        worst = max(worst, np.max(np.abs(P0 @ P0 - P0)), np.max(np.abs(P0 @ A - A @ P0)))
    return worst <= 1e-10, f"max idempotence/commutator error {worst:.2e}", 50


def _op_tensor(rng, W):
    worst = 0.0
    for _ in range(50):
        A, B, C = (rng.normal(size=(k, k)) + 1j * rng.normal(size=(k, k)) for k in (2, 3, 2))
        worst = max(worst, abs(np.trace(op.tensor(A, B)) - np.trace(A) * np.trace(B)),
                    np.max(np.abs(op.tensor(op.tensor(A, B), C) - op.tensor(A, op.tensor(B, C)))))
    return worst <= 1e-12, f"max trace/associativity error {worst:.2e}", 50


# ---------------------------------------------------------------------------
# divergences

_ALPHAS = np.linspace(0.02, 0.98, 50)


def _div_monotone(rng, W):
    bad = 0
    for _ in range(20):
        d = int(rng.integers(2, 4))
        rho, sigma = random_density(d, rng), random_density(d, rng)
        for f in (dv.d_alpha_petz, dv.d_alpha_flat):
            vals = np.array([float(f(rho, sigma, a)) for a in _ALPHAS])
            bad += int(np.any(np.diff(vals) < -1e-9))
    return bad == 0, f"{bad} non-monotone sequences", 40


def _div_convex(rng, W):
    bad = 0
    for _ in range(20):
        rho, sigma = random_density(2, rng), random_density(2, rng)
        for f in (dv.q_alpha_petz, dv.q_alpha_flat):
            L = np.log([f(rho, sigma, a) for a in _ALPHAS])
            bad += int(np.any(L[1:-1] > 0.5 * (L[:-2] + L[2:]) + 1e-8))
    return bad == 0, f"{bad} midpoint violations", 40


def _div_classical(rng, W):
    worst = 0.0
    for _ in range(30):
        d = int(rng.integers(2, 5))
        rho, sigma, p, q = _commuting_pair(d, rng)
        for a in (0.2, 0.5, 0.8):
            ref = math.log(np.sum(p ** a * q ** (1 - a))) / (a - 1)
            worst = max(worst, abs(float(dv.d_alpha_petz(rho, sigma, a)) - ref),
                        abs(float(dv.d_alpha_flat(rho, sigma, a)) - ref))
    return worst <= 1e-10, f"max deviation {worst:.2e}", 90


def _div_golden_thompson(rng, W):
    worst = math.inf
    for _ in range(100):
        d = int(rng.integers(2, 4))
        rho, sigma = random_density(d, rng), random_density(d, rng)
        for a in (0.1, 0.3, 0.5, 0.7, 0.9):
            worst = min(worst, dv.golden_thompson_gap(rho, sigma, a))
    return worst >= -1e-9, f"min Q - Q_flat {worst:.2e}", 500


def _div_additive(rng, W):
    worst = 0.0
    for _ in range(20):
        r1, s1, r2, s2 = (random_density(2, rng) for _ in range(4))
        for a in (0.3, 0.7):
            lhs = float(dv.d_alpha_petz(np.kron(r1, r2), np.kron(s1, s2), a))
            rhs = float(dv.d_alpha_petz(r1, s1, a)) + float(dv.d_alpha_petz(r2, s2, a))
            worst = max(worst, abs(lhs - rhs))
    return worst <= 1e-9, f"max deviation {worst:.2e}", 40


# ---------------------------------------------------------------------------
# channel quantities


def _ch_jensen(rng, W):
    worst = -math.inf
    for k in range(10):
        V = W if k == 0 else random_channel(2, 2, rng)
        P = rng.dirichlet(np.ones(V.size))
        for a in (0.2, 0.5, 0.8):
            worst = max(worst, ch.i_alpha_1(P, V, a) - ch.i_alpha_2(P, V, a)[0])
    return worst <= 1e-9, f"max I1 - I2 {worst:.2e}", 30


def _ch_monotone(rng, W):
    grid = np.linspace(0.05, 1.0, 20)
    P = np.full(W.size, 1.0 / W.size)
    i2 = np.array([ch.i_alpha_2(P, W, a)[0] for a in grid])
    ca = np.array([ch.renyi_radius(W, a)[0] for a in grid[::4]])
    ok = np.all(np.diff(i2) >= -1e-9) and np.all(np.diff(ca) >= -1e-9)
    return bool(ok), f"min increments {np.diff(i2).min():.2e}, {np.diff(ca).min():.2e}", 25


def _ch_concave(rng, W):
    # concavity holds in s = (1-alpha)/alpha; in alpha itself the map can be convex
    grid = np.linspace(0.1, 5.0, 20)
    bad = 0
    for k in range(3):
        V = W if k == 0 else random_channel(2, 2, rng)
        P = rng.dirichlet(np.ones(V.size))
        g = np.array([s * ch.i_alpha_2(P, V, 1.0 / (1.0 + s))[0] for s in grid])
        bad += int(np.any(g[1:-1] < 0.5 * (g[:-2] + g[2:]) - 1e-8))
    return bad == 0, f"{bad} midpoint violations in s", 3


def _max_augustin(W, a):
    from scipy.optimize import minimize

    f = lambda x: -ch.i_alpha_2(ch.as_prior(np.abs(x) / np.abs(x).sum()), W, a)[0]
    if W.size == 2:
        from scipy.optimize import minimize_scalar

        res = minimize_scalar(lambda t: f(np.array([t, 1 - t])), bounds=(0, 1), method="bounded",
                              options={"xatol": 1e-10})
        return -res.fun
    res = minimize(f, np.full(W.size, 1.0 / W.size), method="Nelder-Mead",
                   options={"xatol": 1e-10, "fatol": 1e-13, "maxiter": 4000})
    return -res.fun


def _ch_radius(rng, W):
    worst = 0.0
    for a in (0.3, 0.6, 0.9):
        C1 = ch.renyi_radius(W, a)[0]
        worst = max(worst, abs(C1 - _max_augustin(W, a)))
    return worst <= 1e-6, f"max radius mismatch {worst:.2e}", 3


def _ch_continuity(rng, W):
    P = np.full(W.size, 1.0 / W.size)
    base = ch.i_alpha_2(P, W, 0.5)[0]
    d = rng.normal(size=W.size)
    d -= d.mean()
    d /= np.abs(d).sum()
    eps = [0.2, 0.1, 0.05, 0.025, 0.0125]
    diffs = np.array([abs(ch.i_alpha_2(P + e * d / 2, W, 0.5)[0] - base) for e in eps])
    slope = np.max(diffs / np.array(eps))
    ok = np.all(np.diff(diffs) <= 1e-12) and np.all(diffs <= slope * np.array(eps) + 1e-12)
    return bool(ok), f"differences {', '.join(f'{x:.1e}' for x in diffs)}", len(eps)


# ---------------------------------------------------------------------------
# sphere-packing solver


def _rates(W, k):
    C, Rinf = ch.capacity(W), ch.r_infinity(W)
    return Rinf + (C - Rinf) * np.linspace(0.2, 0.8, k)


def _sp_ordering(rng, W):
    worst = -math.inf
    P = np.full(W.size, 1.0 / W.size)
    for R in _rates(W, 3):
        worst = max(worst, float(sp.e_sp2(R, P, W)) - float(sp.e_sp_weak(R, P, W, restarts=1)))
    D = ch.CQChannel([np.diag([0.8, 0.2]), np.diag([0.3, 0.7])])
    eq = 0.0
    for R in _rates(D, 2):
        eq = max(eq, abs(float(sp.e_sp2(R, P, D)) - float(sp.e_sp_weak(R, P, D, restarts=1))))
    return worst <= 1e-6 and eq <= 1e-6, f"max E - E_weak {worst:.2e}; diagonal gap {eq:.2e}", 5


def _sp_variational(rng, W):
    worst, P = 0.0, np.full(W.size, 1.0 / W.size)
    for R in _rates(W, 3):
        a, b, c = (float(f(R, P, W)) for f in (sp.e_sp_strong, sp.e_sp1, sp.e_sp2))
        worst = max(worst, abs(a - b), b - c)
    R = _rates(W, 1)[0]
    top = float(sp.e_sp_max(R, W)["value"])
    grid = max(float(sp.e_sp2(R, np.array([t, 1 - t]), W)) for t in np.linspace(0.05, 0.95, 19)) \
        if W.size == 2 else top
    ok = worst <= 1e-6 and grid <= top + 1e-5
    return ok, f"max strong/Sibson/Augustin mismatch {worst:.2e}; grid max {grid:.6g} <= {top:.6g}", 4


def _sp_curve(rng, W):
    C, Rinf = ch.capacity(W), ch.r_infinity(W)
    rates = np.linspace(max(Rinf, 1e-3) + 1e-3, C - 1e-3, 9)
    curve = sp.exponent_curve(W, rates, weak=False)
    r, e = curve.finite_segment()
    mono = np.all(np.diff(e) <= 1e-9)
    conv = np.all(e[1:-1] <= 0.5 * (e[:-2] + e[2:]) + 1e-7)
    above = float(sp.e_sp_max(C + 1e-6, W)["value"]) == 0.0
    below = True
    if Rinf > 1e-6:
        below = sp.e_sp_max(Rinf - 1e-6, W)["regime"] == "infinite"
    return bool(mono and conv and above and below), \
        f"monotone={mono} convex={conv} zero_above_C={above} infinite_below={below}", len(rates)


def _sp_unique(rng, W):
    R = _rates(W, 1)[0]
    P = np.full(W.size, 1.0 / W.size)
    ref = sp.saddle_solve(R, P, W)
    worst = 0.0
    for _ in range(10):
        s0 = random_density(W.dim, rng)
        res = sp.saddle_solve(R, P, W, sigma0=s0)
        worst = max(worst, abs(res.alpha_star - ref.alpha_star),
                    float(np.max(np.abs(res.sigma_star - ref.sigma_star))))
    return worst <= 1e-6, f"max spread {worst:.2e}", 10


def _sp_minimax(rng, W):
    worst, cnt = 0.0, 0
    for k in range(4):
        V = W if k == 0 else random_channel(2, 2, rng)
        P = rng.dirichlet(np.ones(V.size))
        for R in _rates(V, 2):
            res = sp.saddle_solve(R, P, V)
            if res.regime == "positive":
                worst, cnt = max(worst, res.minimax_gap), cnt + 1
    return worst <= 1e-6, f"max gap {worst:.2e}", cnt


def _sp_subgradient(rng, W):
    P = np.full(W.size, 1.0 / W.size)
    worst = max(sp.subgradient_check(R, P, W)["error"] for R in _rates(W, 3))
    return worst <= 1e-3, f"max |FD + s*| {worst:.2e}", 3


# ---------------------------------------------------------------------------
# NS reduction


def _ns_faithful(rng, W):
    worst = 0.0
    for _ in range(40):
        d = int(rng.integers(2, 4))
        rho, sigma = random_density(d, rng), random_density(d, rng)
        pr = ns.ns_distributions(rho, sigma)
        for a in (0.1, 0.4, 0.7, 0.95):
            worst = max(worst, abs(float(dv.d_alpha_petz(rho, sigma, a)) - ns.classical_renyi(pr.p, pr.q, a)))
    return worst <= 1e-9, f"max deviation {worst:.2e}", 160


def _ns_tensor(rng, W):
    worst = 0.0
    supp_ok = True
    for _ in range(10):
        r1, s1, r2, s2 = (random_density(2, rng) for _ in range(4))
        joint = ns.ns_distributions(np.kron(r1, r2), np.kron(s1, s2))
        prod = ns.tensor_pairs(ns.ns_distributions(r1, s1), ns.ns_distributions(r2, s2))
        for a in (0.3, 0.8):
            worst = max(worst, abs(ns.classical_renyi(joint.p, joint.q, a) - ns.classical_renyi(prod.p, prod.q, a)))
        rho = random_density(3, rng, rank=2)
        sig = random_density(3, rng, rank=int(rng.integers(1, 4)))
        pr = ns.ns_distributions(rho, sig)
        supp_ok &= dv.supports_contained(rho, sig) == bool(np.all(pr.q[pr.p > 1e-14] > 1e-14))
    return worst <= 1e-9 and supp_ok, f"max deviation {worst:.2e}; support equivalence {supp_ok}", 10


def _ns_lf(rng, W):
    pr = ns.ns_distributions(W[0], W.mixture(np.full(W.size, 1 / W.size)))
    rec = ns.cgf_build([pr], [1.0])
    worst = 0.0
    for t in np.linspace(0.05, 0.95, 10):
        z = rec.dlam0(t)
        val, _, _ = ns.legendre_fenchel(rec, 0, z)
        worst = max(worst, abs(val - (t * z - rec.lam0(t))))
    lam = [rec.lam0(t) for t in np.linspace(0, 1, 21)]
    conv = np.all(np.array(lam[1:-1]) <= 0.5 * (np.array(lam[:-2]) + np.array(lam[2:])) + 1e-7)
    return worst <= 1e-7 and bool(conv), f"max biconjugate error {worst:.2e}", 10


def _ns_regularity(rng, W):
    P = np.full(W.size, 1.0 / W.size)
    fails, cnt, worst = 0, 0, ""
    for R in _rates(W, 3):
        sad = sp.saddle_solve(R, P, W)
        sigma = op.DensityOperator(sad.sigma_star, normalize=True)
        pairs = [ns.ns_distributions(W[x], sigma) for x in range(W.size)]
        rep = ns.regularity_suite(pairs, P, R)
        if rep.get("skipped"):
            continue
        cnt += 1
        fails += int(not rep["passed"])
        worst = f"lf {max(rep['lf0_error'], rep['lf1_error']):.1e}, t {rep['t_error']:.1e}"
    return fails == 0, worst, cnt


def _ns_brr(rng, W):
    viol, cnt = 0, 0
    for n in (100, 400, 1000):
        p, q = np.array([0.3, 0.7]), np.array([0.6, 0.4])
        f = ns.Factor(np.log(q / p), p, n)
        z = 0.5 * (np.sum(p * np.log(q / p)) + np.sum(q * np.log(q / p)))
        b, _ = ns.brr_bound([f], z, check_guard=False)
        viol += int(b > ns.exact_tail([f], z))
        cnt += 1
    return viol == 0, f"{viol} violations", cnt


# ---------------------------------------------------------------------------
# converse bounds


def _cv_soundness(rng, W):
    from .converse import one_shot_hoeffding

    viol, cnt = 0, 0
    for _ in range(20):
        rho, sigma = random_density(2, rng), random_density(2, rng)
        r = float(rng.uniform(0.01, 0.5))
        rep = one_shot_hoeffding(rho, sigma, r, float(rng.uniform(1.0, 4.0)))
        mu = rep.constants["mu"]
        viol += int(rep.value > ho.alpha_hat(rho, sigma, mu) + 1e-12)
        cnt += 1
    return viol == 0, f"{viol} violations", cnt


def _cv_product_soundness(rng, W):
    from .converse import blahut_converse, chebyshev_converse, channel_summary, sharp_converse
    from .converse import _instance

    s = channel_summary(W)
    if W.size < 2:
        return None, "needs at least two inputs", 0
    R = s["r_inf"] + 0.6 * (s["capacity"] - s["r_inf"])
    viol, cnt = 0, 0
    for n in (6, 8):
        P = np.array([n // 2, n - n // 2] + [0] * (W.size - 2)) / n
        inst = _instance(W, P, R)
        xs = [0] * (n // 2) + [1] * (n - n // 2)
        orc = ho.product_oracle([W[x] for x in xs], inst.saddle.sigma_star, 2 * math.exp(-n * R))
        reps = [chebyshev_converse(W, P, R, n, c=2), blahut_converse(W, P, R, n, c=2)]
        try:
            reps.append(sharp_converse(W, P, R, n, inst.E2 / 2, c=2))
        except ConditionNotMet:
            pass
        for rep in reps:
            viol += int(rep.value > orc + 1e-12)
            cnt += 1
    return viol == 0, f"{viol} violations", cnt


def _cv_branch(rng, W):
    from .converse import channel_summary, refined_sp_bound

    s = channel_summary(W)
    R = s["r_inf"] + 0.6 * (s["capacity"] - s["r_inf"])
    P = np.full(W.size, 1.0 / W.size)
    bad = 0
    for n in (100, 1000):
        rep = refined_sp_bound(W, R, n, P, 0.1)
        bad += int(rep.log_value > math.log(0.5) + rep.constants["log_branch"] + 1e-12)
    return bad == 0, f"{bad} cases above the branch value", 2


def _cv_prefactor(rng, W):
    from .converse import chebyshev_converse, channel_summary, sharp_converse

    s = channel_summary(W)
    R = s["r_inf"] + 0.6 * (s["capacity"] - s["r_inf"])
    P = np.full(W.size, 1.0 / W.size)
    rep = sharp_converse(W, P, R, 12, float(sp.saddle_solve(R, P, W).value) / 2)
    n_thr = rep.constants["N_threshold"]
    if n_thr > 12:
        return None, f"both bounds valid only for n >= {n_thr}, beyond oracle reach", 0
    ch_rep = chebyshev_converse(W, P, R, 12)
    return rep.value >= ch_rep.value, "sharp vs Chebyshev at n=12", 1


def _cv_symmetric(rng, W):
    from .converse import build_symmetric, channel_summary, exact_symmetric_bound, refined_sp_bound

    V = build_symmetric(np.array([[0.8, 0.25], [0.25, 0.2]]), np.array([[0, 1], [1, 0]]), 2)
    R = channel_summary(V)["capacity"] / 2
    worst = 0.0
    for n in (50, 500):
        a = exact_symmetric_bound(V, R, n).log_value
        b = refined_sp_bound(V, R, n, [0.5, 0.5], 1e-12).log_value
        worst = max(worst, abs(a - b) / max(1.0, abs(a)))
    return worst <= 1e-9, f"max relative log difference {worst:.2e}", 2


# ---------------------------------------------------------------------------
# ht-oracle


def _ho_curve(rng, W):
    bad = 0
    for _ in range(5):
        rho, sigma = random_density(2, rng), random_density(2, rng)
        c = ho.neyman_pearson_curve(rho, sigma, num=50)
        bad += int(not (c.is_monotone() and c.is_convex()))
    return bad == 0, f"{bad} curves failing", 5


def _ho_certificate(rng, W):
    worst, viol = math.inf, 0
    for _ in range(3):
        rho, sigma = random_density(2, rng), random_density(2, rng)
        v, m = ho.random_test_certificate(rho, sigma, samples=1000, seed=int(rng.integers(1 << 30)))
        viol += v
        worst = min(worst, m)
    return viol == 0, f"{viol} violations, worst margin {worst:.2e}", 3000


def _ho_nagaoka(rng, W):
    bad = 0
    for _ in range(5):
        rho, sigma = random_density(2, rng), random_density(2, rng)
        for _, lhs, rhs in ho.nagaoka_check(rho, sigma, [0.0, 0.3, 1.0, 3.0]):
            bad += int(lhs < rhs - 1e-12)
    return bad == 0, f"{bad} violations", 20


def _ho_tensor(rng, W):
    worst = 0.0
    rho, sigma, _, _ = _commuting_pair(2, rng)
    for _ in range(3):
        r, s = random_density(2, rng), random_density(2, rng)
        for mu in (0.1, 0.4):
            dense = ho.alpha_hat(np.kron(r, r), np.kron(s, s), mu)
            sw = ho.product_oracle([r, r], s, mu, method="schur_weyl")
            worst = max(worst, abs(dense - sw))
    for mu in (0.1, 0.4):
        dense = ho.alpha_hat(np.kron(rho, rho), np.kron(sigma, sigma), mu)
        tc = ho.product_oracle([rho, rho], sigma, mu, method="commuting")
        worst = max(worst, abs(dense - tc))
    return worst <= 1e-9, f"max path disagreement {worst:.2e}", 8


SUITES = {
    "operators": [
        ("spectral reconstruction of Hermitian matrices", _op_reconstruction),
        ("composition of powers on the support", _op_power),
        ("zeroth power is an idempotent commuting with A", _op_projector),
        ("tensor associativity and trace multiplicativity", _op_tensor),
    ],
    "divergences": [
        ("Renyi divergences non-decreasing in alpha", _div_monotone),
        ("log Q_alpha and log Q_flat convex in alpha", _div_convex),
        ("commuting pairs reduce to classical Renyi divergence", _div_classical),
        ("Golden-Thompson ordering Q_flat <= Q", _div_golden_thompson),
        ("additivity under tensor products", _div_additive),
    ],
    "channels": [
        ("Jensen ordering of Sibson and Augustin informations", _ch_jensen),
        ("Augustin information and Renyi radius non-decreasing in alpha", _ch_monotone),
        ("concavity of s times Augustin information, s = (1-alpha)/alpha", _ch_concave),
        ("equality of the Sibson and Augustin radii", _ch_radius),
        ("continuity of Augustin information in the prior", _ch_continuity),
    ],
    "solver": [
        ("strong exponent below log-Euclidean exponent, equality when commuting", _sp_ordering),
        ("variational forms of the sphere-packing exponent agree", _sp_variational),
        ("exponent curve monotone, convex, zero above capacity", _sp_curve),
        ("uniqueness of the saddle point", _sp_unique),
        ("minimax equality at the saddle point", _sp_minimax),
        ("rate derivative of the exponent equals -s*", _sp_subgradient),
    ],
    "ns": [
        ("Nussbaum-Szkola distributions preserve Petz divergences", _ns_faithful),
        ("Nussbaum-Szkola tensorization and support equivalence", _ns_tensor),
        ("Legendre-Fenchel duality of the cumulant generating function", _ns_lf),
        ("regularity identities of the tilted family", _ns_regularity),
        ("Bahadur-Ranga Rao bound below the exact tail", _ns_brr),
    ],
    "converse": [
        ("one-shot converse Hoeffding bound below the oracle", _cv_soundness),
        ("product converse bounds below the oracle", _cv_product_soundness),
        ("refined bound never exceeds its branch", _cv_branch),
        ("sharp bound above Chebyshev bound once both valid", _cv_prefactor),
        ("exact symmetric bound is the gamma -> 0 refined bound", _cv_symmetric),
    ],
    "oracle": [
        ("Neyman-Pearson curve monotone and convex", _ho_curve),
        ("optimality certificate against random tests", _ho_certificate),
        ("Nagaoka inequality", _ho_nagaoka),
        ("tensor-product paths agree with the dense computation", _ho_tensor),
    ],
}


def run_suites(W, selection=("all",), seed: int = 0, progress=None) -> list:
    """Run the selected suites on channel ``W`` and return the check results."""
    names = list(SUITES) if "all" in selection else list(selection)
    unknown = [s for s in names if s not in SUITES]
    if unknown:
        raise KeyError(f"unknown suite(s): {', '.join(unknown)}")
    out = []
    for suite in names:
        for k, (anchor, fn) in enumerate(SUITES[suite]):
            rng = np.random.default_rng([seed, len(suite), k])
            t0 = time.perf_counter()
            try:
                ok, detail, count = fn(rng, W)
                res = CheckResult(suite, anchor, bool(ok) if ok is not None else True, detail,
                                  count, skipped=ok is None)
            except CapacityExceeded as exc:
                res = CheckResult(suite, anchor, True, f"skipped: {exc}", 0, skipped=True)
            except Exception as exc:  # a crash is a failed invariant, not an abort
                res = CheckResult(suite, anchor, False, f"{type(exc).__name__}: {exc}", 0)
            res.seconds = time.perf_counter() - t0
            out.append(res)
            if progress is not None:
                progress(res)
    return out


def format_line(r: CheckResult) -> str:
    return f"[{r.status}] {r.suite:<11} {r.anchor} :: {r.detail} (n={r.count}, {r.seconds:.1f}s)"


def format_report(results) -> str:
    lines = [format_line(r) for r in results]
    npass = sum(r.status == "PASS" for r in results)
    nfail = sum(r.status == "FAIL" for r in results)
    nskip = sum(r.status == "SKIP" for r in results)
    lines.append(f"{npass} passed, {nfail} failed, {nskip} skipped")
    return "\n".join(lines)
