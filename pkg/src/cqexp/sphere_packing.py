"""Sphere-packing exponents, the saddle point of F_{R,P}, and exponent curves.

Conventions: ``alpha = 1/(1+s)`` and ``s = (1-alpha)/alpha`` everywhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize, minimize_scalar

from .channels import (
    CQChannel,
    _i_alpha_2_zero,
    as_prior,
    i_alpha_1,
    inner_min_sigma,
    mutual_information,
    renyi_radius,
)
from .divergences import ExtReal, d_alpha_petz
from .errors import InvalidParameter, NumericalFailure
from .operators import DensityOperator, dagger, mat_log_on_support, mat_power

__all__ = [
    "SaddleResult",
    "ExponentCurve",
    "e0_gallager",
    "e_sp_strong",
    "e_sp1",
    "e_sp2",
    "f_r_p",
    "inner_min_sigma",
    "saddle_solve",
    "flat_inner_min",
    "e_sp_weak",
    "e_sp_max",
    "subgradient_check",
    "exponent_curve",
    "S_MAX",
]

#: Upper end of the s-range used to detect a divergent supremum.
S_MAX = 1e3
_ALPHA_FLOOR = 1.0 / (1.0 + S_MAX)


def _log_trace_power(M, p):
    """``log Tr[M^p]`` for PSD ``M`` computed in log space."""
    w = np.linalg.eigvalsh(0.5 * (M + dagger(M)))
    w = w[w > 1e-300 * max(1.0, w.max())]
    logs = p * np.log(w)
    top = logs.max()
    return top + math.log(float(np.sum(np.exp(logs - top))))


def e0_gallager(s: float, P, W: CQChannel) -> float:
    """``E_0(s,P) = -log Tr[(sum_x P(x) W_x^(1/(1+s)))^(1+s)]`` for ``s >= 0``."""
    if not s >= 0:
        raise InvalidParameter(f"s must be nonnegative, got {s}")
    P = as_prior(P, W.size)
    if s == 0:
        return 0.0
    a = 1.0 / (1.0 + s)
    M = np.einsum("x,xij->ij", P, W.powers(a))
    return -_log_trace_power(M, 1.0 + s)


def e_sp_strong(R: float, P, W: CQChannel, s_max: float = S_MAX) -> ExtReal:
    """``sup_{s>=0} E_0(s,P) - sR`` by bounded 1-D maximisation.

    Returns ``+inf`` when the objective still increases at ``s_max`` with slope
    above ``1e-6``.
    """
    if R < 0:
        raise InvalidParameter("rate must be nonnegative")
    P = as_prior(P, W.size)
    if R >= mutual_information(P, W):
        return ExtReal(0.0)

    def obj(s):
        return e0_gallager(s, P, W) - s * R

    h = 1e-3
    slope = (obj(s_max) - obj(s_max - h)) / h
    if slope > 1e-6:
        return ExtReal(math.inf, "divergent")
    best = _max_concave_1d(obj, 0.0, s_max, log_scale=True)
    return ExtReal(max(best[1], 0.0))


def _max_concave_1d(fun, lo, hi, log_scale=False, grid=24, xatol=1e-12):
    """Maximise a unimodal function on ``[lo, hi]``: coarse grid, then Brent."""
    if log_scale:
        xs = np.concatenate([[lo], np.geomspace(max(lo, 1e-6), hi, grid)])
    else:
        xs = np.linspace(lo, hi, grid)
    vals = [fun(x) for x in xs]
    k = int(np.argmax(vals))
    a = xs[max(k - 1, 0)]
    b = xs[min(k + 1, len(xs) - 1)]
    if b <= a:
        return xs[k], vals[k]
    r = minimize_scalar(lambda x: -fun(x), bounds=(a, b), method="bounded",
                        options={"xatol": xatol, "maxiter": 500})
    if -r.fun >= vals[k]:
        return float(r.x), float(-r.fun)
    return float(xs[k]), float(vals[k])


def e_sp1(R: float, P, W: CQChannel) -> ExtReal:
    """``sup_{0<alpha<=1} (1-alpha)/alpha (I_alpha^(1)(P,W) - R)`` (Sibson form)."""
    P = as_prior(P, W.size)
    if R >= mutual_information(P, W):
        return ExtReal(0.0)
    if R <= i_alpha_1(P, W, 0.0):
        return ExtReal(math.inf, "divergent")

    def obj(a):
        return (1.0 - a) / a * (i_alpha_1(P, W, a) - R)

    lo = _bracket_alpha(lambda a: i_alpha_1(P, W, a), R)
    if lo is None:
        return ExtReal(math.inf, "divergent")
    return ExtReal(max(_max_concave_1d(obj, lo, 1.0)[1], 0.0))


def _bracket_alpha(info, R, start=0.5, floor=_ALPHA_FLOOR):
    """Largest ``alpha = start/2^k`` with ``info(alpha) <= R``, or None."""
    a = start
    while a >= floor:
        if info(a) <= R:
            return a
        a *= 0.5
    return None


def f_r_p(alpha: float, sigma, R: float, P, W: CQChannel) -> ExtReal:
    """``F_{R,P}(alpha, sigma) = (1-alpha)/alpha (sum_x P(x) D_alpha(W_x||sigma) - R)``.

    ``F(1, sigma) = 0`` for every sigma.
    """
    a = float(alpha)
    if not 0 < a <= 1:
        raise InvalidParameter("alpha must lie in (0, 1]")
    if a == 1.0:
        return ExtReal(0.0)
    P = as_prior(P, W.size)
    sigma = DensityOperator(sigma, normalize=True)
    total = 0.0
    for x, px in enumerate(P):
        if px > 0:
            d = d_alpha_petz(W[x], sigma, a)
            if math.isinf(d):
                return ExtReal(math.inf, "support")
            total += px * d
    return ExtReal((1.0 - a) / a * (total - R))


@dataclass
class SaddleResult:
    """Saddle point ``(alpha*, sigma*)`` of ``F_{R,P}`` and diagnostics."""

    alpha_star: float
    sigma_star: np.ndarray
    value: ExtReal
    s_star: float
    minimax_gap: float
    regime: str
    rate: float = float("nan")
    prior: np.ndarray | None = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def converged(self) -> bool:
        return self.regime != "positive" or self.minimax_gap <= 1e-6


def _zero_result(R, P, W):
    return SaddleResult(1.0, W.mixture(P), ExtReal(0.0), 0.0, 0.0, "zero", R, P)


def _has_deficient(W, P):
    return any(not W[x].is_full_rank() for x in range(W.size) if P[x] > 0)


def saddle_solve(R: float, P, W: CQChannel, sigma0=None, xatol: float = 1e-10,
                 inner_kwargs: dict | None = None) -> SaddleResult:
    """Solve ``sup_alpha min_sigma F_{R,P}(alpha, sigma)``.

    The inner minimum is the Augustin information ``I_alpha^(2)``; the outer
    objective ``(1-alpha)/alpha (I_alpha^(2) - R)`` is concave in alpha and is
    maximised by bounded Brent iterations on ``[alpha_lo, 1]``, where
    ``alpha_lo`` is a point with ``I_alpha^(2) <= R``.

    The minimax gap is ``max_alpha F(alpha, sigma*) - F(alpha*, sigma*)``.

    Args:
        R: rate (nats).
        P: prior.
        W: channel.
        sigma0: optional warm start for the inner iteration.
        xatol: tolerance on alpha.
    """
    P = as_prior(P, W.size)
    inner_kwargs = dict(inner_kwargs or {})
    if R < 0:
        raise InvalidParameter("rate must be nonnegative")
    I1 = mutual_information(P, W)
    if R >= I1:
        return _zero_result(R, P, W)
    if _has_deficient(W, P):
        I0, sig0 = _i_alpha_2_zero(P, W)
        if R <= I0:
            return SaddleResult(0.0, sig0, ExtReal(math.inf, "divergent"), math.inf,
                                0.0, "infinite", R, P, {"I0": I0})
    cache = {}
    warm = [sigma0]

    def inner(a):
        key = round(a, 15)
        if key not in cache:
            res = inner_min_sigma(W, P, a, sigma0=warm[0], **inner_kwargs)
            cache[key] = res
            warm[0] = res.sigma
        return cache[key]

    def G(a):
        return (1.0 - a) / a * (inner(a).value - R)

    lo = _bracket_alpha(lambda a: inner(a).value, R)
    if lo is None:
        res = inner(_ALPHA_FLOOR)
        return SaddleResult(_ALPHA_FLOOR, res.sigma, ExtReal(math.inf, "divergent"),
                            math.inf, 0.0, "infinite", R, P, {"alpha_floor": _ALPHA_FLOOR})
    a_star, val = _max_concave_1d(G, lo, 1.0 - 1e-12, grid=12, xatol=xatol)
    best = inner(a_star)
    sigma_star = best.sigma
    F_at = _F_fixed_sigma(W, P, sigma_star, R)
    a_chk, v_chk = _max_concave_1d(F_at, lo, 1.0 - 1e-12, grid=24, xatol=1e-12)
    gap = abs(v_chk - val)
    return SaddleResult(
        alpha_star=a_star,
        sigma_star=sigma_star,
        value=ExtReal(max(val, 0.0)),
        s_star=(1.0 - a_star) / a_star,
        minimax_gap=gap,
        regime="positive",
        rate=R,
        prior=P,
        diagnostics={"alpha_lo": lo, "alpha_cross": a_chk, "inner_iterations": best.iterations,
                     "foc_residual": best.foc_residual, "evaluations": len(cache)},
    )


def _F_fixed_sigma(W, P, sigma, R):
    """Return ``alpha -> F_{R,P}(alpha, sigma)`` with sigma's eigensystem cached."""
    s, U = np.linalg.eigh(0.5 * (sigma + dagger(sigma)))
    keep = s > 1e-12 * s.max()
    s, U = s[keep], U[:, keep]
    supp = [x for x in range(W.size) if P[x] > 0]

    def F(a):
        tot = 0.0
        for x in supp:
            Wa = dagger(U) @ mat_power(W[x], a) @ U
            q = float(np.real(np.sum(np.diag(Wa) * s ** (1.0 - a))))
            if q <= 0:
                return math.inf
            tot += P[x] * math.log(q) / (a - 1.0)
        return (1.0 - a) / a * (tot - R)

    return F


def e_sp2(R: float, P, W: CQChannel) -> ExtReal:
    """``E_sp^(2)(R,P) = sup_alpha (1-alpha)/alpha (I_alpha^(2)(P,W) - R)``."""
    return saddle_solve(R, P, W).value


# ---------------------------------------------------------------------------
# log-Euclidean exponent


def _herm_from_params(h, d):
    H = np.zeros((d, d), dtype=complex)
    iu = np.triu_indices(d, 1)
    m = len(iu[0])
    H[np.diag_indices(d)] = h[:d]
    H[iu] = h[d:d + m] + 1j * h[d + m:]
    H = H + np.triu(H, 1).conj().T
    return H


def _params_from_grad(G, d):
    iu = np.triu_indices(d, 1)
    return np.concatenate([np.real(np.diag(G)), 2 * np.real(G[iu]), 2 * np.imag(G[iu])])


def _params_from_herm(H, d):
    iu = np.triu_indices(d, 1)
    return np.concatenate([np.real(np.diag(H)), np.real(H[iu]), np.imag(H[iu])])


@dataclass
class FlatInnerResult:
    sigma: np.ndarray
    value: float
    residual: float
    restart_spread: float
    H: np.ndarray


def flat_inner_min(W: CQChannel, P, alpha: float, H0=None, restarts: int = 0,
                   seed: int = 0) -> FlatInnerResult:
    """Minimise ``sigma -> sum_x P(x) D♭_alpha(W_x||sigma)``.

    sigma is parameterised as ``exp(H)/Tr exp(H)`` and the objective is
    minimised by BFGS with the exact gradient ``sigma - sum_x P(x) rho_x``,
    where ``rho_x`` is the normalised ``exp(alpha log W_x + (1-alpha) log sigma)``
    on ``supp W_x``.
    """
    a = float(alpha)
    if not 0 < a < 1:
        raise InvalidParameter("alpha must lie in (0, 1)")
    P = as_prior(P, W.size)
    d = W.dim
    supp = [x for x in range(W.size) if P[x] > 0]
    blocks = []
    for x in supp:
        Wx = W[x]
        B = Wx.eigvecs[:, Wx.support_mask]
        logW = dagger(B) @ mat_log_on_support(Wx) @ B
        blocks.append((P[x], B, logW))

    def fun_grad(h):
        H = _herm_from_params(h, d)
        w, V = np.linalg.eigh(H)
        top = w.max()
        logZ = top + math.log(float(np.sum(np.exp(w - top))))
        logsig = (V * (w - logZ)) @ dagger(V)
        sigma = (V * np.exp(w - logZ)) @ dagger(V)
        val = 0.0
        mix = np.zeros((d, d), dtype=complex)
        for px, B, logW in blocks:
            K = a * logW + (1.0 - a) * (dagger(B) @ logsig @ B)
            k, U = np.linalg.eigh(0.5 * (K + dagger(K)))
            kt = k.max()
            logQ = kt + math.log(float(np.sum(np.exp(k - kt))))
            val += px * logQ / (a - 1.0)
            rho = (U * np.exp(k - logQ)) @ dagger(U)
            mix += px * (B @ rho @ dagger(B))
        G = sigma - mix
        return val, _params_from_grad(G, d), G

    def run(h0):
        r = minimize(lambda h: fun_grad(h)[:2], h0, jac=True, method="BFGS",
                     options={"gtol": 1e-11, "maxiter": 2000})
        val, _, G = fun_grad(r.x)
        return val, r.x, float(np.sum(np.abs(np.linalg.eigvalsh(G))))

    if H0 is None:
        M = W.mixture(P)
        w, V = np.linalg.eigh(M)
        H0 = (V * np.log(np.clip(w, 1e-8, None))) @ dagger(V)
    starts = [_params_from_herm(H0, d)]
    rng = np.random.default_rng(seed)
    for _ in range(restarts):
        starts.append(starts[0] + rng.normal(scale=1.0, size=starts[0].shape))
    results = [run(h0) for h0 in starts]
    vals = [r[0] for r in results]
    k = int(np.argmin(vals))
    val, h, resid = results[k]
    H = _herm_from_params(h, d)
    w, V = np.linalg.eigh(H)
    sig = (V * np.exp(w - w.max())) @ dagger(V)
    sig = sig / np.real(np.trace(sig))
    return FlatInnerResult(sig, val, resid, max(vals) - min(vals), H)


def e_sp_weak(R: float, P, W: CQChannel, restarts: int = 5, seed: int = 0,
              return_details: bool = False):
    """``sup_alpha min_sigma (1-alpha)/alpha (D♭_alpha(W||sigma|P) - R)``.

    The outer maximisation uses a grid followed by Brent refinement; the
    inner problem is solved by :func:`flat_inner_min` with warm starts, and the
    final inner solve is repeated from ``restarts`` perturbed starting points.
    """
    P = as_prior(P, W.size)
    I1 = mutual_information(P, W)
    if R >= I1:
        out = ExtReal(0.0)
        return (out, {"alpha_star": 1.0}) if return_details else out
    warm = [None]
    cache = {}

    def inner(a):
        key = round(a, 15)
        if key not in cache:
            res = flat_inner_min(W, P, a, H0=warm[0])
            warm[0] = res.H
            cache[key] = res
        return cache[key]

    def G(a):
        return (1.0 - a) / a * (inner(a).value - R)

    lo = _bracket_alpha(lambda a: inner(a).value, R)
    if lo is None:
        out = ExtReal(math.inf, "divergent")
        return (out, {"alpha_star": 0.0}) if return_details else out
    a_star, val = _max_concave_1d(G, lo, 1.0 - 1e-12, grid=12, xatol=1e-10)
    final = flat_inner_min(W, P, a_star, H0=inner(a_star).H, restarts=restarts, seed=seed)
    best_inner = min(final.value, inner(a_star).value)
    val = (1.0 - a_star) / a_star * (best_inner - R)
    out = ExtReal(max(val, 0.0))
    if return_details:
        return out, {"alpha_star": a_star, "residual": final.residual,
                     "restart_spread": final.restart_spread}
    return out


# ---------------------------------------------------------------------------
# channel-level exponent


def e_sp_max(R: float, W: CQChannel, restarts: int = 4, seed: int = 0) -> dict:
    """Sphere-packing exponent ``E_sp(R) = max_P E_sp(R,P)`` and its slope.

    Uses ``E_sp(R) = sup_alpha (1-alpha)/alpha (C_alpha - R)`` with ``C_alpha`` the
    Renyi radius; the maximising prior at ``alpha*`` is then passed to
    :func:`saddle_solve` to obtain ``s*`` and ``sigma*``.

    Returns:
        Dictionary with keys ``value`` (ExtReal), ``prior``, ``s_star`` (the
        maximal subgradient magnitude ``|E_sp'(R)|``), ``alpha_star`` and the
        saddle result ``saddle``.
    """
    if R < 0:
        raise InvalidParameter("rate must be nonnegative")
    C, P1 = renyi_radius(W, 1.0, restarts=restarts, seed=seed)
    if R >= C:
        return {"value": ExtReal(0.0), "prior": P1, "s_star": 0.0, "alpha_star": 1.0,
                "saddle": _zero_result(R, P1, W), "regime": "zero"}
    Rinf, P0 = renyi_radius(W, 0.0)
    if R <= Rinf:
        return {"value": ExtReal(math.inf, "divergent"), "prior": P0, "s_star": math.inf,
                "alpha_star": 0.0, "saddle": None, "regime": "infinite"}
    radius = {}

    def Ca(a):
        key = round(a, 15)
        if key not in radius:
            radius[key] = renyi_radius(W, a, restarts=restarts, seed=seed)
        return radius[key]

    def obj(a):
        return (1.0 - a) / a * (Ca(a)[0] - R)

    lo = _bracket_alpha(lambda a: Ca(a)[0], R)
    if lo is None:
        return {"value": ExtReal(math.inf, "divergent"), "prior": P0, "s_star": math.inf,
                "alpha_star": 0.0, "saddle": None, "regime": "infinite"}
    a_star, val = _max_concave_1d(obj, lo, 1.0 - 1e-12, grid=16, xatol=1e-10)
    P_star = Ca(a_star)[1]
    sad = saddle_solve(R, P_star, W)
    return {"value": ExtReal(max(val, 0.0)), "prior": P_star, "s_star": sad.s_star,
            "alpha_star": a_star, "saddle": sad, "regime": "positive"}


def subgradient_check(R: float, P, W: CQChannel, h: float = 1e-4) -> dict:
    """Compare the central difference of ``E_sp^(2)(., P)`` at R with ``-s*``."""
    P = as_prior(P, W.size)
    centre = saddle_solve(R, P, W)
    up = saddle_solve(R + h, P, W, sigma0=centre.sigma_star).value
    down = saddle_solve(R - h, P, W, sigma0=centre.sigma_star).value
    fd = (float(up) - float(down)) / (2 * h)
    err = abs(fd + centre.s_star) if math.isfinite(fd) else math.inf
    return {"rate": R, "fd": fd, "s_star": centre.s_star, "error": err,
            "regime": centre.regime, "passed": err <= 1e-3}


@dataclass
class ExponentCurve:
    """Sphere-packing exponent sampled on a rate grid."""

    rates: np.ndarray
    e_sp: list
    e_sp_weak: list
    s_star: list
    regime: list
    capacity: float
    r_inf: float
    reasons: list = field(default_factory=list)

    def rows(self):
        for i, R in enumerate(self.rates):
            yield {"R": float(R), "E_sp": self.e_sp[i], "E_sp_weak": self.e_sp_weak[i],
                   "s_star": self.s_star[i], "regime": self.regime[i],
                   "reason": self.reasons[i] if self.reasons else ""}

    def finite_segment(self):
        idx = [i for i, r in enumerate(self.regime) if r != "infinite" and r != "failed"]
        return self.rates[idx], np.array([float(self.e_sp[i]) for i in idx])


def _curve_cell(W, R, C, Rinf, weak):
    if R >= C:
        return 0.0, 0.0, 0.0, "zero", ""
    if R <= Rinf:
        return math.inf, math.inf, math.inf, "infinite", ""
    try:
        res = e_sp_max(R, W)
        val = float(res["value"])
        w = float(e_sp_weak(R, res["prior"], W)) if weak else math.nan
        return val, w, float(res["s_star"]), res["regime"], ""
    except (NumericalFailure, ArithmeticError, ValueError) as exc:
        return math.nan, math.nan, math.nan, "failed", f"{type(exc).__name__}: {exc}"


def exponent_curve(W: CQChannel, rates, weak: bool = True, workers: int = 1) -> ExponentCurve:
    """Evaluate ``E_sp(R)`` (and the log-Euclidean exponent at the maximising
    prior) on a grid of rates.  Cells that fail are flagged, never raised."""
    rates = np.asarray(rates, dtype=float)
    C = renyi_radius(W, 1.0)[0]
    Rinf = renyi_radius(W, 0.0)[0]
    if workers > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=workers) as ex:
            cells = list(ex.map(lambda R: _curve_cell(W, R, C, Rinf, weak), rates))
    else:
        cells = [_curve_cell(W, R, C, Rinf, weak) for R in rates]
    e, ew, s, reg, why = (list(t) for t in zip(*cells)) if cells else ([], [], [], [], [])
    return ExponentCurve(rates, e, ew, s, reg, C, Rinf, why)
