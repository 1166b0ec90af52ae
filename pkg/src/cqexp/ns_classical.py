"""Nussbaum-Szkola reduction and classical large-deviation tools.

A pair of states ``(rho, sigma)`` with spectral decompositions
``rho = sum_i lambda_i |x_i><x_i|`` and ``sigma = sum_j gamma_j |y_j><y_j|``
is mapped to the distributions ``p(i,j) = lambda_i |<x_i|y_j>|^2`` and
``q(i,j) = gamma_j |<x_i|y_j>|^2``.  Both Renyi families of the states then
coincide with the classical Renyi divergence of ``(p, q)`` for alpha in [0,1].
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations_with_replacement

import numpy as np
from scipy.optimize import brentq, minimize_scalar
from scipy.special import gammaln

from .errors import (
    CapacityExceeded,
    ConditionNotMet,
    DisjointSupport,
    InfeasibleRate,
    InvalidParameter,
)
from .operators import as_density, dagger

__all__ = [
    "NSPair",
    "ns_distributions",
    "tensor_pairs",
    "classical_renyi",
    "classical_kl",
    "classical_variance",
    "tilted",
    "find_tilt",
    "CGFRecord",
    "cgf_build",
    "legendre_fenchel",
    "phi_n",
    "regularity_suite",
    "Factor",
    "brr_bound",
    "bahadur_ranga_rao",
    "exact_tail",
    "e0_two",
    "ENUM_CAP",
]

#: Maximal number of atoms enumerated by :func:`exact_tail`.
ENUM_CAP = 10 ** 7
_TINY = 1e-300


@dataclass(frozen=True)
class NSPair:
    """Pair of classical distributions on a common finite set of atoms.

    Attributes:
        p, q: mass vectors (float arrays of equal length).
        atoms: integer array of shape ``(k, 2)`` with the ``(i, j)`` labels, or
            ``None`` for pairs built directly from vectors.
    """

    p: np.ndarray
    q: np.ndarray
    atoms: np.ndarray | None = None

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float).ravel()
        q = np.asarray(self.q, dtype=float).ravel()
        if p.shape != q.shape:
            raise InvalidParameter("p and q must have the same length")
        if np.any(p < 0) or np.any(q < 0):
            raise InvalidParameter("masses must be nonnegative")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", q)

    @property
    def joint_support(self) -> np.ndarray:
        return (self.p > 0) & (self.q > 0)

    def restricted(self) -> "NSPair":
        """Drop atoms outside ``supp(p)``; q may become sub-normalised."""
        keep = self.p > 0
        atoms = None if self.atoms is None else self.atoms[keep]
        return NSPair(self.p[keep], self.q[keep], atoms)


def ns_distributions(rho, sigma, drop_zero: bool = False) -> NSPair:
    """Nussbaum-Szkola distributions of two density operators.

    Eigenvalues below each operator's rank cutoff are set to zero so that the
    supports match the support-restricted matrix functions.
    """
    rho, sigma = as_density(rho), as_density(sigma)
    lam = np.where(rho.support_mask, rho.eigvals, 0.0)
    gam = np.where(sigma.support_mask, sigma.eigvals, 0.0)
    overlap = np.abs(dagger(rho.eigvecs) @ sigma.eigvecs) ** 2
    p = (lam[:, None] * overlap).ravel()
    q = (gam[None, :] * overlap).ravel()
    ii, jj = np.meshgrid(np.arange(len(lam)), np.arange(len(gam)), indexing="ij")
    atoms = np.stack([ii.ravel(), jj.ravel()], axis=1)
    pair = NSPair(p, q, atoms)
    if drop_zero:
        keep = (p > 0) | (q > 0)
        pair = NSPair(p[keep], q[keep], atoms[keep])
    return pair


def tensor_pairs(*pairs: NSPair) -> NSPair:
    """Product distributions, ordered like ``numpy.kron``."""
    p, q = pairs[0].p, pairs[0].q
    for pr in pairs[1:]:
        p = np.kron(p, pr.p)
        q = np.kron(q, pr.q)
    return NSPair(p, q)


def _as_pair(p, q=None) -> NSPair:
    if isinstance(p, NSPair):
        return p
    return NSPair(p, q)


def classical_renyi(p, q, alpha: float) -> float:
    """Classical Renyi divergence ``log(sum p^alpha q^(1-alpha))/(alpha-1)``.

    ``alpha = 1`` is the Kullback-Leibler divergence and ``alpha = 0`` is
    ``-log q(supp p)``.  Returns ``inf`` when the sum vanishes.
    """
    pr = _as_pair(p, q)
    a = float(alpha)
    if not 0 <= a <= 1:
        raise InvalidParameter("alpha must lie in [0, 1]")
    if a == 1.0:
        return classical_kl(pr)
    mask = pr.joint_support
    if a == 0.0:
        s = float(np.sum(pr.q[pr.p > 0]))
    else:
        s = float(np.sum(pr.p[mask] ** a * pr.q[mask] ** (1 - a)))
    if s <= 0:
        return math.inf
    return math.log(s) / (a - 1.0)


def classical_kl(p, q=None) -> float:
    pr = _as_pair(p, q)
    if np.any((pr.p > 0) & (pr.q <= 0)):
        return math.inf
    m = pr.p > 0
    return float(np.sum(pr.p[m] * (np.log(pr.p[m]) - np.log(pr.q[m]))))


def classical_variance(p, q=None) -> float:
    """``Var_p[log p/q]`` (``inf`` unless ``p << q``)."""
    pr = _as_pair(p, q)
    if np.any((pr.p > 0) & (pr.q <= 0)):
        return math.inf
    m = pr.p > 0
    L = np.log(pr.p[m]) - np.log(pr.q[m])
    mean = float(np.sum(pr.p[m] * L))
    return max(float(np.sum(pr.p[m] * L * L)) - mean * mean, 0.0)


def tilted(p, q, t: float) -> np.ndarray:
    """Tilted distribution ``q_t ∝ p^(1-t) q^t`` on the joint support.

    Raises:
        DisjointSupport: if ``supp(p) ∩ supp(q)`` is empty.
    """
    pr = _as_pair(p, q)
    mask = pr.joint_support
    if not np.any(mask):
        raise DisjointSupport("p and q have disjoint supports")
    t = float(t)
    logw = np.full(pr.p.shape, -np.inf)
    logw[mask] = (1 - t) * np.log(pr.p[mask]) + t * np.log(pr.q[mask])
    logw -= logw[mask].max()
    w = np.exp(logw)
    return w / w.sum()


def find_tilt(p, q, r: float, tol: float = 1e-13):
    """Find ``t`` in ``[0, 1]`` with ``D(q_t||q) = r``.

    Returns:
        Tuple ``(t, q_t, phi)`` with ``phi = D(q_t||p)``, the Hoeffding
        exponent at ``r``.

    Raises:
        InfeasibleRate: if ``r`` lies outside ``[D(q_1||q), D(q_0||q)]``.
    """
    pr = _as_pair(p, q)

    def gap(t):
        return classical_kl(tilted(pr, None, t), pr.q) - r

    hi, lo = gap(0.0), gap(1.0)
    scale = max(1.0, abs(r))
    if hi < -1e-12 * scale or lo > 1e-12 * scale:
        raise InfeasibleRate(f"rate {r} outside [{lo + r}, {hi + r}]")
    if hi <= 0:
        t = 0.0
    elif lo >= 0:
        t = 1.0
    else:
        t = brentq(gap, 0.0, 1.0, xtol=tol, rtol=4 * np.finfo(float).eps, maxiter=500)
    qt = tilted(pr, None, t)
    return t, qt, classical_kl(qt, pr.p)


# ---------------------------------------------------------------------------
# cumulant generating functions


@dataclass
class _SymbolCGF:
    logp: np.ndarray  # log p on B
    u: np.ndarray  # log q/p on B
    p_mass: float

    def tilt(self, t):
        lw = self.logp + t * self.u
        top = lw.max()
        w = np.exp(lw - top)
        Z = w.sum()
        return w / Z, top + math.log(Z)

    def moments(self, t):
        w, lam = self.tilt(t)
        m1 = float(np.dot(w, self.u))
        c = self.u - m1
        m2 = float(np.dot(w, c * c))
        m3 = float(np.dot(w, np.abs(c) ** 3))
        return lam, m1, m2, m3


@dataclass
class CGFRecord:
    """Averaged cumulant generating functions of a composition.

    ``Lambda_0(t) = sum_x P(x) log sum_B p_x^(1-t) q_x^t`` and
    ``Lambda_1(t) = Lambda_0(1-t)``.  Atoms outside ``supp p_x`` are dropped.
    """

    weights: np.ndarray
    pairs: list
    symbols: list = field(repr=False, default_factory=list)

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        if not self.symbols:
            for pr in self.pairs:
                pr = pr.restricted()
                B = pr.joint_support
                if not np.any(B):
                    raise DisjointSupport("a symbol has disjoint NS supports")
                lp = np.log(pr.p[B])
                self.symbols.append(_SymbolCGF(lp, np.log(pr.q[B]) - lp, float(pr.p.sum())))

    def _avg(self, t, k):
        out = 0.0
        for w, sym in zip(self.weights, self.symbols):
            if w > 0:
                out += w * sym.moments(t)[k]
        return out

    def lam0(self, t):
        return self._avg(t, 0)

    def dlam0(self, t):
        return self._avg(t, 1)

    def d2lam0(self, t):
        return self._avg(t, 2)

    def third_abs(self, t):
        """Weighted third absolute central moment of ``log q/p`` under the tilt."""
        return self._avg(t, 3)

    def lam1(self, t):
        return self.lam0(1.0 - t)

    def dlam1(self, t):
        return -self.dlam0(1.0 - t)

    def d2lam1(self, t):
        return self.d2lam0(1.0 - t)

    def lam(self, j, t):
        return self.lam0(t) if j == 0 else self.lam1(t)

    def dlam(self, j, t):
        return self.dlam0(t) if j == 0 else self.dlam1(t)

    def symbol_lam(self, x, j, t):
        sym = self.symbols[x]
        return sym.moments(t if j == 0 else 1.0 - t)[0]

    def tilted_divergences(self, t):
        """Weighted ``D(q_t||p)`` and ``D(q_t||q)`` and the two relative variances."""
        Dp = Dq = Vp = Vq = 0.0
        for w, sym in zip(self.weights, self.symbols):
            if w <= 0:
                continue
            lam, m1, m2, _ = sym.moments(t)
            Dp += w * (t * m1 - lam)
            Dq += w * (-(1 - t) * m1 - lam)
            Vp += w * t * t * m2
            Vq += w * (1 - t) ** 2 * m2
        return Dp, Dq, Vp, Vq


def cgf_build(source, P=None, sigma=None) -> CGFRecord:
    """Build a :class:`CGFRecord`.

    Args:
        source: a list of :class:`NSPair`, or a channel (with ``sigma``).
        P: composition weights over the pairs; uniform if omitted.
        sigma: dummy state used with a channel source.
    """
    if sigma is not None:
        pairs = [ns_distributions(Wx, sigma) for Wx in source]
    else:
        pairs = [src if isinstance(src, NSPair) else NSPair(*src) for src in source]
    if P is None:
        P = np.full(len(pairs), 1.0 / len(pairs))
    P = np.asarray(P, dtype=float)
    keep = P > 0
    pairs = [pr for pr, k in zip(pairs, keep) if k]
    return CGFRecord(P[keep] / P[keep].sum(), pairs)


def _solve_derivative(record, j, z, lo, hi):
    f = lambda t: record.dlam(j, t) - z  # noqa: E731
    flo, fhi = f(lo), f(hi)
    if flo >= 0:
        return lo
    if fhi <= 0:
        return hi
    return brentq(f, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)


def legendre_fenchel(record: CGFRecord, j: int, z: float):
    """``Lambda_j*(z) = sup_t {t z - Lambda_j(t)}`` and the maximiser.

    The search is restricted to ``t`` in ``[0, 1]``; when the stationary point
    falls outside, ``t`` in ``[-5, 5]`` is searched and the result flagged.

    Returns:
        Tuple ``(value, t_star, in_range)``.
    """
    d0, d1 = record.dlam(j, 0.0), record.dlam(j, 1.0)
    if d0 <= z <= d1:
        t = _solve_derivative(record, j, z, 0.0, 1.0)
        in_range = True
    else:
        t = _solve_derivative(record, j, z, -5.0, 5.0)
        in_range = False
    return t * z - record.lam(j, t), t, in_range


def _weighted_renyi(pairs, weights, a):
    tot = 0.0
    for w, pr in zip(weights, pairs):
        if w > 0:
            d = classical_renyi(pr, None, a)
            if math.isinf(d):
                return math.inf
            tot += w * d
    return tot


def phi_n(r: float, pairs, weights=None, return_alpha: bool = False):
    """Hoeffding-type exponent ``sup_{0<alpha<=1} (1-alpha)/alpha (sum w D_alpha - r)``.

    ``pairs`` lists one :class:`NSPair` per symbol (or per factor), weighted by
    ``weights`` (uniform by default, i.e. the 1/n average).  Returns 0 for
    ``r >= D_1`` and ``inf`` for ``r < D_0``.
    """
    pairs = [_as_pair(*pr) if not isinstance(pr, NSPair) else pr for pr in pairs]
    w = np.full(len(pairs), 1.0 / len(pairs)) if weights is None else np.asarray(weights, float)
    D1 = _weighted_renyi(pairs, w, 1.0)
    D0 = _weighted_renyi(pairs, w, 0.0)
    if r >= D1:
        return (0.0, 1.0) if return_alpha else 0.0
    if r < D0:
        return (math.inf, 0.0) if return_alpha else math.inf

    def obj(a):
        return (1.0 - a) / a * (_weighted_renyi(pairs, w, a) - r)

    lo = 0.5
    while _weighted_renyi(pairs, w, lo) > r and lo > 1e-12:
        lo *= 0.5
    xs = np.linspace(lo, 1.0, 16)
    vals = [obj(a) for a in xs]
    k = int(np.argmax(vals))
    a_lo, a_hi = xs[max(k - 1, 0)], xs[min(k + 1, len(xs) - 1)]
    res = minimize_scalar(lambda a: -obj(a), bounds=(a_lo, a_hi), method="bounded",
                          options={"xatol": 1e-14, "maxiter": 1000})
    a_star, val = (float(res.x), -float(res.fun)) if -res.fun >= vals[k] else (xs[k], vals[k])
    # polish: the maximiser solves sum w D(q_t||q) = r with alpha = 1 - t
    record = CGFRecord(w, pairs)
    g = lambda t: record.tilted_divergences(t)[1] - r  # noqa: E731
    if g(1.0) < 0 < g(0.0):
        t = brentq(g, 0.0, 1.0, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
        if 1.0 - t > 0:
            v = obj(1.0 - t)
            if v >= val - 1e-12:
                a_star, val = 1.0 - t, v
    val = max(val, 0.0)
    return (val, a_star) if return_alpha else val


def e0_two(s: float, record: CGFRecord) -> tuple:
    """``E_0^(2)(s)`` by the CGF formula and by the weighted Renyi formula."""
    if s < 0:
        raise InvalidParameter("s must be nonnegative")
    if s == 0:
        return 0.0, 0.0
    via_cgf = -(1.0 + s) * record.lam0(s / (1.0 + s))
    a = 1.0 / (1.0 + s)
    via_renyi = 0.0
    for w, sym in zip(record.weights, record.symbols):
        p = np.exp(sym.logp)
        q = np.exp(sym.logp + sym.u)
        via_renyi += w * s * math.log(float(np.sum(p ** a * q ** (1 - a)))) / (a - 1.0)
    return via_cgf, via_renyi


def regularity_suite(pairs, weights, r: float, h1: float = 1e-5, h2: float = 2e-4) -> dict:
    """Check the regularity identities of the Hoeffding exponent at rate ``r``.

    Reports, with pass flags:
        * ``Lambda_0'' > 0`` on a grid of [0, 1];
        * ``Lambda_0*(phi - r) = phi`` and ``Lambda_1*(r - phi) = r``;
        * ``t* = s*/(1+s*)`` for the maximiser of the first transform;
        * ``s* = -dphi/dr`` by central differences;
        * ``d^2 phi/dr^2 = (1+s*)^3 / Lambda_0''(t*)`` by central differences.
    """
    pairs = [pr if isinstance(pr, NSPair) else NSPair(*pr) for pr in pairs]
    w = np.full(len(pairs), 1.0 / len(pairs)) if weights is None else np.asarray(weights, float)
    record = cgf_build(pairs, w)
    phi, a_star = phi_n(r, pairs, w, return_alpha=True)
    report = {"r": r, "phi": phi}
    if not (math.isfinite(phi) and phi > 0):
        report["skipped"] = "phi is zero or infinite at this rate"
        report["passed"] = None
        return report
    s_star = (1.0 - a_star) / a_star
    grid = np.linspace(0, 1, 21)
    curv = min(record.d2lam0(t) for t in grid)
    lf0, t0, _ = legendre_fenchel(record, 0, phi - r)
    lf1, t1, _ = legendre_fenchel(record, 1, r - phi)
    fd1 = (phi_n(r + h1, pairs, w) - phi_n(r - h1, pairs, w)) / (2 * h1)
    fd2 = (phi_n(r + h2, pairs, w) - 2 * phi + phi_n(r - h2, pairs, w)) / h2 ** 2
    predicted = (1 + s_star) ** 3 / record.d2lam0(t0)
    report.update({
        "s_star": s_star,
        "min_curvature": curv,
        "lf0_error": abs(lf0 - phi),
        "lf1_error": abs(lf1 - r),
        "t_star": t0,
        "t_error": abs(t0 - s_star / (1 + s_star)),
        "slope_error": abs(fd1 + s_star),
        "second_derivative_fd": fd2,
        "second_derivative_pred": predicted,
        "second_error": abs(fd2 - predicted) / max(1.0, abs(predicted)),
    })
    report["passed"] = bool(curv > 0 and report["lf0_error"] <= 1e-7 and report["lf1_error"] <= 1e-7
                            and report["t_error"] <= 1e-8 and report["slope_error"] <= 1e-3
                            and report["second_error"] <= 1e-4)
    return report


# ---------------------------------------------------------------------------
# Bahadur-Ranga Rao


@dataclass(frozen=True)
class Factor:
    """``count`` i.i.d. copies of a finite random variable.

    ``masses`` may be sub-normalised; the missing mass sits at ``-inf`` and
    never enters an upper tail.
    """

    values: np.ndarray
    masses: np.ndarray
    count: int = 1

    def tilt(self, t):
        v = np.asarray(self.values, float)
        lw = np.log(np.asarray(self.masses, float)) + t * v
        top = lw.max()
        e = np.exp(lw - top)
        Z = e.sum()
        w = e / Z
        m1 = float(np.dot(w, v))
        c = v - m1
        return top + math.log(Z), m1, float(np.dot(w, c * c)), float(np.dot(w, np.abs(c) ** 3))


def _factors_from_record(record: CGFRecord, j: int, n: int):
    counts = record.weights * n
    if np.max(np.abs(counts - np.round(counts))) > 1e-9:
        raise InvalidParameter("n * P(x) must be integers for every symbol")
    facs = []
    for c, sym in zip(np.round(counts).astype(int), record.symbols):
        if c == 0:
            continue
        p = np.exp(sym.logp)
        if j == 0:
            facs.append(Factor(sym.u, p, int(c)))
        else:
            facs.append(Factor(-sym.u, p * np.exp(sym.u), int(c)))
    return facs


def brr_bound(factors, z: float, check_guard: bool = True):
    """Bahadur-Ranga Rao lower bound on ``Pr{(1/n) sum_i Z_i >= z}``.

    The bound is ``exp(-n Lambda_n*(z)) exp(-K_n) / (2 sqrt(2 pi m_2))`` with
    ``m_2`` and ``m_3`` the summed variances and third absolute central moments
    under the exponentially tilted laws and ``K_n = 15 sqrt(2 pi) m_3 / m_2``.

    Returns:
        Tuple ``(bound, diagnostics)``.

    Raises:
        ConditionNotMet: when ``sqrt(m_2) < 1 + (1 + K_n)^2`` and
            ``check_guard`` is set.
    """
    n = sum(f.count for f in factors)

    def cgf(t):
        tot = d1 = 0.0
        for f in factors:
            lam, m1, _, _ = f.tilt(t)
            tot += f.count * lam
            d1 += f.count * m1
        return tot, d1

    f = lambda t: cgf(t)[1] - n * z  # noqa: E731
    lo, hi = -1.0, 1.0
    while f(lo) > 0 and lo > -1e4:
        lo *= 2
    while f(hi) < 0 and hi < 1e4:
        hi *= 2
    if f(lo) > 0 or f(hi) < 0:
        raise InvalidParameter(f"z={z} outside the range of the sum")
    t = brentq(f, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
    m2 = m3 = 0.0
    for fac in factors:
        _, _, v, a3 = fac.tilt(t)
        m2 += fac.count * v
        m3 += fac.count * a3
    lam_total = cgf(t)[0]
    rate_total = t * n * z - lam_total  # n * Lambda_n*(z)
    K = 15 * math.sqrt(2 * math.pi) * m3 / m2 if m2 > 0 else math.inf
    guard_lhs = math.sqrt(m2)
    guard_rhs = 1 + (1 + K) ** 2
    log_bound = -rate_total - K - math.log(2 * math.sqrt(2 * math.pi * m2))
    diag = {"t_star": t, "m2": m2, "m3": m3, "K": K, "rate_total": rate_total,
            "guard_lhs": guard_lhs, "guard_rhs": guard_rhs, "guard": guard_lhs >= guard_rhs,
            "log_bound": log_bound, "n": n}
    if check_guard and not diag["guard"]:
        raise ConditionNotMet(
            f"sqrt(m2)={guard_lhs:.4g} < 1+(1+K)^2={guard_rhs:.4g}", "brr_guard", guard_lhs)
    return math.exp(log_bound), diag


def bahadur_ranga_rao(record: CGFRecord, z: float, n: int, j: int = 0, check_guard: bool = True):
    """BRR bound for the log-likelihood sums of a composition.

    ``j = 0`` bounds ``Pr_p{(1/n) sum log(q/p) >= z}``, ``j = 1`` bounds
    ``Pr_q{(1/n) sum log(p/q) >= z}``.  ``n P(x)`` must be integers.
    """
    return brr_bound(_factors_from_record(record, j, n), z, check_guard)


def _type_classes(factor: Factor):
    """Sum values and probabilities over the type classes of one i.i.d. block."""
    v = np.asarray(factor.values, float)
    logm = np.log(np.asarray(factor.masses, float))
    k, m = len(v), factor.count
    sums, logps = [], []
    base = gammaln(m + 1)
    for combo in combinations_with_replacement(range(k), m) if k > 2 else []:
        cnt = np.bincount(combo, minlength=k)
        sums.append(float(cnt @ v))
        logps.append(base - float(np.sum(gammaln(cnt + 1))) + float(cnt @ logm))
    if k == 1:
        return np.array([m * v[0]]), np.array([m * logm[0]])
    if k == 2:
        c = np.arange(m + 1)
        sums = c * v[0] + (m - c) * v[1]
        logps = base - gammaln(c + 1) - gammaln(m - c + 1) + c * logm[0] + (m - c) * logm[1]
        return sums, logps
    return np.array(sums), np.array(logps)


def _n_types(k, m):
    return math.comb(m + k - 1, k - 1)


def exact_tail(factors, z: float, rel_tol: float = 1e-10) -> float:
    """Exact ``Pr{(1/n) sum Z_i >= z}`` by type-class enumeration.

    Each i.i.d. block is reduced to its type classes; blocks are then combined
    by outer sums.  Sums within ``rel_tol`` of the threshold count as ties and
    are included.

    Raises:
        CapacityExceeded: when the number of combined classes exceeds
            :data:`ENUM_CAP`.
    """
    total = 1
    for f in factors:
        total *= _n_types(len(f.values), f.count)
        if total > ENUM_CAP:
            raise CapacityExceeded(f"more than {ENUM_CAP} type classes to enumerate")
    n = sum(f.count for f in factors)
    sums, logps = np.zeros(1), np.zeros(1)
    for f in factors:
        s, lp = _type_classes(f)
        sums = (sums[:, None] + s[None, :]).ravel()
        logps = (logps[:, None] + lp[None, :]).ravel()
    thr = n * z
    scale = max(1.0, float(np.max(np.abs(sums))))
    hit = sums >= thr - rel_tol * scale
    if not np.any(hit):
        return 0.0
    lp = logps[hit]
    top = lp.max()
    return float(math.exp(top) * np.sum(np.exp(lp - top)))
