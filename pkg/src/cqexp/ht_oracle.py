"""Exact quantum Neyman-Pearson trade-off for single systems and small products.

``alpha_hat(rho, sigma, mu) = min {Tr[rho(1-Q)] : 0 <= Q <= 1, Tr[sigma Q] <= mu}``.

For every ``t >= 0`` the projector ``P_t`` onto the positive part of
``rho - t sigma`` minimises ``alpha + t beta``, so

    alpha_hat(mu) = max_t { Tr[rho (1 - P_t)] + t (Tr[sigma P_t] - mu) },

a concave maximisation in ``t``.  Operators are handled as lists of blocks
``(A_b, B_b, m_b)`` meaning ``rho = ⊕ A_b ⊗ 1_{m_b}``; product states of qubits
use Schur-Weyl blocks and commuting products use type classes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations_with_replacement, product

import numpy as np

from .config import dim_cap
from .errors import CapacityExceeded, InvalidParameter
from .operators import as_density, dagger, tensor

__all__ = [
    "Block",
    "TradeoffPoint",
    "TradeoffCurve",
    "dense_blocks",
    "commuting_blocks",
    "schur_weyl_blocks",
    "product_blocks",
    "lagrangian",
    "alpha_hat",
    "alpha_hat_blocks",
    "neyman_pearson_curve",
    "product_oracle",
    "hoeffding_exponent_estimate",
    "nagaoka_check",
    "random_test_certificate",
    "sym_power",
    "spin_multiplicity",
]

_KER = 1e-13  # relative width of the kernel of rho - t sigma


@dataclass(frozen=True)
class Block:
    A: np.ndarray
    B: np.ndarray
    mult: float = 1.0

    @property
    def scales(self):
        """Spectral radii of A and B (cached)."""
        cached = self.__dict__.get("_scales")
        if cached is None:
            cached = (_radius(self.A), _radius(self.B))
            object.__setattr__(self, "_scales", cached)
        return cached


def _radius(M):
    if M.shape == (1, 1):
        return abs(float(np.real(M[0, 0])))
    return float(np.max(np.abs(np.linalg.eigvalsh(0.5 * (M + dagger(M))))))


def _mat(X):
    if hasattr(X, "matrix"):
        return np.asarray(X.matrix)
    return np.asarray(X, dtype=complex)


def dense_blocks(rho, sigma, check_cap: bool = True):
    """Single-block decomposition of a dense pair, respecting the dimension cap."""
    A, B = _mat(rho), _mat(sigma)
    if A.shape != B.shape:
        raise InvalidParameter("rho and sigma must have the same shape")
    if check_cap and A.shape[0] > dim_cap():
        raise CapacityExceeded(f"dimension {A.shape[0]} exceeds cap {dim_cap()}")
    return [Block(A, B, 1.0)]


def _commute(mats, tol=1e-10) -> bool:
    for i in range(len(mats)):
        for j in range(i + 1, len(mats)):
            C = mats[i] @ mats[j] - mats[j] @ mats[i]
            if np.max(np.abs(C)) > tol:
                return False
    return True


def _common_eigenbasis(mats, seed=0):
    rng = np.random.default_rng(seed)
    coeff = rng.uniform(1.0, 2.0, len(mats))
    H = sum(c * M for c, M in zip(coeff, mats))
    _, U = np.linalg.eigh(0.5 * (H + dagger(H)))
    return U


def commuting_blocks(factors):
    """Type-class blocks for ``⊗_g p_g^{⊗n_g}`` versus ``⊗_g q_g^{⊗n_g}``.

    Args:
        factors: list of ``(p, q, n)`` with ``p, q`` probability vectors.

    Every block is 1x1; its multiplicity is the product of multinomial
    coefficients of the per-group types.
    """
    per_group = []
    for p, q, m in factors:
        p = np.asarray(p, float)
        q = np.asarray(q, float)
        k = len(p)
        entries = []
        for combo in combinations_with_replacement(range(k), m):
            cnt = np.bincount(np.asarray(combo, dtype=int), minlength=k) if m else np.zeros(k, int)
            logmult = math.lgamma(m + 1) - sum(math.lgamma(c + 1) for c in cnt)
            with np.errstate(divide="ignore"):
                la = float(np.sum(cnt * np.log(p))) if np.all((cnt == 0) | (p > 0)) else -np.inf
                lb = float(np.sum(cnt * np.log(q))) if np.all((cnt == 0) | (q > 0)) else -np.inf
            if la == -np.inf and lb == -np.inf:
                continue
            entries.append((la, lb, logmult))
        per_group.append(entries)
    blocks = []
    for tup in product(*per_group):
        la = sum(e[0] for e in tup)
        lb = sum(e[1] for e in tup)
        lm = sum(e[2] for e in tup)
        a = math.exp(la) if la > -np.inf else 0.0
        b = math.exp(lb) if lb > -np.inf else 0.0
        blocks.append(Block(np.array([[a]]), np.array([[b]]), math.exp(lm)))
    return blocks


def sym_power(A, k: int) -> np.ndarray:
    """Action of ``A^{⊗k}`` on the symmetric subspace of ``(C^2)^{⊗k}``.

    Uses the orthonormal basis of symmetrised states with ``m`` ones,
    ``m = 0..k``.
    """
    A = np.asarray(A, dtype=complex)
    if k == 0:
        return np.ones((1, 1), dtype=complex)
    a, b, c, d = A[0, 0], A[0, 1], A[1, 0], A[1, 1]
    M = np.zeros((k + 1, k + 1), dtype=complex)
    for m in range(k + 1):
        poly = np.ones(1, dtype=complex)
        for _ in range(k - m):
            poly = np.convolve(poly, [a, c])
        for _ in range(m):
            poly = np.convolve(poly, [b, d])
        M[:, m] = poly
    binom = np.array([math.comb(k, m) for m in range(k + 1)], dtype=float)
    scale = np.sqrt(binom)
    return M * scale[None, :] / scale[:, None]


def spin_multiplicity(n: int, j2: int) -> int:
    """Multiplicity of the spin-``j2/2`` irrep in ``n`` qubits."""
    lo = (n - j2) // 2
    return math.comb(n, lo) - (math.comb(n, lo - 1) if lo >= 1 else 0)


def _sw_irreps(A, n):
    """``[(j2, pi_j(A), multiplicity)]`` for ``A^{⊗n}`` with ``A`` 2x2."""
    A = np.asarray(A, dtype=complex)
    det = complex(np.linalg.det(A))
    out = []
    for j2 in range(n % 2, n + 1, 2):
        lam2 = (n - j2) // 2
        factor = det ** lam2 if lam2 else 1.0
        out.append((j2, factor * sym_power(A, j2), spin_multiplicity(n, j2)))
    return out


def schur_weyl_blocks(groups):
    """Blocks of ``⊗_g A_g^{⊗n_g}`` versus ``⊗_g B_g^{⊗n_g}`` for qubit operators.

    Args:
        groups: list of ``(A, B, n)`` with 2x2 matrices.
    """
    per_group = []
    for A, B, m in groups:
        ia = _sw_irreps(A, m)
        ib = _sw_irreps(B, m)
        per_group.append([(xa, xb, mult) for (_, xa, mult), (_, xb, _) in zip(ia, ib)])
    blocks = []
    for tup in product(*per_group):
        A = tensor(*[e[0] for e in tup])
        B = tensor(*[e[1] for e in tup])
        mult = float(np.prod([e[2] for e in tup]))
        blocks.append(Block(A, B, mult))
    return blocks


def product_blocks(states, sigma, method: str = "auto"):
    """Blocks for ``⊗_i states[i]`` versus ``sigma^{⊗n}``.

    ``method`` is ``"auto"``, ``"commuting"``, ``"schur_weyl"`` or ``"dense"``.
    The dimension cap applies to the total dimension except on the commuting
    path.
    """
    mats = [_mat(s) for s in states]
    S = _mat(sigma)
    n = len(mats)
    d = S.shape[0]
    groups = {}
    order = []
    for M in mats:
        for key in order:
            if np.allclose(groups[key][0], M, atol=1e-14, rtol=0):
                groups[key][1] += 1
                break
        else:
            key = len(order)
            order.append(key)
            groups[key] = [M, 1]
    distinct = [groups[k][0] for k in order]
    counts = [groups[k][1] for k in order]
    if method == "auto":
        if _commute(distinct + [S]):
            method = "commuting"
        elif d == 2:
            method = "schur_weyl"
        else:
            method = "dense"
    if method == "commuting":
        U = _common_eigenbasis(distinct + [S])
        qv = np.clip(np.real(np.diag(dagger(U) @ S @ U)), 0, None)
        facs = [(np.clip(np.real(np.diag(dagger(U) @ M @ U)), 0, None), qv, c)
                for M, c in zip(distinct, counts)]
        return commuting_blocks(facs)
    total = d ** n
    if total > dim_cap():
        raise CapacityExceeded(f"product dimension {total} exceeds cap {dim_cap()}")
    if method == "schur_weyl":
        if d != 2:
            raise InvalidParameter("Schur-Weyl blocks are implemented for qubits only")
        return schur_weyl_blocks([(M, S, c) for M, c in zip(distinct, counts)])
    if method == "dense":
        return [Block(tensor(*mats), tensor(*([S] * n)), 1.0)]
    raise InvalidParameter(f"unknown method {method!r}")


def _block_terms(blocks, t):
    """``(Tr[rho(1-P_>)], Tr[sigma P_>], Tr[sigma P_0], Tr[rho P_0])`` at threshold ``t``."""
    a_out = b_pos = b_ker = a_ker = 0.0
    for blk in blocks:
        if blk.A.shape == (1, 1):
            a = float(np.real(blk.A[0, 0]))
            b = float(np.real(blk.B[0, 0]))
            diff = a - t * b
            scale = max(a, t * b, 1e-300)
            if abs(diff) <= _KER * scale:
                a_out += blk.mult * a
                b_ker += blk.mult * b
                a_ker += blk.mult * a
            elif diff > 0:
                b_pos += blk.mult * b
            else:
                a_out += blk.mult * a
            continue
        D = blk.A - t * blk.B
        w, V = np.linalg.eigh(0.5 * (D + dagger(D)))
        sa, sb = blk.scales
        scale = max(sa, t * sb, 1e-300)
        pos = w > _KER * scale
        ker = np.abs(w) <= _KER * scale
        ra = np.real(np.sum(V.conj() * (blk.A @ V), axis=0))
        rb = np.real(np.sum(V.conj() * (blk.B @ V), axis=0))
        a_out += blk.mult * float(np.sum(ra[~pos]))
        b_pos += blk.mult * float(np.sum(rb[pos]))
        b_ker += blk.mult * float(np.sum(rb[ker]))
        a_ker += blk.mult * float(np.sum(ra[ker]))
    return a_out, b_pos, b_ker, a_ker


def lagrangian(blocks, t, mu):
    """Dual value ``Tr[rho(1-P_t)] + t (Tr[sigma P_t] - mu)``; a lower bound on alpha_hat."""
    a_out, b_pos, _, _ = _block_terms(blocks, t)
    return a_out + t * (b_pos - mu)


@dataclass
class _Solution:
    value: float
    t: float
    gamma: float
    beta_pos: float
    beta_ker: float


def _solve(blocks, mu, rel=1e-13, max_iter=400) -> _Solution:
    a0, b0, bk0, ak0 = _block_terms(blocks, 0.0)
    if b0 + bk0 <= mu:
        # the support projector of rho already meets the constraint
        return _Solution(max(a0 - ak0, 0.0), 0.0, 1.0, b0, bk0)
    lo, hi = 0.0, 1.0
    lo_terms = (a0, b0, bk0, ak0)
    hi_terms = _block_terms(blocks, hi)
    while hi_terms[1] > mu:
        lo, lo_terms = hi, hi_terms
        hi *= 2.0
        hi_terms = _block_terms(blocks, hi)
        if hi > 1e300:
            raise InvalidParameter("threshold search diverged")
    # invariant: beta_>(lo) > mu >= beta_>(hi); g is concave with
    # supergradients beta_>(lo) - mu at lo and beta_>=(hi) - mu at hi
    for _ in range(max_iter):
        if hi - lo <= rel * hi:
            break
        g_lo = lo_terms[0] + lo * (lo_terms[1] - mu)
        g_hi = hi_terms[0] + hi * (hi_terms[1] - mu)
        s_lo = lo_terms[1] - mu
        s_hi = hi_terms[1] + hi_terms[2] - mu
        if s_hi >= 0:
            lo = hi
            break
        cross = (g_hi - g_lo + s_lo * lo - s_hi * hi) / (s_lo - s_hi)
        upper = g_lo + s_lo * (cross - lo)
        best = max(g_lo, g_hi)
        if upper - best <= 1e-16 + 1e-12 * abs(best):
            break
        # tangent intersection, safeguarded towards bisection
        w = hi - lo
        mid = cross if lo + 0.05 * w < cross < hi - 0.05 * w else 0.5 * (lo + hi)
        terms = _block_terms(blocks, mid)
        _, bp, bk, _ = terms
        if bp > mu:
            lo, lo_terms = mid, terms
        elif bp + bk < mu:
            hi, hi_terms = mid, terms
        else:
            lo = hi = mid
            break
    cands = {lo, hi}
    best = None
    for t in cands:
        a_out, bp, bk, ak = _block_terms(blocks, t)
        val = a_out + t * (bp - mu)
        if best is None or val > best.value:
            gamma = 0.0
            if bk > 0:
                gamma = float(np.clip((mu - bp) / bk, 0.0, 1.0))
            best = _Solution(val, t, gamma, bp, bk)
    best.value = float(np.clip(best.value, 0.0, 1.0))
    return best


def alpha_hat_blocks(blocks, mu: float) -> float:
    if not 0 <= mu <= 1:
        raise InvalidParameter("mu must lie in [0, 1]")
    if mu >= 1:
        return 0.0
    return _solve(blocks, mu).value


def alpha_hat(rho, sigma, mu: float) -> float:
    """Minimal type-I error subject to type-II error at most ``mu``.

    Raises:
        CapacityExceeded: if the dimension exceeds the cap.
    """
    return alpha_hat_blocks(dense_blocks(rho, sigma), mu)


@dataclass(frozen=True)
class TradeoffPoint:
    mu: float
    alpha: float
    t: float
    gamma: float


@dataclass
class TradeoffCurve:
    """Points ``(mu, alpha_hat)`` on the optimal trade-off, sorted by ``mu``.

    Between points the linear interpolant is an upper approximation (exact for
    commuting pairs, whose curve is piecewise linear).
    """

    points: list = field(default_factory=list)

    @property
    def mus(self):
        return np.array([p.mu for p in self.points])

    @property
    def alphas(self):
        return np.array([p.alpha for p in self.points])

    def __call__(self, mu):
        return np.interp(mu, self.mus, self.alphas)

    def is_monotone(self, tol=1e-9) -> bool:
        return bool(np.all(np.diff(self.alphas) <= tol))

    def is_convex(self, tol=1e-9) -> bool:
        m, a = self.mus, self.alphas
        keep = np.concatenate([[True], np.diff(m) > 1e-12])
        m, a = m[keep], a[keep]
        if len(m) < 3:
            return True
        slopes = np.diff(a) / np.diff(m)
        return bool(np.all(np.diff(slopes) >= -tol * max(1.0, np.max(np.abs(slopes)))))

    def rows(self):
        return [(p.mu, p.alpha, p.t, p.gamma) for p in self.points]


def neyman_pearson_curve(rho, sigma, num: int = 200, blocks=None) -> TradeoffCurve:
    """Trade-off curve from a threshold sweep.

    Thresholds are taken from the eigenvalues of ``sigma^{-1/2} rho sigma^{-1/2}``
    on the support of sigma (exact crossings when the pair commutes) together
    with a logarithmic grid.  Each threshold contributes the two vertices
    ``P_>`` and ``P_>=``; the curve is completed with ``(0, alpha_hat(0))`` and
    ``(1, 0)``.
    """
    blocks = blocks if blocks is not None else dense_blocks(rho, sigma)
    ts = set(np.geomspace(1e-4, 1e4, num).tolist())
    for blk in blocks:
        wb, Vb = np.linalg.eigh(0.5 * (blk.B + dagger(blk.B)))
        keep = wb > 1e-12 * max(wb.max(), 1e-300)
        if np.any(keep):
            Wi = Vb[:, keep] / np.sqrt(wb[keep])
            R = dagger(Wi) @ blk.A @ Wi
            ts.update(np.clip(np.linalg.eigvalsh(0.5 * (R + dagger(R))), 0, None).tolist())
    pts = {}
    for t in sorted(ts):
        a_out, bp, bk, ak = _block_terms(blocks, t)
        pts[round(bp, 15)] = TradeoffPoint(bp, max(a_out, 0.0), t, 0.0)
        if bk > 0:
            pts[round(bp + bk, 15)] = TradeoffPoint(bp + bk, max(a_out - ak, 0.0), t, 1.0)
    a0 = _solve(blocks, 0.0)
    pts[0.0] = TradeoffPoint(0.0, a0.value, float("inf"), a0.gamma)
    pts[1.0] = TradeoffPoint(1.0, 0.0, 0.0, 1.0)
    ordered = sorted(pts.values(), key=lambda p: p.mu)
    # keep the lower convex envelope
    hull = []
    for p in ordered:
        while len(hull) >= 2:
            (x1, y1), (x2, y2) = (hull[-2].mu, hull[-2].alpha), (hull[-1].mu, hull[-1].alpha)
            if (y2 - y1) * (p.mu - x1) >= (p.alpha - y1) * (x2 - x1) - 1e-15:
                hull.pop()
            else:
                break
        hull.append(p)
    return TradeoffCurve(hull)


def product_oracle(states, sigma, mu: float, method: str = "auto") -> float:
    """``alpha_hat_mu(⊗_i states[i] || sigma^{⊗n})``.

    ``states`` may also be a pair ``(channel, codeword)``.
    """
    if isinstance(states, tuple) and len(states) == 2 and hasattr(states[0], "outputs"):
        ch, xs = states
        states = [ch.outputs[x] for x in xs]
    return alpha_hat_blocks(product_blocks(states, sigma, method), mu)


def hoeffding_exponent_estimate(rho, sigma, r: float, n_list, method: str = "auto"):
    """``-(1/n) log alpha_hat_{exp(-n r)}(rho^{⊗n} || sigma^{⊗n})`` for each ``n``."""
    out = []
    for n in n_list:
        val = alpha_hat_blocks(product_blocks([rho] * n, sigma, method), math.exp(-n * r))
        out.append(-math.log(val) / n if val > 0 else math.inf)
    return np.array(out)


def nagaoka_check(rho, sigma, deltas) -> list:
    """Compare ``min_Q alpha + delta beta`` with the NS lower bound.

    Returns ``[(delta, lhs, rhs)]``; the inequality ``lhs >= rhs`` is the
    statement being tested.
    """
    from .ns_classical import ns_distributions

    rho, sigma = as_density(rho), as_density(sigma)
    pr = ns_distributions(rho, sigma)
    blocks = dense_blocks(rho.matrix, sigma.matrix)
    out = []
    for dl in deltas:
        a_out, bp, _, _ = _block_terms(blocks, dl)
        lhs = a_out + dl * bp
        small = pr.p <= dl * pr.q
        rhs = 0.5 * (float(np.sum(pr.p[small])) + dl * float(np.sum(pr.q[~small])))
        out.append((float(dl), lhs, rhs))
    return out


def random_test_certificate(rho, sigma, samples: int = 1000, seed: int = 0, tol: float = 1e-9):
    """Sample random tests ``0 <= Q <= 1`` and compare with the optimum.

    Returns ``(violations, worst_margin)`` where the margin is
    ``alpha(Q) - alpha_hat(beta(Q))``.
    """
    rho, sigma = as_density(rho), as_density(sigma)
    blocks = dense_blocks(rho.matrix, sigma.matrix)
    d = rho.dim
    rng = np.random.default_rng(seed)
    worst = math.inf
    bad = 0
    for k in range(samples):
        G = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        U, _ = np.linalg.qr(G)
        if k % 2:
            ev = rng.uniform(0, 1, d)
        else:
            ev = rng.integers(0, 2, d).astype(float)
        Q = (U * ev) @ dagger(U)
        a = 1.0 - float(np.real(np.trace(rho.matrix @ Q)))
        b = float(np.real(np.trace(sigma.matrix @ Q)))
        if b >= 1:
            continue
        margin = a - alpha_hat_blocks(blocks, max(b, 0.0))
        worst = min(worst, margin)
        if margin < -tol:
            bad += 1
    return bad, worst
