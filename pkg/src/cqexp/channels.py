"""Classical-quantum channels and their Renyi information quantities.

A channel is a finite list of density operators ``W_x`` on a common space.
Priors are plain probability vectors validated by :func:`as_prior`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .config import DEFAULT, Tolerances
from .divergences import (
    ExtReal,
    d_alpha_flat,
    d_alpha_petz,
    relative_entropy,
)
from .errors import InvalidChannel, InvalidParameter, NumericalFailure
from .operators import DensityOperator, as_density, dagger, mat_power, support_projector

__all__ = [
    "CQChannel",
    "as_prior",
    "cq_state",
    "conditional_divergence",
    "conditional_renyi",
    "mutual_information",
    "sibson_sigma",
    "i_alpha_1",
    "i_alpha_2",
    "inner_min_sigma",
    "InnerResult",
    "frechet_power_gradient",
    "renyi_radius",
    "capacity",
    "r_infinity",
]


class CQChannel:
    """Finite-input classical-quantum channel ``x -> W_x``.

    Args:
        outputs: sequence of density operators (arrays or
            :class:`~cqexp.operators.DensityOperator`) of equal dimension.
        name: optional label.

    Raises:
        InvalidChannel: on an empty alphabet or mismatched dimensions.
    """

    def __init__(self, outputs, name: str = "", tol: Tolerances | None = None):
        tol = tol or DEFAULT
        outs = tuple(as_density(W, tol) for W in outputs)
        if not outs:
            raise InvalidChannel("channel needs at least one input symbol")
        dims = {W.dim for W in outs}
        if len(dims) != 1:
            raise InvalidChannel(f"output dimensions differ: {sorted(dims)}")
        self.outputs = outs
        self.name = name
        self.tol = tol

    @property
    def size(self) -> int:
        return len(self.outputs)

    @property
    def dim(self) -> int:
        return self.outputs[0].dim

    def __len__(self):
        return self.size

    def __getitem__(self, x) -> DensityOperator:
        return self.outputs[x]

    def __iter__(self):
        return iter(self.outputs)

    def __repr__(self):
        return f"CQChannel(size={self.size}, dim={self.dim}, name={self.name!r})"

    def mixture(self, P) -> np.ndarray:
        """Average output ``P W = sum_x P(x) W_x``."""
        P = as_prior(P, self.size)
        return np.einsum("x,xij->ij", P, self.stack())

    def stack(self) -> np.ndarray:
        return np.stack([W.matrix for W in self.outputs])

    def powers(self, alpha: float) -> np.ndarray:
        return np.stack([mat_power(W, alpha, self.tol) for W in self.outputs])

    def is_commuting(self, atol: float = 1e-10) -> bool:
        mats = self.stack()
        for i in range(len(mats)):
            for j in range(i + 1, len(mats)):
                C = mats[i] @ mats[j] - mats[j] @ mats[i]
                if np.max(np.abs(C)) > atol:
                    return False
        return True

    def is_classical(self, atol: float = 1e-12) -> bool:
        """All outputs diagonal in the computational basis."""
        for W in self.stack():
            if np.max(np.abs(W - np.diag(np.diag(W)))) > atol:
                return False
        return True

    def restrict(self, symbols) -> "CQChannel":
        return CQChannel([self.outputs[x] for x in symbols], self.name, self.tol)


def as_prior(P, size: int | None = None, atol: float = 1e-12) -> np.ndarray:
    """Validate a probability vector and return it as a float array.

    Raises:
        InvalidParameter: on negative weights or a sum differing from one.
        InvalidChannel: if the length does not match ``size``.
    """
    arr = np.asarray(P, dtype=float).ravel()
    if size is not None and arr.size != size:
        raise InvalidChannel(f"prior has {arr.size} entries, channel has {size} inputs")
    if np.any(~np.isfinite(arr)) or np.any(arr < -atol):
        raise InvalidParameter("prior weights must be nonnegative")
    if abs(arr.sum() - 1.0) > max(atol, 1e-12 * arr.size):
        raise InvalidParameter(f"prior sums to {arr.sum()!r}, not 1")
    arr = np.clip(arr, 0.0, None)
    return arr / arr.sum()


def cq_state(P, W: CQChannel) -> np.ndarray:
    """Block-diagonal matrix of ``sum_x P(x) |x><x| (x) W_x``."""
    P = as_prior(P, W.size)
    d = W.dim
    out = np.zeros((W.size * d, W.size * d), dtype=complex)
    for x, Wx in enumerate(W):
        out[x * d:(x + 1) * d, x * d:(x + 1) * d] = P[x] * Wx.matrix
    return out


def _weighted_sum(P, terms) -> ExtReal:
    total = 0.0
    for px, val in zip(P, terms):
        if px <= 0:
            continue
        if math.isinf(val):
            return ExtReal(math.inf, getattr(val, "reason", None) or "support")
        total += px * float(val)
    return ExtReal(total)


def conditional_divergence(V: CQChannel, W: CQChannel, P) -> ExtReal:
    """``D(V||W|P) = sum_x P(x) D(V_x||W_x)``."""
    if V.size != W.size or V.dim != W.dim:
        raise InvalidChannel("channels differ in alphabet size or dimension")
    P = as_prior(P, W.size)
    return _weighted_sum(P, (relative_entropy(V[x], W[x]) if P[x] > 0 else 0.0
                             for x in range(W.size)))


def conditional_renyi(W: CQChannel, sigma, P, alpha: float, family: str = "petz") -> ExtReal:
    """``sum_x P(x) D_alpha(W_x||sigma)`` for the Petz or log-Euclidean family."""
    P = as_prior(P, W.size)
    sigma = as_density(sigma)
    if sigma.dim != W.dim:
        raise InvalidChannel("sigma dimension does not match the channel")
    if family == "petz":
        fn = d_alpha_petz
    elif family == "flat":
        fn = d_alpha_flat
    else:
        raise InvalidParameter(f"unknown Renyi family {family!r}")
    return _weighted_sum(P, (fn(W[x], sigma, alpha) if P[x] > 0 else 0.0
                             for x in range(W.size)))


def _von_neumann(M) -> float:
    w = np.linalg.eigvalsh(0.5 * (M + dagger(M)))
    w = w[w > 1e-300]
    return float(-np.sum(w * np.log(w)))


def mutual_information(P, W: CQChannel) -> float:
    """Holevo quantity ``I(P, W) = D(W||PW|P) = S(PW) - sum_x P(x) S(W_x)``."""
    P = as_prior(P, W.size)
    val = _von_neumann(W.mixture(P))
    for x, Wx in enumerate(W):
        if P[x] > 0:
            lam = Wx.eigvals[Wx.support_mask]
            val += P[x] * float(np.sum(lam * np.log(lam)))
    return max(val, 0.0)


def _check_alpha(alpha, allow_zero=False):
    a = float(alpha)
    lo_ok = a >= 0.0 if allow_zero else a > 0.0
    if not (lo_ok and a <= 1.0):
        raise InvalidParameter(f"alpha={alpha} outside the admissible range")
    return a


def sibson_sigma(P, W: CQChannel, alpha: float) -> np.ndarray:
    """Normalised ``(sum_x P(x) W_x^alpha)^(1/alpha)``, the Sibson minimiser."""
    a = _check_alpha(alpha)
    P = as_prior(P, W.size)
    M = np.einsum("x,xij->ij", P, W.powers(a))
    S = mat_power(0.5 * (M + dagger(M)), 1.0 / a)
    return S / np.real(np.trace(S))


def i_alpha_1(P, W: CQChannel, alpha: float) -> float:
    """Sibson-type Renyi information ``min_sigma D_alpha(P∘W || P⊗sigma)``.

    Closed form ``alpha/(alpha-1) log Tr[(sum_x P(x) W_x^alpha)^(1/alpha)]``.
    ``alpha = 1`` returns the mutual information and ``alpha = 0`` the limit
    ``-log lambda_max(sum_x P(x) W_x^0)``.
    """
    a = _check_alpha(alpha, allow_zero=True)
    P = as_prior(P, W.size)
    if a == 1.0:
        return mutual_information(P, W)
    if a == 0.0:
        M = np.einsum("x,xij->ij", P, W.powers(0.0))
        return max(-math.log(float(np.linalg.eigvalsh(M)[-1])), 0.0)
    M = np.einsum("x,xij->ij", P, W.powers(a))
    w = np.linalg.eigvalsh(0.5 * (M + dagger(M)))
    w = w[w > 1e-300]
    # log Tr[M^(1/a)] evaluated in log space to avoid underflow for small alpha
    logs = np.log(w) / a
    top = logs.max()
    log_tr = top + math.log(float(np.sum(np.exp(logs - top))))
    return max(a / (a - 1.0) * log_tr, 0.0)


@dataclass
class InnerResult:
    """Output of :func:`inner_min_sigma`."""

    sigma: np.ndarray
    value: float
    iterations: int
    step_residual: float
    foc_residual: float
    history: list = field(default_factory=list, repr=False)


def frechet_power_gradient(sigma, A, p: float) -> np.ndarray:
    """Gradient of ``sigma -> Tr[A sigma^p]`` for full-rank Hermitian ``sigma``.

    Uses the Daleckii-Krein divided-difference formula in the eigenbasis of
    sigma.
    """
    s, U = np.linalg.eigh(0.5 * (sigma + dagger(sigma)))
    s = np.clip(s, 1e-300, None)
    fs = s ** p
    ds = s[:, None] - s[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        G = (fs[:, None] - fs[None, :]) / ds
    close = np.abs(ds) <= 1e-13 * np.maximum(s[:, None], s[None, :])
    mean = 0.5 * (s[:, None] + s[None, :])
    G = np.where(close, p * mean ** (p - 1.0), G)
    At = dagger(U) @ A @ U
    return U @ (G * At) @ dagger(U)


def _foc_residual(S, Wa, Px, q, a, rel_cut=1e-12) -> float:
    """First-order optimality residual ``lambda_max(G)/(1-alpha) - 1``.

    ``G`` is the gradient of ``sum_x P(x) log Tr[W_x^alpha sigma^(1-alpha)]``.
    Eigen-directions of sigma below ``rel_cut`` times its largest eigenvalue
    are numerically unresolved and left out.
    """
    G = sum(px / qx * frechet_power_gradient(S, A, 1.0 - a) for px, A, qx in zip(Px, Wa, q))
    s, U = np.linalg.eigh(0.5 * (S + dagger(S)))
    keep = s > rel_cut * s[-1]
    Gk = dagger(U[:, keep]) @ G @ U[:, keep]
    return float(np.linalg.eigvalsh(0.5 * (Gk + dagger(Gk)))[-1]) / (1.0 - a) - 1.0


def _range_basis(W: CQChannel, P) -> np.ndarray:
    """Orthonormal basis of the span of ``supp W_x`` for ``x`` in ``supp P``."""
    M = np.zeros((W.dim, W.dim), dtype=complex)
    for x, Wx in enumerate(W):
        if P[x] > 0:
            M = M + support_projector(Wx)
    w, V = np.linalg.eigh(0.5 * (M + dagger(M)))
    return V[:, w > 1e-9]


def inner_min_sigma(W: CQChannel, P, alpha: float, sigma0=None, damping: float = 0.5,
                    max_iters: int = 500, step_tol: float = 1e-10,
                    foc_tol: float = 1e-7) -> InnerResult:
    """Minimise ``sigma -> sum_x P(x) D_alpha(W_x||sigma)`` over density operators.

    Iterates the damped map
    ``sigma <- (1-damping) sigma + damping * normalize[(sum_x P(x) W_x^alpha /
    Tr[W_x^alpha sigma^(1-alpha)])^(1/alpha)]`` starting from the Sibson state,
    inside the span of the supports of the outputs.

    Returns:
        :class:`InnerResult` with the minimiser (in the full space), the optimal
        value, and the trace-norm step and first-order residuals.

    Raises:
        NumericalFailure: if the residuals are not met within ``max_iters``.
    """
    a = _check_alpha(alpha)
    P = as_prior(P, W.size)
    support = np.flatnonzero(P > 0)
    if a == 1.0:
        sigma = W.mixture(P)
        return InnerResult(sigma, mutual_information(P, W), 0, 0.0, 0.0)
    B = _range_basis(W, P)
    k = B.shape[1]
    Wa = [dagger(B) @ mat_power(W[x], a) @ B for x in support]
    Px = P[support]
    if sigma0 is None:
        S = dagger(B) @ sibson_sigma(P, W, a) @ B
    else:
        S = dagger(B) @ np.asarray(sigma0, dtype=complex) @ B
        S = 0.5 * (S + dagger(S))
        # keep the start strictly inside the cone
        S = S / np.real(np.trace(S))
        S = 0.999 * S + 0.001 * np.eye(k) / k

    def q_values(S):
        Sp = mat_power(S, 1.0 - a)
        return np.array([np.real(np.sum(A.T * Sp)) for A in Wa])

    def fixed_map(S, q):
        M = sum(px * A / qx for px, A, qx in zip(Px, Wa, q))
        T = mat_power(0.5 * (M + dagger(M)), 1.0 / a)
        return T / np.real(np.trace(T))

    step = math.inf
    it = 0
    q = q_values(S)
    for it in range(1, max_iters + 1):
        T = fixed_map(S, q)
        diff = T - S
        step = damping * float(np.sum(np.abs(np.linalg.eigvalsh(0.5 * (diff + dagger(diff))))))
        S = S + damping * diff
        S = 0.5 * (S + dagger(S))
        q = q_values(S)
        if step <= step_tol:
            break
    value = float(np.sum(Px * np.log(q)) / (a - 1.0))
    foc = _foc_residual(S, Wa, Px, q, a)
    sigma = B @ S @ dagger(B)
    res = InnerResult(sigma, value, it, step, foc)
    if step > step_tol and foc > foc_tol:
        raise NumericalFailure(
            f"fixed-point iteration did not converge in {max_iters} steps",
            {"sigma": sigma, "value": value, "step_residual": step, "foc_residual": foc})
    return res


def _i_alpha_2_zero(P, W: CQChannel):
    """``min_sigma -sum_x P(x) log Tr[W_x^0 sigma]`` by convex programming."""
    P = as_prior(P, W.size)
    projs = W.powers(0.0)
    if all(Wx.is_full_rank() for x, Wx in enumerate(W) if P[x] > 0):
        return 0.0, W.mixture(P)
    import cvxpy as cp

    d = W.dim
    S = cp.Variable((d, d), hermitian=True)
    terms = [P[x] * cp.log(cp.real(cp.trace(projs[x] @ S)))
             for x in range(W.size) if P[x] > 0]
    prob = cp.Problem(cp.Maximize(sum(terms)), [S >> 0, cp.real(cp.trace(S)) == 1])
    prob.solve(solver=cp.CLARABEL)
    if prob.status not in ("optimal", "optimal_inaccurate"):
        raise NumericalFailure(f"alpha=0 program ended with status {prob.status}")
    sigma = np.asarray(S.value)
    return max(-float(prob.value), 0.0), sigma


def i_alpha_2(P, W: CQChannel, alpha: float, sigma0=None, **kwargs):
    """Augustin-type Renyi information ``min_sigma sum_x P(x) D_alpha(W_x||sigma)``.

    Returns:
        Tuple ``(value, sigma_star)``.  ``alpha = 1`` gives the mutual
        information with minimiser ``PW``; ``alpha = 0`` is solved as a convex
        program in sigma.
    """
    a = _check_alpha(alpha, allow_zero=True)
    if a == 0.0:
        return _i_alpha_2_zero(P, W)
    res = inner_min_sigma(W, P, a, sigma0=sigma0, **kwargs)
    return res.value, res.sigma


def _simplex_opt(fun, grad, size, starts):
    cons = ({"type": "eq", "fun": lambda p: np.sum(p) - 1.0, "jac": lambda p: np.ones_like(p)},)
    best = None
    for P0 in starts:
        r = minimize(fun, P0, jac=grad, method="SLSQP", bounds=[(0.0, 1.0)] * size,
                     constraints=cons, options={"ftol": 1e-15, "maxiter": 500})
        P = np.clip(r.x, 0.0, None)
        P = P / P.sum()
        val = fun(P)
        if best is None or val < best[0]:
            best = (val, P)
    return best


def _prior_starts(size, restarts, rng):
    starts = [np.full(size, 1.0 / size)]
    for _ in range(restarts):
        starts.append(rng.dirichlet(np.ones(size)))
    return starts


def renyi_radius(W: CQChannel, alpha: float, restarts: int = 4, seed: int = 0):
    """Renyi radius ``C_alpha = max_P I_alpha(P, W)``.

    The maximum of the Augustin and Sibson informations coincide, and the
    Sibson form is maximised by minimising the convex function
    ``P -> Tr[(sum_x P(x) W_x^alpha)^(1/alpha)]`` over the simplex.  At
    ``alpha = 1`` the Holevo quantity is maximised directly, at ``alpha = 0``
    ``lambda_max(sum_x P(x) W_x^0)`` is minimised as a semidefinite program.

    Returns:
        Tuple ``(C_alpha, P_star)``.
    """
    a = _check_alpha(alpha, allow_zero=True)
    n = W.size
    if n == 1:
        return 0.0, np.ones(1)
    rng = np.random.default_rng(seed)
    starts = _prior_starts(n, restarts, rng)
    if a == 0.0:
        return _radius_zero(W)
    if a == 1.0:
        ent = np.array([-float(np.sum(lam * np.log(lam))) for lam in
                        (Wx.eigvals[Wx.support_mask] for Wx in W)])
        stack = W.stack()

        def neg_info(P):
            P = np.clip(P, 0, None)
            return -(_von_neumann(np.einsum("x,xij->ij", P, stack)) - float(P @ ent))

        def neg_grad(P):
            M = np.einsum("x,xij->ij", np.clip(P, 0, None), stack)
            w, V = np.linalg.eigh(0.5 * (M + dagger(M)))
            L = (V * np.log(np.clip(w, 1e-300, None))) @ dagger(V)
            g = -np.real(np.einsum("xij,ji->x", stack, L)) - 1.0 - ent
            return -g

        val, P = _simplex_opt(neg_info, neg_grad, n, starts)
        return mutual_information(P, W), P

    Wa = W.powers(a)

    def f(P):
        M = np.einsum("x,xij->ij", np.clip(P, 0, None), Wa)
        w = np.clip(np.linalg.eigvalsh(M), 0.0, None)
        return float(np.sum(w ** (1.0 / a)))

    def g(P):
        M = np.einsum("x,xij->ij", np.clip(P, 0, None), Wa)
        D = mat_power(0.5 * (M + dagger(M)), 1.0 / a - 1.0)
        return np.array([np.real(np.sum(A.T * D)) for A in Wa]) / a

    val, P = _simplex_opt(f, g, n, starts)
    return i_alpha_1(P, W, a), P


def _radius_zero(W: CQChannel):
    projs = W.powers(0.0)
    if all(Wx.is_full_rank() for Wx in W):
        return 0.0, np.full(W.size, 1.0 / W.size)
    import cvxpy as cp

    p = cp.Variable(W.size, nonneg=True)
    M = sum(p[x] * projs[x] for x in range(W.size))
    prob = cp.Problem(cp.Minimize(cp.lambda_max(M)), [cp.sum(p) == 1])
    prob.solve(solver=cp.CLARABEL)
    if prob.status not in ("optimal", "optimal_inaccurate"):
        raise NumericalFailure(f"R_inf program ended with status {prob.status}")
    P = np.clip(np.asarray(p.value, dtype=float), 0, None)
    P = P / P.sum()
    return i_alpha_1(P, W, 0.0), P


def capacity(W: CQChannel) -> float:
    """Classical capacity ``C_1`` (Holevo capacity)."""
    return renyi_radius(W, 1.0)[0]


def r_infinity(W: CQChannel) -> float:
    """Zero-error-type rate ``R_inf = C_0`` below which the exponent is infinite."""
    return renyi_radius(W, 0.0)[0]
