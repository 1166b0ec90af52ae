"""Relative entropy, relative variance and the two Renyi families.

Natural logarithms throughout.  Values that may be infinite are returned as
:class:`ExtReal`, a ``float`` subclass carrying the reason for divergence.
"""

from __future__ import annotations

import math

import numpy as np

from .config import DEFAULT, Tolerances
from .errors import InvalidParameter, NumericalFailure
from .operators import (
    DensityOperator,
    as_density,
    dagger,
    mat_log_on_support,
    mat_power,
    support_projector,
)

__all__ = [
    "ExtReal",
    "relative_entropy",
    "relative_variance",
    "q_alpha_petz",
    "d_alpha_petz",
    "q_alpha_flat",
    "d_alpha_flat",
    "flat_delta_ladder",
    "golden_thompson_gap",
    "supports_contained",
    "intersection_basis",
]

INF = math.inf


class ExtReal(float):
    """Extended real number in ``(-inf, +inf]``.

    Behaves like a ``float`` in arithmetic.  ``reason`` records why a value is
    infinite (``"support"`` for a support violation, ``"boundary"`` for an
    alpha-endpoint convention, ``"divergent"`` for an unbounded supremum).
    """

    __slots__ = ("reason",)

    def __new__(cls, value, reason: str | None = None):
        value = float(value)
        if math.isnan(value):
            raise NumericalFailure("divergence evaluated to NaN")
        obj = super().__new__(cls, value)
        obj.reason = reason if math.isinf(value) else None
        return obj

    @property
    def finite(self) -> bool:
        return math.isfinite(self)

    def __repr__(self):
        if self.finite:
            return f"ExtReal({float(self)!r})"
        return f"ExtReal(inf, reason={self.reason!r})"


def _infinite(reason="support") -> ExtReal:
    return ExtReal(INF, reason)


def _check_alpha(alpha, lo=0.0, hi=1.0, open_lo=False, open_hi=False):
    a = float(alpha)
    bad = (a < lo or a > hi or (open_lo and a == lo) or (open_hi and a == hi)
           or not math.isfinite(a))
    if bad:
        raise InvalidParameter(f"alpha={alpha} outside the admissible range")
    return a


def supports_contained(rho, sigma, tol: Tolerances | None = None) -> bool:
    """True when ``supp(rho)`` lies inside ``supp(sigma)`` up to ``tol.support_leak``.

    The test measures the mass ``Tr[rho (1 - sigma^0)]`` that rho places
    outside the support of sigma.
    """
    tol = tol or DEFAULT
    rho, sigma = as_density(rho, tol), as_density(sigma, tol)
    if sigma.is_full_rank():
        return True
    Ps = support_projector(sigma, tol)
    leak = float(np.real(np.trace(rho.matrix)) - np.real(np.trace(rho.matrix @ Ps)))
    return leak <= tol.support_leak


def _trace_rho_log(rho: DensityOperator, sigma: DensityOperator):
    """Return ``Tr[rho log rho]`` and ``Tr[rho log sigma]`` (logs on supports)."""
    lam = rho.eigvals[rho.support_mask]
    tr_rho_log_rho = float(np.sum(lam * np.log(lam)))
    mask = sigma.support_mask
    Y = sigma.eigvecs[:, mask]
    diag = np.real(np.einsum("ij,jk,ki->i", dagger(Y), rho.matrix, Y))
    tr_rho_log_sigma = float(np.sum(diag * np.log(sigma.eigvals[mask])))
    return tr_rho_log_rho, tr_rho_log_sigma


def relative_entropy(rho, sigma, tol: Tolerances | None = None) -> ExtReal:
    """Quantum relative entropy ``D(rho||sigma) = Tr[rho(log rho - log sigma)]``.

    Evaluated in the eigenbasis of sigma restricted to its support.  Returns
    ``+inf`` when the support of rho is not contained in that of sigma.
    """
    tol = tol or DEFAULT
    rho, sigma = as_density(rho, tol), as_density(sigma, tol)
    if not supports_contained(rho, sigma, tol):
        return _infinite()
    a, b = _trace_rho_log(rho, sigma)
    return ExtReal(max(a - b, 0.0))


def relative_variance(rho, sigma, tol: Tolerances | None = None) -> ExtReal:
    """Relative variance ``Tr[rho (log rho - log sigma)^2] - D(rho||sigma)^2``."""
    tol = tol or DEFAULT
    rho, sigma = as_density(rho, tol), as_density(sigma, tol)
    if not supports_contained(rho, sigma, tol):
        return _infinite()
    L = mat_log_on_support(rho, tol) - mat_log_on_support(sigma, tol)
    RL = rho.matrix @ L
    first = float(np.real(np.trace(RL)))
    second = float(np.real(np.sum(RL.T * L)))  # Tr[rho L L]
    return ExtReal(max(second - first * first, 0.0))


def q_alpha_petz(rho, sigma, alpha: float, tol: Tolerances | None = None) -> float:
    """``Q_alpha = Tr[rho^alpha sigma^(1-alpha)]`` with support-restricted powers.

    ``alpha`` may be any value in ``[0, 1]``; at the endpoints the zero power is
    the support projector.
    """
    a = _check_alpha(alpha)
    tol = tol or DEFAULT
    rho, sigma = as_density(rho, tol), as_density(sigma, tol)
    A = mat_power(rho, a, tol)
    B = mat_power(sigma, 1.0 - a, tol)
    return float(np.real(np.sum(A.T * B)))


def _orthogonal(rho: DensityOperator, sigma: DensityOperator, tol: Tolerances) -> bool:
    P = support_projector(rho, tol)
    S = support_projector(sigma, tol)
    return bool(np.linalg.norm(P @ S, 2) <= tol.orth)


def d_alpha_petz(rho, sigma, alpha: float, tol: Tolerances | None = None) -> ExtReal:
    """Petz Renyi divergence ``log(Q_alpha)/(alpha-1)`` for ``alpha`` in ``[0, 1]``.

    ``alpha = 1`` gives the relative entropy and ``alpha = 0`` the limit
    ``-log Tr[rho^0 sigma]``.  Orthogonal supports give ``+inf``.
    """
    a = _check_alpha(alpha)
    tol = tol or DEFAULT
    rho, sigma = as_density(rho, tol), as_density(sigma, tol)
    if a == 1.0:
        return relative_entropy(rho, sigma, tol)
    if _orthogonal(rho, sigma, tol):
        return _infinite()
    Q = q_alpha_petz(rho, sigma, a, tol)
    if Q <= 0.0:
        return _infinite()
    return ExtReal(math.log(Q) / (a - 1.0))


def intersection_basis(rho, sigma, tol: Tolerances | None = None, gap: float = 1e-9):
    """Orthonormal basis (columns) of ``supp(rho) ∩ supp(sigma)``.

    Uses the eigenvectors of ``rho^0 + sigma^0`` with eigenvalue two, that is
    the unit vectors lying in both supports.
    """
    tol = tol or DEFAULT
    P = support_projector(rho, tol) + support_projector(sigma, tol)
    w, V = np.linalg.eigh(0.5 * (P + dagger(P)))
    return V[:, w > 2.0 - gap]


def q_alpha_flat(rho, sigma, alpha: float, tol: Tolerances | None = None) -> float:
    """Log-Euclidean quantity ``Q♭_alpha = Tr exp(alpha log rho + (1-alpha) log sigma)``.

    For rank-deficient inputs the value is the ``delta -> 0`` limit of the
    regularised expression, which equals
    ``Tr exp(Pi (alpha log rho + (1-alpha) log sigma) Pi)`` restricted to the
    range of ``Pi``, the projector onto ``supp(rho) ∩ supp(sigma)``.  This limit
    is evaluated directly; a ladder in delta converges only like
    ``1/|log delta|`` (see :func:`flat_delta_ladder`).
    """
    a = _check_alpha(alpha)
    tol = tol or DEFAULT
    rho, sigma = as_density(rho, tol), as_density(sigma, tol)
    B = intersection_basis(rho, sigma, tol)
    if B.shape[1] == 0:
        return 0.0
    K = a * mat_log_on_support(rho, tol) + (1.0 - a) * mat_log_on_support(sigma, tol)
    H = dagger(B) @ K @ B
    w = np.linalg.eigvalsh(0.5 * (H + dagger(H)))
    return float(np.sum(np.exp(w)))


def d_alpha_flat(rho, sigma, alpha: float, tol: Tolerances | None = None) -> ExtReal:
    """Log-Euclidean Renyi divergence for ``alpha`` in ``[0, 1]``.

    ``alpha = 1`` returns the relative entropy (the limit of the family) and
    ``alpha = 0`` the right limit ``alpha -> 0``.
    """
    a = _check_alpha(alpha)
    tol = tol or DEFAULT
    rho, sigma = as_density(rho, tol), as_density(sigma, tol)
    if a == 1.0:
        return relative_entropy(rho, sigma, tol)
    Q = q_alpha_flat(rho, sigma, a, tol)
    if Q <= 0.0:
        return _infinite()
    return ExtReal(math.log(Q) / (a - 1.0))


def flat_delta_ladder(rho, sigma, alpha: float, deltas=(1e-6, 1e-7, 1e-8),
                      threshold: float = 1e-6, raise_on_failure: bool = True,
                      tol: Tolerances | None = None) -> dict:
    """Evaluate ``Q♭`` on regularised inputs ``rho + delta I`` and extrapolate.

    Successive pairs of the ladder are extrapolated linearly in ``delta``.
    When two extrapolants differ by more than ``threshold`` a
    :class:`NumericalFailure` is raised (or the diagnostics returned with
    ``converged=False``).  The report also carries the closed-form limit used
    by :func:`q_alpha_flat`.
    """
    a = _check_alpha(alpha, open_lo=True, open_hi=True)
    tol = tol or DEFAULT
    rho, sigma = as_density(rho, tol), as_density(sigma, tol)
    d = rho.dim
    values = []
    for delta in deltas:
        Ld = a * _log_full(rho.matrix + delta * np.eye(d))
        Ld = Ld + (1.0 - a) * _log_full(sigma.matrix + delta * np.eye(d))
        values.append(float(np.sum(np.exp(np.linalg.eigvalsh(Ld)))))
    extrap = []
    for (d1, v1), (d2, v2) in zip(zip(deltas, values), zip(deltas[1:], values[1:])):
        extrap.append(v2 - d2 * (v1 - v2) / (d1 - d2))
    spread = max(extrap) - min(extrap) if len(extrap) > 1 else 0.0
    report = {
        "deltas": tuple(deltas),
        "values": values,
        "extrapolants": extrap,
        "spread": spread,
        "closed_form": q_alpha_flat(rho, sigma, a, tol),
        "converged": spread <= threshold,
    }
    if not report["converged"] and raise_on_failure:
        raise NumericalFailure(
            f"delta-ladder extrapolants spread {spread:.3e} > {threshold:.1e}", report)
    return report


def _log_full(M):
    w, V = np.linalg.eigh(0.5 * (M + dagger(M)))
    return (V * np.log(w)) @ dagger(V)


def golden_thompson_gap(rho, sigma, alpha: float, tol: Tolerances | None = None) -> float:
    """``Q_alpha - Q♭_alpha``; nonnegative up to rounding by Golden-Thompson."""
    _check_alpha(alpha, open_lo=True, open_hi=True)
    return q_alpha_petz(rho, sigma, alpha, tol) - q_alpha_flat(rho, sigma, alpha, tol)
