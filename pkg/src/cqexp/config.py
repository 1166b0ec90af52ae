"""Numerical tolerances and caps used across the package.

Every cutoff lives in :class:`Tolerances`.  Functions accept an optional
``tol`` argument and fall back to :data:`DEFAULT` otherwise.
"""

from __future__ import annotations

import os
from contextlib import contextmanager
from dataclasses import dataclass, fields, replace


@dataclass(frozen=True)
class Tolerances:
    """Immutable bundle of numerical tolerances.

    Attributes:
        herm: max entrywise deviation from Hermiticity, relative to the norm.
        tr: allowed deviation of a density operator's trace from one.
        orth: threshold on ``||A^0 B^0||`` for orthogonality, and on eigenvector
            orthonormality.
        recon: spectral reconstruction residual.
        psd: eigenvalues in ``(-psd, 0)`` are clamped, below that is an error.
        rank_rel: eigenvalues below ``rank_rel * max eigenvalue`` are treated as
            zero when taking powers, logarithms and supports.
        support_leak: mass of rho outside supp(sigma) above which the support
            condition ``rho << sigma`` is declared violated.
    """

    herm: float = 1e-10
    tr: float = 1e-10
    orth: float = 1e-10
    recon: float = 1e-10
    psd: float = 1e-10
    rank_rel: float = 1e-12
    support_leak: float = 1e-10

    def with_overrides(self, **kwargs) -> "Tolerances":
        return replace(self, **kwargs)


DEFAULT = Tolerances()

#: Largest Hilbert-space dimension the dense oracle will build.
DEFAULT_DIM_CAP = 4096


def dim_cap() -> int:
    """Dense-oracle dimension cap, overridable by ``CQEXP_DIM_CAP``."""
    raw = os.environ.get("CQEXP_DIM_CAP")
    if raw is None:
        return DEFAULT_DIM_CAP
    try:
        value = int(raw)
    except ValueError:
        return DEFAULT_DIM_CAP
    return max(value, 1)


@contextmanager
def use_tolerances(tol: Tolerances):
    """Temporarily make ``tol`` the default in every loaded ``cqexp`` module."""
    import sys

    mods = [m for name, m in list(sys.modules.items())
            if m is not None and (name == "cqexp" or name.startswith("cqexp.")) and hasattr(m, "DEFAULT")]
    saved = [(m, m.DEFAULT) for m in mods]
    try:
        for m in mods:
            m.DEFAULT = tol
        yield tol
    finally:
        for m, old in saved:
            m.DEFAULT = old


def parse_overrides(text: str) -> dict:
    """Parse ``"rank_rel=1e-12,herm=1e-9"`` into keyword overrides."""
    out = {}
    names = {f.name for f in fields(Tolerances)}
    for item in filter(None, (s.strip() for s in text.split(","))):
        key, _, val = item.partition("=")
        key = key.strip()
        if key not in names:
            raise ValueError(f"unknown tolerance {key!r}; expected one of {sorted(names)}")
        out[key] = float(val)
    return out
