"""Lower bounds on the error probability of hypothesis tests and codes.

Every bound is returned as a :class:`BoundReport` holding its value, the split
``prefactor * exp(-n * exponent)``, all constants used, and validity flags.

Constants that the theory defines as extrema over all compositions (``V_max``,
``V_min``, ``K_max``, ``Psi``, ``Upsilon``) are evaluated over the composition
at hand plus a fixed simplex grid and labelled ``instance-grid``.  The
instance composition is always part of the set, so each reported bound is
sound for its own instance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import permutations, product

import numpy as np

from .channels import CQChannel, as_prior, capacity, mutual_information, r_infinity
from .errors import CapacityExceeded, ConditionNotMet, InvalidParameter, InvalidRate, InvalidSymmetry
from .ht_oracle import product_oracle
from .ns_classical import cgf_build, find_tilt, ns_distributions, phi_n
from .operators import DensityOperator, dagger, mat_power, tensor
from .sphere_packing import _F_fixed_sigma, _max_concave_1d, e_sp_max, saddle_solve

__all__ = [
    "BoundReport",
    "Code",
    "channel_summary",
    "simplex_grid",
    "meta_converse",
    "one_shot_hoeffding",
    "blahut_converse",
    "chebyshev_converse",
    "sharp_converse",
    "refined_sp_bound",
    "general_code_bound",
    "build_symmetric",
    "exact_symmetric_bound",
    "uniform_optimality_check",
    "symmetric_sigma_check",
    "symmetric_exponent_check",
    "decode_error",
    "best_code_error",
]

LABEL = "instance-grid"
_BRR = 15.0 * math.sqrt(2.0 * math.pi)


@dataclass
class BoundReport:
    """Value of a lower bound together with every constant that produced it."""

    name: str
    value: float
    exponent: float
    prefactor: float
    n: int = 1
    rate: float = float("nan")
    constants: dict = field(default_factory=dict)
    flags: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)
    log_prefactor: float | None = None

    def __post_init__(self):
        if self.log_prefactor is None:
            self.log_prefactor = math.log(self.prefactor) if self.prefactor > 0 else -math.inf

    @property
    def log_value(self) -> float:
        """``log(value)`` computed without underflow."""
        if not math.isfinite(self.exponent):
            return -math.inf
        return self.log_prefactor - self.n * self.exponent

    @property
    def valid(self) -> bool:
        return all(bool(v) for v in self.flags.values())

    def to_row(self) -> dict:
        consts = ";".join(f"{k}={_fmt(v)}" for k, v in self.constants.items())
        flags = ";".join(f"{k}={int(bool(v))}" for k, v in self.flags.items())
        return {"bound": self.name, "n": self.n, "R": self.rate, "value": self.value,
                "log_value": self.log_value, "log_prefactor": self.log_prefactor, "exponent": self.exponent,
                "prefactor": self.prefactor, "valid": int(self.valid), "flags": flags,
                "constants": consts}

    def text(self) -> str:
        lines = [f"{self.name}: n={self.n} R={_fmt(self.rate)}",
                 f"  value     = {_fmt(self.value)}",
                 f"  prefactor = {_fmt(self.prefactor)} (log {_fmt(self.log_prefactor)})",
                 f"  exponent  = {_fmt(self.exponent)}"]
        for k, v in self.constants.items():
            lines.append(f"  {k:<10}= {_fmt(v)}")
        for k, v in self.flags.items():
            lines.append(f"  [{'x' if v else ' '}] {k}")
        lines.extend(f"  note: {s}" for s in self.notes)
        return "\n".join(lines)


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return str(v)


def _report(name, log_pref, exponent, n, rate, constants, flags, notes=()):
    """Build a report from ``log(prefactor)`` so that tiny values keep their split."""
    pref = math.exp(log_pref) if log_pref > -745 else 0.0
    logv = log_pref - n * exponent if math.isfinite(exponent) else -math.inf
    val = math.exp(logv) if logv > -745 else 0.0
    return BoundReport(name, min(max(val, 0.0), 1.0), float(exponent), pref, n, rate,
                       dict(constants), dict(flags), list(notes), float(log_pref))


# ---------------------------------------------------------------------------
# codes


@dataclass
class Code:
    """Codebook given as an ``(M, n)`` integer array of codewords."""

    codewords: np.ndarray
    alphabet: int | None = None

    def __post_init__(self):
        cw = np.atleast_2d(np.asarray(self.codewords, dtype=int))
        if cw.size == 0:
            raise InvalidParameter("empty codebook")
        if np.any(cw < 0):
            raise InvalidParameter("codeword symbols must be nonnegative")
        self.codewords = cw
        if self.alphabet is None:
            self.alphabet = int(cw.max()) + 1

    @property
    def M(self) -> int:
        return self.codewords.shape[0]

    @property
    def n(self) -> int:
        return self.codewords.shape[1]

    @property
    def rate(self) -> float:
        return math.log(self.M) / self.n

    def compositions(self) -> np.ndarray:
        return np.stack([np.bincount(c, minlength=self.alphabet) / self.n for c in self.codewords])

    @property
    def is_constant_composition(self) -> bool:
        comp = self.compositions()
        return bool(np.allclose(comp, comp[0], atol=0))

    @property
    def composition(self) -> np.ndarray:
        return self.compositions()[0]


# ---------------------------------------------------------------------------
# channel-level quantities and instance constants

_SUMMARY = {}


def channel_summary(W: CQChannel) -> dict:
    """Capacity and ``R_inf`` of a channel, cached per channel object."""
    key = id(W)
    hit = _SUMMARY.get(key)
    if hit is not None and hit[0] is W:
        return hit[1]
    out = {"capacity": capacity(W), "r_inf": r_infinity(W)}
    _SUMMARY[key] = (W, out)
    return out


_ESP = {}


def _esp(W, R):
    key = (id(W), float(R))
    hit = _ESP.get(key)
    if hit is None or hit[0] is not W:
        hit = _ESP[key] = (W, e_sp_max(R, W))
    return hit[1]


def _check_rate(W, R):
    s = channel_summary(W)
    if not s["r_inf"] < R < s["capacity"]:
        raise InvalidRate(f"rate {R} outside (R_inf, C) = ({s['r_inf']:.6g}, {s['capacity']:.6g})")
    return s


def simplex_grid(size: int, points: int = 21) -> list:
    """Regular grid on the probability simplex with at most ``points`` points."""
    m = 1
    while math.comb(m + 1 + size - 1, size - 1) <= points:
        m += 1
    out = []
    for c in product(range(m + 1), repeat=size):
        if sum(c) == m:
            out.append(np.array(c, dtype=float) / m)
    return out


@dataclass
class _Instance:
    P: np.ndarray
    R: float
    saddle: object
    pairs: list
    weights: np.ndarray

    @property
    def E2(self):
        return float(self.saddle.value)

    @property
    def s_star(self):
        return float(self.saddle.s_star)

    def record(self):
        return cgf_build(self.pairs, self.weights)


_INSTANCES = {}


def _instance(W: CQChannel, P, R: float) -> _Instance:
    P = as_prior(P, W.size)
    key = (id(W), round(R, 14), tuple(np.round(P, 14)))
    hit = _INSTANCES.get(key)
    if hit is not None and hit[0] is W:
        return hit[1]
    sad = saddle_solve(R, P, W)
    sigma = DensityOperator(sad.sigma_star, normalize=True)
    supp = [x for x in range(W.size) if P[x] > 0]
    pairs = [ns_distributions(W[x], sigma) for x in supp]
    inst = _Instance(P, R, sad, pairs, P[supp] / P[supp].sum())
    _INSTANCES[key] = (W, inst)
    return inst


def _slope_at(inst: _Instance, r: float) -> float:
    """``-d/dr phi(r | sigma*_{R,P})``, the slope of the fixed-sigma exponent."""
    phi, a = phi_n(r, inst.pairs, inst.weights, return_alpha=True)
    if not math.isfinite(phi):
        return math.inf
    return (1.0 - a) / a if a > 0 else math.inf


def _finite_instances(W, R, P_inst, grid_points):
    out = []
    for P in [as_prior(P_inst, W.size)] + simplex_grid(W.size, grid_points):
        inst = _instance(W, P, R)
        if inst.saddle.regime != "infinite":
            out.append(inst)
    return out


def _phi_and_K(inst: _Instance, r: float):
    """Exponent ``phi(r|sigma*)`` and ``K/n`` at the tilt solving it."""
    phi, a = phi_n(r, inst.pairs, inst.weights, return_alpha=True)
    if not math.isfinite(phi):
        return math.inf, math.inf, 0.0
    t = 1.0 - a
    _, _, Vp, Vq = inst.record().tilted_divergences(t)
    return float(phi), Vp + Vq, t


# ---------------------------------------------------------------------------
# hypothesis-testing bounds


def one_shot_hoeffding(rho, sigma, r: float, nu: float) -> BoundReport:
    """Converse Hoeffding bound for a single pair.

    ``alpha_hat`` at ``mu = exp(-(r+nu))/4`` is at least
    ``(1/2)(1/2 - K/nu^2) exp(-nu - phi(r))`` with ``K = V(q_t||q) + V(q_t||p)``
    at the tilt with ``D(q_t||q) = r``.  For ``r >= D(rho||sigma)`` the tilt is
    ``t = 0``.
    """
    if r < 0 or not nu > 0:
        raise InvalidParameter("need r >= 0 and nu > 0")
    pr = ns_distributions(rho, sigma)
    mu = 0.25 * math.exp(-(r + nu))
    consts = {"r": r, "nu": nu, "mu": mu}
    if not np.any(pr.joint_support):
        consts.update(phi=math.inf, K=0.0)
        return _report("one_shot_hoeffding", -math.inf, 0.0, 1, r, consts,
                       {"non_vacuous": False}, ["disjoint supports: trivial bound"])
    phi = phi_n(r, [pr], [1.0])
    if not math.isfinite(phi):
        consts.update(phi=math.inf, K=0.0)
        return _report("one_shot_hoeffding", -math.inf, 0.0, 1, r, consts,
                       {"non_vacuous": False}, ["phi(r) is infinite: trivial bound"])
    try:
        t, _, _ = find_tilt(pr.p, pr.q, r)
    except Exception:  # r above D(p||q): the t = 0 tilt applies
        t = 0.0
    rec = cgf_build([pr], [1.0])
    _, _, Vp, Vq = rec.tilted_divergences(t)
    K = Vp + Vq
    coef = 0.5 * (0.5 - K / nu ** 2)
    consts.update(phi=phi, K=K, t=t)
    log_pref = math.log(coef) - nu if coef > 0 else -math.inf
    return _report("one_shot_hoeffding", log_pref, phi, 1, r, consts,
                   {"non_vacuous": coef > 0})


def blahut_converse(W: CQChannel, P, R: float, n: int, c: float = 1.0,
                    nus=None) -> BoundReport:
    """One-shot converse bound applied to ``W_{x^n}`` against ``sigma*^{⊗n}``.

    At ``mu = c exp(-nR)`` the bound is
    ``(1/2)(1/2 - K/nu^2) exp(-nu - n phi(r_nu | sigma*))`` with
    ``r_nu = R - (nu + log 4c)/n``; it holds for every ``n`` and is maximised
    over ``nu``.
    """
    _check_rate(W, R)
    inst = _instance(W, P, R)
    nus = np.geomspace(1e-2, 50.0, 200) if nus is None else np.asarray(nus, dtype=float)
    best = (-math.inf, math.nan, math.nan, math.nan)
    for nu in nus:
        r = R - (nu + math.log(4 * c)) / n
        if r < 0:
            continue
        phi, Kn, _ = _phi_and_K(inst, r)
        coef = 0.5 * (0.5 - n * Kn / nu ** 2) if math.isfinite(Kn) else -1.0
        if coef <= 0 or not math.isfinite(phi):
            continue
        lv = math.log(coef) - nu - n * phi
        if lv > best[0]:
            best = (lv, nu, r, phi)
    consts = {"E2": inst.E2, "c": c}
    notes = []
    if math.isfinite(best[0]):
        consts.update(nu=best[1], r=best[2], phi_r=best[3])
    else:
        notes.append("no nu gives a positive coefficient at this n")
    return _report("blahut_converse", best[0] + n * inst.E2, inst.E2, n, R, consts,
                   {"non_vacuous": math.isfinite(best[0])}, notes)


def _cheb_constants(W, R, P, R0, grid_points):
    insts = _finite_instances(W, R, P, grid_points)
    ts = np.linspace(0.0, 1.0, 41)
    Vmax, Ups = 0.0, 0.0
    for inst in insts:
        rec = inst.record()
        for t in ts:
            _, _, Vp, Vq = rec.tilted_divergences(t)
            Vmax = max(Vmax, Vp + Vq)
        Ups = max(Ups, _slope_at(inst, R0))
    return Vmax, Ups


def chebyshev_converse(W: CQChannel, P, R: float, n: int, c: float = 1.0,
                       R0: float | None = None, grid_points: int = 21) -> BoundReport:
    """Chebyshev-type converse Hoeffding bound for ``W_{x^n}`` against ``sigma*^{⊗n}``.

    Value ``kappa1 exp(-kappa2 sqrt(n) - n E2(R,P))`` with ``kappa1 = 1/8``,
    ``kappa2 sqrt(n) = sqrt(4 n V_max) + n gamma_n Upsilon`` and
    ``gamma_n = (nu + log 4c)/n``.  ``Upsilon`` is the slope magnitude of the
    fixed-sigma exponent at ``R0``.  The reported value is the smaller of this
    closed form and the direct one-shot value
    ``(1/2)(1/2 - K/nu^2) exp(-nu - n phi(R_n|sigma*))``, which holds for
    every ``n``.
    """
    s = _check_rate(W, R)
    if not c > 0:
        raise InvalidParameter("c must be positive")
    R0 = 0.5 * (s["r_inf"] + R) if R0 is None else R0
    inst = _instance(W, P, R)
    Vmax, Ups = _cheb_constants(W, R, P, R0, grid_points)
    nu = math.sqrt(4 * n * Vmax) if Vmax > 0 else 1e-300
    gam = (nu + math.log(4 * c)) / n
    Rn = R - gam
    E2 = inst.E2
    kappa2 = (nu + n * gam * Ups) / math.sqrt(n)
    log_closed = math.log(1 / 8) - kappa2 * math.sqrt(n)
    phi, Kn, t = _phi_and_K(inst, max(Rn, 0.0)) if Rn >= 0 else (math.inf, math.inf, 0.0)
    coef = 0.5 * (0.5 - n * Kn / nu ** 2) if math.isfinite(Kn) else -1.0
    log_direct = (math.log(coef) - nu - n * phi) if coef > 0 and math.isfinite(phi) else -math.inf
    consts = {"kappa1": 1 / 8, "kappa2": kappa2, "nu": nu, "gamma_n": gam, "R_n": Rn,
              "R0": R0, "V_max": Vmax, "Upsilon": Ups, "E2": E2, "phi_Rn": phi,
              "K_instance": n * Kn if math.isfinite(Kn) else math.inf,
              "log_direct": log_direct, "log_closed_form": log_closed - n * E2,
              "constants_over": LABEL}
    flags = {"R_n>=R0": Rn >= R0}
    notes = []
    log_val = log_closed - n * E2
    if Rn < R0:
        # outside the validity range only the direct value is guaranteed
        log_val = min(log_val, log_direct)
        notes.append("R_n < R0: value is min(closed form, direct value)")
    return _report("chebyshev_converse", log_val + n * E2, E2, n, R, consts, flags, notes)


def _sharp_constants(W, R, P, R0, nu, grid_points, t_extra=()):
    insts = [i for i in _finite_instances(W, R, P, grid_points) if i.E2 >= nu]
    if not insts:
        raise ConditionNotMet("no composition with E2(R,P) >= nu", "sharp_cond", 0.0)
    Psi = max(mutual_information(i.P, W) for i in insts)
    h = (nu / Psi) / (1 + nu / Psi)
    lo = min([h] + [t for t in t_extra if 0 < t < 1])
    ts = np.unique(np.concatenate([np.linspace(lo, 1.0, 101), [t for t in t_extra if lo <= t <= 1]]))
    Vmax, Vmin, Kmax, s0 = 0.0, math.inf, 0.0, 0.0
    for inst in insts:
        rec = inst.record()
        for t in ts:
            v = rec.d2lam0(t)
            Vmax = max(Vmax, v)
            Vmin = min(Vmin, v)
            Kmax = max(Kmax, _BRR * rec.third_abs(t) / v)
        s0 = max(s0, _slope_at(inst, R0))
    return {"Psi": Psi, "H_low": h, "V_max": Vmax, "V_min": Vmin, "K_max": Kmax, "s_R0": s0}


def sharp_converse(W: CQChannel, P, R: float, n: int, nu: float, c: float = 1.0,
                   R0: float | None = None, grid_points: int = 21) -> BoundReport:
    """Sharp converse Hoeffding bound from the Bahadur-Ranga Rao inequality.

    Value ``A n^{-(1+s*)/2} exp(-l_n - n E2(R,P))`` where
    ``A = exp(-K_max)/(4 sqrt(2 pi V_max))``, ``x = log c - log A``,
    ``gamma_n = log(n)/(2n) + x/n`` and ``l_n = x s* + n gamma_n^2 Upsilon/2``
    with ``Upsilon = (1+s(R0))^3 / V_min``.

    Raises:
        ConditionNotMet: if ``E2(R,P) < nu``.
    """
    s = _check_rate(W, R)
    if not nu > 0:
        raise InvalidParameter("nu must be positive")
    R0 = 0.5 * (s["r_inf"] + R) if R0 is None else R0
    inst = _instance(W, P, R)
    if inst.E2 < nu:
        raise ConditionNotMet(f"E2(R,P)={inst.E2:.6g} < nu={nu:.6g}", "E2>=nu", inst.E2)
    t_R = 1.0 - 1.0 / (1.0 + inst.s_star)
    s0_inst = _slope_at(inst, R0)
    t_R0 = s0_inst / (1 + s0_inst) if math.isfinite(s0_inst) else 1.0
    k = _sharp_constants(W, R, P, R0, nu, grid_points, (t_R, t_R0))
    A = math.exp(-k["K_max"]) / (4.0 * math.sqrt(2 * math.pi * k["V_max"]))
    x = math.log(c) - math.log(A)
    gam = math.log(n) / (2 * n) + x / n
    Rn = R - gam
    Ups = (1 + k["s_R0"]) ** 3 / k["V_min"]
    s_star = inst.s_star
    ell = x * s_star + n * gam ** 2 * Ups / 2
    log_pref = math.log(A) - 0.5 * (1 + s_star) * math.log(n) - ell
    threshold = (1 + (1 + k["K_max"]) ** 2) / math.sqrt(k["V_min"])
    phi_n_val = phi_n(Rn, inst.pairs, inst.weights) if Rn >= 0 else math.inf
    consts = {"A": A, "x": x, "gamma_n": gam, "R_n": Rn, "R0": R0, "s_star": s_star,
              "Upsilon": Ups, "ell_n": ell, "nu": nu, "E2": inst.E2,
              "sqrt_n_threshold": threshold, "N_threshold": math.ceil(threshold ** 2),
              "log_direct": math.log(A) - 0.5 * math.log(n) - n * phi_n_val, **k,
              "constants_over": LABEL}
    flags = {"R_n_in_[R0,R]": R0 <= Rn <= R, "sqrt_n_condition": math.sqrt(n) >= threshold}
    return _report("sharp_converse", log_pref, inst.E2, n, R, consts, flags)


def refined_sp_bound(W: CQChannel, R: float, n: int, P, gamma: float, nu: float | None = None,
                     grid_points: int = 21) -> BoundReport:
    """Refined strong sphere-packing bound for a constant-composition code.

    With ``nu = E_sp(R)/2`` by default, compositions with ``E2(R,P) >= nu`` use
    the sharp branch and the others the Chebyshev branch (both at ``c = 2``).
    The value is half the smaller of the branch value and the theorem form
    ``A exp(-l_n) n^{-(1+|E_sp'(R)|+gamma)/2} exp(-n E_sp(R))``; the factor
    one half is the expurgation step.
    """
    if gamma < 0:
        raise InvalidParameter("gamma must be nonnegative")
    _check_rate(W, R)
    top = _esp(W, R)
    Esp, slope = float(top["value"]), float(top["s_star"])
    nu = Esp / 2 if nu is None else nu
    inst = _instance(W, P, R)
    if inst.E2 >= nu:
        branch = sharp_converse(W, P, R, n, nu, c=2.0, grid_points=grid_points)
        ell = branch.constants["ell_n"]
    else:
        branch = chebyshev_converse(W, P, R, n, c=2.0, grid_points=grid_points)
        P_top = top["prior"]
        sharp_top = sharp_converse(W, P_top, R, n, nu, c=2.0, grid_points=grid_points)
        ell = sharp_top.constants["ell_n"]
    A = branch.constants.get("A")
    if A is None:
        A = sharp_top.constants["A"]
    log_theorem = math.log(A) - ell - 0.5 * (1 + slope + gamma) * math.log(n) - n * Esp
    log_val = math.log(0.5) + min(log_theorem, branch.log_value)
    consts = {"branch": branch.name, "E_sp": Esp, "abs_slope": slope, "gamma": gamma, "nu": nu,
              "A": A, "ell_n": ell, "E2_P": inst.E2, "log_branch": branch.log_value,
              "log_theorem_form": log_theorem, "constants_over": LABEL}
    flags = dict(branch.flags)
    return _report("refined_sp_bound", log_val + n * Esp, Esp, n, R, consts, flags)


def general_code_bound(W: CQChannel, R: float, n: int, grid_points: int = 21) -> BoundReport:
    """Sphere-packing bound ``n^{-t} exp(-n E_sp(R))`` for arbitrary codes.

    ``t = (1+s*)/2 + Upsilon |X|`` where ``Upsilon`` is the slope magnitude of
    ``E2(., P*)`` at ``R0``; the prefactor and ``l_n`` come from the sharp
    bound at the optimal composition, halved for expurgation.
    """
    s = _check_rate(W, R)
    top = _esp(W, R)
    Esp, P_top = float(top["value"]), top["prior"]
    R0 = 0.5 * (s["r_inf"] + R)
    X = W.size
    penalty = 0.0 if X == 1 else X * math.log(n) / n
    inst0 = saddle_solve(R0, P_top, W)
    Ups = float(inst0.s_star)
    s_star = float(top["s_star"])
    t = 0.5 * (1 + s_star) + (Ups * X if X > 1 else 0.0)
    sharp = sharp_converse(W, P_top, R, n, Esp / 2, c=2.0, grid_points=grid_points)
    A, ell = sharp.constants["A"], sharp.constants["ell_n"]
    log_pref = math.log(0.5) + math.log(A) - ell - t * math.log(n)
    consts = {"t": t, "s_star": s_star, "Upsilon": Ups, "alphabet": X, "rate_penalty": penalty,
              "A": A, "ell_n": ell, "E_sp": Esp, "R0": R0, "constants_over": LABEL}
    flags = {"R-penalty>=R0": R - penalty >= R0, **sharp.flags}
    return _report("general_code_bound", log_pref, Esp, n, R, consts, flags)


def meta_converse(W: CQChannel, code: Code, sigmas=None, method: str = "auto") -> BoundReport:
    """``eps_max >= max_sigma min_x alpha_hat_{1/M}(W_{x^n} || sigma^{⊗n})``.

    The maximum runs over the supplied states plus, when the code has constant
    composition ``P``, the saddle-point state at the code rate and the output
    mixture ``P W``.
    """
    M = code.M
    if M == 1:
        return _report("meta_converse", -math.inf, 0.0, code.n, 0.0, {"M": 1}, {},
                       ["single codeword: bound is zero"])
    cands = list(sigmas or [])
    P = code.compositions().mean(axis=0)
    cands.append(W.mixture(P))
    if code.is_constant_composition:
        try:
            _check_rate(W, code.rate)
            cands.append(saddle_solve(code.rate, P, W).sigma_star)
        except (InvalidRate, ValueError):
            pass
    best, best_i = -1.0, -1
    try:
        for i, sig in enumerate(cands):
            vals = [product_oracle([W[x] for x in cw], sig, 1.0 / M, method) for cw in code.codewords]
            v = min(vals)
            if v > best:
                best, best_i = v, i
    except CapacityExceeded:
        if not code.is_constant_composition:
            raise
        try:
            _check_rate(W, code.rate)
        except InvalidRate:
            raise CapacityExceeded("oracle dimension cap exceeded and no bound formula applies")
        reps = [chebyshev_converse(W, P, code.rate, code.n, c=1.0),
                blahut_converse(W, P, code.rate, code.n, c=1.0)]
        rep = max(reps, key=lambda r: r.log_value)
        rep.notes.append(f"dimension cap exceeded: meta-converse replaced by {rep.name}")
        rep.name = "meta_converse"
        return rep
    consts = {"M": M, "candidates": len(cands), "best_candidate": best_i}
    log_v = math.log(best) if best > 0 else -math.inf
    return _report("meta_converse", log_v, 0.0, code.n, code.rate, consts, {})


# ---------------------------------------------------------------------------
# symmetric channels


def build_symmetric(W1, V, m: int, name: str = "") -> CQChannel:
    """Channel ``W_x = V^{x} W1 V^{-x}``, ``x = 0..m-1``.

    Raises:
        InvalidSymmetry: if ``V`` is not unitary or ``V^m`` is not the identity.
    """
    V = np.asarray(V, dtype=complex)
    d = V.shape[0]
    if np.max(np.abs(dagger(V) @ V - np.eye(d))) > 1e-10:
        raise InvalidSymmetry("V is not unitary")
    if np.max(np.abs(np.linalg.matrix_power(V, m) - np.eye(d))) > 1e-10:
        raise InvalidSymmetry(f"V^{m} is not the identity")
    W1 = np.asarray(getattr(W1, "matrix", W1), dtype=complex)
    outs, Vk = [], np.eye(d, dtype=complex)
    for _ in range(m):
        outs.append(Vk @ W1 @ dagger(Vk))
        Vk = V @ Vk
    return CQChannel(outs, name=name or "symmetric")


def uniform_optimality_check(W: CQChannel, s: float, P=None) -> dict:
    """Optimality condition for maximising ``E_0(s, P)``.

    Returns the per-symbol values ``Tr[W_x^a M^s]`` and ``Tr[M^{1+s}]`` with
    ``a = 1/(1+s)`` and ``M = sum_x P(x) W_x^a``; the condition holds when every
    value is at least the trace, with equality on the support of ``P``.
    """
    P = np.full(W.size, 1.0 / W.size) if P is None else as_prior(P, W.size)
    a = 1.0 / (1.0 + s)
    M = sum(P[x] * mat_power(W[x], a) for x in range(W.size))
    Ms = mat_power(M, s)
    lhs = np.array([float(np.real(np.trace(mat_power(W[x], a) @ Ms))) for x in range(W.size)])
    rhs = float(np.real(np.trace(mat_power(M, 1 + s))))
    supp = P > 0
    eq_err = float(np.max(np.abs(lhs[supp] - rhs)))
    ineq = float(np.min(lhs - rhs))
    return {"s": s, "lhs": lhs, "rhs": rhs, "equality_error": eq_err, "min_slack": ineq,
            "passed": eq_err <= 1e-8 and ineq >= -1e-8}


def symmetric_sigma_check(W: CQChannel, R: float) -> dict:
    """Compare the saddle-point state at the uniform prior with the Sibson form."""
    U = np.full(W.size, 1.0 / W.size)
    sad = saddle_solve(R, U, W)
    a = sad.alpha_star
    M = mat_power(sum(U[x] * mat_power(W[x], a) for x in range(W.size)), 1.0 / a)
    closed = M / np.real(np.trace(M))
    err = float(np.max(np.abs(closed - sad.sigma_star)))
    return {"alpha_star": a, "error": err, "sigma_star": sad.sigma_star, "closed_form": closed,
            "passed": err <= 1e-7}


def symmetric_exponent_check(W: CQChannel, R: float, priors) -> dict:
    """``sup_alpha F_{R,P}(alpha, sigma*_R)`` against ``E_sp(R)`` for several priors.

    ``sigma*_R`` is the saddle-point state of the uniform prior.  On symmetric
    channels every prior attains the sphere-packing exponent against it.  The
    Augustin-form exponent ``E2(R,P)`` is reported alongside; it can be smaller
    than ``E_sp(R)`` away from the uniform prior.
    """
    U = np.full(W.size, 1.0 / W.size)
    sad = saddle_solve(R, U, W)
    Esp = float(_esp(W, R)["value"])
    lo = sad.diagnostics.get("alpha_lo", 1e-3)
    rows = []
    for P in priors:
        P = as_prior(P, W.size)
        F = _F_fixed_sigma(W, P, sad.sigma_star, R)
        _, v = _max_concave_1d(F, lo * 0.5, 1.0 - 1e-12, grid=24, xatol=1e-12)
        rows.append({"prior": P, "fixed_sigma_exponent": v, "error": abs(v - Esp)})
    worst = max(r["error"] for r in rows) if rows else 0.0
    return {"E_sp": Esp, "rows": rows, "max_error": worst, "passed": worst <= 1e-6}


def exact_symmetric_bound(W: CQChannel, R: float, n: int, grid_points: int = 21) -> BoundReport:
    """Sphere-packing bound with prefactor ``n^{-(1+|E_sp'(R)|)/2}`` for symmetric channels.

    Evaluated as :func:`refined_sp_bound` at the uniform prior with no slack.
    """
    # at s = 1 every binary-input channel passes, so several orders are checked
    if not all(uniform_optimality_check(W, s)["passed"] for s in (0.5, 1.0, 2.0)):
        raise InvalidSymmetry("uniform prior fails the optimality condition")
    U = np.full(W.size, 1.0 / W.size)
    rep = refined_sp_bound(W, R, n, U, 0.0, grid_points=grid_points)
    rep.name = "exact_symmetric_bound"
    return rep


# ---------------------------------------------------------------------------
# code-level oracle


def _inv_sqrt_on_support(S):
    w, V = np.linalg.eigh(0.5 * (S + dagger(S)))
    keep = w > 1e-12 * w.max()
    return (V[:, keep] / np.sqrt(w[keep])) @ dagger(V[:, keep]), V[:, keep] @ dagger(V[:, keep])


def decode_error(states, method: str = "pgm") -> dict:
    """Average and maximal error of an equiprobable ensemble of states.

    ``method="pgm"`` uses the pretty-good (square-root) measurement;
    ``method="helstrom"`` gives the optimum for two states.
    """
    M = len(states)
    if method == "helstrom":
        if M != 2:
            raise InvalidParameter("Helstrom measurement needs exactly two states")
        states = [np.asarray(getattr(s, "matrix", s)) for s in states]
        D = states[0] - states[1]
        w, V = np.linalg.eigh(0.5 * (D + dagger(D)))
        Pp = V[:, w > 0] @ dagger(V[:, w > 0])
        s0 = float(np.real(np.trace(states[0] @ Pp)))
        s1 = 1.0 - float(np.real(np.trace(states[1] @ Pp)))
        errs = np.array([1 - s0, 1 - s1])
    elif method == "pgm":
        states = [np.asarray(getattr(s, "matrix", s)) for s in states]
        S = sum(states)
        Sm, supp = _inv_sqrt_on_support(S)
        d = S.shape[0]
        errs = []
        for i, rho in enumerate(states):
            Pi = Sm @ rho @ Sm
            if i == 0:
                Pi = Pi + np.eye(d) - supp
            errs.append(1.0 - float(np.real(np.trace(rho @ Pi))))
        errs = np.array(errs)
    else:
        raise InvalidParameter(f"unknown method {method!r}")
    return {"average": float(errs.mean()), "maximum": float(errs.max()), "per_message": errs}


def _perms(M):
    return list(permutations(range(M)))


def _column_types(n, M, counts):
    """Codebooks of ``M`` distinct codewords with symbol counts ``counts``, up to
    simultaneous permutation of positions and relabelling of messages.

    Each class is a sorted tuple of ``(pattern, multiplicity)`` pairs, where
    ``pattern`` is a column ``(x_1, ..., x_M)``.
    """
    X = len(counts)
    patterns = list(product(range(X), repeat=M))
    perms = _perms(M)
    out = set()

    def rec(i, remaining, chosen):
        if i == len(patterns):
            if any(v for row in remaining for v in row):
                return
            rows = [tuple(pt[m] for pt, c in chosen for _ in range(c)) for m in range(M)]
            if len(set(rows)) < M:
                return
            out.add(min(tuple(sorted((tuple(pt[m] for m in perm), c) for pt, c in chosen))
                        for perm in perms))
            return
        pt = patterns[i]
        cap = min(remaining[m][pt[m]] for m in range(M))
        for c in range(cap, -1, -1):
            for m in range(M):
                remaining[m][pt[m]] -= c
            rec(i + 1, remaining, chosen + [(pt, c)] if c else chosen)
            for m in range(M):
                remaining[m][pt[m]] += c

    rec(0, [list(counts) for _ in range(M)], [])
    return sorted(out)


def best_code_error(W: CQChannel, n: int, M: int, counts=None, budget: int = 5000,
                    seed: int = 0, method: str = "auto") -> dict:
    """Smallest average error over constant-composition codebooks.

    Codebooks are enumerated up to simultaneous permutation of positions,
    which leaves the error unchanged for a memoryless channel.  When there are
    more than ``budget`` classes a seeded random subset is evaluated and the
    result is flagged as not exhaustive.  For ``M = 2`` the decoder is the
    Helstrom measurement (exact); otherwise the pretty-good measurement (an
    achievable error).
    """
    if counts is None:
        counts = [n // W.size + (1 if i < n % W.size else 0) for i in range(W.size)]
    counts = [int(c) for c in counts]
    if sum(counts) != n or len(counts) != W.size:
        raise InvalidParameter("counts must have one entry per input and sum to n")
    if W.dim ** n > 4096:
        raise CapacityExceeded(f"output dimension {W.dim ** n} exceeds 4096")
    if math.factorial(n) // math.prod(math.factorial(c) for c in counts) < M:
        raise InvalidParameter("fewer sequences than messages")
    method = ("helstrom" if M == 2 else "pgm") if method == "auto" else method
    classes = _column_types(n, M, counts)
    total = len(classes)
    exhaustive = total <= budget
    if not exhaustive:
        idx = np.random.default_rng(seed).choice(total, budget, replace=False)
        classes = [classes[i] for i in sorted(idx)]
    best, best_book = math.inf, None
    for cols in classes:
        words = [tuple(pt[m] for pt, c in cols for _ in range(c)) for m in range(M)]
        states = [tensor(*[W[x].matrix for x in w]) for w in words]
        err = decode_error(states, method)["average"]
        if err < best:
            best, best_book = err, words
    return {"error": best, "code": Code(np.array(best_book), W.size), "exhaustive": exhaustive,
            "classes": total, "method": method}
