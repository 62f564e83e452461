"""Spectral-gap bounds derived from isoperimetric profiles, and checks of
the inequalities that relate them to exact spectral data.

Every check returns plain booleans (or ``None`` when a premise is not
available) so that callers decide how loudly to fail.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import InexactProfile, InputError, PremiseUnverifiable
from .isoperimetry import (
    IsoProfile,
    StateSet,
    _exhaustive_chunks,
    _scale,
    _scan,
)
from .kernel import ConvergenceRateReport, _prefactor, _tail_rate, classify
from .spectral import GelfandSequence, SpectralReport

INEQ_TOL = 1e-10
DIRECT_EXHAUSTIVE = 16
RATE_TOL = 1e-6


def _require_exact(profile: IsoProfile, what: str) -> None:
    if not profile.exact:
        raise InexactProfile(f"{what} needs an exhaustive profile (got {profile.strategy!r})")


# --------------------------------------------------------------------------
# finite-horizon gap certificate

def certificate_horizon(eps: float, kappa: float = 1.0) -> int:
    """Number of powers that must satisfy ``k_n > eps``:
    ``floor(2 pi / arccos(1 - kappa eps^2 / 16)) + 1``."""
    # acos(1 - x) = 2 asin(sqrt(x / 2)) keeps precision for small x
    theta = 2.0 * math.asin(min(1.0, math.sqrt(kappa * eps * eps / 32.0)))
    return int(math.floor(2.0 * math.pi / theta)) + 1


def certificate_radius(eps: float, kappa: float = 1.0) -> float:
    """Radius of the disc containing the non-unit spectrum when ``eps`` is
    admissible."""
    x = kappa * eps * eps / 16.0
    return math.exp(math.log1p(-x) / certificate_horizon(eps, kappa))


@dataclass(frozen=True)
class GapCertificate:
    """Outcome of the finite-horizon spectral-gap certificate.

    ``m_nonempty`` means some tested ``eps`` is admissible, which proves a
    gap with the non-unit spectrum inside the disc of radius ``r0``.
    ``insufficient_horizon`` is set instead of declaring the admissible set
    empty when some ``eps`` could not be refuted within the horizon.
    """

    kappa: float
    feasible_epsilons: tuple
    r0: float | None
    m_nonempty: bool
    insufficient_horizon: bool
    best_epsilon: float | None
    horizon: int
    exact: bool = True

    def to_dict(self) -> dict:
        d = asdict(self)
        d["feasible_epsilons"] = [[e, h] for e, h in self.feasible_epsilons]
        return d


def gap_certificate(profile: IsoProfile, kappa: float = 1.0,
                    require_exact: bool = True) -> GapCertificate:
    """Search admissible ``eps`` on the grid of observed ``k_inf`` values.

    Candidates are every observed ``k_inf[n] - 1e-9`` plus midpoints of
    consecutive observed values, restricted to ``0 < eps < 4 sqrt(2/kappa)``.
    A candidate is refuted if ``k_inf[n] <= eps`` for some
    ``n <= min(H(eps), horizon)``; feasible if not refuted and
    ``H(eps) <= horizon``; undetermined otherwise. Because ``H`` decreases in
    ``eps``, the shifted observed values dominate any admissible ``eps``, so
    the grid decides non-emptiness up to the ``1e-9`` shift.

    A heuristic profile only gives upper bounds on ``k_inf``, so its
    certificate is not a proof; it is computed only with
    ``require_exact=False`` and carries ``exact=False``.
    """
    if require_exact:
        _require_exact(profile, "the gap certificate")
    if kappa < 1:
        raise InputError("kappa must be >= 1")
    k = np.asarray(profile.k_inf)
    N = profile.horizon
    vals = np.unique(k)
    cand = np.concatenate([vals - 1e-9, 0.5 * (vals[1:] + vals[:-1])])
    upper = 4.0 * math.sqrt(2.0 / kappa)
    cand = np.unique(cand[(cand > 0) & (cand < upper)])
    feasible, undetermined = [], False
    for eps in cand:
        H = certificate_horizon(float(eps), kappa)
        upto = min(H, N)
        if np.any(k[:upto] <= eps):
            continue
        if H <= N:
            feasible.append((float(eps), H))
        else:
            undetermined = True
    r0 = best = None
    if feasible:
        radii = [certificate_radius(e, kappa) for e, _ in feasible]
        j = int(np.argmin(radii))
        r0, best = float(radii[j]), feasible[j][0]
    return GapCertificate(
        kappa=kappa,
        feasible_epsilons=tuple(feasible),
        r0=r0,
        m_nonempty=bool(feasible),
        insufficient_horizon=(not feasible) and undetermined,
        best_epsilon=best,
        horizon=N,
        exact=profile.exact,
    )


def cubic_gap_estimate(k_minus: float, kappa: float = 1.0) -> float:
    """Leading term ``sqrt(2 kappa^3) / (128 pi) * k_minus^3`` of the small-k
    lower bound on the gap. Asymptotic only: the ``O(k^5)`` remainder is not
    quantified, so this is an estimate rather than a certified bound."""
    if not 0 <= k_minus <= 2:
        raise InputError(f"k_minus must lie in [0, 2], got {k_minus}")
    return math.sqrt(2.0 * kappa**3) / (128.0 * math.pi) * k_minus**3


# --------------------------------------------------------------------------
# inequality checks

def norm_lower_bound_check(profile: IsoProfile, gelfand: GelfandSequence,
                           tol: float = INEQ_TOL):
    """Compare ``sup_A 1/2((1-k_n(A))^2 + 2 pi(A) pi(A^c)(1-k_adj(A,n)))``
    with ``||P^n||^2``. Returns ``(bounds, ok)`` arrays over ``n``."""
    _require_exact(profile, "the operator-norm lower bound")
    N = min(profile.horizon, len(gelfand.norms))
    lb = profile.norm_lower_bound[:N]
    return lb, lb <= gelfand.norms[:N] ** 2 + tol


def lawler_sokal_check(report: SpectralReport, k1: float, kappa: float = 1.0,
                       tol: float = INEQ_TOL) -> bool:
    """``Re(1 - lambda) >= kappa k_1^2 / 8`` on the non-unit spectrum."""
    lam = np.asarray(report.restricted)
    if lam.size == 0:
        return True
    return bool(np.min(1.0 - lam.real) >= kappa * k1 * k1 / 8.0 - tol)


def lawler_sokal_margin(report: SpectralReport, k1: float, kappa: float = 1.0) -> float:
    lam = np.asarray(report.restricted)
    return float(np.min(1.0 - lam.real) - kappa * k1 * k1 / 8.0) if lam.size else math.inf


def flow_vs_adjoint_check(profile: IsoProfile, tol: float = INEQ_TOL) -> np.ndarray:
    """``1 - k_n <= sqrt(2) sqrt(1 - k_adj_n)`` for each ``n``."""
    _require_exact(profile, "the flow/adjoint-flow comparison")
    rhs = math.sqrt(2.0) * np.exp(0.5 * profile.log_adj_defect)
    return (1.0 - profile.k_inf) <= rhs + tol


def adjoint_monotone_check(profile: IsoProfile, tol: float = 1e-12) -> np.ndarray:
    """``k_adj_inf`` nondecreasing in ``n`` and at most 1."""
    k = profile.k_adj_inf
    ok = k <= 1.0 + tol
    ok[1:] &= k[1:] >= k[:-1] - tol
    return ok


@dataclass(frozen=True)
class PropagationResult:
    premise_held: bool
    conclusion_held: bool
    epsilon: float
    n0: int
    window: int

    @property
    def ok(self) -> bool:
        return (not self.premise_held) or self.conclusion_held


def propagation_check(profile: IsoProfile, epsilon: float, n0: int,
                      tol: float = 1e-12) -> PropagationResult:
    """If ``k_n >= epsilon`` for all ``n >= n0`` then ``k_i >= epsilon / n0``
    for every ``i``.

    The conclusion for ``i < n0`` rests on sub-additivity
    ``k_{a+b}(A) <= k_a(A) + k_b(A)`` applied up to index ``2 n0 - 1``, so
    the profile must reach that far; the premise is checked on
    ``n0..horizon``.
    """
    if n0 < 1:
        raise InputError("n0 must be >= 1")
    need = max(n0, 2 * n0 - 1)
    N = profile.horizon
    if N < need:
        raise PremiseUnverifiable(f"profile horizon {N} < {need} needed for n0={n0}")
    k = profile.k_inf
    premise = bool(np.all(k[n0 - 1:] >= epsilon - tol))
    conclusion = bool(np.all(k >= epsilon / n0 - tol))
    return PropagationResult(premise, conclusion, float(epsilon), n0, N)


# --------------------------------------------------------------------------
# mixing coefficient

@dataclass(frozen=True, eq=False)
class MixingProfile:
    """``phi(n) = sup_A |P(X_0 in A, X_n in A^c) - pi(A) pi(A^c)| / pi(A)``.

    ``phi`` comes from the identity ``phi(n) = sup_A pi(A^c) |1 - k_n(A)|``;
    ``phi_direct`` from joint probabilities with an explicit ``P^n``, over
    all cuts when the search is exhaustive and ``m <= 16``, otherwise on the
    selected cut.
    ``uniformity`` is ``sup_{pi(A) <= 1/2} (1/pi(A^c)) sum_{i in A} pi_i
    |p^n(i, A)/pi(A) - 1|``, a diagnostic for uniform flow.
    """

    phi: np.ndarray
    phi_direct: np.ndarray
    uniformity: np.ndarray
    argmax_set: tuple
    exact: bool
    rate: float
    prefactor: float
    geometric: bool


def _direct_phi(Pn: np.ndarray, w: np.ndarray, X: np.ndarray) -> np.ndarray:
    Xf = X.astype(float)
    mass = Xf @ w
    cmass = (1.0 - Xf) @ w
    joint = np.einsum("i,ci,ij,cj->c", w, Xf, Pn, 1.0 - Xf)
    return np.abs(joint - mass * cmass) / np.minimum(mass, cmass)


def mixing_profile(kernel, pi, horizon: int, strategy: str = "exhaustive",
                   candidates=None) -> MixingProfile:
    w = np.asarray(pi, dtype=float)
    P = np.asarray(kernel, dtype=float)

    def phi(b):
        return np.maximum(b.mass, b.cmass) * np.abs(b.dk)

    def uniform(b):
        denom = b.mass * b.cmass
        A = (w[:, None] * np.abs(b.G) * b.X.T).sum(0) / denom
        Ac = (w[:, None] * np.abs(b.G) * ~b.X.T).sum(0) / denom
        A = np.where(b.mass <= 0.5, A, -np.inf)
        Ac = np.where(b.cmass <= 0.5, Ac, -np.inf)
        return np.maximum(A, Ac)

    rows = _scan(P, w, horizon, strategy, {"phi": phi, "uni": uniform},
                 candidates=candidates)
    N = horizon
    out = np.empty(N)
    log_phi = np.empty(N)
    uni = np.empty(N)
    direct = np.empty(N)
    sets = []
    Pn = np.eye(len(w))
    for i, (s, picks) in enumerate(rows):
        Pn = Pn @ P
        p, u = picks["phi"], picks["uni"]
        out[i] = float(_scale(s, p.score))
        log_phi[i] = -math.inf if (p.score <= 0 or s == -math.inf) else s + math.log(p.score)
        uni[i] = float(_scale(s, u.score)) if math.isfinite(u.score) else 0.0
        A = StateSet.from_membership(p.member, w)
        if A.complement_mass > A.mass:
            sets.append(A)
        else:
            sets.append(A.complement())
        if strategy == "exhaustive" and len(w) <= DIRECT_EXHAUSTIVE:
            direct[i] = max(float(_direct_phi(Pn, w, X).max())
                            for X in _exhaustive_chunks(len(w)))
        else:
            direct[i] = float(_direct_phi(Pn, w, p.member[None, :])[0])
    rate, _, _ = _tail_rate(log_phi) if N >= 2 else (math.nan, None, None)
    return MixingProfile(
        phi=out, phi_direct=direct, uniformity=uni, argmax_set=tuple(sets),
        exact=strategy == "exhaustive", rate=rate,
        prefactor=_prefactor(log_phi, rate) if N >= 2 else math.nan,
        geometric=bool(N >= 2 and rate < 1 - 1e-9),
    )


# --------------------------------------------------------------------------
# rate comparisons

@dataclass(frozen=True)
class RateBoundChecks:
    """Spectral radius against TV convergence rates.

    ``rho_le_delta`` is only asserted for normal chains; all rate flags are
    ``None`` when the rate fit did not converge (oscillating tail ratios).
    """

    rho: float
    delta: float
    delta_adjoint: float
    normal: bool
    rate_converged: bool
    rho_le_delta: bool | None
    rho_le_sqrt_delta: bool | None
    rho_le_sqrt_delta_delta_adjoint: bool | None
    sandwich_ok: bool
    tol: float


def tv_sandwich_check(kernel, pi, sup_tv, tol: float = 1e-12) -> bool:
    """``tv[n+1] <= ||P^n - 1 pi||_inf <= tv[n]`` with the middle term from
    explicit powers (``tv`` as returned by ``tv_decay``, index ``n - 1``)."""
    P = np.asarray(kernel, dtype=float)
    w = np.asarray(pi, dtype=float)
    Pn = np.eye(len(w))
    ok = True
    for n in range(1, len(sup_tv)):
        Pn = Pn @ P
        mid = float(np.abs(Pn - w[None, :]).sum(axis=1).max())
        ok &= sup_tv[n] <= mid + tol and mid <= sup_tv[n - 1] + tol
    return bool(ok)


def ergodicity_bound_checks(kernel, pi, rates: ConvergenceRateReport,
                            report: SpectralReport, tol: float = RATE_TOL) -> RateBoundChecks:
    """Check ``rho <= delta`` (normal chains), ``rho <= sqrt(delta)``,
    ``rho <= sqrt(delta delta*)`` and the sup-norm sandwich
    ``tv[n+1] <= ||P^n - 1 pi||_inf <= tv[n]``, where the middle term is the
    operator norm on bounded functions, computed from explicit powers."""
    if rates.delta is None:
        raise InputError("rates must come from orgc_estimate")
    P = np.asarray(kernel, dtype=float)
    w = np.asarray(pi, dtype=float)
    rho = report.rho
    d, ds = rates.delta, rates.delta_adjoint
    normal = report.chain_class.normal
    conv = bool(rates.converged)
    sandwich = tv_sandwich_check(P, w, rates.per_step_sup_tv)
    if not conv:
        a = b = c = None
    else:
        a = bool(rho <= d + tol) if normal else None
        b = bool(rho <= math.sqrt(d) + tol)
        c = bool(rho <= math.sqrt(d * ds) + tol)
    return RateBoundChecks(rho, d, ds, normal, conv, a, b, c, bool(sandwich), tol)


# --------------------------------------------------------------------------
# assembled report

@dataclass(frozen=True)
class CheckRow:
    name: str
    check: str
    lhs: float
    rhs: float
    ok: bool | None

    @property
    def margin(self) -> float:
        return self.rhs - self.lhs


@dataclass(frozen=True, eq=False)
class BoundReport:
    norm_lb: np.ndarray
    norm_lb_ok: np.ndarray | None
    cubic_gap_lb: float
    flow_vs_adjoint_ok: np.ndarray | None
    monotone_ok: np.ndarray
    propagation: PropagationResult | None
    lawler_sokal_ok: bool | None
    certificate: GapCertificate | None
    rates: RateBoundChecks | None
    mixing: MixingProfile | None
    rows: tuple = field(default=())

    @property
    def all_ok(self) -> bool:
        return all(r.ok is not False for r in self.rows)

    def to_dict(self) -> dict:
        def arr(x):
            return None if x is None else [bool(v) if isinstance(v, (bool, np.bool_))
                                           else float(f"{v:.12g}") for v in x]
        return {
            "norm_lb": arr(self.norm_lb),
            "norm_lb_ok": arr(self.norm_lb_ok),
            "cubic_gap_lb": self.cubic_gap_lb,
            "flow_vs_adjoint_ok": arr(self.flow_vs_adjoint_ok),
            "monotone_ok": arr(self.monotone_ok),
            "propagation": None if self.propagation is None else {
                **asdict(self.propagation), "ok": self.propagation.ok},
            "lawler_sokal_ok": self.lawler_sokal_ok,
            "certificate": None if self.certificate is None else self.certificate.to_dict(),
            "rates": None if self.rates is None else asdict(self.rates),
            "mixing": None if self.mixing is None else {
                "phi": arr(self.mixing.phi),
                "phi_direct": arr(self.mixing.phi_direct),
                "uniformity": arr(self.mixing.uniformity),
                "rate": self.mixing.rate,
                "prefactor": self.mixing.prefactor,
                "geometric": self.mixing.geometric,
            },
            "rows": [
                {"name": r.name, "check": r.check, "lhs": r.lhs, "rhs": r.rhs,
                 "margin": r.margin, "ok": r.ok} for r in self.rows
            ],
            "all_ok": self.all_ok,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, default=float)


def bound_report(kernel, pi, profile: IsoProfile, spectral: SpectralReport,
                 gelfand: GelfandSequence, rates: ConvergenceRateReport | None = None,
                 kappa: float = 1.0, tol: float = INEQ_TOL,
                 with_mixing: bool = True) -> BoundReport:
    """Run every applicable check; inexact profiles skip the ones that need
    a true infimum/supremum over cuts."""
    rows = []
    exact = profile.exact
    N = profile.horizon
    k_minus = float(np.clip(profile.k_inf.min(), 0.0, 2.0))
    cubic = cubic_gap_estimate(k_minus, kappa)
    rows.append(CheckRow("cubic gap estimate (asymptotic)", "gap >= c k_-^3",
                         cubic, spectral.gap, None))
    mono = adjoint_monotone_check(profile)
    rows.append(CheckRow("adjoint flow monotone, <= 1", "k_adj_inf[n+1] >= k_adj_inf[n]",
                         0.0, 0.0, bool(mono.all())))
    nlb = nlb_ok = fva = ls_ok = cert = prop = None
    if exact:
        nlb, nlb_ok = norm_lower_bound_check(profile, gelfand, tol)
        j = int(np.argmax(nlb - gelfand.norms[:N] ** 2))
        rows.append(CheckRow("operator-norm lower bound", "sup_A bound <= ||P^n||^2",
                             float(nlb[j]), float(gelfand.norms[j] ** 2), bool(nlb_ok.all())))
        fva = flow_vs_adjoint_check(profile, tol)
        rhs = math.sqrt(2.0) * np.exp(0.5 * profile.log_adj_defect)
        j = int(np.argmax((1 - profile.k_inf) - rhs))
        rows.append(CheckRow("flow vs adjoint flow", "1-k_n <= sqrt(2(1-k_adj_n))",
                             float(1 - profile.k_inf[j]), float(rhs[j]), bool(fva.all())))
        ls_ok = lawler_sokal_check(spectral, float(profile.k_inf[0]), kappa, tol)
        lam_min = float(np.min(1.0 - np.asarray(spectral.restricted).real))
        rows.append(CheckRow("Lawler-Sokal", "Re(1-lambda) >= kappa k_1^2/8",
                             kappa * profile.k_inf[0] ** 2 / 8.0, lam_min, ls_ok))
        cert = gap_certificate(profile, kappa)
        if cert.m_nonempty:
            rows.append(CheckRow("gap certificate radius", "rho <= r0",
                                 spectral.rho, cert.r0, bool(cert.r0 >= spectral.rho - tol)))
        else:
            rows.append(CheckRow(
                "gap certificate",
                "insufficient horizon" if cert.insufficient_horizon else "no admissible eps",
                math.nan, math.nan, None))
        n0 = max(1, (N + 1) // 2)
        eps = float(profile.k_inf[n0 - 1:].min())
        if eps > 0:
            prop = propagation_check(profile, eps, n0)
            rows.append(CheckRow("k_n propagation", f"k_i >= eps/{n0}",
                                 eps / n0, float(profile.k_inf.min()), prop.ok))
    rate_checks = None
    if rates is not None and rates.delta is not None:
        rate_checks = ergodicity_bound_checks(kernel, pi, rates, spectral)
        rc = rate_checks
        rows.append(CheckRow("rho <= delta (normal)", "rho <= delta + 1e-6",
                             rc.rho, rc.delta, rc.rho_le_delta))
        rows.append(CheckRow("rho <= sqrt(delta)", "rho <= sqrt(delta) + 1e-6",
                             rc.rho, math.sqrt(rc.delta), rc.rho_le_sqrt_delta))
        rows.append(CheckRow("rho <= sqrt(delta delta*)", "rho <= sqrt(delta delta*) + 1e-6",
                             rc.rho, math.sqrt(rc.delta * rc.delta_adjoint),
                             rc.rho_le_sqrt_delta_delta_adjoint))
        rows.append(CheckRow("TV sandwich", "tv[n+1] <= ||P^n - P_1|| <= tv[n]",
                             0.0, 0.0, rc.sandwich_ok))
    mix = None
    if with_mixing:
        strat = profile.strategy if profile.strategy != "candidates" else "sweep"
        if strat == "exhaustive" or len(np.asarray(pi)) <= 4096:
            mix = mixing_profile(kernel, pi, N, strat)
            bound = np.maximum(1 - profile.k_inf, profile.k_sup - 1)
            if mix.exact:
                gap_id = float(np.max(np.abs(mix.phi - mix.phi_direct)))
                # reported as a power-of-ten bound so roundoff does not show
                shown = 10.0 ** math.ceil(math.log10(gap_id)) if gap_id > 0 else 0.0
                rows.append(CheckRow("mixing identity", "|phi - phi_direct| <= 1e-12",
                                     shown, 1e-12, gap_id <= 1e-12))
                rows.append(CheckRow("mixing vs extremal flows",
                                     "phi <= max(1-k_inf, k_sup-1)",
                                     float(np.max(mix.phi - bound)), 1e-12,
                                     bool(np.all(mix.phi <= bound + 1e-12))))
    return BoundReport(
        norm_lb=nlb if nlb is not None else profile.norm_lower_bound,
        norm_lb_ok=nlb_ok, cubic_gap_lb=cubic, flow_vs_adjoint_ok=fva,
        monotone_ok=mono, propagation=prop, lawler_sokal_ok=ls_ok,
        certificate=cert, rates=rate_checks, mixing=mix, rows=tuple(rows),
    )
