"""Randomised verification of the inequalities and identities on small
chains, with reproducible seeds and matrix dumps on failure."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .bounds import (
    adjoint_monotone_check,
    flow_vs_adjoint_check,
    lawler_sokal_check,
    mixing_profile,
    norm_lower_bound_check,
    tv_sandwich_check,
)
from .isoperimetry import f_indicator, iso_profile, k_n_of_set, spectral_measure_of_cut
from .kernel import StationaryMeasure, build_kernel, format_kernel, stationary, tv_decay
from .spectral import gelfand_sequence, iso_gap_estimator, spectral_report

PROPERTIES = (
    "pi_stationary",
    "adjoint_monotone",
    "flow_vs_adjoint",
    "norm_lower_bound",
    "lawler_sokal",
    "adjoint_norm_identity",
    "spectral_measure_identity",
    "mixing_routes_agree",
    "root_sequence",
    "tv_sandwich",
)


def random_chain(rng: np.random.Generator, m: int, sparsity: float = 0.3) -> np.ndarray:
    """Positive random rows with some entries zeroed; the cycle
    ``i -> i+1`` is always kept so the chain stays irreducible."""
    W = rng.random((m, m))
    W[rng.random((m, m)) < sparsity] = 0.0
    W[np.arange(m), (np.arange(m) + 1) % m] += rng.random(m) + 0.1
    return W / W.sum(axis=1, keepdims=True)


def random_reversible_chain(rng: np.random.Generator, m: int, sparsity: float = 0.3):
    """Random walk on a random weighted graph: symmetric weights ``W``,
    ``P = W / rowsum``, ``pi`` proportional to the row sums."""
    W = rng.random((m, m))
    W[rng.random((m, m)) < sparsity] = 0.0
    W = np.triu(W) + np.triu(W, 1).T
    ring = rng.random(m) + 0.1
    idx = np.arange(m)
    W[idx, (idx + 1) % m] += ring
    W[(idx + 1) % m, idx] += ring
    d = W.sum(axis=1)
    return W / d[:, None], d / d.sum()


def reversible_with_gap(rng: np.random.Generator, m: int, min_gap: float,
                        max_tries: int = 1000):
    """Draw reversible chains until the spectral gap is at least ``min_gap``."""
    for _ in range(max_tries):
        P, w = random_reversible_chain(rng, m, sparsity=0.0)
        P = 0.5 * (np.eye(m) + P) if rng.random() < 0.5 else P
        k = build_kernel(P)
        pi = StationaryMeasure(w)
        if spectral_report(k, pi).gap >= min_gap:
            return k, pi
    raise RuntimeError(f"no chain with gap >= {min_gap} in {max_tries} draws")


@dataclass
class Failure:
    trial: int
    prop: str
    detail: str
    dump: str


@dataclass
class SuiteResult:
    trials: int
    seed: int
    counts: dict = field(default_factory=lambda: {p: [0, 0, 0] for p in PROPERTIES})
    failures: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures

    @property
    def checks(self) -> int:
        return sum(c[0] + c[1] for c in self.counts.values())

    def summary(self) -> str:
        lines = [f"{'property':<28}{'pass':>6}{'fail':>6}{'skip':>6}"]
        for p in PROPERTIES:
            a, b, c = self.counts[p]
            lines.append(f"{p:<28}{a:>6}{b:>6}{c:>6}")
        lines.append(f"trials={self.trials} seed={self.seed} checks={self.checks}")
        for f in self.failures[:5]:
            lines.append(f"FAIL trial {f.trial} ({f.prop}): {f.detail}")
            lines.append(f"reproduce: seed={self.seed} trial={f.trial}; matrix:")
            lines.append(f.dump.rstrip())
        return "\n".join(lines)


def check_chain(kernel, pi, horizon: int) -> dict:
    """Evaluate every property on one chain.

    Returns ``{name: (ok or None, detail)}``; ``None`` marks a property
    that does not apply (e.g. spectral measures of non-reversible chains).
    """
    out = {}
    w = np.asarray(pi, dtype=float)
    P = np.asarray(kernel, dtype=float)
    res = float(np.abs(w @ P - w).max())
    out["pi_stationary"] = (res <= 1e-10, f"residual {res:.3g}")
    prof = iso_profile(kernel, pi, horizon)
    spec = spectral_report(kernel, pi)
    gel = gelfand_sequence(kernel, pi, horizon)

    ok = adjoint_monotone_check(prof, 1e-12)
    out["adjoint_monotone"] = (bool(ok.all()), f"first bad n={_first_bad(ok)}")
    ok = flow_vs_adjoint_check(prof, 1e-10)
    out["flow_vs_adjoint"] = (bool(ok.all()), f"first bad n={_first_bad(ok)}")
    _, ok = norm_lower_bound_check(prof, gel, 1e-10)
    out["norm_lower_bound"] = (bool(ok.all()), f"first bad n={_first_bad(ok)}")
    out["lawler_sokal"] = (lawler_sokal_check(spec, float(prof.k_inf[0]), 1.0, 1e-10),
                           f"k1={prof.k_inf[0]:.6g}")

    # norm of P^n f_A on the best adjoint cut against the profile value
    worst = 0.0
    Pn = np.eye(len(w))
    for n in range(1, horizon + 1):
        Pn = Pn @ P
        g = Pn @ f_indicator(prof.argmin_adj_set[n - 1], w)
        worst = max(worst, abs(float(w @ g**2) - (1.0 - prof.k_adj_inf[n - 1])))
    out["adjoint_norm_identity"] = (worst <= 1e-12, f"max error {worst:.3g}")

    if spec.chain_class.reversible:
        worst = 0.0
        for A in (prof.argmin_set[0], prof.argmin_set[-1]):
            mu = spectral_measure_of_cut(kernel, pi, A)
            for n in range(1, horizon + 1):
                worst = max(worst, abs(1.0 - k_n_of_set(kernel, pi, A, n) - mu.moment(n)))
        out["spectral_measure_identity"] = (worst <= 1e-10, f"max error {worst:.3g}")
    else:
        out["spectral_measure_identity"] = (None, "not reversible")

    mix = mixing_profile(kernel, pi, horizon)
    err = float(np.max(np.abs(mix.phi - mix.phi_direct)))
    out["mixing_routes_agree"] = (err <= 1e-12, f"max error {err:.3g}")

    if spec.chain_class.normal and horizon >= 4:
        est = iso_gap_estimator(prof, spec)
        r = est.root_sequence
        mono = bool(np.all(np.diff(r) >= -1e-10))
        out["root_sequence"] = (mono and bool(est.below_oracle),
                                f"monotone={mono} below_rho={est.below_oracle}")
    else:
        out["root_sequence"] = (None, "not normal")

    tv = tv_decay(kernel, pi, horizon + 1).per_step_sup_tv
    out["tv_sandwich"] = (tv_sandwich_check(kernel, pi, tv), "")
    return out


def _first_bad(ok: np.ndarray):
    bad = np.flatnonzero(~np.asarray(ok))
    return int(bad[0]) + 1 if bad.size else None


def run_property_suite(trials: int = 100, max_states: int = 8, horizon: int = 10,
                       seed: int = 0, inject_failure: bool = False) -> SuiteResult:
    """Alternate general and reversible random chains of size
    ``2..max_states``. With ``inject_failure`` one kernel row is perturbed
    after ``pi`` is solved, so stationarity-based checks must fail."""
    result = SuiteResult(trials, seed)
    children = np.random.SeedSequence(seed).spawn(trials) if trials > 0 else []
    for t, child in enumerate(children):
        rng = np.random.default_rng(child)
        m = int(rng.integers(2, max_states + 1))
        if t % 2:
            P, _ = random_reversible_chain(rng, m)
        else:
            P = random_chain(rng, m)
        kernel = build_kernel(P)
        pi = stationary(kernel)
        if inject_failure and t == 0:
            P = P.copy()
            P[0] = np.roll(P[0], 1)
            kernel = build_kernel(P)
        for name, (ok, detail) in check_chain(kernel, pi, horizon).items():
            c = result.counts[name]
            if ok is None:
                c[2] += 1
            elif ok:
                c[0] += 1
            else:
                c[1] += 1
                result.failures.append(Failure(t, name, detail, format_kernel(kernel)))
    return result
