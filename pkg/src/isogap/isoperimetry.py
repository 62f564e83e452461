"""Isoperimetric functionals on cuts and their optimisation.

For a cut ``A`` with stationary mass ``pi(A)``:

* ``k_n(A) = sum_{i in A} pi_i p^n(i, A^c) / (pi(A) pi(A^c))`` is the
  normalised n-step probability flow out of ``A``;
* ``k_adj(A, n)`` is the same quantity for ``P*^n P^n``, evaluated through
  the variance identity
  ``1 - k_adj(A, n) = sum_i pi_i (p^n(i, A^c) - pi(A^c))^2 / (pi(A) pi(A^c))``.

Both are computed from the deflated power stream of
:func:`isogap.kernel.deflated_powers`, so the defects ``1 - k`` keep their
relative precision at large ``n``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import (
    DegenerateCut,
    EmptyCandidateSet,
    InputError,
    NotReversible,
    TooLargeForExhaustive,
)
from .kernel import classify, deflated_powers, symmetrized

MAX_EXHAUSTIVE = 24
STRATEGIES = ("exhaustive", "sweep", "local", "candidates")
_CHUNK_ENTRIES = 1 << 22
_TIE_RTOL = 1e-12


@dataclass(frozen=True)
class StateSet:
    """A nonempty proper subset of states, stored as a bitmask."""

    mask: int
    size: int
    mass: float
    complement_mass: float

    @classmethod
    def from_membership(cls, member, pi) -> "StateSet":
        member = np.asarray(member, dtype=bool)
        w = np.asarray(pi, dtype=float)
        if member.shape != w.shape:
            raise InputError("membership vector and pi differ in length")
        mask = 0
        for i in np.flatnonzero(member):
            mask |= 1 << int(i)
        mass = float(w[member].sum())
        cmass = float(w[~member].sum())
        if not member.any() or member.all() or mass <= 0 or cmass <= 0:
            raise DegenerateCut(f"cut {mask:#x} is not a proper subset (pi(A) = {mass:.3g})")
        return cls(mask, len(w), mass, cmass)

    @classmethod
    def from_indices(cls, indices, pi) -> "StateSet":
        w = np.asarray(pi, dtype=float)
        member = np.zeros(len(w), dtype=bool)
        idx = np.asarray(list(indices), dtype=int)
        if idx.size and (idx.min() < 0 or idx.max() >= len(w)):
            raise InputError(f"cut indices out of range for {len(w)} states")
        member[idx] = True
        return cls.from_membership(member, w)

    @classmethod
    def from_mask(cls, mask: int, pi) -> "StateSet":
        w = np.asarray(pi, dtype=float)
        if mask >> len(w):
            raise InputError(f"bitmask {mask:#x} has bits beyond {len(w)} states")
        member = np.array([(mask >> i) & 1 for i in range(len(w))], dtype=bool)
        return cls.from_membership(member, w)

    @classmethod
    def parse(cls, text: str, pi) -> "StateSet":
        """Hex bitmask (``0x..``) or comma-separated indices."""
        text = text.strip()
        if text.lower().startswith("0x"):
            return cls.from_mask(int(text, 16), pi)
        try:
            idx = [int(t) for t in text.split(",") if t.strip()]
        except ValueError:
            raise InputError(f"cannot parse cut {text!r}")
        return cls.from_indices(idx, pi)

    @property
    def membership(self) -> np.ndarray:
        return np.array([(self.mask >> i) & 1 for i in range(self.size)], dtype=bool)

    @property
    def indices(self) -> np.ndarray:
        return np.flatnonzero(self.membership)

    def complement(self) -> "StateSet":
        full = (1 << self.size) - 1
        return StateSet(full ^ self.mask, self.size, self.complement_mass, self.mass)

    def hex(self) -> str:
        return f"{self.mask:#x}"


def _as_set(A, pi) -> StateSet:
    if isinstance(A, StateSet):
        return A
    return StateSet.from_indices(A, pi)


def f_indicator(A, pi) -> np.ndarray:
    """Normalised two-level step function of a cut: pi-mean 0, pi-norm 1."""
    w = np.asarray(pi, dtype=float)
    A = _as_set(A, w)
    a, ac = A.mass, A.complement_mass
    member = A.membership
    return math.sqrt(a * ac) * np.where(member, 1.0 / a, -1.0 / ac)


def k_n_of_set(kernel, pi, A, n: int) -> float:
    """``k_n(A)`` straight from the definition, with an explicit ``P^n``."""
    if n < 1:
        raise InputError("n must be >= 1")
    w = np.asarray(pi, dtype=float)
    A = _as_set(A, w)
    Pn = np.linalg.matrix_power(np.asarray(kernel, dtype=float), n)
    member = A.membership
    out = Pn[np.ix_(member, ~member)].sum(axis=1)
    return float(w[member] @ out / (A.mass * A.complement_mass))


def k_adj_of_set(kernel, pi, A, n: int) -> float:
    """``k_adj(A, n)`` from the variance identity, with an explicit ``P^n``."""
    if n < 1:
        raise InputError("n must be >= 1")
    w = np.asarray(pi, dtype=float)
    A = _as_set(A, w)
    Pn = np.linalg.matrix_power(np.asarray(kernel, dtype=float), n)
    member = A.membership
    if A.mass <= A.complement_mass:
        dev = Pn[:, member].sum(axis=1) - A.mass
    else:
        dev = Pn[:, ~member].sum(axis=1) - A.complement_mass
    return float(1.0 - w @ dev**2 / (A.mass * A.complement_mass))


# --------------------------------------------------------------------------
# vectorised cut evaluation

@dataclass
class _Block:
    """Per-cut quantities for one power ``n`` (scaled by ``exp(s)``)."""

    X: np.ndarray       # (c, m) membership
    mass: np.ndarray
    cmass: np.ndarray
    dk: np.ndarray      # 1 - k_n(A) = exp(s) * dk
    da: np.ndarray      # 1 - k_adj(A, n) = exp(2 s) * da
    G: np.ndarray       # (m, c): p^n(i, A^c) - pi(A^c) = exp(s) * G
    s: float


def _evaluate(M: np.ndarray, s: float, w: np.ndarray, X: np.ndarray) -> _Block:
    Xf = X.astype(float)
    mass = Xf @ w
    cmass = (1.0 - Xf) @ w
    # rows of M sum to zero, so sum over the lighter side of each cut;
    # this keeps relative precision when one side has tiny mass
    light_a = mass <= cmass
    Y = np.where(light_a[:, None], Xf, 1.0 - Xf)
    H = M @ Y.T
    denom = mass * cmass
    dk = np.einsum("i,ci,ic->c", w, Y, H) / denom
    da = np.einsum("i,ic->c", w, H * H) / denom
    G = np.where(light_a[None, :], -H, H)
    return _Block(X, mass, cmass, dk, da, G, s)


def _scale(s: float, x, power: int = 1):
    if s == -math.inf:
        return np.zeros_like(np.asarray(x, dtype=float))
    with np.errstate(under="ignore", over="ignore"):
        return np.exp(power * s) * np.asarray(x)


def _exhaustive_chunks(m: int):
    """Membership blocks for all cuts containing state 0, lowest mask first."""
    total = (1 << (m - 1)) - 1
    step = max(1, _CHUNK_ENTRIES // m)
    bits = np.arange(m, dtype=np.int64)
    for start in range(0, total, step):
        r = np.arange(start, min(total, start + step), dtype=np.int64)
        masks = 1 | (r << 1)
        yield ((masks[:, None] >> bits) & 1).astype(bool)


def sweep_order(kernel, pi) -> np.ndarray:
    """States ordered by the second eigenvector of ``(P + P*) / 2``."""
    w = np.asarray(pi, dtype=float)
    S = symmetrized(kernel, w)
    vals, vecs = np.linalg.eigh(0.5 * (S + S.T))
    v = vecs[:, -2] / np.sqrt(w)
    return np.argsort(v, kind="stable")


def _sweep_block(order: np.ndarray) -> np.ndarray:
    m = len(order)
    X = np.zeros((m - 1, m), dtype=bool)
    for j in range(1, m):
        X[j - 1, order[:j]] = True
    return X


def _better(v: float, best: float) -> bool:
    if best == -math.inf:
        return v > best
    return v > best + _TIE_RTOL * max(abs(v), abs(best), 1e-300)


def _argbest(scores: np.ndarray) -> int:
    """Index of the maximum; near-ties resolved toward the lowest index."""
    top = float(np.max(scores))
    tol = _TIE_RTOL * max(abs(top), 1e-300)
    return int(np.flatnonzero(scores >= top - tol)[0])


Objective = Callable[[_Block], np.ndarray]


@dataclass
class _Pick:
    score: float = -math.inf
    member: np.ndarray | None = None
    dk: float = math.nan
    da: float = math.nan
    mass: float = math.nan
    cmass: float = math.nan
    extra: dict = field(default_factory=dict)


def _take(pick: _Pick, blk: _Block, scores: np.ndarray, extras) -> None:
    j = _argbest(scores)
    if _better(float(scores[j]), pick.score):
        pick.score = float(scores[j])
        pick.member = blk.X[j].copy()
        pick.dk, pick.da = float(blk.dk[j]), float(blk.da[j])
        pick.mass, pick.cmass = float(blk.mass[j]), float(blk.cmass[j])
        pick.extra = {k: float(v[j]) for k, v in extras(blk).items()} if extras else {}


def _local_improve(M, s, w, pick: _Pick, objective: Objective, extras) -> None:
    m = len(w)
    member = pick.member.copy()
    for _ in range(m * m):
        X = np.repeat(member[None, :], m, axis=0)
        X[np.arange(m), np.arange(m)] ^= True
        keep = X.any(axis=1) & ~X.all(axis=1)
        X = X[keep]
        if len(X) == 0:
            return
        blk = _evaluate(M, s, w, X)
        scores = objective(blk)
        j = _argbest(scores)
        if not _better(float(scores[j]), pick.score):
            return
        _take(pick, blk, scores, extras)
        member = pick.member.copy()


def _scan(kernel, pi, horizon, strategy, objectives: dict[str, Objective],
          candidates=None, extras=None, stop_at=None):
    """Run the power stream and optimise every objective at each ``n``.

    Returns a list (index ``n - 1``) of ``(s, {name: _Pick})``.
    """
    w = np.asarray(pi, dtype=float)
    m = len(w)
    if strategy not in STRATEGIES:
        raise InputError(f"unknown strategy {strategy!r}; choose from {STRATEGIES}")
    if strategy == "exhaustive" and m > MAX_EXHAUSTIVE:
        raise TooLargeForExhaustive(
            f"exhaustive search limited to {MAX_EXHAUSTIVE} states, chain has {m}"
        )
    fixed = None
    if strategy in ("sweep", "local"):
        fixed = _sweep_block(sweep_order(kernel, w))
    elif strategy == "candidates":
        if not candidates:
            raise EmptyCandidateSet("candidate strategy needs at least one cut")
        fixed = np.array([_as_set(c, w).membership for c in candidates], dtype=bool)
    out = []
    for n, s, M in deflated_powers(kernel, w, horizon):
        if stop_at is not None and n < stop_at:
            continue
        picks = {name: _Pick() for name in objectives}
        blocks = _exhaustive_chunks(m) if fixed is None else (fixed,)
        for X in blocks:
            blk = _evaluate(M, s, w, X)
            for name, obj in objectives.items():
                _take(picks[name], blk, obj(blk), extras)
        if strategy == "local":
            for name, obj in objectives.items():
                _local_improve(M, s, w, picks[name], obj, extras)
        out.append((s, picks))
    return out


# --------------------------------------------------------------------------
# single-n optimisation and profiles

_FUNCTIONALS = {
    ("k_n", "inf"): lambda b: b.dk,
    ("k_n", "sup"): lambda b: -b.dk,
    ("k_adj", "inf"): lambda b: b.da,
    ("k_adj", "sup"): lambda b: -b.da,
}


def optimize_cut(kernel, pi, n: int, functional: str = "k_n", mode: str = "inf",
                 strategy: str = "exhaustive", candidates=None):
    """Optimise ``k_n`` or ``k_adj`` over cuts at a single ``n``.

    Returns ``(value, StateSet, exact)``. Non-exhaustive strategies give an
    upper bound on an infimum (lower bound on a supremum) and are flagged
    inexact. Ties go to the lowest bitmask (exhaustive) or to the earliest
    candidate.
    """
    if n < 1:
        raise InputError("n must be >= 1")
    key = ("k_adj" if functional in ("k_adj", "k_adj_n") else functional, mode)
    if key not in _FUNCTIONALS:
        raise InputError(f"unknown functional/mode {functional!r}/{mode!r}")
    w = np.asarray(pi, dtype=float)
    (s, picks), = _scan(kernel, w, n, strategy, {"f": _FUNCTIONALS[key]},
                        candidates=candidates, stop_at=n)
    p = picks["f"]
    if key[0] == "k_n":
        value = 1.0 - float(_scale(s, p.dk))
    else:
        value = 1.0 - float(_scale(s, p.da, 2))
    return value, StateSet.from_membership(p.member, w), strategy == "exhaustive"


@dataclass(frozen=True, eq=False)
class IsoProfile:
    """Per-n optima of the isoperimetric functionals (index ``n - 1``).

    ``log_k_defect`` and ``log_adj_defect`` hold ``log(1 - k_inf)`` and
    ``log(1 - k_adj_inf)`` at full relative precision (``nan``/``-inf``
    where the defect is non-positive/zero). ``norm_lower_bound`` is
    ``sup_A 1/2 ((1 - k_n(A))^2 + 2 pi(A) pi(A^c) (1 - k_adj(A, n)))``.
    ``best_cut_log_adj_defect`` follows ``argmin_adj_set[-1]`` through all n.
    """

    horizon: int
    k_inf: np.ndarray
    k_sup: np.ndarray
    k_adj_inf: np.ndarray
    argmin_set: tuple
    argmax_set: tuple
    argmin_adj_set: tuple
    strategy: str
    exact: bool
    log_k_defect: np.ndarray
    log_adj_defect: np.ndarray
    norm_lower_bound: np.ndarray
    best_cut_log_adj_defect: np.ndarray

    def to_csv(self) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["n", "k_inf", "k_sup", "k_adj_inf", "argmin_set", "exact"])
        for i in range(self.horizon):
            wr.writerow([
                i + 1,
                f"{self.k_inf[i]:.12g}",
                f"{self.k_sup[i]:.12g}",
                f"{self.k_adj_inf[i]:.12g}",
                self.argmin_set[i].hex(),
                str(self.exact).lower(),
            ])
        return buf.getvalue()


def _log_pos(s: float, x: float) -> float:
    if x > 0 and s > -math.inf:
        return s + math.log(x)
    if x == 0 or s == -math.inf:
        return -math.inf
    return math.nan


def cut_trajectory(kernel, pi, A, horizon: int):
    """``(k_n(A), log(1 - k_adj(A, n)))`` for ``n = 1..horizon`` on one cut."""
    w = np.asarray(pi, dtype=float)
    X = _as_set(A, w).membership[None, :]
    k = np.empty(horizon)
    la = np.empty(horizon)
    for n, s, M in deflated_powers(kernel, w, horizon):
        blk = _evaluate(M, s, w, X)
        k[n - 1] = 1.0 - float(_scale(s, blk.dk[0]))
        la[n - 1] = -math.inf if blk.da[0] == 0 else 2 * s + math.log(blk.da[0])
    return k, la


def iso_profile(kernel, pi, horizon: int, strategy: str = "exhaustive",
                candidates=None) -> IsoProfile:
    """Assemble ``k_inf``, ``k_sup`` and ``k_adj_inf`` for ``n = 1..horizon``.

    The matrix-power stream is shared across ``n`` and across cuts.
    ``strategy='candidates'`` restricts the search to the given cuts (for
    example a model family's named cut sequence).
    """
    if horizon < 1:
        raise InputError("horizon must be >= 1")
    w = np.asarray(pi, dtype=float)

    def prop1(b):
        ek = _scale(b.s, b.dk)
        ea = _scale(b.s, b.da, 2)
        return 0.5 * (ek**2 + 2 * b.mass * b.cmass * ea)

    objectives = {
        "kinf": lambda b: b.dk,
        "ksup": lambda b: -b.dk,
        "kadj": lambda b: b.da,
        "prop1": prop1,
    }
    rows = _scan(kernel, w, horizon, strategy, objectives, candidates=candidates)
    N = horizon
    k_inf, k_sup, k_adj = np.empty(N), np.empty(N), np.empty(N)
    lk, la, nb = np.empty(N), np.empty(N), np.empty(N)
    amin, amax, aadj = [], [], []
    for i, (s, picks) in enumerate(rows):
        pk, px, pa = picks["kinf"], picks["ksup"], picks["kadj"]
        k_inf[i] = 1.0 - float(_scale(s, pk.dk))
        k_sup[i] = 1.0 - float(_scale(s, px.dk))
        k_adj[i] = 1.0 - float(_scale(s, pa.da, 2))
        lk[i] = _log_pos(s, pk.dk)
        la[i] = -math.inf if (pa.da == 0 or s == -math.inf) else 2 * s + math.log(pa.da)
        nb[i] = picks["prop1"].score
        amin.append(StateSet.from_membership(pk.member, w))
        amax.append(StateSet.from_membership(px.member, w))
        aadj.append(StateSet.from_membership(pa.member, w))
    _, traj = cut_trajectory(kernel, w, aadj[-1], N)
    return IsoProfile(
        horizon=N, k_inf=k_inf, k_sup=k_sup, k_adj_inf=k_adj,
        argmin_set=tuple(amin), argmax_set=tuple(amax), argmin_adj_set=tuple(aadj),
        strategy=strategy, exact=strategy == "exhaustive",
        log_k_defect=lk, log_adj_defect=la, norm_lower_bound=nb,
        best_cut_log_adj_defect=traj,
    )


@dataclass(frozen=True, eq=False)
class CutTable:
    """Every cut (containing state 0) evaluated at every ``n``."""

    masks: np.ndarray
    mass: np.ndarray
    k: np.ndarray           # (N, c)
    k_adj: np.ndarray       # (N, c)
    log_adj_defect: np.ndarray


def cut_table(kernel, pi, horizon: int) -> CutTable:
    w = np.asarray(pi, dtype=float)
    m = len(w)
    if m > 16:
        raise TooLargeForExhaustive("cut_table is meant for small chains (m <= 16)")
    X = np.concatenate(list(_exhaustive_chunks(m)))
    masks = (X * (1 << np.arange(m, dtype=np.int64))).sum(axis=1)
    k = np.empty((horizon, len(X)))
    ka = np.empty_like(k)
    la = np.empty_like(k)
    for n, s, M in deflated_powers(kernel, w, horizon):
        blk = _evaluate(M, s, w, X)
        k[n - 1] = 1.0 - _scale(s, blk.dk)
        ka[n - 1] = 1.0 - _scale(s, blk.da, 2)
        with np.errstate(divide="ignore"):
            la[n - 1] = 2 * s + np.log(blk.da) if s > -math.inf else -np.inf
    return CutTable(masks, X.astype(float) @ w, k, ka, la)


# --------------------------------------------------------------------------
# spectral measure of a cut

@dataclass(frozen=True, eq=False)
class SpectralMeasureOfCut:
    """Spectral measure of ``f_A`` for a reversible chain.

    ``eigenvalues`` sorted descending; ``weights[i]`` is the squared
    pi-inner product of ``f_A`` with the i-th orthonormal eigenfunction.
    """

    eigenvalues: np.ndarray
    weights: np.ndarray

    def moment(self, n: int) -> float:
        """``sum_i w_i lambda_i^n``, which equals ``1 - k_n(A)``."""
        return float(self.weights @ self.eigenvalues**n)


def spectral_measure_of_cut(kernel, pi, A, tol: float = 1e-10) -> SpectralMeasureOfCut:
    w = np.asarray(pi, dtype=float)
    if not classify(kernel, w, tol).reversible:
        raise NotReversible("spectral measure of a cut needs a reversible chain")
    A = _as_set(A, w)
    S = symmetrized(kernel, w)
    vals, vecs = np.linalg.eigh(0.5 * (S + S.T))
    order = np.argsort(vals)[::-1]
    vals, vecs = vals[order], vecs[:, order]
    # pi-inner product <f, phi_i> with phi_i = u_i / sqrt(pi)
    coef = vecs.T @ (np.sqrt(w) * f_indicator(A, w))
    return SpectralMeasureOfCut(vals, coef**2)
