"""Finite Markov kernels: validation, stationary measures, adjoints,
classification and total-variation decay.

Everything here operates on dense row-stochastic matrices. Powers of the
kernel are accumulated in *deflated* form, ``P^n - 1 pi = (P - 1 pi)^n``,
with a running log-scale so that geometrically small quantities keep full
relative precision instead of drowning in the ``1 - (1 - tiny)`` cancellation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np
import scipy.linalg
import scipy.sparse
from scipy.sparse.csgraph import connected_components

from .errors import (
    NegativeEntry,
    NoDecay,
    Reducible,
    RowSumViolation,
    TooSmall,
    ZeroMassState,
    InputError,
)

ROW_SUM_TOL = 1e-12
STATIONARY_RESIDUAL_TOL = 1e-10
ZERO_MASS = 1e-14
DENSE_LIMIT = 2000


@dataclass(frozen=True, eq=False)
class StochasticKernel:
    """Row-stochastic transition matrix on ``size`` states."""

    matrix: np.ndarray
    storage_hint: str = "dense"

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.matrix, dtype=dtype)

    def power(self, n: int) -> np.ndarray:
        """Single ``P^n`` by repeated squaring."""
        return np.linalg.matrix_power(self.matrix, n)


@dataclass(frozen=True, eq=False)
class StationaryMeasure:
    """Strictly positive invariant probability vector."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 1:
            raise InputError("stationary weights must be a vector")
        if np.any(w <= 0):
            i = int(np.argmin(w))
            raise ZeroMassState(f"state {i} has non-positive mass {w[i]:.3e}")
        if abs(w.sum() - 1.0) > ROW_SUM_TOL:
            raise InputError(f"stationary weights sum to {w.sum():.15g}, not 1")
        w = w.copy()
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.weights, dtype=dtype)

    def __len__(self):
        return len(self.weights)

    def residual(self, kernel) -> float:
        """Max-norm residual of ``pi P - pi``."""
        P = np.asarray(kernel, dtype=float)
        return float(np.max(np.abs(self.weights @ P - self.weights)))


@dataclass(frozen=True)
class ChainClass:
    reversible: bool
    normal: bool
    positive: bool
    tolerance_used: float


@dataclass(frozen=True, eq=False)
class ConvergenceRateReport:
    """Geometric total-variation decay of ``p^n(x, .)`` towards ``pi``.

    ``per_step_*[k]`` belongs to step ``n = k + 1``. Total variation uses the
    full-variation convention ``sum_j |mu_j|`` (maximum value 2).
    """

    horizon: int
    per_step_sup_tv: np.ndarray
    per_step_l1_tv: np.ndarray
    log_sup_tv: np.ndarray
    delta: float | None = None
    delta_adjoint: float | None = None
    prefactor: float | None = None
    prefactor_adjoint: float | None = None
    delta_regression: float | None = None
    converged: bool | None = None


def build_kernel(matrix) -> StochasticKernel:
    """Validate a transition matrix.

    Rows whose sums deviate from 1 by at most ``1e-12`` are renormalised,
    anything further off is rejected.

    Parameters
    ----------
    matrix : (m, m) array_like or scipy.sparse matrix

    Raises
    ------
    TooSmall, NegativeEntry, RowSumViolation
    """
    hint = "dense"
    if scipy.sparse.issparse(matrix):
        hint = "sparse-by-rows"
        matrix = matrix.toarray()
    P = np.array(matrix, dtype=float)
    if P.ndim != 2 or P.shape[0] != P.shape[1]:
        raise InputError(f"transition matrix must be square, got shape {P.shape}")
    m = P.shape[0]
    if m < 2:
        raise TooSmall(f"need at least 2 states, got {m}")
    if not np.all(np.isfinite(P)):
        row = int(np.argwhere(~np.isfinite(P))[0, 0])
        raise InputError(f"row {row} contains a non-finite entry")
    if np.any(P < 0):
        row, col = (int(v) for v in np.argwhere(P < 0)[0])
        raise NegativeEntry(
            f"entries must be >= 0: row {row} has p[{row},{col}] = {P[row, col]:.6g}"
        )
    sums = P.sum(axis=1)
    dev = np.abs(sums - 1.0)
    if np.any(dev > ROW_SUM_TOL):
        row = int(np.argmax(dev))
        raise RowSumViolation(
            f"rows must sum to 1 within {ROW_SUM_TOL:g}: row {row} sums to "
            f"{sums[row]:.15g}"
        )
    P /= sums[:, None]
    P.setflags(write=False)
    return StochasticKernel(P, storage_hint=hint)


def _closed_classes(P: np.ndarray) -> list[np.ndarray]:
    graph = scipy.sparse.csr_matrix(P > 0)
    ncomp, labels = connected_components(graph, directed=True, connection="strong")
    closed = []
    for c in range(ncomp):
        members = np.flatnonzero(labels == c)
        outside = np.ones(P.shape[0], dtype=bool)
        outside[members] = False
        if not np.any(P[np.ix_(members, outside)] > 0):
            closed.append(members)
    return closed


def is_irreducible(kernel) -> bool:
    P = np.asarray(kernel, dtype=float)
    graph = scipy.sparse.csr_matrix(P > 0)
    ncomp, _ = connected_components(graph, directed=True, connection="strong")
    return ncomp == 1


def _power_stationary(P: np.ndarray, tol: float = 1e-13, maxiter: int = 200_000):
    # lazy version avoids oscillation on periodic chains
    A = scipy.sparse.csr_matrix(0.5 * (P + np.eye(P.shape[0])))
    AT = A.T.tocsr()
    x = np.full(P.shape[0], 1.0 / P.shape[0])
    for _ in range(maxiter):
        y = AT @ x
        y /= y.sum()
        if np.max(np.abs(y - x)) < tol:
            return y
        x = y
    return x


def stationary(kernel) -> StationaryMeasure:
    """Unique invariant distribution of an irreducible kernel.

    Dense LU on ``(P^T - I)`` with one equation replaced by the
    normalisation for ``m <= 2000``, lazy power iteration beyond that.

    Raises
    ------
    Reducible
        More than one closed communicating class.
    ZeroMassState
        Some state carries (numerically) no stationary mass.
    """
    P = np.asarray(kernel, dtype=float)
    m = P.shape[0]
    closed = _closed_classes(P)
    if len(closed) > 1:
        raise Reducible(
            f"{len(closed)} closed classes, e.g. states {closed[0].tolist()} "
            f"and {closed[1].tolist()}"
        )
    if m <= DENSE_LIMIT:
        A = P.T - np.eye(m)
        A[-1, :] = 1.0
        b = np.zeros(m)
        b[-1] = 1.0
        pi = scipy.linalg.solve(A, b)
        # one step of iterative refinement
        r = b - A @ pi
        pi = pi + scipy.linalg.solve(A, r)
    else:
        pi = _power_stationary(P)
    if np.any(pi <= ZERO_MASS):
        i = int(np.argmin(pi))
        raise ZeroMassState(f"state {i} has stationary mass {pi[i]:.3e} <= {ZERO_MASS:g}")
    pi = pi / pi.sum()
    measure = StationaryMeasure(pi)
    res = measure.residual(P)
    if res > STATIONARY_RESIDUAL_TOL:
        raise ZeroMassState(f"stationary residual {res:.3e} exceeds {STATIONARY_RESIDUAL_TOL:g}")
    return measure


def adjoint(kernel, pi) -> StochasticKernel:
    """Time reversal ``p*(i, j) = pi_j p(j, i) / pi_i``."""
    P = np.asarray(kernel, dtype=float)
    w = np.asarray(pi, dtype=float)
    Q = (P.T * w[None, :]) / w[:, None]
    Q /= Q.sum(axis=1, keepdims=True)
    Q.setflags(write=False)
    return StochasticKernel(Q)


def symmetrized(kernel, pi) -> np.ndarray:
    """``D^{1/2} P D^{-1/2}`` with ``D = diag(pi)``.

    Similar to ``P``; its transpose represents the L2(pi) adjoint, so it is
    symmetric exactly when the chain is reversible.
    """
    P = np.asarray(kernel, dtype=float)
    s = np.sqrt(np.asarray(pi, dtype=float))
    return s[:, None] * P / s[None, :]


def classify(kernel, pi, tol: float = 1e-12) -> ChainClass:
    P = np.asarray(kernel, dtype=float)
    w = np.asarray(pi, dtype=float)
    flow = w[:, None] * P
    reversible = bool(np.max(np.abs(flow - flow.T)) <= tol)
    S = symmetrized(P, w)
    normal = bool(np.max(np.abs(S.T @ S - S @ S.T)) <= tol) or reversible
    positive = False
    if reversible:
        positive = bool(np.linalg.eigvalsh(0.5 * (S + S.T)).min() >= -tol)
    return ChainClass(reversible, normal, positive, tol)


def deflated_powers(kernel, pi, horizon: int) -> Iterator[tuple[int, float, np.ndarray]]:
    """Yield ``(n, log_scale, M)`` with ``P^n - 1 pi = exp(log_scale) * M``.

    ``M`` is rescaled to unit max-entry every step. When the deflated power
    vanishes exactly, ``log_scale`` is ``-inf`` and ``M`` is zero.
    """
    P = np.asarray(kernel, dtype=float)
    w = np.asarray(pi, dtype=float)
    E = P - w[None, :]
    M = E.copy()
    s = 0.0
    for n in range(1, horizon + 1):
        if n > 1:
            M = M @ E
        c = float(np.max(np.abs(M))) if M.size else 0.0
        if c > 0 and math.isfinite(s):
            M = M / c
            s += math.log(c)
        else:
            M = np.zeros_like(M)
            s = -math.inf
        yield n, s, M


def _scaled_exp(s: float, x: np.ndarray) -> np.ndarray:
    if s == -math.inf:
        return np.zeros_like(x)
    with np.errstate(under="ignore"):
        return np.exp(s) * x


def tv_decay(kernel, pi, horizon: int) -> ConvergenceRateReport:
    """Total-variation distances ``sup_x |p^n(x,.) - pi|`` and their
    pi-average for ``n = 1..horizon``."""
    if horizon < 1:
        raise InputError("horizon must be >= 1")
    w = np.asarray(pi, dtype=float)
    sup_tv = np.empty(horizon)
    l1_tv = np.empty(horizon)
    log_sup = np.empty(horizon)
    for n, s, M in deflated_powers(kernel, w, horizon):
        rows = np.abs(M).sum(axis=1)
        top = rows.max()
        log_sup[n - 1] = s + math.log(top) if top > 0 and s > -math.inf else -math.inf
        sup_tv[n - 1] = _scaled_exp(s, top)
        l1_tv[n - 1] = _scaled_exp(s, w @ rows)
    return ConvergenceRateReport(horizon, sup_tv, l1_tv, log_sup)


def _tail_rate(log_tv: np.ndarray, rel_tol: float = 1e-6):
    """Geometric-mean step ratio over the last quarter of the horizon.

    Returns ``(delta, regression_delta, converged)``.
    """
    N = len(log_tv)
    w = max(1, N // 4)
    if N < 2:
        raise NoDecay("horizon too short to estimate a rate")
    tail = log_tv[N - 1 - w:]
    if tail[-1] == -math.inf:
        return 0.0, 0.0, True
    if np.any(~np.isfinite(tail)):
        return 0.0, 0.0, True
    delta = math.exp((tail[-1] - tail[0]) / w)
    ratios = np.exp(np.diff(tail))
    spread = float(ratios.max() - ratios.min())
    converged = spread <= rel_tol * max(delta, 1e-300) or delta < 1e-10
    reg = float("nan")
    if len(tail) >= 3:
        slope = np.polyfit(np.arange(len(tail)), tail, 1)[0]
        reg = math.exp(slope)
    return delta, reg, converged


def _prefactor(log_tv: np.ndarray, delta: float) -> float:
    finite = np.isfinite(log_tv)
    if not np.any(finite):
        return 0.0
    if delta <= 0:
        return float(np.exp(log_tv[finite].max()))
    n = np.arange(1, len(log_tv) + 1)
    return float(np.exp(np.max(log_tv[finite] - n[finite] * math.log(delta))))


def orgc_estimate(kernel, pi, horizon: int = 200) -> ConvergenceRateReport:
    """Estimate the optimal geometric TV rate for the chain and its adjoint.

    The rate is the geometric mean of consecutive ratios
    ``tv[n+1] / tv[n]`` over the last quarter of the horizon; a log-linear
    regression over the same window is kept as ``delta_regression``.
    ``converged`` is false when those ratios still oscillate by more than
    ``1e-6`` relative (complex dominant modes).

    Raises
    ------
    NoDecay
        The estimated rate is 1 (periodic or reducible chain).
    """
    report = tv_decay(kernel, pi, horizon)
    delta, reg, conv = _tail_rate(report.log_sup_tv)
    if delta >= 1 - 1e-9:
        raise NoDecay(f"no total-variation decay within horizon {horizon} (tail ratio {delta:.12g})")
    adj = tv_decay(adjoint(kernel, pi), pi, horizon)
    delta_adj, _, conv_adj = _tail_rate(adj.log_sup_tv)
    if delta_adj >= 1 - 1e-9:
        raise NoDecay(
            f"no adjoint total-variation decay within horizon {horizon} (tail ratio {delta_adj:.12g})"
        )
    return ConvergenceRateReport(
        horizon=horizon,
        per_step_sup_tv=report.per_step_sup_tv,
        per_step_l1_tv=report.per_step_l1_tv,
        log_sup_tv=report.log_sup_tv,
        delta=delta,
        delta_adjoint=delta_adj,
        prefactor=_prefactor(report.log_sup_tv, delta),
        prefactor_adjoint=_prefactor(adj.log_sup_tv, delta_adj),
        delta_regression=reg,
        converged=conv and conv_adj,
    )


# --------------------------------------------------------------------------
# file formats

def _strip(line: str) -> str:
    return line.split("#", 1)[0].strip()


def parse_kernel_text(text: str):
    """Parse a dense or sparse-triplet kernel file.

    Dense: first line ``m``, then ``m`` rows of ``m`` probabilities.
    Sparse: lines ``i j p`` with 0-based indices, size ``max index + 1``.
    Trailing ``cut <spec>`` lines name candidate cuts (hex bitmask or
    comma-separated indices). Returns ``(kernel, cut_specs)``.
    """
    lines = [ln for ln in (_strip(x) for x in text.splitlines()) if ln]
    cuts = [ln.split(None, 1)[1] for ln in lines if ln.startswith("cut")]
    body = [ln for ln in lines if not ln.startswith("cut")]
    if not body:
        raise InputError("empty kernel file")
    first = body[0].split()
    if len(first) == 1:
        try:
            m = int(first[0])
        except ValueError:
            raise InputError(f"first line must be the state count, got {body[0]!r}")
        rows = body[1:]
        if len(rows) != m:
            raise InputError(f"expected {m} matrix rows, found {len(rows)}")
        P = np.empty((m, m))
        for i, ln in enumerate(rows):
            vals = ln.split()
            if len(vals) != m:
                raise InputError(f"row {i} has {len(vals)} entries, expected {m}")
            try:
                P[i] = [float(v) for v in vals]
            except ValueError:
                raise InputError(f"row {i} contains a non-numeric entry")
    else:
        trip = []
        for k, ln in enumerate(body):
            vals = ln.split()
            if len(vals) != 3:
                raise InputError(f"triplet line {k} must read 'i j p', got {ln!r}")
            try:
                trip.append((int(vals[0]), int(vals[1]), float(vals[2])))
            except ValueError:
                raise InputError(f"triplet line {k} is malformed: {ln!r}")
        m = max(max(i, j) for i, j, _ in trip) + 1
        if min(min(i, j) for i, j, _ in trip) < 0:
            raise InputError("triplet indices must be non-negative")
        P = np.zeros((m, m))
        for i, j, p in trip:
            P[i, j] += p
    return build_kernel(P), cuts


def read_kernel(path):
    with open(path) as fh:
        return parse_kernel_text(fh.read())


def format_kernel(kernel, sparse: bool = False, cuts=()) -> str:
    P = np.asarray(kernel, dtype=float)
    out = []
    if sparse:
        for i, j in zip(*np.nonzero(P)):
            out.append(f"{i} {j} {float(P[i, j])!r}")
    else:
        out.append(str(P.shape[0]))
        out.extend(" ".join(repr(float(v)) for v in row) for row in P)
    out.extend(f"cut {c}" for c in cuts)
    return "\n".join(out) + "\n"
