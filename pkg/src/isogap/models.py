"""Example chains with their stationary laws and named cut sequences.

Each constructor returns a :class:`Model` ``(kernel, pi, cuts, config)``.
The cuts are the family's natural candidates, so profiles on large members
can use ``strategy="candidates"`` instead of exhaustive search.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy import stats

from .errors import (
    BadWeights,
    DimensionTooLarge,
    InputError,
    NotLumpable,
    SubcriticalP,
)
from .isoperimetry import StateSet, _as_set
from .kernel import (
    StationaryMeasure,
    StochasticKernel,
    build_kernel,
    format_kernel,
    read_kernel,
    stationary,
)

MAX_HYPERCUBE_DIM = 12
LUMP_TOL = 1e-12


@dataclass(frozen=True)
class ModelConfig:
    family: str
    params: dict = field(default_factory=dict)
    cut_names: tuple = ()


class Model(NamedTuple):
    kernel: StochasticKernel
    pi: StationaryMeasure
    cuts: tuple
    config: ModelConfig


def make_cycle(p: int, lazy: bool = False) -> Model:
    """Walk ``i -> i+1 mod p``; with ``lazy`` it holds with probability 1/2.

    Cuts are the arcs ``{0, ..., s-1}`` for ``s = 1..p-1``.
    """
    if p < 2:
        raise InputError(f"cycle needs p >= 2, got {p}")
    shift = np.roll(np.eye(p), 1, axis=1)
    P = 0.5 * (np.eye(p) + shift) if lazy else shift
    pi = StationaryMeasure(np.full(p, 1.0 / p))
    cuts = tuple(StateSet.from_indices(range(s), pi) for s in range(1, p))
    cfg = ModelConfig("cycle", {"p": p, "lazy": lazy},
                      tuple(f"arc[0..{s - 1}]" for s in range(1, p)))
    return Model(build_kernel(P), pi, cuts, cfg)


def mm1_stationary(p: float, n_trunc: int) -> np.ndarray:
    """``pi_i`` proportional to ``(q/p)^(i-1)`` on ``1..n_trunc``."""
    r = (1.0 - p) / p
    w = r ** np.arange(n_trunc, dtype=float)
    return w / w.sum()


def make_mm1(p: float, n_trunc: int) -> Model:
    """Discrete M/M/1 queue on ``1..n_trunc`` (stored as ``0..n_trunc-1``).

    Moves down with probability ``p`` and up with ``q = 1 - p``; both ends
    reflect by holding (``p_11 = p``, ``p_NN = q``). Cuts are the tails
    ``A_s = {s..n_trunc}`` for ``s = 2..n_trunc``.
    """
    if not p > 0.5 or not p < 1:
        raise SubcriticalP(f"need 1/2 < p < 1 for a positive recurrent queue, got {p}")
    if n_trunc < 10:
        raise InputError(f"truncation level must be >= 10, got {n_trunc}")
    q = 1.0 - p
    N = n_trunc
    P = np.zeros((N, N))
    idx = np.arange(N - 1)
    P[idx, idx + 1] = q
    P[idx + 1, idx] = p
    P[0, 0] = p
    P[N - 1, N - 1] = q
    pi = StationaryMeasure(mm1_stationary(p, N))
    cuts = tuple(StateSet.from_indices(range(s - 1, N), pi) for s in range(2, N + 1))
    cfg = ModelConfig("mm1", {"p": p, "q": q, "n_trunc": N},
                      tuple(f"tail[{s}..{N}]" for s in range(2, N + 1)))
    return Model(build_kernel(P), pi, cuts, cfg)


def mm1_tail_limit(p: float, m: int) -> float:
    """Escape fraction ``sum_{i in A_s} pi_i p^m(i, A_s^c) / pi(A_s)`` deep
    inside the queue, where neither boundary is felt within ``m`` steps.

    Conditioned on ``A_s`` the excess ``i - s`` is geometric with ratio
    ``r = q/p``, and the walk is free, so the value is
    ``(1 - r) sum_j r^j P(S_m <= -j - 1)`` for the +-1 walk ``S`` with up
    probability ``q``.
    """
    q = 1.0 - p
    r = q / p
    total = 0.0
    for j in range(m):
        ups = math.floor((m - j - 1) / 2)
        if ups < 0:
            break
        total += r**j * stats.binom.cdf(ups, m, q)
    return (1.0 - r) * total


def make_hypercube(n: int, lazy: bool = True) -> Model:
    """Walk on ``{0,1}^n`` flipping a uniform coordinate; the lazy version
    holds with probability 1/2. States are bitmasks; cut ``j`` is
    ``{x : bit j of x is 1}``.
    """
    if n < 1:
        raise InputError(f"hypercube dimension must be >= 1, got {n}")
    if n > MAX_HYPERCUBE_DIM:
        raise DimensionTooLarge(f"full matrix limited to dimension {MAX_HYPERCUBE_DIM}, got {n}")
    m = 1 << n
    x = np.arange(m)
    P = np.zeros((m, m))
    flip = 0.5 / n if lazy else 1.0 / n
    for j in range(n):
        P[x, x ^ (1 << j)] += flip
    if lazy:
        P[x, x] += 0.5
    pi = StationaryMeasure(np.full(m, 1.0 / m))
    cuts = tuple(StateSet.from_membership((x >> j) & 1 == 1, pi) for j in range(n))
    cfg = ModelConfig("hypercube", {"n": n, "lazy": lazy},
                      tuple(f"coord[{j}]=1" for j in range(n)))
    return Model(build_kernel(P), pi, cuts, cfg)


def star_weights(a1: float, n: int) -> np.ndarray:
    """``(a1, (1-a1)/(n-1), ...)``: hub self-weight ``a1``, the rest spread
    evenly over ``n - 1`` leaves."""
    if n < 2:
        raise BadWeights(f"star needs n >= 2 states, got {n}")
    a = np.full(n, (1.0 - a1) / (n - 1))
    a[0] = a1
    return a


def make_star(a) -> Model:
    """Hub 0 jumps to state ``i`` with probability ``a_i``; every leaf
    returns to the hub. ``pi_0 = 1/(2 - a_0)``, ``pi_i = a_i/(2 - a_0)``.

    The single cut is the leaf set.
    """
    a = np.asarray(a, dtype=float).ravel()
    if a.size < 2:
        raise BadWeights("star needs at least two weights")
    if np.any(~np.isfinite(a)) or np.any(a <= 0) or np.any(a >= 1):
        raise BadWeights("star weights must lie in (0, 1)")
    if abs(a.sum() - 1.0) > 1e-12:
        raise BadWeights(f"star weights must sum to 1, got {a.sum():.17g}")
    a = a / a.sum()
    n = a.size
    P = np.zeros((n, n))
    P[0] = a
    P[1:, 0] = 1.0
    w = a.copy()
    w[0] = 1.0
    pi = StationaryMeasure(w / (2.0 - a[0]))
    leaves = StateSet.from_indices(range(1, n), pi)
    cfg = ModelConfig("star", {"a": a.tolist()}, ("leaves",))
    return Model(build_kernel(P), pi, (leaves,), cfg)


def lump_two_state(model, cut, tol: float = LUMP_TOL) -> np.ndarray:
    """Two-state kernel of the partition ``(A, A^c)``, rows ordered ``A``
    first.

    Requires strong lumpability: ``p(x, A^c)`` constant on ``A`` and
    ``p(x, A)`` constant on ``A^c`` within ``tol``. Accepts a
    :class:`Model` or a bare kernel.
    """
    P = np.asarray(model.kernel if isinstance(model, Model) else model, dtype=float)
    member = _membership(cut, P.shape[0])
    out = P[:, ~member].sum(axis=1)
    a, b = out[member], 1.0 - out[~member]
    if np.ptp(a) > tol or np.ptp(b) > tol:
        raise NotLumpable(
            f"cut is not lumpable: exit probabilities vary by {max(np.ptp(a), np.ptp(b)):.3g}"
        )
    alpha, beta = float(a.mean()), float(b.mean())
    return np.array([[1.0 - alpha, alpha], [beta, 1.0 - beta]])


def _membership(cut, m: int) -> np.ndarray:
    if isinstance(cut, StateSet):
        return cut.membership
    pi = np.full(m, 1.0 / m)
    return _as_set(cut, pi).membership


def load_from_file(path) -> Model:
    """Read a kernel file (dense or triplet format) and solve for ``pi``."""
    kernel, specs = read_kernel(path)
    pi = stationary(kernel)
    cuts = tuple(StateSet.parse(s, pi) for s in specs)
    cfg = ModelConfig("file", {"path": os.fspath(path)}, tuple(specs))
    return Model(kernel, pi, cuts, cfg)


def dump_model(model: Model, path, sparse: bool = False) -> None:
    """Write the kernel and its cuts (as hex masks) in the file format."""
    text = format_kernel(model.kernel, sparse=sparse, cuts=[c.hex() for c in model.cuts])
    tmp = f"{os.fspath(path)}.tmp"
    with open(tmp, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def make_model(family: str, **params) -> Model:
    """Dispatch by family name; used by the command line."""
    if family == "cycle":
        return make_cycle(int(params.get("p", 7)), bool(params.get("lazy", False)))
    if family == "mm1":
        return make_mm1(float(params.get("p", 0.7)), int(params.get("trunc", 100)))
    if family == "hypercube":
        return make_hypercube(int(params.get("dim", 4)), bool(params.get("lazy", True)))
    if family == "star":
        a = params.get("a")
        if a is None:
            a = star_weights(float(params.get("a1", 0.3)), int(params.get("n", 10)))
        return make_star(a)
    raise InputError(f"unknown model family {family!r}")
