"""Exact spectral oracles on the mean-zero subspace L2_0(pi)."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .errors import EigenFailure, HorizonTooShort
from .kernel import ChainClass, classify, symmetrized


def mean_zero_basis(pi) -> np.ndarray:
    """Orthonormal basis (columns) of the complement of ``sqrt(pi)``.

    In the coordinates ``g = sqrt(pi) * f`` this spans the pi-mean-zero
    functions. Built from a Householder reflector whose first column is
    ``sqrt(pi)``.
    """
    v = np.sqrt(np.asarray(pi, dtype=float))
    v = v / np.linalg.norm(v)
    e1 = np.zeros_like(v)
    e1[0] = 1.0
    u = v + math.copysign(1.0, v[0]) * e1
    H = np.eye(len(v)) - 2.0 * np.outer(u, u) / (u @ u)
    return H[:, 1:]


def restricted_operator(kernel, pi) -> np.ndarray:
    """Matrix of ``P`` on L2_0(pi) in an orthonormal basis."""
    U = mean_zero_basis(pi)
    return U.T @ symmetrized(kernel, pi) @ U


@dataclass(frozen=True, eq=False)
class SpectralReport:
    """``rho`` is the spectral radius of ``P`` on L2_0(pi), ``gap = 1 - rho``.

    ``eigenvalues`` is the full spectrum (one copy of 1 first, then the
    restricted spectrum by decreasing real part/modulus); ``restricted`` is
    the spectrum with the constant direction deflated.
    """

    rho: float
    gap: float
    eigenvalues: np.ndarray
    restricted: np.ndarray
    method: str
    chain_class: ChainClass

    def to_dict(self) -> dict:
        ev = np.asarray(self.eigenvalues)
        if np.iscomplexobj(ev):
            eig = [[float(f"{z.real:.12g}"), float(f"{z.imag:.12g}")] for z in ev]
        else:
            eig = [float(f"{x:.12g}") for x in ev]
        c = self.chain_class
        return {
            "rho": float(f"{self.rho:.12g}"),
            "gap": float(f"{self.gap:.12g}"),
            "eigenvalues": eig,
            "method": self.method,
            "class": {
                "reversible": c.reversible,
                "normal": c.normal,
                "positive": c.positive,
                "tolerance_used": c.tolerance_used,
            },
        }


def spectral_report(kernel, pi, tol: float = 1e-12) -> SpectralReport:
    """Spectrum of ``P`` with the constant direction deflated once.

    Reversible chains go through the symmetric matrix
    ``D^{1/2} P D^{-1/2}`` (real spectrum in [-1, 1]); others through a
    general dense eigensolve.
    """
    cls = classify(kernel, pi, tol)
    T = restricted_operator(kernel, pi)
    try:
        if cls.reversible:
            lam = np.linalg.eigvalsh(0.5 * (T + T.T))[::-1]
            method = "symmetrized-eigen"
            full = np.concatenate([[1.0], lam])
        else:
            lam = np.linalg.eigvals(T)
            lam = lam[np.lexsort((-lam.imag, -np.abs(lam)))]
            method = "general-eigen"
            full = np.concatenate([[1.0 + 0j], lam])
    except np.linalg.LinAlgError as exc:
        raise EigenFailure(str(exc)) from exc
    rho = float(np.max(np.abs(lam))) if lam.size else 0.0
    return SpectralReport(rho, 1.0 - rho, full, lam, method, cls)


@dataclass(frozen=True, eq=False)
class GelfandSequence:
    norms: np.ndarray
    roots: np.ndarray

    def to_csv(self) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["n", "norm", "root"])
        for i, (a, b) in enumerate(zip(self.norms, self.roots)):
            wr.writerow([i + 1, f"{a:.12g}", f"{b:.12g}"])
        return buf.getvalue()


def gelfand_sequence(kernel, pi, horizon: int) -> GelfandSequence:
    """Operator norms ``||P^n||`` on L2_0(pi) and their n-th roots."""
    T = restricted_operator(kernel, pi)
    norms = np.empty(horizon)
    Tn = np.eye(T.shape[0])
    try:
        for n in range(1, horizon + 1):
            Tn = Tn @ T
            norms[n - 1] = np.linalg.norm(Tn, 2) if Tn.size else 0.0
    except np.linalg.LinAlgError as exc:
        raise EigenFailure(str(exc)) from exc
    n = np.arange(1, horizon + 1)
    return GelfandSequence(norms, norms ** (1.0 / n))


@dataclass(frozen=True, eq=False)
class IsoGapEstimate:
    """Spectral-radius estimates from the adjoint-flow profile.

    ``root_sequence[n-1] = (1 - k_adj_inf[n])^{1/2n}`` is a certified lower
    bound on ``rho`` for normal chains. ``ratio_sequence[n-1]`` is
    ``sqrt((1 - k_adj(A*, n+1)) / (1 - k_adj(A*, n)))`` on the final best cut
    and converges geometrically, but carries no certificate.
    """

    root_sequence: np.ndarray
    ratio_sequence: np.ndarray
    rho_estimate: float
    converged: bool
    exact: bool
    oracle_rho: float | None = None
    below_oracle: bool | None = None

    def to_dict(self) -> dict:
        return {
            "root_sequence": [float(f"{x:.12g}") for x in self.root_sequence],
            "ratio_sequence": [float(f"{x:.12g}") for x in self.ratio_sequence],
            "rho_estimate": float(f"{self.rho_estimate:.12g}"),
            "converged": self.converged,
            "exact": self.exact,
            "oracle_rho": self.oracle_rho,
            "below_oracle": self.below_oracle,
        }


def _root(logs: np.ndarray, powers: np.ndarray) -> np.ndarray:
    with np.errstate(invalid="ignore"):
        out = np.exp(logs / powers)
    return np.where(np.isneginf(logs), 0.0, out)


def iso_gap_estimator(profile, oracle: SpectralReport | None = None,
                      window: int = 5, agree: float = 1e-6) -> IsoGapEstimate:
    """Estimate ``rho`` from an iso profile.

    The ratio sequence is used when its last ``window`` entries agree within
    ``agree``; otherwise the last root value is returned with
    ``converged=False``.
    """
    N = profile.horizon
    if N < 4:
        raise HorizonTooShort(f"need horizon >= 4, got {N}")
    n = np.arange(1, N + 1)
    root = _root(profile.log_adj_defect, 2.0 * n)
    traj = profile.best_cut_log_adj_defect
    with np.errstate(invalid="ignore"):
        ratio = np.exp(0.5 * np.diff(traj))
    ratio = np.where(np.isneginf(traj[1:]), 0.0, ratio)
    tail = ratio[-min(window, len(ratio)):]
    if np.all(np.isfinite(tail)) and np.ptp(tail) <= agree:
        est, conv = float(ratio[-1]), True
    else:
        est, conv = float(root[-1]), False
    rho = below = None
    if oracle is not None:
        rho = oracle.rho
        below = bool(np.all(root <= rho + 1e-10))
    return IsoGapEstimate(root, ratio, est, conv, profile.exact, rho, below)
