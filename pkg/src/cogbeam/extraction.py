"""Beamformer recovery from SDP solutions.

* ``rank_one_decompose`` splits a PSD matrix into rank-one terms that share
  equal quadratic values under two given Hermitian matrices.
* ``extract_k1`` / ``extract_k2`` turn an optimal SDP solution into an exactly
  optimal beamformer when at most two interference constraints are present.
* ``randomized_round`` produces feasible beamformers for any number of
  constraints by scaling random-phase draws, keeping the best one.
"""
from __future__ import annotations

import enum
import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ExtractionError
from .linalg import hermitian, phase_normalize, quad
from .problem import QcqpProblem
from .rng import as_generator
from .sdp import KktReport, SdpInstance, SdpStatus, SdpTolerances, kkt_verify, solve_sdp, SdpSolution

log = logging.getLogger(__name__)

__all__ = [
    "RankOneFactors", "Provenance", "RoundingMeta", "BeamformerResult", "rank_one_decompose",
    "extract_k1", "extract_k2", "randomized_round", "approximation_bound", "solve_beamformer",
    "numerical_rank", "BINDING_TOL", "RANK_RTOL",
]

RANK_RTOL = 1e-9     # eigenvalues below this fraction of the largest are dropped
BINDING_TOL = 1e-6   # |level - 1| at or below this counts as a binding constraint


@dataclass
class RankOneFactors:
    z: np.ndarray  # (R, m); row r is the r-th factor

    @property
    def R(self) -> int:
        return self.z.shape[0]

    def reconstruct(self) -> np.ndarray:
        return np.einsum("ri,rj->ij", self.z, np.conj(self.z))

    def values(self, M: np.ndarray) -> np.ndarray:
        """z_r^H M z_r for every factor."""
        return np.real(np.einsum("ri,ij,rj->r", np.conj(self.z), M, self.z))


class Provenance(str, enum.Enum):
    EXACT_K1 = "ExactK1"
    EXACT_K2 = "ExactK2"
    ROUNDED = "Rounded"
    CLOSED_FORM_S3 = "ClosedFormS3"


@dataclass
class RoundingMeta:
    draws: int
    best_draw_index: int
    ratio_to_relaxation: float
    objectives: np.ndarray | None = field(default=None, repr=False)
    max_levels: np.ndarray | None = field(default=None, repr=False)  # worst normalized level per draw


@dataclass
class BeamformerResult:
    t: np.ndarray
    objective: float
    slacks: np.ndarray
    power_slack: float
    provenance: Provenance
    upper_bound: float
    rounding_meta: RoundingMeta | None = None
    kkt: KktReport | None = None
    sdp_status: SdpStatus | None = None
    infeasible: bool = False
    notes: list[str] = field(default_factory=list)

    @property
    def ratio(self) -> float:
        if self.upper_bound <= 0:
            return 1.0 if self.objective <= 0 else math.inf
        return self.objective / self.upper_bound

    def as_dict(self) -> dict:
        return {
            "t": [[float(v.real), float(v.imag)] for v in self.t],
            "objective": self.objective,
            "upper_bound": self.upper_bound,
            "ratio": self.ratio,
            "provenance": self.provenance.value,
            "slacks": [float(s) for s in self.slacks],
            "power_slack": self.power_slack,
            "kkt": None if self.kkt is None else self.kkt.as_dict(),
            "draws": None if self.rounding_meta is None else self.rounding_meta.draws,
            "best_draw_index": None if self.rounding_meta is None else self.rounding_meta.best_draw_index,
            "sdp_status": None if self.sdp_status is None else self.sdp_status.value,
            "infeasible": self.infeasible,
            "notes": list(self.notes),
        }


def numerical_rank(w: np.ndarray) -> int:
    top = float(np.max(w, initial=0.0))
    return int(np.sum(w >= RANK_RTOL * top)) if top > 0 else 0


def _initial_factors(Z: np.ndarray) -> np.ndarray:
    w, V = np.linalg.eigh(hermitian(Z))
    keep = w >= RANK_RTOL * max(w[-1], 0.0) if w[-1] > 0 else np.zeros_like(w, bool)
    # largest first so the dominant direction leads the factor list
    keep_idx = np.nonzero(keep)[0][::-1]
    return (V[:, keep_idx] * np.sqrt(w[keep_idx])).T.astype(complex)


def _small_root(a: float, b: float, c: float, scale: float) -> float:
    """Real root of a g^2 + b g + c = 0 with the smaller magnitude.

    Callers guarantee ``a * c <= 0`` so real roots exist; a discriminant that
    is clearly negative means that guarantee was broken.
    """
    tiny = 1e-14 * scale
    if abs(a) <= tiny:
        if abs(b) <= tiny:
            return 0.0
        return -c / b
    disc = b * b - 4.0 * a * c
    if disc < -1e-12 * max(scale * scale, np.finfo(float).tiny):
        raise ExtractionError(f"pairing quadratic has no real root (discriminant {disc:.3e})")
    q = -0.5 * (b + math.copysign(math.sqrt(max(disc, 0.0)), b))
    if q == 0.0:
        return 0.0
    return c / q


def _equalize(z: np.ndarray, M: np.ndarray, target: float, pair_phase=None) -> np.ndarray:
    """Rotate pairs of factors until every z_r^H M z_r equals ``target``.

    With ``pair_phase`` unset the rotations are real (first stage).  Otherwise
    ``pair_phase`` is a matrix whose quadratic values must be preserved; the
    complex rotation is aligned so those values do not move (second stage).
    """
    z = z.copy()
    R = z.shape[0]
    vals = np.real(np.einsum("ri,ij,rj->r", np.conj(z), M, z))
    scale = float(np.sum(np.abs(vals))) + abs(target) * R + np.finfo(float).tiny
    tol = 1e-13 * scale
    active = list(range(R))
    for _ in range(R - 1):
        dev = vals[active] - target
        if np.all(np.abs(dev) <= tol):
            break
        i = active[int(np.argmax(dev))]
        j = active[int(np.argmin(dev))]
        if vals[i] - target <= tol or vals[j] - target >= -tol:
            break
        zi, zj = z[i], z[j]
        cross = np.vdot(zi, M @ zj)
        if pair_phase is None:
            g = _small_root(vals[j] - target, 2.0 * cross.real, vals[i] - target, scale)
            w = g
        else:
            keep = np.vdot(zi, pair_phase @ zj)
            a1 = np.angle(keep) if abs(keep) > 0 else 0.0
            a2, g0 = np.angle(cross), abs(cross)
            g = _small_root(vals[i] - target, 2.0 * g0 * math.sin(a2 - a1), vals[j] - target, scale)
            w = g * np.exp(1j * (a1 + 0.5 * np.pi))
        norm = math.sqrt(1.0 + g * g)
        if pair_phase is None:
            new_fixed = (zi + w * zj) / norm
            new_rest = (-w * zi + zj) / norm
        else:
            new_fixed = (w * zi + zj) / norm
            new_rest = (-zi + np.conj(w) * zj) / norm
        z[i], z[j] = new_fixed, new_rest
        vals[i] = target
        vals[j] = float(np.real(np.vdot(new_rest, M @ new_rest)))
        active.remove(i)
    return z


def rank_one_decompose(Z, A, B) -> RankOneFactors:
    """Factor ``Z = sum_r z_r z_r^H`` with z_r^H A z_r = tr(AZ)/R and z_r^H B z_r = tr(BZ)/R.

    Parameters
    ----------
    Z : (m, m) Hermitian PSD matrix; eigenvalues below 1e-9 of the largest
        are treated as zero when fixing the rank R.
    A, B : (m, m) Hermitian matrices whose values are equalized.
    """
    Z, A, B = (hermitian(np.asarray(M, dtype=complex)) for M in (Z, A, B))
    z = _initial_factors(Z)
    R = z.shape[0]
    if R <= 1:
        return RankOneFactors(z.reshape(R, Z.shape[0]))
    trA = float(np.real(np.einsum("ri,ij,rj->", np.conj(z), A, z)))
    trB = float(np.real(np.einsum("ri,ij,rj->", np.conj(z), B, z)))
    z = _equalize(z, A, trA / R)
    z = _equalize(z, B, trB / R, pair_phase=A)
    return RankOneFactors(z)


def _result(problem_like, t, provenance, upper, **kw) -> BeamformerResult:
    A, Qs, P = problem_like
    t = phase_normalize(np.asarray(t, dtype=complex))
    levels = np.array([quad(t, q) for q in Qs] + [float(np.vdot(t, t).real) / P])
    worst = float(np.max(levels, initial=0.0))
    if worst > 1.0:
        # numerical overshoot from finite solver accuracy
        t = t / math.sqrt(worst)
        levels = levels / worst
    power = float(np.vdot(t, t).real)
    return BeamformerResult(t=t, objective=quad(t, A), slacks=1.0 - levels[:-1],
                            power_slack=P - power, provenance=provenance, upper_bound=upper, **kw)


def _require_certificate(X, y, A, Gs, bs, kkt):
    if y is None and kkt is None:
        return None
    report = kkt if kkt is not None else kkt_verify(
        SdpInstance(A, Gs, bs), SdpSolution(X, np.asarray(y, float), float(np.real(np.sum(A * X.T))),
                                            0.0, 0, SdpStatus.OPTIMAL))
    if not report.passed:
        raise ExtractionError("SDP solution does not pass the KKT check; exact extraction refused: "
                              f"{report.as_dict()}")
    return report


def extract_k1(X, y, A, Q1, P_max: float, kkt: KktReport | None = None) -> BeamformerResult:
    """Optimal beamformer for a single interference constraint.

    Every factor of the equal-value decomposition under (Q1, I), scaled by
    sqrt(R), meets both constraints and attains the relaxation value; the one
    with the largest objective is returned.
    """
    X, A, Q1 = (hermitian(np.asarray(M, dtype=complex)) for M in (X, A, Q1))
    eye = np.eye(A.shape[0], dtype=complex)
    kkt = _require_certificate(X, y, A, [Q1, eye], np.array([1.0, P_max]), kkt)
    upper = float(np.real(np.sum(A * X.T)))
    f = rank_one_decompose(X, Q1, eye)
    if f.R == 0:
        return _result((A, [Q1], P_max), np.zeros(A.shape[0]), Provenance.EXACT_K1, upper, kkt=kkt)
    r = int(np.argmax(f.values(A)))
    return _result((A, [Q1], P_max), math.sqrt(f.R) * f.z[r], Provenance.EXACT_K1, upper, kkt=kkt)


def extract_k2(X, y, A, Q1, Q2, P_max: float, kkt: KktReport | None = None) -> BeamformerResult:
    """Optimal beamformer for two interference constraints.

    If some constraint (interference or power) is slack at X, decompose with
    the other two and keep the factor that loads the slack one least.  If all
    three bind, decompose so that every factor has equal levels on all three
    and normalize the factor with the largest level.
    """
    X, A, Q1, Q2 = (hermitian(np.asarray(M, dtype=complex)) for M in (X, A, Q1, Q2))
    m = A.shape[0]
    G = [Q1, Q2, np.eye(m, dtype=complex) / P_max]
    kkt = _require_certificate(X, y, A, [Q1, Q2, np.eye(m, dtype=complex)], np.array([1.0, 1.0, P_max]), kkt)
    upper = float(np.real(np.sum(A * X.T)))
    triple = (A, [Q1, Q2], P_max)
    levels = np.array([np.real(np.sum(g * X.T)) for g in G])
    slack = np.nonzero(np.abs(levels - 1.0) > BINDING_TOL)[0]
    if upper <= 0 or np.allclose(X, 0):
        return _result(triple, np.zeros(m), Provenance.EXACT_K2, upper, kkt=kkt)
    if slack.size:
        loose = int(slack[np.argmin(levels[slack])])
        others = [g for i, g in enumerate(G) if i != loose]
        f = rank_one_decompose(X, *others)
        cand = math.sqrt(f.R) * f.z
        loads = f.values(G[loose]) * f.R
        objs = f.values(A) * f.R
        ok = loads <= 1.0 + BINDING_TOL
        r = int(np.argmax(np.where(ok, objs, -np.inf))) if np.any(ok) else int(np.argmin(loads))
        res = _result(triple, cand[r], Provenance.EXACT_K2, upper, kkt=kkt)
        res.notes.append(f"case: slack constraint {loose}")
        return res
    f = rank_one_decompose(X, Q1 - Q2, Q2 - G[2])
    s = f.values(Q1)
    r = int(np.argmax(s))
    if s[r] <= 1e-12:
        raise ExtractionError("no factor carries positive interference level in the all-binding case")
    res = _result(triple, f.z[r] / math.sqrt(s[r]), Provenance.EXACT_K2, upper, kkt=kkt)
    res.notes.append("case: all binding")
    return res


def randomized_round(X, A, Qs, P_max: float, draws: int = 100, stream=None) -> BeamformerResult:
    """Best of ``draws`` random-phase beamformers, each scaled onto the feasible set.

    Parameters
    ----------
    X : relaxation solution (Hermitian PSD).
    Qs : interference matrices; the power budget is appended as I / P_max.
    stream : seed, :class:`~cogbeam.rng.SeededStream` or numpy Generator.
    """
    if draws < 1:
        raise ValueError("draws must be >= 1")
    X, A = hermitian(np.asarray(X, complex)), hermitian(np.asarray(A, complex))
    Qs = [hermitian(np.asarray(q, complex)) for q in Qs]
    m = A.shape[0]
    cons = np.stack([*Qs, np.eye(m, dtype=complex) / P_max])
    upper = float(np.real(np.sum(A * X.T)))
    triple = (A, Qs, P_max)
    w, V = np.linalg.eigh(X)
    # eigenvalues below the numerical-rank threshold are solver noise
    w = np.where(w >= RANK_RTOL * max(w[-1], 0.0), w, 0.0)
    if w[-1] <= 0:
        res = _result(triple, np.zeros(m), Provenance.ROUNDED, upper,
                      rounding_meta=RoundingMeta(0, -1, 0.0))
        res.notes.append("zero relaxation solution; returned the zero beamformer")
        return res
    Delta = np.sqrt(w)[:, None] * np.conj(V.T)          # X = Delta^H Delta
    At = hermitian(Delta @ A @ np.conj(Delta.T))
    _, U = np.linalg.eigh(At)
    basis = np.conj(Delta.T) @ U                          # t~ = basis @ xi
    gen = as_generator(stream)
    xi = np.exp(2j * np.pi * gen.random((draws, m)))
    T = xi @ basis.T
    levels = np.real(np.einsum("ni,kij,nj->nk", np.conj(T), cons, T))
    worst = levels.max(axis=1)
    good = worst > 0
    T[good] /= np.sqrt(worst[good])[:, None]
    objs = np.where(good, np.real(np.einsum("ni,ij,nj->n", np.conj(T), A, T)), -np.inf)
    max_levels = np.real(np.einsum("ni,kij,nj->nk", np.conj(T), cons, T)).max(axis=1)
    best = int(np.argmax(objs))
    ratio = objs[best] / upper if upper > 0 else 1.0
    meta = RoundingMeta(draws, best, float(ratio), objectives=objs, max_levels=max_levels)
    return _result(triple, T[best], Provenance.ROUNDED, upper, rounding_meta=meta)


def approximation_bound(K: int, rank_X: int, M_S: int, alpha: float) -> float:
    """Lower bound on Pr{objective >= relaxation / alpha} for one rounding draw."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    mu = min(rank_X, M_S)
    return max(0.0, 1.0 - 4.0 * (K + 1) * mu * math.exp(-alpha / 4.0))


def _closed_form_result(problem: QcqpProblem) -> BeamformerResult:
    cf = problem.closed_form
    res = _result((problem.A, problem.Q, problem.P_max), cf.t_star, Provenance.CLOSED_FORM_S3,
                  cf.objective, infeasible=cf.infeasible)
    if cf.infeasible:
        res.notes.append("zero outage probability admits only the zero beamformer")
    if cf.tie:
        res.notes.append("top eigenvalue is repeated; canonical direction chosen")
    return res


def solve_beamformer(problem: QcqpProblem, mode: str = "auto", stream=None, draws: int = 100,
                     tolerances: SdpTolerances | None = None) -> BeamformerResult:
    """Solve one beamforming QCQP.

    ``mode="auto"`` uses the closed form when the problem carries one, exact
    extraction when K <= 2 and randomized rounding otherwise.  ``mode="round"``
    forces rounding after the SDP solve.  The relaxation value is returned as
    ``upper_bound``.
    """
    if mode not in ("auto", "round"):
        raise ValueError(f"unknown mode {mode!r}")
    if problem.closed_form is not None and mode == "auto":
        return _closed_form_result(problem)
    inst = SdpInstance.from_qcqp(problem)
    sol = solve_sdp(inst, tolerances)
    K = problem.K
    if sol.status is not SdpStatus.OPTIMAL or mode == "round" or K >= 3:
        if sol.status is not SdpStatus.OPTIMAL:
            warnings.warn(f"SDP solve ended with {sol.status.value}; rounding the best iterate",
                          RuntimeWarning, stacklevel=2)
        res = randomized_round(sol.X, problem.A, problem.Q, problem.P_max, draws, stream)
        # the dual value bounds the QCQP optimum even when the primal iterate is loose
        res.upper_bound = sol.primal_value if sol.status is SdpStatus.OPTIMAL else max(
            sol.primal_value, sol.dual_value)
        res.kkt, res.sdp_status = sol.kkt, sol.status
        if res.rounding_meta is not None and res.upper_bound > 0:
            res.rounding_meta.ratio_to_relaxation = res.objective / res.upper_bound
        return res
    if K <= 1:
        Q1 = problem.Q[0] if K == 1 else np.zeros_like(problem.A)
        res = extract_k1(sol.X, None, problem.A, Q1, problem.P_max, kkt=sol.kkt)
        if K == 0:
            res.slacks = res.slacks[:0]
    else:
        res = extract_k2(sol.X, None, problem.A, problem.Q[0], problem.Q[1], problem.P_max, kkt=sol.kkt)
    res.sdp_status = sol.status
    return res
