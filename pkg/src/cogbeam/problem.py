"""Homogeneous QCQPs for the three channel-knowledge scenarios.

Every interference constraint is scaled to read ``t^H Q_k t <= 1``; the power
budget ``||t||^2 <= P_max`` is carried separately on :class:`QcqpProblem`.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg as sla

from .channel import NetworkRealization, Receiver
from .errors import UnsupportedDimensionError, ZeroSignalError
from .linalg import hermitian, quad, top_eigenpair

__all__ = [
    "Scenario", "InterferenceSpec", "QcqpProblem", "Scenario3Solution",
    "phi_matrix", "secondary_mmse_receiver", "secondary_sinr", "objective_matrix",
    "q_scenario1", "chance_factor", "f_cdf", "incomplete_beta_sum", "q_scenario2",
    "q_scenario3", "scenario3_solve", "build_qcqp", "interference_power",
]


class Scenario(str, enum.Enum):
    S1 = "S1"  # H_kS^H r_k known
    S2 = "S2"  # H_kS known, r_k unknown
    S3 = "S3"  # neither known


@dataclass
class InterferenceSpec:
    scenario: Scenario
    epsilon: np.ndarray
    delta: np.ndarray

    def __post_init__(self):
        self.scenario = Scenario(self.scenario)
        self.epsilon = np.atleast_1d(np.asarray(self.epsilon, dtype=float))
        self.delta = np.atleast_1d(np.asarray(self.delta, dtype=float))
        if self.delta.size == 1 and self.epsilon.size > 1:
            self.delta = np.full(self.epsilon.size, self.delta[0])
        if self.delta.shape != self.epsilon.shape:
            raise ValueError("epsilon and delta must have one entry per primary link")
        if np.any(self.epsilon <= 0):
            raise ValueError("interference thresholds must be positive")
        if np.any((self.delta < 0) | (self.delta >= 1)):
            raise ValueError("outage probabilities must lie in [0, 1)")

    @classmethod
    def from_db(cls, scenario, epsilon_over_N0_db, delta, N0: float, K: int) -> "InterferenceSpec":
        eps_db = np.broadcast_to(np.asarray(epsilon_over_N0_db, dtype=float), (K,))
        dl = np.broadcast_to(np.asarray(delta, dtype=float), (K,))
        return cls(scenario, N0 * 10.0 ** (eps_db / 10.0), dl.copy())


@dataclass
class Scenario3Solution:
    lam: float
    top_eigenvalue: float
    t_star: np.ndarray
    infeasible: bool = False
    tie: bool = False

    @property
    def objective(self) -> float:
        return self.lam * self.top_eigenvalue


@dataclass
class QcqpProblem:
    """max t^H A t  s.t.  t^H Q_k t <= 1 (k = 1..K),  ||t||^2 <= P_max."""

    A: np.ndarray
    Q: list[np.ndarray]
    P_max: float
    scenario: Scenario | None = None
    closed_form: Scenario3Solution | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.A = hermitian(np.asarray(self.A, dtype=complex))
        self.Q = [hermitian(np.asarray(q, dtype=complex)) for q in self.Q]
        m = self.A.shape[0]
        if any(q.shape != (m, m) for q in self.Q):
            raise ValueError("all constraint matrices must match the objective dimension")
        if not self.P_max > 0:
            raise ValueError("power budget must be positive")

    @property
    def K(self) -> int:
        return len(self.Q)

    @property
    def m(self) -> int:
        return self.A.shape[0]

    @property
    def infeasible(self) -> bool:
        return self.closed_form is not None and self.closed_form.infeasible

    def objective(self, t) -> float:
        return quad(np.asarray(t), self.A)

    def constraint_values(self, t) -> np.ndarray:
        """Normalized constraint levels [t^H Q_k t ..., ||t||^2 / P_max]; feasible iff all <= 1."""
        t = np.asarray(t)
        vals = [quad(t, q) for q in self.Q]
        vals.append(float(np.real(np.vdot(t, t))) / self.P_max)
        return np.array(vals)

    def all_constraints(self) -> list[np.ndarray]:
        """Interference matrices plus the power budget as I / P_max."""
        return [*self.Q, np.eye(self.m, dtype=complex) / self.P_max]


def phi_matrix(real: NetworkRealization) -> np.ndarray:
    """Interference-plus-noise covariance at the secondary receiver."""
    N_S = real.config.N_S
    Phi = real.N0 * np.eye(N_S, dtype=complex)
    for k, link in enumerate(real.primaries):
        g = real.H_Sk[k] @ link.t
        Phi += real.alpha_Sk[k] * np.outer(g, np.conj(g))
    return hermitian(Phi)


def _phi_solve(real: NetworkRealization, B: np.ndarray) -> np.ndarray:
    return sla.cho_solve(sla.cho_factor(phi_matrix(real), lower=True), B)


def secondary_mmse_receiver(real: NetworkRealization, t_S) -> np.ndarray:
    v = real.H_SS @ np.asarray(t_S, dtype=complex)
    if np.linalg.norm(v) == 0.0:
        raise ZeroSignalError("H_SS t_S = 0; the receiver is undefined")
    r = _phi_solve(real, v)
    return r / np.linalg.norm(r)


def secondary_sinr(real: NetworkRealization, t_S, r_S) -> float:
    """SINR at the secondary receiver for explicit transmit and receive vectors."""
    t_S, r_S = np.asarray(t_S, complex), np.asarray(r_S, complex)
    signal = real.alpha_SS * abs(np.vdot(r_S, real.H_SS @ t_S)) ** 2
    interference = sum(real.alpha_Sk[k] * abs(np.vdot(r_S, real.H_Sk[k] @ p.t)) ** 2
                       for k, p in enumerate(real.primaries))
    return float(signal / (interference + real.N0 * np.vdot(r_S, r_S).real))


def objective_matrix(real: NetworkRealization) -> np.ndarray:
    """A = alpha_SS H_SS^H Phi^{-1} H_SS, so SINR at the MMSE receiver is t^H A t."""
    H = real.H_SS
    A = real.alpha_SS * (np.conj(H.T) @ _phi_solve(real, H))
    return hermitian(A)


def interference_power(real: NetworkRealization, t_S, k: int, r_k=None, H_kS=None):
    """alpha_kS |r_k^H H_kS t|^2, optionally for alternative (batched) r_k / H_kS."""
    r = real.primaries[k].r if r_k is None else r_k
    H = real.H_kS[k] if H_kS is None else H_kS
    u = (H @ np.asarray(t_S, complex)[..., None])[..., 0] if np.ndim(H) > 2 else H @ t_S
    return real.alpha_kS[k] * np.abs(np.sum(np.conj(r) * u, axis=-1)) ** 2


def q_scenario1(real: NetworkRealization, spec: InterferenceSpec) -> list[np.ndarray]:
    Qs = []
    for k, link in enumerate(real.primaries):
        g = np.conj(real.H_kS[k].T) @ link.r
        Qs.append(hermitian(real.alpha_kS[k] / spec.epsilon[k] * np.outer(g, np.conj(g))))
    return Qs


def chance_factor(n: int, delta: float) -> float:
    """Norm inflation 1 / (1 - delta^(1/(n-1))) turning a chance constraint into a ball."""
    if not 0.0 <= delta < 1.0:
        raise ValueError(f"delta must lie in [0, 1), got {delta}")
    if delta == 0.0:
        return 1.0
    if n < 2:
        raise UnsupportedDimensionError("chance factor needs a receiver with at least 2 antennas")
    return 1.0 / (-math.expm1(math.log(delta) / (n - 1)))


def f_cdf(x: float, n: int) -> float:
    """CDF of the F(2(n-1), 2) distribution: ((n-1)x / ((n-1)x + 1))^(n-1)."""
    if n < 2:
        raise UnsupportedDimensionError("F(2(n-1), 2) needs n >= 2")
    if x <= 0:
        return 0.0
    y = (n - 1) * x
    return (y / (y + 1.0)) ** (n - 1)


def incomplete_beta_sum(alpha: float, a: int, b: int) -> float:
    """Regularized incomplete beta I_alpha(a, b) for integer a, b via its binomial sum."""
    total_n = a + b - 1
    return float(sum(math.comb(total_n, j) * alpha ** j * (1 - alpha) ** (total_n - j)
                     for j in range(a, total_n + 1)))


def q_scenario2(real: NetworkRealization, spec: InterferenceSpec) -> list[np.ndarray]:
    Qs = []
    for k, link in enumerate(real.primaries):
        if link.receiver not in (Receiver.MF, Receiver.ZF, Receiver.MMSE):
            raise UnsupportedDimensionError(f"receiver {link.receiver} is not known to be isotropic")
        d = spec.delta[k]
        if d > 0 and link.N < 2:
            raise UnsupportedDimensionError(
                f"primary link {k}: chance constraint needs N_k >= 2, got {link.N}")
        shrink = 1.0 / chance_factor(link.N, d)
        H = real.H_kS[k]
        Qs.append(hermitian(shrink * real.alpha_kS[k] / spec.epsilon[k] * (np.conj(H.T) @ H)))
    return Qs


def q_scenario3(spec: InterferenceSpec, alpha_kS, P_max: float, M_S: int):
    """Isotropic constraint matrices and the combined power bound lambda.

    Returns ``(Q_list, lam, infeasible)``.  A zero outage probability admits
    only t = 0; that case yields ``lam = 0`` and ``infeasible = True``.
    """
    alpha_kS = np.atleast_1d(np.asarray(alpha_kS, dtype=float))
    eye = np.eye(M_S, dtype=complex)
    with np.errstate(divide="ignore"):
        logs = np.log(1.0 / spec.delta)
    Qs = [np.diag(np.full(M_S, np.inf)).astype(complex) if d == 0.0 else (a / e) * lg * eye
          for a, e, d, lg in zip(alpha_kS, spec.epsilon, spec.delta, logs)]
    if np.any(spec.delta == 0.0):
        return Qs, 0.0, True
    bounds = spec.epsilon / (alpha_kS * logs)
    lam = float(min(np.min(bounds, initial=np.inf), P_max))
    return Qs, lam, False


def scenario3_solve(A: np.ndarray, lam: float) -> Scenario3Solution:
    if lam < 0:
        raise ValueError("power bound must be non-negative")
    top, v, tie = top_eigenpair(A)
    top = max(top, 0.0)
    if lam == 0.0:
        return Scenario3Solution(0.0, top, np.zeros(A.shape[0], complex), infeasible=True, tie=tie)
    return Scenario3Solution(lam, top, np.sqrt(lam) * v, tie=tie)


def build_qcqp(real: NetworkRealization, spec: InterferenceSpec, A: np.ndarray | None = None) -> QcqpProblem:
    """Assemble the QCQP of the active scenario (``A`` may be passed to reuse work)."""
    if spec.epsilon.size != real.K:
        raise ValueError(f"interference spec has {spec.epsilon.size} links, network has {real.K}")
    A = objective_matrix(real) if A is None else A
    P = real.P_S_max
    if spec.scenario is Scenario.S1:
        return QcqpProblem(A, q_scenario1(real, spec), P, Scenario.S1)
    if spec.scenario is Scenario.S2:
        return QcqpProblem(A, q_scenario2(real, spec), P, Scenario.S2)
    Qs, lam, infeasible = q_scenario3(spec, real.alpha_kS, P, real.M_S)
    sol = scenario3_solve(A, lam)
    meta = {"lambda": lam}
    if infeasible:
        # zero-outage links admit only t = 0; keep the finite matrices for reporting
        meta["zero_delta_links"] = [k for k, d in enumerate(spec.delta) if d == 0.0]
        Qs = [q for q, d in zip(Qs, spec.delta) if d > 0.0]
    return QcqpProblem(A, Qs, P, Scenario.S3, closed_form=sol, meta=meta)
