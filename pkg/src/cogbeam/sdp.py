"""Dense primal-dual interior-point solver for small Hermitian SDPs.

Solves

    maximize    tr(C X)
    subject to  tr(G_i X) <= b_i,   i = 1..p
                X Hermitian PSD

together with its dual

    minimize    sum_i b_i y_i
    subject to  S = sum_i y_i G_i - C  PSD,   y >= 0.

The Hermitian problem is mapped to a real symmetric one of twice the size
(``embed_complex_to_real``) and handled by an infeasible path-following method
with slack variables for the inequalities, the HKM search direction and a
Mehrotra predictor-corrector.  The real data are halved so that traces read
in the complex convention: ``tr(C_r X_r) = tr(C X)`` when ``X_r = emb(X)``.
"""
from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg as sla

from .linalg import hermitian, is_hermitian, lambda_min, psd_project

log = logging.getLogger(__name__)

__all__ = [
    "SdpInstance", "SdpTolerances", "SdpStatus", "SdpSolution", "KktReport", "SlaterCertificate",
    "embed_complex_to_real", "extract_complex_solution", "solve_sdp", "kkt_verify",
    "slater_certificate",
]


@dataclass
class SdpInstance:
    C: np.ndarray
    G: list[np.ndarray]
    b: np.ndarray

    def __post_init__(self):
        self.C = np.asarray(self.C, dtype=complex)
        self.G = [np.asarray(g, dtype=complex) for g in self.G]
        self.b = np.asarray(self.b, dtype=float).reshape(-1)
        m = self.C.shape[0]
        if self.C.shape != (m, m) or any(g.shape != (m, m) for g in self.G):
            raise ValueError("all SDP matrices must be square with equal dimension")
        if len(self.G) != self.b.size:
            raise ValueError("one bound per constraint matrix is required")
        for name, M in [("C", self.C), *[(f"G[{i}]", g) for i, g in enumerate(self.G)]]:
            if not is_hermitian(M):
                raise ValueError(f"{name} is not Hermitian")
        if not np.all(np.isfinite(self.b)) or np.any(self.b <= 0):
            raise ValueError("constraint bounds must be finite and positive")
        self.C = hermitian(self.C)
        self.G = [hermitian(g) for g in self.G]

    @property
    def m(self) -> int:
        return self.C.shape[0]

    @property
    def p(self) -> int:
        return len(self.G)

    @classmethod
    def from_qcqp(cls, problem) -> "SdpInstance":
        """Relaxation of a :class:`~cogbeam.problem.QcqpProblem` (power budget last)."""
        G = [*problem.Q, np.eye(problem.m, dtype=complex)]
        b = [1.0] * problem.K + [problem.P_max]
        return cls(problem.A, G, np.array(b))


@dataclass
class SdpTolerances:
    gap_tol: float = 1e-7
    feas_tol: float = 1e-8
    max_iter: int = 200


class SdpStatus(str, enum.Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    NUMERICAL_TROUBLE = "NumericalTrouble"


@dataclass
class KktReport:
    primal_feas: float
    dual_feas: float
    comp_X: float
    comp_y: np.ndarray
    scale: float
    min_multiplier: float = 0.0
    tol: float = 1e-6

    @property
    def passed(self) -> bool:
        bound = self.tol * (1.0 + self.scale)
        return bool(self.primal_feas <= bound and -self.dual_feas <= bound and self.min_multiplier >= -bound
                     and self.comp_X <= bound and np.all(self.comp_y <= bound))

    def as_dict(self) -> dict:
        return {"primal_feas": self.primal_feas, "dual_feas": self.dual_feas,
                "comp_X": self.comp_X, "comp_y": [float(c) for c in self.comp_y],
                "scale": self.scale, "min_multiplier": self.min_multiplier, "passed": self.passed}


@dataclass
class SdpSolution:
    X: np.ndarray
    y: np.ndarray
    primal_value: float
    dual_value: float
    iterations: int
    status: SdpStatus
    projection_distance: float = 0.0
    kkt: KktReport | None = None
    history: list = field(default_factory=list, repr=False)

    @property
    def gap(self) -> float:
        return self.dual_value - self.primal_value


@dataclass
class SlaterCertificate:
    X: np.ndarray
    y: np.ndarray
    primal_margin: float
    dual_margin: float


def embed_complex_to_real(M: np.ndarray) -> np.ndarray:
    """[[Re M, -Im M], [Im M, Re M]] for Hermitian M."""
    M = np.asarray(M, dtype=complex)
    if not is_hermitian(M, rtol=1e-10):
        raise ValueError("embedding requires a Hermitian matrix")
    re, im = M.real, M.imag
    return np.block([[re, -im], [im, re]])


def extract_complex_solution(X_r: np.ndarray) -> np.ndarray:
    """Inverse of the embedding; averages the two copies of each block."""
    X_r = np.asarray(X_r, dtype=float)
    m = X_r.shape[0] // 2
    A, B = X_r[:m, :m], X_r[:m, m:]
    C, D = X_r[m:, :m], X_r[m:, m:]
    return hermitian((A + D) / 2 + 1j * (C - B) / 2)


def _sym(M):
    return 0.5 * (M + M.T)


def _max_step(X, dX):
    """Largest alpha with X + alpha dX PSD (X positive definite)."""
    L = np.linalg.cholesky(X)
    Li = sla.solve_triangular(L, np.eye(L.shape[0]), lower=True)
    ev = np.linalg.eigvalsh(_sym(Li @ dX @ Li.T))
    return np.inf if ev[0] >= 0 else -1.0 / ev[0]


def _max_step_vec(x, dx):
    neg = dx < 0
    return np.inf if not np.any(neg) else float(np.min(-x[neg] / dx[neg]))


def _ipm(Cr, Ar, bvec, tol_gap, tol_feas, max_iter, value_unit=1.0):
    """Core solver on scaled real data: max <C,X> s.t. <A_i,X> + s_i = b_i.

    ``value_unit`` is the size of one unit of the original objective in scaled
    units; the gap test reads ``gap <= tol_gap * (value_unit + |value|)``.
    """
    n, p = Cr.shape[0], len(Ar)
    Astack = np.stack(Ar)
    I = np.eye(n)
    X = I.copy()
    s = np.maximum(bvec - np.einsum("iab,ab->i", Astack, X), 1.0)
    y = np.ones(p)
    S = (1.0 + np.linalg.norm(Cr, 2) + np.sum(np.linalg.norm(Astack, 2, axis=(1, 2)))) * I
    nu = n + p
    normC = 1.0 + np.linalg.norm(Cr)
    stall = 0

    best = None
    history = []
    status = SdpStatus.NUMERICAL_TROUBLE
    it = 0
    for it in range(1, max_iter + 1):
        AX = np.einsum("iab,ab->i", Astack, X)
        rp = bvec - AX - s
        Rd = np.einsum("i,iab->ab", y, Astack) - Cr - S
        pobj = float(np.sum(Cr * X))
        dobj = float(bvec @ y)
        mu = (float(np.sum(X * S)) + float(s @ y)) / nu
        relgap = abs(dobj - pobj) / (value_unit + abs(pobj))
        pinf = float(np.max(np.abs(rp) / bvec))
        dinf = float(np.linalg.norm(Rd)) / normC
        merit = max(relgap / tol_gap, pinf / tol_feas, dinf / tol_feas)
        history.append((pobj, dobj, relgap, pinf, dinf))
        if best is None or merit < 0.9 * best[0]:
            stall = 0
        else:
            stall += 1
        if best is None or merit < best[0]:
            best = (merit, X.copy(), y.copy(), it)
        if stall >= 15:
            log.debug("no progress for %d iterations", stall)
            break
        if merit <= 1.0:
            status = SdpStatus.OPTIMAL
            break
        try:
            Sinv = sla.cho_solve(sla.cho_factor(S, lower=True), I)
            Sinv = _sym(Sinv)
            XA = np.einsum("ab,ibc->iac", X, Astack)            # X A_j
            XASi = np.einsum("iab,bc->iac", XA, Sinv)            # X A_j S^-1
            M = np.einsum("iab,jba->ij", Astack, XASi)           # tr(A_i X A_j S^-1)
            M = 0.5 * (M + M.T) + np.diag(s / y)
            Mfac = sla.cho_factor(M, lower=True)
        except (np.linalg.LinAlgError, ValueError):
            log.debug("factorization failed at iteration %d", it)
            break

        XRdSi = X @ Rd @ Sinv

        def direction(sigma, corrX=None, corr_s=None):
            target = sigma * mu
            T = target * Sinv - X - XRdSi
            if corrX is not None:
                T = T - corrX
            rhs = np.einsum("iab,ba->i", Astack, T) + (target - s * y) / y - rp
            if corr_s is not None:
                rhs -= corr_s / y
            dy = sla.cho_solve(Mfac, rhs)
            dy += sla.cho_solve(Mfac, rhs - M @ dy)  # one refinement step
            dS = _sym(np.einsum("i,iab->ab", dy, Astack) + Rd)
            # dS already carries the dual residual, so add back the term folded into T
            dX = _sym(T + XRdSi - X @ dS @ Sinv)
            num = target - s * y - s * dy
            if corr_s is not None:
                num -= corr_s
            ds = num / y
            return dX, ds, dy, dS

        dXa, dsa, dya, dSa = direction(0.0)
        try:
            ap = min(1.0, _max_step(X, dXa), _max_step_vec(s, dsa))
            ad = min(1.0, _max_step(S, dSa), _max_step_vec(y, dya))
        except np.linalg.LinAlgError:
            break
        mu_aff = (float(np.sum((X + ap * dXa) * (S + ad * dSa)))
                  + float((s + ap * dsa) @ (y + ad * dya))) / nu
        sigma = min(1.0, (mu_aff / mu) ** 3)
        corrX = dXa @ dSa @ Sinv
        dX, ds, dy, dS = direction(sigma, corrX=corrX, corr_s=dsa * dya)
        try:
            eta = 0.98 if mu > 1e-6 else 0.995
            ap = min(1.0, eta * _max_step(X, dX), eta * _max_step_vec(s, ds))
            ad = min(1.0, eta * _max_step(S, dS), eta * _max_step_vec(y, dy))
        except np.linalg.LinAlgError:
            break
        if max(ap, ad) < 1e-12:
            break
        X = _sym(X + ap * dX)
        s = s + ap * ds
        S = _sym(S + ad * dS)
        y = y + ad * dy
    else:
        it = max_iter

    if status is SdpStatus.OPTIMAL:
        return X, y, it, status, history
    _, Xb, yb, _ = best
    return Xb, yb, it, status, history


def solve_sdp(instance: SdpInstance, tolerances: SdpTolerances | None = None) -> SdpSolution:
    """Solve the Hermitian SDP and its dual; see module docstring for the form."""
    tol = tolerances or SdpTolerances()
    G, b, C = instance.G, instance.b, instance.C
    if not any(lambda_min(g) > 0 for g in G):
        raise ValueError("at least one constraint matrix must be positive definite")

    # X = tau * Xbar with tau set by the trace bound of the positive definite
    # constraints, so the feasible Xbar have trace at most m.  Constraint rows
    # and the objective are normalized to unit Frobenius norm.
    lmins = np.array([lambda_min(g) for g in G])
    pd = lmins > 0
    tau = float(np.min(b[pd] / lmins[pd])) / instance.m
    norms = np.array([np.linalg.norm(tau * g) for g in G])
    Gs = [tau * g / nrm for g, nrm in zip(G, norms)]
    c_scale = float(np.linalg.norm(tau * C)) or 1.0
    Cs = tau * C / c_scale

    Cr = 0.5 * embed_complex_to_real(Cs)
    Ar = [0.5 * embed_complex_to_real(g) for g in Gs]
    Xr, ybar, iters, status, history = _ipm(Cr, Ar, b / norms, 0.1 * tol.gap_tol,
                                            0.1 * tol.feas_tol, tol.max_iter, 1.0 / c_scale)

    X_raw = tau * extract_complex_solution(Xr)
    X, dist = psd_project(X_raw)
    y = ybar * c_scale / norms
    primal = float(np.real(np.sum(C * X.T)))
    dual = float(b @ y)
    sol = SdpSolution(X=X, y=y, primal_value=primal, dual_value=dual, iterations=iters,
                      status=status, projection_distance=dist, history=history)
    sol.kkt = kkt_verify(instance, sol)
    scale = 1.0 + abs(primal)
    ok = (sol.gap <= tol.gap_tol * scale and sol.gap >= -tol.gap_tol * scale
          and sol.kkt.primal_feas <= tol.feas_tol
          and sol.kkt.dual_feas >= -tol.feas_tol * min(1.0, _dual_scale(instance, y))
          and sol.kkt.min_multiplier >= -1e-12)
    # the unscaled certificate decides; the internal target is only a stopping rule
    if ok != (status is SdpStatus.OPTIMAL):
        log.debug("internal status %s overridden by certificate (gap=%g)", status.value, sol.gap)
    sol.status = SdpStatus.OPTIMAL if ok else SdpStatus.NUMERICAL_TROUBLE
    return sol


def _dual_scale(instance: SdpInstance, y: np.ndarray) -> float:
    terms = [np.linalg.norm(instance.C, 2)] + [yi * np.linalg.norm(g, 2) for yi, g in zip(y, instance.G)]
    return max(max(terms), np.finfo(float).tiny)


def kkt_verify(instance: SdpInstance, solution: SdpSolution, tol: float = 1e-6) -> KktReport:
    """Residuals of feasibility and complementarity for a primal-dual pair.

    ``primal_feas`` is the largest violation ``(tr(G_i X) - b_i) / b_i``
    (negative eigenvalues of X count too); the other residuals are raw.
    """
    X, y = solution.X, np.asarray(solution.y, dtype=float)
    vals = np.array([np.real(np.sum(g * X.T)) for g in instance.G])
    viol = np.max((vals - instance.b) / instance.b, initial=0.0)
    trX = max(np.trace(X).real, np.finfo(float).tiny)
    viol = max(viol, 0.0, -lambda_min(X) / trX)
    S = hermitian(sum((yi * g for yi, g in zip(y, instance.G)), np.zeros_like(instance.C)) - instance.C)
    dual_feas = lambda_min(S)
    comp_X = abs(float(np.real(np.sum(X * S.T))))
    comp_y = np.abs(y * (vals - instance.b))
    return KktReport(primal_feas=float(viol), dual_feas=dual_feas, comp_X=comp_X, comp_y=comp_y,
                     scale=float(abs(solution.primal_value)), min_multiplier=float(np.min(y, initial=0.0)),
                     tol=tol)


def slater_certificate(instance: SdpInstance, margin: float = 1.0) -> SlaterCertificate:
    """Strictly feasible primal and dual points.

    Primal: ``X = c I`` with every trace bound met at half its level.
    Dual: unit weight ``1e-3`` on every constraint plus enough weight on the
    best-conditioned positive definite constraint to make ``S >= margin I``.
    """
    G, b, C = instance.G, instance.b, instance.C
    traces = np.array([np.trace(g).real for g in G])
    pos = traces > 0
    if not np.any(pos):
        raise ValueError("no constraint bounds the trace; a strictly feasible scaling does not exist")
    c = 0.5 * float(np.min(b[pos] / traces[pos]))
    X = c * np.eye(instance.m, dtype=complex)
    levels = traces * c
    primal_margin = float(np.min(1.0 - levels / b))

    mins = np.array([lambda_min(g) for g in G])
    j = int(np.argmax(mins / np.array([np.linalg.norm(g, 2) for g in G])))
    if mins[j] <= 0:
        raise ValueError("no positive definite constraint; dual strict feasibility cannot be certified")
    y = np.full(len(G), 1e-3)
    lam_c = float(np.linalg.eigvalsh(C)[-1])
    y[j] = max(lam_c + margin, margin) / mins[j]
    S = sum(yi * g for yi, g in zip(y, G)) - C
    dual_margin = lambda_min(S)
    if primal_margin < 0.1 or dual_margin < 0.999 * margin:
        raise ValueError("Slater certificate failed numerical verification")
    return SlaterCertificate(X=X, y=y, primal_margin=primal_margin, dual_margin=dual_margin)
