"""Independent oracles: Monte Carlo outage, exhaustive QCQP search, isotropy tests."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize, stats

from .channel import NetworkConfig, NetworkRealization, Receiver, normalized_gaussian_vector, \
    sample_gaussian_matrix, sample_primary_receivers
from .errors import UnsupportedDimensionError
from .problem import QcqpProblem, Scenario, chance_factor
from .rng import as_generator

__all__ = [
    "OutageEstimate", "mc_outage", "boundary_outage", "brute_force_qcqp", "isotropy_gof",
    "beta_gof", "isotropy_config", "MIN_OUTAGE_SAMPLES", "MIN_GOF_SAMPLES",
]

MIN_OUTAGE_SAMPLES = 1000
MIN_GOF_SAMPLES = 10_000


@dataclass
class OutageEstimate:
    p_hat: float
    n_samples: int
    target_delta: float = math.nan

    @property
    def std_err(self) -> float:
        return math.sqrt(self.p_hat * (1.0 - self.p_hat) / self.n_samples)

    def within(self, n_sigma: float = 3.0) -> bool:
        """Does the target lie inside ``n_sigma`` standard errors of the estimate?

        A zero standard error (estimate of exactly 0 or 1) falls back to the
        binomial error at the target itself.
        """
        se = self.std_err or math.sqrt(self.target_delta * (1 - self.target_delta) / self.n_samples)
        return abs(self.p_hat - self.target_delta) <= n_sigma * se


def _check_samples(n: int):
    if n < MIN_OUTAGE_SAMPLES:
        raise ValueError(f"at least {MIN_OUTAGE_SAMPLES} samples are needed for a usable estimate, got {n}")


def mc_outage(t, scenario, realization: NetworkRealization, epsilon: float, n_samples: int, stream,
              link: int = 0, target_delta: float = math.nan) -> OutageEstimate:
    """Empirical Pr{alpha |r^H H t|^2 > epsilon} at primary receiver ``link``.

    Scenario S1 keeps both r and H fixed, S2 redraws r only (fresh primary
    channels and receive weighting per sample), S3 redraws r and H.
    """
    _check_samples(n_samples)
    scenario = Scenario(scenario)
    t = np.asarray(t, dtype=complex)
    gen = as_generator(stream)
    cfg = realization.config
    alpha = realization.alpha_kS[link]
    H = realization.H_kS[link]
    if scenario is Scenario.S1:
        r = np.broadcast_to(realization.primaries[link].r, (n_samples, cfg.N[link]))
    else:
        r = sample_primary_receivers(cfg, link, n_samples, gen)
    if scenario is Scenario.S3:
        Hs = sample_gaussian_matrix(gen, cfg.N[link], cfg.M_S, (n_samples,))
        u = Hs @ t
    else:
        u = np.broadcast_to(H @ t, (n_samples, cfg.N[link]))
    power = alpha * np.abs(np.sum(np.conj(r) * u, axis=-1)) ** 2
    p = float(np.mean(power > epsilon))
    return OutageEstimate(p, n_samples, target_delta)


def boundary_outage(n: int, delta: float, n_samples: int, stream) -> OutageEstimate:
    """Outage of an isotropic receiver against a vector on the chance-constraint boundary.

    With ``||u||^2 = zeta * chance_factor(n, delta)`` the event
    ``|r^H u|^2 > zeta`` should occur with probability exactly ``delta``.
    """
    _check_samples(n_samples)
    gen = as_generator(stream)
    zeta = 1.0
    u = np.zeros(n, complex)
    u[0] = math.sqrt(zeta * chance_factor(n, delta))
    # a random rotation of u guards against axis-aligned artefacts
    u = u[0] * normalized_gaussian_vector(gen, n)
    r = normalized_gaussian_vector(gen, n, (n_samples,))
    p = float(np.mean(np.abs(r @ u.conj()) ** 2 > zeta))
    return OutageEstimate(p, n_samples, delta)


def _directions(m: int, res: int) -> tuple[np.ndarray, list[np.ndarray]]:
    """Grid of unit vectors (cos th, e^{i ph} sin th [...]) and the grid parameters."""
    if m == 1:
        return np.ones((1, 1), complex), []
    th = np.linspace(0.0, 0.5 * np.pi, res)
    ph = np.linspace(0.0, 2 * np.pi, res, endpoint=False)
    if m == 2:
        T, P = np.meshgrid(th, ph, indexing="ij")
        U = np.stack([np.cos(T), np.exp(1j * P) * np.sin(T)], axis=-1).reshape(-1, 2)
        return U, [T.ravel(), P.ravel()]
    T1, T2, P1, P2 = np.meshgrid(th, th, ph, ph, indexing="ij")
    U = np.stack([np.cos(T1), np.exp(1j * P1) * np.sin(T1) * np.cos(T2),
                  np.exp(1j * P2) * np.sin(T1) * np.sin(T2)], axis=-1).reshape(-1, 3)
    return U, [T1.ravel(), T2.ravel(), P1.ravel(), P2.ravel()]


def _param_to_dir(x: np.ndarray, m: int) -> np.ndarray:
    if m == 2:
        return np.array([math.cos(x[0]), np.exp(1j * x[1]) * math.sin(x[0])])
    s1 = math.sin(x[0])
    return np.array([math.cos(x[0]), np.exp(1j * x[2]) * s1 * math.cos(x[1]),
                     np.exp(1j * x[3]) * s1 * math.sin(x[1])])


def _best_value(U: np.ndarray, problem: QcqpProblem) -> tuple[np.ndarray, np.ndarray]:
    """Objective and squared amplitude of the largest feasible multiple of each direction."""
    quad = lambda M: np.real(np.einsum("ni,ij,nj->n", np.conj(U), M, U))
    amp2 = np.full(U.shape[0], problem.P_max)
    for q in problem.Q:
        load = quad(q)
        with np.errstate(divide="ignore"):
            amp2 = np.minimum(amp2, np.where(load > 0, 1.0 / load, np.inf))
    return amp2 * quad(problem.A), amp2


def brute_force_qcqp(problem: QcqpProblem, grid_resolution: int = 100, polish: bool = True):
    """Exhaustive search over directions with the amplitude set to its feasible maximum.

    For a fixed unit direction u the best amplitude is available in closed
    form, ``min(P_max, min_k 1 / u^H Q_k u)``, so only the sphere is gridded.
    The best grid point is refined with Nelder-Mead.

    Returns
    -------
    t : best beamformer found
    objective : its objective value (a lower bound on the true optimum)
    """
    m = problem.m
    if m > 3:
        raise UnsupportedDimensionError(f"exhaustive search supports up to 3 antennas, got {m}")
    res = grid_resolution if m <= 2 else max(8, int(round(grid_resolution ** 0.5)) * 3)
    U, params = _directions(m, res)
    vals, amp2 = _best_value(U, problem)
    i = int(np.argmax(vals))
    best_u, best_val, best_amp2 = U[i], float(vals[i]), float(amp2[i])
    if polish and params:
        x0 = np.array([p[i] for p in params])

        def neg(x):
            v, _ = _best_value(_param_to_dir(x, m)[None, :], problem)
            return -float(v[0])

        span = np.array([0.5 * np.pi / res] * (len(x0) // 2) + [2 * np.pi / res] * (len(x0) // 2))
        simplex = np.vstack([x0, x0 + np.diag(span)])
        out = optimize.minimize(neg, x0, method="Nelder-Mead",
                                options={"initial_simplex": simplex, "xatol": 1e-10, "fatol": 1e-14 * abs(best_val) + 1e-300,
                                         "maxiter": 4000})
        if -out.fun > best_val:
            best_u = _param_to_dir(out.x, m)
            v, a2 = _best_value(best_u[None, :], problem)
            best_val, best_amp2 = float(v[0]), float(a2[0])
    t = math.sqrt(best_amp2) * best_u
    return t, best_val


def beta_gof(vectors: np.ndarray) -> float:
    """KS p-value of |first entry|^2 of unit vectors against Beta(1, n-1)."""
    v = np.asarray(vectors)
    n = v.shape[-1]
    x = np.abs(v[:, 0]) ** 2
    return float(stats.kstest(x, "beta", args=(1, n - 1)).pvalue)


def isotropy_config(receiver_kind, N_k: int, K: int, snr_db: float = 20.0) -> NetworkConfig:
    """Primary-only network used to probe the receive-beamformer distribution."""
    P = 10.0 ** (snr_db / 10.0) * 10.0 ** 4
    d = [[10.0 if i == j else 20.0 for j in range(K)] for i in range(K)]
    return NetworkConfig(M_S=1, N_S=1, M=[N_k] * K, N=[N_k] * K, P=[P] * K, P_S_max=1.0,
                         receivers=[Receiver(receiver_kind)] * K, d_SS=10.0, d_kS=[20.0] * K,
                         d_Sk=[20.0] * K, d_kj=d)


def isotropy_gof(receiver_kind, N_k: int, K: int, n_samples: int, stream) -> float:
    """KS p-value of |[r_1]_1|^2 against Beta(1, N_k - 1) for sampled primary receivers."""
    if n_samples < MIN_GOF_SAMPLES:
        raise ValueError(f"goodness of fit needs at least {MIN_GOF_SAMPLES} samples, got {n_samples}")
    if N_k < 2:
        raise UnsupportedDimensionError("the Beta(1, N-1) law needs N >= 2")
    cfg = isotropy_config(receiver_kind, N_k, K)
    r = sample_primary_receivers(cfg, 0, n_samples, stream)
    return beta_gof(r)
