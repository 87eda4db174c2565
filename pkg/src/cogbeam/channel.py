"""Rayleigh MIMO channels, path loss and primary-system beamformers.

All sampling helpers operate on trailing matrix axes so the same code serves
a single network draw and a batch of ``n`` Monte Carlo draws.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg as sla

from .errors import DegenerateReceiverError, GeometryError, SingularityError
from .linalg import TIE_RTOL, canonical_direction, phase_normalize
from .rng import as_generator

__all__ = [
    "Receiver", "GridPlacement", "NetworkConfig", "PrimaryLink", "NetworkRealization",
    "sample_gaussian_matrix", "normalized_gaussian_vector", "path_loss_gain",
    "primary_tx_beamformer", "receiver_weight_matrix", "primary_rx_beamformer",
    "realize_network", "sample_primary_receivers",
]


class Receiver(str, enum.Enum):
    MF = "MF"
    ZF = "ZF"
    MMSE = "MMSE"


def sample_gaussian_matrix(rng, rows: int, cols: int, size: tuple[int, ...] = ()) -> np.ndarray:
    """I.i.d. CN(0, 1) entries: real and imaginary parts each N(0, 1/2)."""
    gen = as_generator(rng)
    shape = (*size, rows, cols)
    re = gen.standard_normal(shape)
    im = gen.standard_normal(shape)
    return np.sqrt(0.5) * (re + 1j * im)


def normalized_gaussian_vector(rng, n: int, size: tuple[int, ...] = ()) -> np.ndarray:
    """Uniform draw(s) from the complex unit sphere in C^n."""
    gen = as_generator(rng)
    z = sample_gaussian_matrix(gen, 1, n, size)[..., 0, :]
    norms = np.linalg.norm(z, axis=-1)
    while np.any(norms == 0.0):
        bad = norms == 0.0
        z[bad] = sample_gaussian_matrix(gen, 1, n, (int(bad.sum()),))[:, 0, :]
        norms = np.linalg.norm(z, axis=-1)
    return z / norms[..., None]


def path_loss_gain(distance, exponent: float):
    d = np.asarray(distance, dtype=float)
    if np.any(d <= 0) or not np.all(np.isfinite(d)):
        raise GeometryError(f"distances must be positive and finite, got {distance!r}")
    if exponent <= 0:
        raise GeometryError(f"path-loss exponent must be positive, got {exponent!r}")
    g = d ** (-float(exponent))
    return float(g) if g.ndim == 0 else g


def primary_tx_beamformer(H: np.ndarray, P: float, return_tie: bool = False):
    """Transmit along the dominant right singular vector with power ``P``.

    A batch of channels (leading axes) is supported; tie detection is only
    performed for a single matrix.
    """
    H = np.asarray(H, dtype=complex)
    _, s, Vh = np.linalg.svd(H)
    if H.ndim == 2:
        if s[0] == 0:
            raise SingularityError("primary direct channel is identically zero")
        tied = s.size > 1 and (s[0] - s[1]) <= TIE_RTOL * s[0]
        if tied:
            top = np.abs(s - s[0]) <= TIE_RTOL * s[0]
            v = canonical_direction(np.conj(Vh[: top.size][top]).T)
        else:
            v = phase_normalize(np.conj(Vh[0]))
        t = np.sqrt(P) * v
        return (t, bool(tied)) if return_tie else t
    v = phase_normalize(np.conj(Vh[..., 0, :]))
    t = np.sqrt(np.asarray(P, dtype=float))[..., None] * v
    return (t, np.zeros(H.shape[:-2], dtype=bool)) if return_tie else t


def receiver_weight_matrix(kind: Receiver | str, Hhat_minus_k: np.ndarray, N0: float,
                           link: int | None = None) -> np.ndarray:
    """Receive weighting W_k for MF, ZF or MMSE.

    ``Hhat_minus_k`` holds the effective interfering columns, shape
    ``(..., N_k, K-1)``.  With no interferers all three rules collapse to the
    matched filter.
    """
    kind = Receiver(kind)
    H = np.asarray(Hhat_minus_k, dtype=complex)
    N = H.shape[-2]
    eye = np.broadcast_to(np.eye(N, dtype=complex), (*H.shape[:-2], N, N))
    if kind is Receiver.MF or H.shape[-1] == 0:
        return eye.copy()
    Hh = np.conj(np.swapaxes(H, -1, -2))
    if kind is Receiver.ZF:
        gram = Hh @ H
        ev = np.linalg.eigvalsh(gram)
        if np.any(ev[..., 0] <= 1e-12 * np.maximum(ev[..., -1], np.finfo(float).tiny)):
            where = f" on primary link {link}" if link is not None else ""
            raise SingularityError(f"zero-forcing Gram matrix is rank deficient{where}")
        W = eye - H @ np.linalg.solve(gram, Hh)
    else:
        R = H @ Hh + N0 * eye
        if R.ndim == 2:
            W = sla.cho_solve(sla.cho_factor(R, lower=True), np.eye(N, dtype=complex))
        else:
            W = np.linalg.solve(R, eye)
    return 0.5 * (W + np.conj(np.swapaxes(W, -1, -2)))


def primary_rx_beamformer(W: np.ndarray, hhat: np.ndarray, link: int | None = None) -> np.ndarray:
    """r = W hhat / ||W hhat||."""
    v = (W @ hhat[..., None])[..., 0]
    nrm = np.linalg.norm(v, axis=-1)
    scale = np.linalg.norm(W, ord=2, axis=(-2, -1)) * np.linalg.norm(hhat, axis=-1)
    if np.any(nrm < 1e-14 * np.maximum(1.0, scale)):
        where = f" on primary link {link}" if link is not None else ""
        raise DegenerateReceiverError(f"receive weighting annihilates the desired signal{where}")
    return v / nrm[..., None]


@dataclass
class GridPlacement:
    """Random placement of the secondary link among fixed primary nodes (x, y in meters)."""

    area: tuple[float, float]
    primary_rx: list[tuple[float, float]]
    primary_tx: list[tuple[float, float]]
    link_length: float = 10.0
    min_distance: float = 1.0

    def sample(self, gen: np.random.Generator):
        w, h = self.area
        stx = gen.uniform((0.0, 0.0), (w, h))
        phi = gen.uniform(0.0, 2 * np.pi)
        srx = stx + self.link_length * np.array([np.cos(phi), np.sin(phi)])
        prx = np.asarray(self.primary_rx, dtype=float)
        ptx = np.asarray(self.primary_tx, dtype=float)
        d_kS = np.maximum(np.linalg.norm(prx - stx, axis=1), self.min_distance)
        d_Sk = np.maximum(np.linalg.norm(ptx - srx, axis=1), self.min_distance)
        return stx, srx, d_kS, d_Sk

    def primary_distances(self) -> np.ndarray:
        prx = np.asarray(self.primary_rx, dtype=float)
        ptx = np.asarray(self.primary_tx, dtype=float)
        d = np.linalg.norm(prx[:, None, :] - ptx[None, :, :], axis=2)
        return np.maximum(d, self.min_distance)


@dataclass
class NetworkConfig:
    """Static description of one secondary link and K primary links.

    ``d_kj[k][j]`` is the distance from primary transmitter j to primary
    receiver k (diagonal: primary link lengths).  When ``placement`` is set,
    the secondary-related distances are redrawn for every realization.
    """

    M_S: int
    N_S: int
    M: list[int]
    N: list[int]
    P: list[float]
    P_S_max: float
    receivers: list[Receiver]
    d_SS: float
    d_kS: list[float]
    d_Sk: list[float]
    d_kj: list[list[float]]
    path_loss_exponent: float = 4.0
    N0: float = 1.0
    placement: GridPlacement | None = None

    def __post_init__(self):
        K = len(self.M)
        self.receivers = [Receiver(r) for r in self.receivers]
        for name in ("N", "P", "receivers", "d_kS", "d_Sk"):
            if len(getattr(self, name)) != K:
                raise GeometryError(f"{name} must have {K} entries")
        if np.asarray(self.d_kj, dtype=float).reshape(-1).size != K * K:
            raise GeometryError(f"d_kj must be {K}x{K}")
        if min([self.M_S, self.N_S, *self.M, *self.N]) < 1:
            raise GeometryError("antenna counts must be >= 1")
        if self.N0 <= 0 or self.P_S_max <= 0 or any(p <= 0 for p in self.P):
            raise GeometryError("powers and noise level must be positive")
        path_loss_gain(np.asarray([self.d_SS, *self.d_kS, *self.d_Sk, 1.0], dtype=float),
                       self.path_loss_exponent)
        if K:
            path_loss_gain(np.asarray(self.d_kj, dtype=float), self.path_loss_exponent)

    @property
    def K(self) -> int:
        return len(self.M)


@dataclass
class PrimaryLink:
    M: int
    N: int
    P: float
    receiver: Receiver
    H_kk: np.ndarray
    t: np.ndarray
    r: np.ndarray
    tx_tie: bool = False


@dataclass
class NetworkRealization:
    config: NetworkConfig
    H_SS: np.ndarray
    primaries: list[PrimaryLink]
    H_kS: list[np.ndarray]
    H_Sk: list[np.ndarray]
    H_kj: list[list[np.ndarray]]
    alpha_SS: float
    alpha_kS: np.ndarray
    alpha_Sk: np.ndarray
    alpha_kj: np.ndarray
    N0: float
    positions: dict = field(default_factory=dict)

    @property
    def K(self) -> int:
        return len(self.primaries)

    @property
    def M_S(self) -> int:
        return self.config.M_S

    @property
    def P_S_max(self) -> float:
        return self.config.P_S_max


def _effective_columns(H_kj_row, t_list, alpha_row):
    return [np.sqrt(a) * (H @ t) for H, t, a in zip(H_kj_row, t_list, alpha_row)]


def realize_network(config: NetworkConfig, stream) -> NetworkRealization:
    """Draw every channel of the network and the resulting primary beamformers.

    Draw order is fixed (placement, H_SS, H_kS, H_Sk, H_kj row-major) so a
    realization is a pure function of ``(config, stream)``.
    """
    gen = as_generator(stream)
    K = config.K
    positions = {}
    d_SS, d_kS, d_Sk = config.d_SS, np.asarray(config.d_kS, float), np.asarray(config.d_Sk, float)
    d_kj = np.asarray(config.d_kj, dtype=float).reshape(K, K)
    if config.placement is not None:
        stx, srx, d_kS, d_Sk = config.placement.sample(gen)
        d_SS = config.placement.link_length
        positions = {"secondary_tx": stx, "secondary_rx": srx}

    H_SS = sample_gaussian_matrix(gen, config.N_S, config.M_S)
    H_kS = [sample_gaussian_matrix(gen, config.N[k], config.M_S) for k in range(K)]
    H_Sk = [sample_gaussian_matrix(gen, config.N_S, config.M[k]) for k in range(K)]
    H_kj = [[sample_gaussian_matrix(gen, config.N[k], config.M[j]) for j in range(K)]
            for k in range(K)]

    exp = config.path_loss_exponent
    alpha_kj = path_loss_gain(d_kj, exp) if K else np.zeros((0, 0))
    alpha_kj = np.asarray(alpha_kj, dtype=float).reshape(K, K)

    t_list, ties = [], []
    for j in range(K):
        try:
            t, tie = primary_tx_beamformer(H_kj[j][j], config.P[j], return_tie=True)
        except SingularityError as exc:
            raise SingularityError(f"primary link {j}: {exc}") from exc
        t_list.append(t)
        ties.append(tie)

    primaries = []
    for k in range(K):
        cols = _effective_columns(H_kj[k], t_list, alpha_kj[k])
        others = [c for j, c in enumerate(cols) if j != k]
        Hminus = np.stack(others, axis=1) if others else np.zeros((config.N[k], 0), complex)
        W = receiver_weight_matrix(config.receivers[k], Hminus, config.N0, link=k)
        r = primary_rx_beamformer(W, cols[k], link=k)
        primaries.append(PrimaryLink(config.M[k], config.N[k], config.P[k], config.receivers[k],
                                     H_kj[k][k], t_list[k], r, ties[k]))

    return NetworkRealization(
        config=config, H_SS=H_SS, primaries=primaries, H_kS=H_kS, H_Sk=H_Sk, H_kj=H_kj,
        alpha_SS=path_loss_gain(d_SS, exp),
        alpha_kS=np.atleast_1d(path_loss_gain(d_kS, exp)) if K else np.zeros(0),
        alpha_Sk=np.atleast_1d(path_loss_gain(d_Sk, exp)) if K else np.zeros(0),
        alpha_kj=alpha_kj, N0=config.N0, positions=positions,
    )


def sample_primary_receivers(config: NetworkConfig, k: int, n: int, stream) -> np.ndarray:
    """Draw ``n`` independent receive beamformers r_k of primary link ``k``.

    Every draw resamples the primary-internal channels H_jj and H_kj, hence
    fresh t_j, effective columns and W_k.  Returns shape ``(n, N_k)``.
    """
    gen = as_generator(stream)
    K = config.K
    d_kj = np.asarray(config.d_kj, dtype=float).reshape(K, K)
    if config.placement is not None:
        d_kj = config.placement.primary_distances()
    alpha_k = np.atleast_1d(path_loss_gain(d_kj[k], config.path_loss_exponent))
    cols = []
    for j in range(K):
        H_jj = sample_gaussian_matrix(gen, config.N[j], config.M[j], (n,))
        t_j = primary_tx_beamformer(H_jj, np.full(n, config.P[j]))
        H_kj = H_jj if j == k else sample_gaussian_matrix(gen, config.N[k], config.M[j], (n,))
        cols.append(np.sqrt(alpha_k[j]) * (H_kj @ t_j[..., None])[..., 0])
    others = [c for j, c in enumerate(cols) if j != k]
    Nk = config.N[k]
    Hminus = np.stack(others, axis=-1) if others else np.zeros((n, Nk, 0), complex)
    W = receiver_weight_matrix(config.receivers[k], Hminus, config.N0, link=k)
    return primary_rx_beamformer(W, cols[k], link=k)
