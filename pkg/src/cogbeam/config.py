"""Experiment configuration documents (JSON) and the built-in network presets.

A document may name a ``preset``; its fields are expanded first and any
field given explicitly in the document overrides the preset value.

Example
-------
>>> doc = {"preset": "k2_paper", "interference": {"scenario": "S2", "epsilon_over_N0_db": 3}}
>>> cfg = parse_config(doc)
>>> cfg.network.K, cfg.interference.scenario.value
(2, 'S2')
"""
from __future__ import annotations

import copy
import json
import math
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .channel import GridPlacement, NetworkConfig, Receiver, path_loss_gain
from .errors import ConfigError, GeometryError
from .problem import InterferenceSpec, Scenario
from .sdp import SdpTolerances

__all__ = ["ExperimentConfig", "PRESETS", "preset_document", "parse_config", "load_config",
           "resolve_seed", "snr_to_power", "SEED_ENV"]

SEED_ENV = "COGBEAM_SEED"

_LINK = 10.0       # secondary and primary link length (m)
_CROSS = 20.0      # assumed distance between non-matching primary nodes in the line presets (m)


def _line_preset(d_kS, d_Sk):
    K = len(d_kS)
    return {
        "antennas": {"M_S": 4, "N_S": 4, "M_k": [4] * K, "N_k": [4] * K},
        "distances": {"d_SS": _LINK, "d_kS": list(d_kS), "d_Sk": list(d_Sk),
                      "d_kj": [[_LINK if i == j else _CROSS for j in range(K)] for i in range(K)]},
        "path_loss_exponent": 4.0,
        "powers": {"snr_db": 10.0},
        "N0": 1.0,
        "receiver_kinds": ["MMSE"] * K,
        "interference": {"scenario": "S1", "epsilon_over_N0_db": 5.0, "delta": 0.01},
    }


def _grid_preset():
    rx = [[x, y] for y in (0.0, 20.0, 40.0) for x in (0.0, 30.0, 60.0)]
    tx = [[x + _LINK, y] for x, y in rx]
    doc = _line_preset([_CROSS] * 9, [_CROSS] * 9)
    doc["placement"] = {"area": [70.0, 40.0], "primary_rx": rx, "primary_tx": tx,
                        "link_length": _LINK, "min_distance": 1.0}
    doc["distances"].pop("d_kj")
    return doc


PRESETS = {
    "k2_paper": lambda: _line_preset([15.0, 13.0], [12.4, 12.7]),
    "k4_paper": lambda: _line_preset([20.0, 18.0, 15.0, 13.0], [16.0, 14.0, 12.4, 13.2]),
    "grid9_paper": _grid_preset,
}


def preset_document(name: str) -> dict:
    try:
        return PRESETS[name]()
    except KeyError:
        raise ConfigError(f"preset: unknown preset {name!r}; choose from {sorted(PRESETS)}") from None


def snr_to_power(snr_db: float, d_SS: float, exponent: float, N0: float) -> float:
    """Transmit power giving the requested mean per-antenna SNR without interference."""
    return N0 * 10.0 ** (snr_db / 10.0) / path_loss_gain(d_SS, exponent)


@dataclass
class ExperimentConfig:
    network: NetworkConfig
    interference: InterferenceSpec
    epsilon_over_N0_db: np.ndarray
    sdp: SdpTolerances
    draws: int = 100
    seed: int = 0
    preset: str | None = None

    def with_interference(self, scenario=None, epsilon_over_N0_db=None, delta=None) -> InterferenceSpec:
        sc = self.interference.scenario if scenario is None else Scenario(scenario)
        eps = self.epsilon_over_N0_db if epsilon_over_N0_db is None else epsilon_over_N0_db
        dl = self.interference.delta if delta is None else delta
        return InterferenceSpec.from_db(sc, eps, dl, self.network.N0, self.network.K)


def _merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in override.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


class _Reader:
    """Typed field access that reports failures with their dotted path."""

    def __init__(self, doc: dict, path: str = ""):
        if not isinstance(doc, dict):
            raise ConfigError(f"{path or 'document'}: expected an object, got {type(doc).__name__}")
        self.doc, self.path = doc, path

    def _name(self, key):
        return f"{self.path}.{key}" if self.path else key

    def sub(self, key, required=True) -> "_Reader":
        if key not in self.doc:
            if required:
                raise ConfigError(f"{self._name(key)}: missing required section")
            return _Reader({}, self._name(key))
        return _Reader(self.doc[key], self._name(key))

    def number(self, key, default=None, positive=False, integer=False, minimum=None):
        if key not in self.doc:
            if default is None:
                raise ConfigError(f"{self._name(key)}: missing required field")
            return default
        v = self.doc[key]
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            raise ConfigError(f"{self._name(key)}: expected a finite number, got {v!r}")
        if integer and int(v) != v:
            raise ConfigError(f"{self._name(key)}: expected an integer, got {v!r}")
        if positive and v <= 0:
            raise ConfigError(f"{self._name(key)}: must be positive, got {v!r}")
        if minimum is not None and v < minimum:
            raise ConfigError(f"{self._name(key)}: must be >= {minimum}, got {v!r}")
        return int(v) if integer else float(v)

    def numbers(self, key, length=None, default=None, positive=False, integer=False):
        if key not in self.doc:
            if default is None:
                raise ConfigError(f"{self._name(key)}: missing required field")
            return default
        v = self.doc[key]
        if not isinstance(v, list):
            raise ConfigError(f"{self._name(key)}: expected a list, got {v!r}")
        if length is not None and len(v) != length:
            raise ConfigError(f"{self._name(key)}: expected {length} entries, got {len(v)}")
        r = _Reader({str(i): x for i, x in enumerate(v)}, self._name(key))
        return [r.number(str(i), positive=positive, integer=integer) for i in range(len(v))]

    def number_or_list(self, key, length, default):
        if key not in self.doc:
            return default
        if isinstance(self.doc[key], list):
            return self.numbers(key, length=length)
        return self.number(key)


def parse_config(doc: dict) -> ExperimentConfig:
    """Validate a configuration document and build the typed configuration."""
    top = _Reader(doc)
    preset = doc.get("preset")
    if preset is not None:
        if not isinstance(preset, str):
            raise ConfigError(f"preset: expected a name, got {preset!r}")
        doc = _merge(preset_document(preset), {k: v for k, v in doc.items() if k != "preset"})
        top = _Reader(doc)

    ant = top.sub("antennas")
    M_S = ant.number("M_S", positive=True, integer=True)
    N_S = ant.number("N_S", positive=True, integer=True)
    M_k = ant.numbers("M_k", positive=True, integer=True)
    K = len(M_k)
    N_k = ant.numbers("N_k", length=K, positive=True, integer=True)

    exponent = top.number("path_loss_exponent", default=4.0, positive=True)
    N0 = top.number("N0", default=1.0, positive=True)

    placement = None
    dist = top.sub("distances")
    if "placement" in doc:
        pl = top.sub("placement")
        area = pl.numbers("area", length=2, positive=True)
        rx, tx = doc["placement"].get("primary_rx"), doc["placement"].get("primary_tx")
        for name, pts in (("primary_rx", rx), ("primary_tx", tx)):
            if not isinstance(pts, list) or len(pts) != K or any(
                    not isinstance(p, list) or len(p) != 2 for p in pts):
                raise ConfigError(f"placement.{name}: expected {K} [x, y] pairs")
        placement = GridPlacement(tuple(area), [tuple(map(float, p)) for p in rx],
                                  [tuple(map(float, p)) for p in tx],
                                  link_length=pl.number("link_length", default=_LINK, positive=True),
                                  min_distance=pl.number("min_distance", default=1.0, positive=True))
        d_SS = placement.link_length
        d_kS = dist.numbers("d_kS", length=K, default=[_CROSS] * K, positive=True)
        d_Sk = dist.numbers("d_Sk", length=K, default=[_CROSS] * K, positive=True)
        d_kj = placement.primary_distances().tolist()
    else:
        d_SS = dist.number("d_SS", positive=True)
        d_kS = dist.numbers("d_kS", length=K, positive=True)
        d_Sk = dist.numbers("d_Sk", length=K, positive=True)
        raw = doc["distances"].get("d_kj")
        if raw is None and K:
            raise ConfigError("distances.d_kj: missing required field")
        if K and (not isinstance(raw, list) or len(raw) != K):
            raise ConfigError(f"distances.d_kj: expected a {K}x{K} matrix")
        rows = _Reader({str(i): row for i, row in enumerate(raw or [])}, "distances.d_kj")
        d_kj = [rows.numbers(str(i), length=K, positive=True) for i in range(K)]

    pw = top.sub("powers")
    if "P_S_max" in pw.doc:
        P_S = pw.number("P_S_max", positive=True)
    elif "snr_db" in pw.doc:
        P_S = snr_to_power(pw.number("snr_db"), d_SS, exponent, N0)
    else:
        raise ConfigError("powers: give either P_S_max or snr_db")
    P_k = pw.numbers("P_k", length=K, default=[P_S] * K, positive=True)

    kinds = doc.get("receiver_kinds", ["MMSE"] * K)
    if not isinstance(kinds, list) or len(kinds) != K:
        raise ConfigError(f"receiver_kinds: expected {K} entries")
    try:
        receivers = [Receiver(k) for k in kinds]
    except ValueError as exc:
        raise ConfigError(f"receiver_kinds: {exc}; choose from MF, ZF, MMSE") from None

    try:
        network = NetworkConfig(M_S, N_S, M_k, N_k, P_k, P_S, receivers, d_SS, d_kS, d_Sk, d_kj,
                                path_loss_exponent=exponent, N0=N0, placement=placement)
    except GeometryError as exc:
        raise ConfigError(f"network: {exc}") from None

    itf = top.sub("interference")
    sc = doc["interference"].get("scenario")
    try:
        scenario = Scenario(sc)
    except ValueError:
        raise ConfigError(f"interference.scenario: expected one of S1, S2, S3, got {sc!r}") from None
    eps_db = itf.number_or_list("epsilon_over_N0_db", K, 5.0)
    delta = itf.number_or_list("delta", K, 0.01)
    eps_arr = np.broadcast_to(np.asarray(eps_db, float), (K,)).copy()
    d_arr = np.broadcast_to(np.asarray(delta, float), (K,)).copy()
    if np.any((d_arr < 0) | (d_arr >= 1)):
        raise ConfigError(f"interference.delta: outage probabilities must lie in [0, 1), got {delta!r}")
    spec = InterferenceSpec.from_db(scenario, eps_arr, d_arr, N0, K)

    sd = top.sub("sdp", required=False)
    tol = SdpTolerances(gap_tol=sd.number("gap_tol", default=1e-7, positive=True),
                        feas_tol=sd.number("feas_tol", default=1e-8, positive=True),
                        max_iter=sd.number("max_iter", default=200, positive=True, integer=True))
    draws = top.sub("rounding", required=False).number("draws", default=100, positive=True, integer=True)
    seed = top.number("seed", default=0, integer=True, minimum=0)
    return ExperimentConfig(network, spec, eps_arr, tol, draws=draws, seed=seed, preset=preset)


def load_config(source) -> ExperimentConfig:
    """Parse a configuration from a JSON file path, a preset name or a dict."""
    if isinstance(source, dict):
        return parse_config(source)
    text = str(source)
    if text in PRESETS:
        return parse_config({"preset": text})
    path = Path(text)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"config: file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    return parse_config(doc)


def resolve_seed(flag: int | None, config_seed: int) -> int:
    """Seed precedence: explicit flag, then the environment variable, then the config."""
    if flag is not None:
        return int(flag)
    env = os.environ.get(SEED_ENV)
    if env is not None and env.strip():
        try:
            value = int(env)
        except ValueError:
            raise ConfigError(f"{SEED_ENV}: expected a non-negative integer, got {env!r}") from None
        if value < 0:
            raise ConfigError(f"{SEED_ENV}: expected a non-negative integer, got {env!r}")
        return value
    return int(config_seed)
