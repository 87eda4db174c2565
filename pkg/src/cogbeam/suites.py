"""Validation suites behind ``cogbeam validate``.

Every check returns a :class:`CheckResult` carrying its raw measurements, so
callers can re-assert thresholds or archive the numbers.  Solves performed by
the checks are recorded on a shared :class:`KktTally`.
"""
from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from .channel import NetworkConfig, normalized_gaussian_vector, realize_network
from .config import load_config, parse_config, preset_document
from .errors import CogbeamError
from .extraction import Provenance, randomized_round, solve_beamformer, approximation_bound, numerical_rank
from .problem import InterferenceSpec, QcqpProblem, Scenario, build_qcqp, q_scenario3
from .rng import SeededStream
from .sdp import SdpInstance, SdpStatus, slater_certificate, solve_sdp
from .sweep import run_sweep
from .validation import beta_gof, boundary_outage, brute_force_qcqp, isotropy_gof, mc_outage

__all__ = ["CheckResult", "KktTally", "SUITES", "run_suite", "check_exactness", "check_rounding_quality",
           "check_rounding_bound", "check_boundary_outage", "check_scenario3", "check_isotropy",
           "check_figure_shapes", "check_oracle_sandwich", "check_kkt", "line_config"]


@dataclass
class CheckResult:
    name: str
    passed: bool
    summary: str
    metrics: dict = field(default_factory=dict)
    seconds: float = 0.0

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name}: {self.summary} ({self.seconds:.1f}s)"

    def as_dict(self) -> dict:
        def clean(v):
            if isinstance(v, np.ndarray):
                return v.tolist()
            if isinstance(v, (np.floating, np.integer)):
                return v.item()
            if isinstance(v, dict):
                return {str(k): clean(x) for k, x in v.items()}
            if isinstance(v, (list, tuple)):
                return [clean(x) for x in v]
            return v
        return {"name": self.name, "passed": self.passed, "summary": self.summary,
                "seconds": self.seconds, "metrics": clean(self.metrics)}


@dataclass
class KktTally:
    """Counts KKT outcomes of every Optimal SDP solve seen by the checks."""
    optimal: int = 0
    failed: int = 0
    trouble: int = 0
    worst: dict = field(default_factory=dict)

    def add_counts(self, counts: dict) -> None:
        self.optimal += counts.get("optimal", 0)
        self.failed += counts.get("kkt_failed", 0)
        self.trouble += counts.get("numerical_trouble", 0)

    def record(self, status, kkt) -> None:
        if status is None or kkt is None:
            return
        if status is not SdpStatus.OPTIMAL:
            self.trouble += 1
            return
        self.optimal += 1
        if not kkt.passed:
            self.failed += 1
            self.worst = kkt.as_dict()


def _timed(fn):
    def wrapper(*args, **kw):
        t0 = time.perf_counter()
        res = fn(*args, **kw)
        res.seconds = time.perf_counter() - t0
        return res
    wrapper.__name__, wrapper.__doc__ = fn.__name__, fn.__doc__
    return wrapper


def line_config(K: int, M_S: int = 4, snr_db: float = 10.0) -> NetworkConfig:
    """Line-preset network with the first K links of the four-link geometry (K <= 4)."""
    doc = preset_document("k4_paper")
    d = doc["distances"]
    idx = list(range(4 - K, 4))
    doc["antennas"].update(M_S=M_S, N_S=M_S, M_k=[4] * K, N_k=[4] * K)
    doc["distances"] = {"d_SS": d["d_SS"], "d_kS": [d["d_kS"][i] for i in idx],
                        "d_Sk": [d["d_Sk"][i] for i in idx],
                        "d_kj": [[d["d_kj"][i][j] for j in idx] for i in idx]}
    doc["receiver_kinds"] = ["MMSE"] * K
    doc["powers"] = {"snr_db": snr_db}
    return parse_config(doc).network


def _violation(res, P_max) -> float:
    return max(float(-np.min(res.slacks, initial=0.0)), -res.power_slack / P_max, 0.0)


@_timed
def check_exactness(n_per_k: int = 100, seed: int = 11, tally: KktTally | None = None) -> CheckResult:
    """K = 1 and K = 2 extraction reaches the relaxation value on random S1/S2 instances."""
    tally = tally or KktTally()
    rng = np.random.default_rng(seed)
    ratios, viols, provs = {1: [], 2: []}, {1: [], 2: []}, []
    for K in (1, 2):
        cfg = line_config(K)
        for i in range(n_per_k):
            real = realize_network(cfg, SeededStream(seed, 1).substream(K, i))
            sc = Scenario.S1 if i % 2 == 0 else Scenario.S2
            spec = InterferenceSpec.from_db(sc, rng.uniform(0.0, 10.0, K), 0.01, cfg.N0, K)
            res = solve_beamformer(build_qcqp(real, spec))
            tally.record(res.sdp_status, res.kkt)
            ratios[K].append(res.ratio)
            viols[K].append(_violation(res, cfg.P_S_max))
            provs.append(res.provenance.value)
    all_r = np.concatenate([ratios[1], ratios[2]])
    all_v = np.concatenate([viols[1], viols[2]])
    dev = float(np.max(np.abs(all_r - 1.0)))
    ok = dev <= 1e-6 and float(np.max(all_v)) <= 1e-8 and all(
        p in (Provenance.EXACT_K1.value, Provenance.EXACT_K2.value) for p in provs)
    return CheckResult("exactness K<=2", ok,
                       f"max |ratio-1| = {dev:.2e}, max violation = {np.max(all_v):.2e} over {all_r.size} instances",
                       {"ratios_k1": np.array(ratios[1]), "ratios_k2": np.array(ratios[2]),
                        "violations": all_v, "provenance": provs})


@_timed
def check_rounding_quality(n_realizations: int = 100, draws: int = 100, seed: int = 12,
                           eps_db: float = 5.0, tally: KktTally | None = None) -> CheckResult:
    """Best-of-draws rounding on the four-link preset: feasibility and ratio distribution."""
    tally = tally or KktTally()
    exp = load_config("k4_paper")
    cfg = exp.network
    ratios, viols, draw_levels = [], [], []
    for i in range(n_realizations):
        real = realize_network(cfg, SeededStream(seed, 1).substream(i))
        for j, sc in enumerate((Scenario.S1, Scenario.S2)):
            spec = exp.with_interference(sc, epsilon_over_N0_db=eps_db)
            res = solve_beamformer(build_qcqp(real, spec), stream=SeededStream(seed, 2).substream(i, j),
                                   draws=draws)
            tally.record(res.sdp_status, res.kkt)
            ratios.append(res.ratio)
            viols.append(_violation(res, cfg.P_S_max))
            draw_levels.append(float(np.max(res.rounding_meta.max_levels)))
    ratios = np.array(ratios)
    med = float(np.median(ratios))
    hard = float(np.max(viols)) <= 1e-8 and float(np.max(draw_levels)) <= 1 + 1e-8 and float(
        np.max(ratios)) <= 1 + 1e-7
    q = np.quantile(ratios, [0.0, 0.05, 0.5])
    return CheckResult("rounding quality K=4", hard,
                       f"median ratio {med:.6f} (target >= 0.95: {'met' if med >= 0.95 else 'missed'}), "
                       f"min {q[0]:.6f}, max {np.max(ratios):.9f}, worst draw level {np.max(draw_levels):.3e}",
                       {"ratios": ratios, "median": med, "calibration_met": med >= 0.95,
                        "violations": np.array(viols), "draw_levels": np.array(draw_levels)})


@_timed
def check_rounding_bound(n_instances: int = 100, trials_per_instance: int = 10, seed: int = 13,
                         alphas=(8.0, 16.0, 32.0), eps_db: float = 5.0,
                         tally: KktTally | None = None) -> CheckResult:
    """Single-draw frequency of {ratio >= 1/alpha} against the probabilistic lower bound."""
    tally = tally or KktTally()
    exp = load_config("k4_paper")
    cfg = exp.network
    ratios, bounds = [], {a: [] for a in alphas}
    ranks = []
    for i in range(n_instances):
        real = realize_network(cfg, SeededStream(seed, 1).substream(i))
        sc = Scenario.S1 if i % 2 == 0 else Scenario.S2
        prob = build_qcqp(real, exp.with_interference(sc, epsilon_over_N0_db=eps_db))
        sol = solve_sdp(SdpInstance.from_qcqp(prob))
        tally.record(sol.status, sol.kkt)
        rank = numerical_rank(np.linalg.eigvalsh(sol.X))
        ranks.append(rank)
        for j in range(trials_per_instance):
            r = randomized_round(sol.X, prob.A, prob.Q, prob.P_max, draws=1,
                                 stream=SeededStream(seed, 2).substream(i, j))
            ratios.append(r.objective / sol.primal_value)
            for a in alphas:
                bounds[a].append(approximation_bound(prob.K, rank, prob.m, a))
    ratios = np.array(ratios)
    n = ratios.size
    rows, ok = {}, True
    for a in alphas:
        freq = float(np.mean(ratios >= 1.0 / a))
        b = float(np.mean(bounds[a]))
        se = math.sqrt(max(b * (1 - b), 0.0) / n)
        passed = freq >= b - 3 * se
        ok &= passed
        rows[a] = {"frequency": freq, "bound": b, "se": se, "passed": passed}
    summ = ", ".join(f"alpha={a:g}: freq {r['frequency']:.3f} vs bound {r['bound']:.3f}" for a, r in rows.items())
    return CheckResult("rounding bound", ok, summ,
                       {"by_alpha": rows, "ratios": ratios, "ranks": np.array(ranks), "trials": n})


@_timed
def check_boundary_outage(n_samples: int = 100_000, seed: int = 14) -> CheckResult:
    """Isotropic receivers against boundary vectors: outage equals delta within 3 sigma."""
    rows, ok = [], True
    for n in (2, 4, 8):
        for d in (0.1, 0.01):
            est = boundary_outage(n, d, n_samples, SeededStream(seed, 1).substream(n, int(round(1 / d))))
            inside = est.within(3.0)
            ok &= inside
            rows.append({"n": n, "delta": d, "p_hat": est.p_hat, "std_err": est.std_err, "passed": inside})
    # the same statement on a simulated primary receiver (MMSE with interferers)
    exp = load_config("k2_paper")
    real = realize_network(exp.network, SeededStream(seed, 2))
    spec = exp.with_interference(Scenario.S2, delta=0.01)
    q = build_qcqp(real, spec).Q[0]
    w, V = np.linalg.eigh(q)
    t = V[:, -1] / math.sqrt(w[-1])
    est = mc_outage(t, Scenario.S2, real, spec.epsilon[0], n_samples, SeededStream(seed, 3), link=0,
                    target_delta=0.01)
    ok &= est.within(3.0)
    rows.append({"n": 4, "delta": 0.01, "p_hat": est.p_hat, "std_err": est.std_err, "passed": est.within(3.0),
                 "source": "simulated MMSE receiver"})
    worst = max(abs(r["p_hat"] - r["delta"]) / (r["std_err"] or 1e-300) for r in rows)
    return CheckResult("chance-constraint boundary", ok, f"worst deviation {worst:.2f} sigma over {len(rows)} cases",
                       {"cases": rows})


@_timed
def check_scenario3(n_samples: int = 100_000, n_instances: int = 20, seed: int = 15,
                    tally: KktTally | None = None) -> CheckResult:
    """Exponential-tail outage at the closed-form power and closed form versus the SDP path."""
    tally = tally or KktTally()
    exp = load_config("k2_paper")
    cfg = exp.network
    real = realize_network(cfg, SeededStream(seed, 1))
    tails = []
    ok = True
    for delta in (0.1, 0.01):
        spec = exp.with_interference(Scenario.S3, delta=delta)
        bounds = spec.epsilon / (real.alpha_kS * math.log(1 / delta))
        k = int(np.argmin(bounds))
        t = math.sqrt(bounds[k]) * normalized_gaussian_vector(np.random.default_rng(seed), cfg.M_S)
        est = mc_outage(t, Scenario.S3, real, spec.epsilon[k], n_samples, SeededStream(seed, 2).substream(
            int(round(1 / delta))), link=k, target_delta=delta)
        ok &= est.within(3.0)
        tails.append({"delta": delta, "p_hat": est.p_hat, "std_err": est.std_err, "passed": est.within(3.0)})
    rel = []
    for i in range(n_instances):
        r = realize_network(cfg, SeededStream(seed, 3).substream(i))
        spec = exp.with_interference(Scenario.S3, epsilon_over_N0_db=float(i % 11))
        prob = build_qcqp(r, spec)
        closed = solve_beamformer(prob)
        sdp_path = solve_beamformer(QcqpProblem(prob.A, prob.Q, prob.P_max))
        tally.record(sdp_path.sdp_status, sdp_path.kkt)
        rel.append(abs(sdp_path.objective - closed.objective) / abs(closed.objective))
    worst = float(np.max(rel))
    ok &= worst <= 1e-6
    return CheckResult("scenario-3 calculus", ok,
                       "tail outage " + ", ".join(f"delta={t['delta']}: {t['p_hat']:.4f}" for t in tails)
                       + f"; closed form vs SDP max rel diff {worst:.2e}",
                       {"tails": tails, "closed_vs_sdp": np.array(rel)})


@_timed
def check_isotropy(n_samples: int = 50_000, seed: int = 16, N_k: int = 4, K: int = 3) -> CheckResult:
    """Beta(1, N-1) fit of receive-beamformer coordinates; a fixed direction must fail."""
    pvals = {kind: isotropy_gof(kind, N_k, K, n_samples, SeededStream(seed, i))
             for i, kind in enumerate(("MF", "ZF", "MMSE"))}
    fixed = np.tile(normalized_gaussian_vector(np.random.default_rng(seed), N_k), (n_samples, 1))
    neg = beta_gof(fixed)
    ok = all(p > 0.01 for p in pvals.values()) and neg < 1e-6
    return CheckResult("receiver isotropy", ok,
                       ", ".join(f"{k} p={v:.3f}" for k, v in pvals.items()) + f", fixed direction p={neg:.1e}",
                       {"p_values": pvals, "negative_control": neg})


def _series(rows, scenario, key):
    pts = sorted((getattr(r, key), r) for r in rows if r.scenario == scenario)
    return [p[0] for p in pts], [p[1] for p in pts]


@_timed
def check_figure_shapes(n_realizations: int = 200, seed: int = 17, presets=("k2_paper", "k4_paper"),
                        eps_steps: int = 11, delta_range=(0.0, 0.1), delta_steps: int = 11,
                        workers: int = 1, tally: KktTally | None = None) -> CheckResult:
    """Qualitative shape of the SINR curves: monotone, ordered, and converging."""
    tally = tally or KktTally()
    facts, ok = {}, True
    for preset in presets:
        exp = load_config(preset)
        counts = {}
        eps_rows = run_sweep(exp, "epsilon", 0.0, 10.0, eps_steps, n_realizations, seed=seed, workers=workers,
                             solver_counts=counts)
        del_rows = run_sweep(exp, "delta", delta_range[0], delta_range[1], delta_steps, n_realizations,
                             seed=seed, workers=workers, solver_counts=counts)
        tally.add_counts(counts)
        f = {}
        for sc in ("S1", "S2", "S3"):
            _, rs = _series(eps_rows, sc, "epsilon_over_N0_db")
            m = np.array([r.mean_sinr_db for r in rs])
            f[f"eps_monotone_{sc}"] = bool(np.all(np.diff(m) >= 0))
            f[f"eps_worst_step_{sc}"] = float(np.min(np.diff(m)))
        by = {sc: _series(eps_rows, sc, "epsilon_over_N0_db")[1] for sc in ("S1", "S2", "S3")}
        order = []
        for a, b in (("S1", "S2"), ("S2", "S3")):
            for ra, rb in zip(by[a], by[b]):
                se = math.hypot(ra.std_sinr_db / math.sqrt(ra.n_realizations),
                                rb.std_sinr_db / math.sqrt(rb.n_realizations))
                order.append(ra.mean_sinr_db >= rb.mean_sinr_db - se)
        f["ordering"] = bool(all(order))
        gap0 = by["S1"][0].mean_sinr_db - by["S3"][0].mean_sinr_db
        gap10 = by["S1"][-1].mean_sinr_db - by["S3"][-1].mean_sinr_db
        f["gap_0db"], f["gap_10db"], f["gap_narrows"] = gap0, gap10, bool(gap0 > gap10)
        for sc in ("S2", "S3"):
            _, rs = _series(del_rows, sc, "delta")
            m = np.array([r.mean_sinr_db for r in rs])
            f[f"delta_monotone_{sc}"] = bool(np.all(np.diff(m) >= 0))
        f["failures"] = int(sum(r.n_failures for r in eps_rows + del_rows))
        f["eps_rows"] = [r.__dict__ for r in eps_rows]
        f["delta_rows"] = [r.__dict__ for r in del_rows]
        preset_ok = all(f[k] for k in f if k.startswith(("eps_monotone", "delta_monotone"))) and f["ordering"] \
            and f["gap_narrows"]
        f["passed"] = preset_ok
        ok &= preset_ok
        facts[preset] = f
    summ = "; ".join(f"{p}: {'ok' if f['passed'] else 'violated'} (gap {f['gap_0db']:.2f} -> {f['gap_10db']:.2f} dB)"
                     for p, f in facts.items())
    return CheckResult("figure shapes", ok, summ, facts)


@_timed
def check_oracle_sandwich(n_per_k: int = 20, seed: int = 18, grid_resolution: int = 100,
                          draws_k3: int = 1000, tally: KktTally | None = None) -> CheckResult:
    """Two-antenna instances: exhaustive search sits below the relaxation and matches the solution."""
    tally = tally or KktTally()
    rng = np.random.default_rng(seed)
    rows, ok = [], True
    for K in (1, 2, 3):
        cfg = line_config(K, M_S=2)
        for i in range(n_per_k):
            real = realize_network(cfg, SeededStream(seed, 1).substream(K, i))
            sc = Scenario.S1 if i % 2 == 0 else Scenario.S2
            spec = InterferenceSpec.from_db(sc, rng.uniform(0.0, 10.0, K), 0.01, cfg.N0, K)
            prob = build_qcqp(real, spec)
            res = solve_beamformer(prob, stream=SeededStream(seed, 2).substream(K, i), draws=draws_k3)
            tally.record(res.sdp_status, res.kkt)
            _, brute = brute_force_qcqp(prob, grid_resolution)
            ub = res.upper_bound
            above = brute - ub
            rel = abs(brute - res.objective) / abs(brute)
            good = above <= 1e-6 and rel <= 1e-3
            ok &= good
            rows.append({"K": K, "brute": brute, "solution": res.objective, "upper": ub,
                         "excess_over_upper": above, "rel_diff": rel, "passed": good})
    worst_rel = max(r["rel_diff"] for r in rows)
    worst_above = max(r["excess_over_upper"] for r in rows)
    return CheckResult("oracle sandwich", ok,
                       f"max rel diff to exhaustive search {worst_rel:.2e}, max excess over relaxation {worst_above:.2e}",
                       {"rows": rows})


@_timed
def check_kkt(tally: KktTally | None = None, seed: int = 19, n_per_preset: int = 5) -> CheckResult:
    """Tally of KKT outcomes plus Slater certificates on every preset."""
    tally = tally or KktTally()
    slater = {}
    for preset in ("k2_paper", "k4_paper", "grid9_paper"):
        exp = load_config(preset)
        good = 0
        for i in range(n_per_preset):
            real = realize_network(exp.network, SeededStream(seed, 1).substream(i))
            for sc in (Scenario.S1, Scenario.S2):
                prob = build_qcqp(real, exp.with_interference(sc))
                inst = SdpInstance.from_qcqp(prob)
                try:
                    slater_certificate(inst)
                    good += 1
                except ValueError:
                    pass
                sol = solve_sdp(inst)
                tally.record(sol.status, sol.kkt)
        slater[preset] = (good, 2 * n_per_preset)
    ok = tally.failed == 0 and all(g == n for g, n in slater.values())
    return CheckResult("KKT certification", ok,
                       f"{tally.optimal - tally.failed}/{tally.optimal} optimal solves pass KKT "
                       f"({tally.trouble} NumericalTrouble); Slater "
                       + ", ".join(f"{p} {g}/{n}" for p, (g, n) in slater.items()),
                       {"optimal": tally.optimal, "kkt_failed": tally.failed, "numerical_trouble": tally.trouble,
                        "worst_failure": tally.worst, "slater": slater})


SUITES = {
    "lemma1": ("boundary_outage", "scenario3"),
    "isotropy": ("isotropy",),
    "exactness": ("exactness", "sandwich"),
    "rounding": ("rounding_quality", "rounding_bound"),
    "kkt": ("kkt",),
    "figures": ("figure_shapes",),
}
SUITES["all"] = SUITES["lemma1"] + SUITES["isotropy"] + SUITES["exactness"] + SUITES["rounding"] + SUITES["kkt"]

_CHECKS = {
    "boundary_outage": lambda t: check_boundary_outage(),
    "scenario3": lambda t: check_scenario3(tally=t),
    "isotropy": lambda t: check_isotropy(),
    "exactness": lambda t: check_exactness(tally=t),
    "sandwich": lambda t: check_oracle_sandwich(tally=t),
    "rounding_quality": lambda t: check_rounding_quality(tally=t),
    "rounding_bound": lambda t: check_rounding_bound(tally=t),
    "kkt": lambda t: check_kkt(tally=t),
    "figure_shapes": lambda t: check_figure_shapes(tally=t),
}


def run_suite(name: str, progress=None) -> list[CheckResult]:
    """Run the checks of suite ``name`` in order, sharing one KKT tally."""
    if name not in SUITES:
        raise ValueError(f"unknown suite {name!r}; choose from {sorted(SUITES)}")
    tally = KktTally()
    out = []
    for check in SUITES[name]:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            res = _CHECKS[check](tally)
        if progress:
            progress(res)
        out.append(res)
    return out
