"""Randomized rounding when there are more than two interference constraints.

Random-phase draws from the relaxation solution are scaled back onto the
feasible set and the best one is kept.  On the four-primary network preset the
relaxation is usually rank one already, so a single draw recovers the bound.
A synthetic problem with eight rank-one constraints has a rank-two
relaxation, and there the achieved fraction of the bound grows with the
number of draws.

    python3 demos/04_randomized_rounding.py
"""
import numpy as np

from cogbeam import (QcqpProblem, SeededStream, SdpInstance, build_qcqp, load_config, randomized_round,
                     realize_network, solve_sdp)


def report(title, problem):
    sol = solve_sdp(SdpInstance.from_qcqp(problem))
    eig = np.linalg.eigvalsh(sol.X)[::-1]
    print(f"{title}: relaxation {sol.status.value}, normalized eigenvalues {np.round(eig / eig[0], 3)}")
    for draws in (1, 10, 100, 1000):
        res = randomized_round(sol.X, problem.A, problem.Q, problem.P_max, draws=draws, stream=SeededStream(1))
        worst = res.rounding_meta.max_levels.max()
        print(f"  {draws:5d} draws: ratio to bound {res.ratio:.4f}, worst constraint level {worst:.3f}")


exp = load_config("k4_paper")
real = realize_network(exp.network, SeededStream(3))
report("k4_paper network", build_qcqp(real, exp.with_interference(scenario="S2", epsilon_over_N0_db=0.0)))

rng = np.random.default_rng(1)


def random_psd(rank, m=4):
    B = rng.standard_normal((m, rank)) + 1j * rng.standard_normal((m, rank))
    return B @ B.conj().T


report("synthetic, 8 constraints", QcqpProblem(A=random_psd(4), Q=[random_psd(1) for _ in range(8)], P_max=10.0))
