"""Solve one secondary-link beamforming problem end to end.

Samples a two-primary network from the ``k2_paper`` preset, builds the
problem for perfectly known interference channels and prints the beamformer,
its SINR, the relaxation bound and the interference each primary receives.

    python3 demos/01_solve_one_instance.py
"""
import numpy as np

from cogbeam import SeededStream, build_qcqp, load_config, realize_network, solve_beamformer
from cogbeam.problem import interference_power

exp = load_config("k2_paper")
real = realize_network(exp.network, SeededStream(exp.seed))
spec = exp.with_interference(scenario="S1")
problem = build_qcqp(real, spec)

res = solve_beamformer(problem)
print(f"method        : {res.provenance.value}")
print(f"SINR          : {10 * np.log10(res.objective):.3f} dB")
print(f"relaxation    : {10 * np.log10(res.upper_bound):.3f} dB (ratio {res.ratio:.9f})")
print(f"power used    : {np.vdot(res.t, res.t).real:.1f} of {problem.P_max:.1f}")
print(f"KKT certified : {res.kkt.passed}")
for k in range(problem.K):
    got = interference_power(real, res.t, k)
    print(f"primary {k}: interference {got:.4f}, threshold {spec.epsilon[k]:.4f}")
