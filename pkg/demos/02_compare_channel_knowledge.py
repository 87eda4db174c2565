"""How much SINR each level of channel knowledge costs.

On the same network draw, solve with full knowledge of the cross channels
(S1), with the channel known but the primary receive weighting unknown (S2)
and with neither known (S3, closed form).  Each result is checked by
simulating the interference outage at primary 0.

    python3 demos/02_compare_channel_knowledge.py
"""
import numpy as np

from cogbeam import SeededStream, build_qcqp, load_config, realize_network, solve_beamformer
from cogbeam.validation import mc_outage

exp = load_config("k2_paper")
real = realize_network(exp.network, SeededStream(5))
print(f"{'model':6} {'method':13} {'SINR dB':>8} {'outage at primary 0':>20}  (target delta 0.01)")
for scenario in ("S1", "S2", "S3"):
    spec = exp.with_interference(scenario=scenario)
    res = solve_beamformer(build_qcqp(real, spec))
    est = mc_outage(res.t, scenario, real, spec.epsilon[0], 100_000, SeededStream(9))
    print(f"{scenario:6} {res.provenance.value:13} {10 * np.log10(res.objective):8.3f} {est.p_hat:20.4f}")
