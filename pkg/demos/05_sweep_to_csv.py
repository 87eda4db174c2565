"""Average SINR against the interference threshold, written to CSV.

Runs the three channel-knowledge models over 0..10 dB with common random
numbers, so the differences between curves are not sampling noise.  Use more
realizations (and ``workers``) for smoother curves.

    python3 demos/05_sweep_to_csv.py [out.csv]
"""
import sys

from cogbeam import load_config, run_sweep, write_csv

out = sys.argv[1] if len(sys.argv) > 1 else "sinr_vs_threshold.csv"
rows = run_sweep(load_config("k2_paper"), "epsilon", 0.0, 10.0, 6, 30, seed=1)
write_csv(rows, out)
for r in rows:
    print(f"{r.scenario} eps/N0={r.epsilon_over_N0_db:4.1f} dB  SINR {r.mean_sinr_db:6.2f} +- {r.std_sinr_db:.2f} dB"
          f"  bound {r.upper_bound_db:6.2f}  outage {r.mean_outage:.4f}")
print(f"wrote {out}")
