"""Equal-value rank-one decomposition of a PSD matrix.

Any rank-R PSD matrix Z can be split into R rank-one terms z z^H whose values
under two Hermitian matrices are all equal to the average.  This is what lets
the relaxation of a one- or two-constraint problem be converted into an
optimal beamformer without loss.

    python3 demos/03_rank_one_decomposition.py
"""
import numpy as np

from cogbeam import rank_one_decompose

rng = np.random.default_rng(0)
B = rng.standard_normal((4, 3)) + 1j * rng.standard_normal((4, 3))
Z = B @ B.conj().T
H1 = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
H2 = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
A, C = H1 + H1.conj().T, H2 + H2.conj().T

f = rank_one_decompose(Z, A, C)
print(f"rank {f.R}; reconstruction error {np.linalg.norm(f.reconstruct() - Z):.2e}")
print("target values:", np.round(np.real([np.trace(A @ Z), np.trace(C @ Z)]) / f.R, 6))
print("per factor   :")
print(np.round(np.column_stack([f.values(A), f.values(C)]), 6))
